#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "irsim/experiments.hpp"
#include "support.hpp"

using namespace irsim;

namespace {
ExperimentConfig tiny_config() {
    ExperimentConfig config = ExperimentConfig::desk_profile();
    config.trials = 40;
    config.sweep_dbm = {30.0, 40.0};
    config.analytic_denominator = true;
    return config;
}

std::size_t column_index(const ExperimentReport& report, const std::string& name) {
    for (std::size_t i = 0; i < report.columns.size(); ++i) {
        if (report.columns[i] == name) {
            return i;
        }
    }
    throw std::runtime_error("missing column " + name);
}
} // namespace

TEST_CASE("profiles carry the documented defaults") {
    const ExperimentConfig desk = ExperimentConfig::desk_profile();
    CHECK(desk.grid.n_subcarriers == 16);
    CHECK(desk.m_elements == 8);
    CHECK(desk.trials == 500);
    CHECK(desk.noise.sigma2 == doctest::Approx(1e-11).epsilon(1e-12));
    CHECK(desk.sweep_dbm.front() == 20.0);
    CHECK(desk.sweep_dbm.back() == 50.0);
    CHECK(desk.geometry.dist_ap_irs_m == 50.0);
    CHECK(desk.geometry.ple_irs_user == 2.4);

    const ExperimentConfig paper = ExperimentConfig::paper_profile();
    CHECK(paper.grid.n_subcarriers == 64);
    CHECK(paper.grid.bandwidth_hz == 0.2e9);
    CHECK(paper.grid.carrier_hz == 2.4e9);
    CHECK(paper.grid.tap_count == 8);
    CHECK(paper.grid.cp_length == 16);
    CHECK(paper.m_elements == 36);
    CHECK_NOTHROW(paper.validate());
}

TEST_CASE("config json round trip and overlay") {
    const ExperimentConfig desk = ExperimentConfig::desk_profile();
    const ExperimentConfig back = ExperimentConfig::from_json(desk.to_json(), desk);
    CHECK(back.to_json() == desk.to_json());
    CHECK(config_hash(back) == config_hash(desk));

    nlohmann::json overlay;
    overlay["m_elements"] = 4;
    overlay["design"]["bits"] = 2;
    const ExperimentConfig merged = ExperimentConfig::from_json(overlay, desk);
    CHECK(merged.m_elements == 4);
    CHECK(merged.design.bits == 2);
    CHECK(merged.grid.n_subcarriers == 16);
    CHECK(config_hash(merged) != config_hash(desk));

    nlohmann::json bad;
    bad["response_model"]["alpha"] = std::vector<double>{1.0, 2.0};
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad, desk), std::invalid_argument);
}

TEST_CASE("config validation rejects broken sections") {
    ExperimentConfig config = ExperimentConfig::desk_profile();
    config.noise.sigma2 = 0.0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);

    config = ExperimentConfig::desk_profile();
    config.geometry.ple_ap_irs = 9.0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);

    config = ExperimentConfig::desk_profile();
    config.circuit.alpha[4] = 4.5;
    CHECK_THROWS_AS(config.validate(), ModelValidityError);
}

TEST_CASE("power sweep validates its algorithm list up front") {
    const ExperimentConfig config = tiny_config();
    CHECK_THROWS_AS(run_power_sweep(config, {}), std::invalid_argument);
    CHECK_THROWS_AS(run_power_sweep(config, {"genetic"}), std::invalid_argument);
}

TEST_CASE("power sweep is deterministic and internally consistent") {
    const ExperimentConfig config = tiny_config();
    const ExperimentReport a = run_power_sweep(config, {"dft"});
    const ExperimentReport b = run_power_sweep(config, {"dft"});
    CHECK(report_to_csv(a) == report_to_csv(b));
    REQUIRE(a.rows.size() == 4); // 2 powers x 1 pattern x 2 estimators

    const std::size_t est_col = column_index(a, "estimator");
    const std::size_t nmse_col = column_index(a, "nmse");
    const std::size_t theo_col = column_index(a, "nmse_theoretical");
    const std::size_t feas_col = column_index(a, "feasible");
    for (const auto& row : a.rows) {
        CHECK(row.at(feas_col) == "1");
        if (row.at(est_col) == "practical") {
            const double emp = std::stod(row.at(nmse_col));
            const double theo = std::stod(row.at(theo_col));
            CHECK(std::abs(emp - theo) / theo < 0.5); // 40 trials, loose gate
        } else {
            CHECK(row.at(theo_col) == "nan");
        }
    }
}

TEST_CASE("theoretical and empirical nmse agree within three standard errors") {
    // Delta-method standard error of the ratio-of-sums estimator.
    const ExperimentConfig config = ExperimentConfig::desk_profile();
    const OfdmGrid& grid = config.grid;
    const ResponseModel model(config.circuit, config.mode, grid);
    const PatternMatrix pattern =
        dft_hadamard_init(8, 9, build_codebook(2), model, grid);
    const ExpandedPattern expanded = expand_pattern(pattern, model, grid);
    const double pt = dbm_to_watts(35.0);
    const double denom = grid.n_subcarriers * mean_stacked_power(config.geometry, 8);
    const double theory = theoretical_nmse(expanded, config.noise.sigma2, pt, denom);

    std::vector<TrialTerms> terms;
    for (int t = 0; t < 300; ++t) {
        const auto trial = static_cast<std::uint64_t>(t);
        Rng ch = make_rng(19, Stream::channel, trial);
        const ChannelRealization real = realize_channels(ch, config.geometry, grid, 8);
        Rng prng = make_rng(19, Stream::pilot, trial);
        const PilotBlock pilots = generate_pilots(prng, grid, 9, pt);
        Rng nrng = make_rng(19, Stream::noise, trial);
        const ReceivedBlock received =
            simulate_reception(real, expanded, pilots, config.noise, nrng);
        terms.push_back(trial_terms(run_estimate(received, pilots, expanded), real));
    }
    const double empirical = empirical_nmse(terms, grid.n_subcarriers);
    double num = 0.0;
    double den = 0.0;
    for (const auto& t : terms) {
        num += t.error_energy;
        den += t.channel_energy;
    }
    const double ratio = num / den;
    double var = 0.0;
    for (const auto& t : terms) {
        const double d = t.error_energy - ratio * t.channel_energy;
        var += d * d;
    }
    const double se = std::sqrt(var) / den / grid.n_subcarriers;
    CHECK(std::abs(empirical - theory) <= 3.0 * se + 1e-15);
}

TEST_CASE("power sweep reports mismatched estimation above practical at high power") {
    ExperimentConfig config = tiny_config();
    config.trials = 60;
    config.sweep_dbm = {50.0};
    const ExperimentReport report = run_power_sweep(config, {"dft"});
    const std::size_t est_col = column_index(report, "estimator");
    const std::size_t nmse_col = column_index(report, "nmse");
    double practical = 0.0;
    double mismatched = 0.0;
    for (const auto& row : report.rows) {
        if (row.at(est_col) == "practical") {
            practical = std::stod(row.at(nmse_col));
        } else {
            mismatched = std::stod(row.at(nmse_col));
        }
    }
    CHECK(mismatched > practical);
}

TEST_CASE("infeasible design cells are reported and the sweep continues") {
    ExperimentConfig config = tiny_config();
    config.design.bits = 2; // highres requires bits >= 3 -> infeasible cell
    const ExperimentReport report = run_power_sweep(config, {"highres", "dft"});
    const std::size_t feas_col = column_index(report, "feasible");
    const std::size_t pattern_col = column_index(report, "pattern");
    int infeasible_rows = 0;
    int feasible_rows = 0;
    for (const auto& row : report.rows) {
        if (row.at(pattern_col) == "highres") {
            CHECK(row.at(feas_col) == "0");
            ++infeasible_rows;
        } else {
            CHECK(row.at(feas_col) == "1");
            ++feasible_rows;
        }
    }
    CHECK(infeasible_rows == 4);
    CHECK(feasible_rows == 4);
}

TEST_CASE("convergence trace starts at the baseline and never increases") {
    ExperimentConfig config = tiny_config();
    const ExperimentReport report = run_convergence_trace(config, 4);
    REQUIRE(report.rows.size() == 5);

    const ResponseModel model(config.circuit, config.mode, config.grid);
    const PatternMatrix init =
        dft_hadamard_init(config.m_elements, config.m_elements + 1,
                          build_codebook(config.design.bits), model, config.grid);
    const double baseline = design_objective(init, model, config.grid);
    // Cells are formatted with 12 significant digits.
    CHECK(std::stod(report.rows[0][1]) == doctest::Approx(baseline).epsilon(1e-9));
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        CHECK(std::stod(report.rows[i][1]) <= std::stod(report.rows[i - 1][1]) + 1e-15);
    }
}

TEST_CASE("resolution sweep descends with linear refinement cost") {
    ExperimentConfig config = tiny_config();
    const ExperimentReport report = run_resolution_sweep(config, 5);
    REQUIRE(report.rows.size() == 5);
    const std::size_t obj_col = column_index(report, "objective");
    const std::size_t evals_col = column_index(report, "design_evals");
    const std::size_t alg_col = column_index(report, "algorithm");
    const int m = config.m_elements;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        CHECK(std::stod(report.rows[i][obj_col]) <=
              std::stod(report.rows[i - 1][obj_col]) * (1.0 + 1e-12));
    }
    CHECK(report.rows[0][alg_col] == "ao");
    CHECK(std::stoll(report.rows[0][evals_col]) == 2LL * m * (m + 1) * 2);
    CHECK(std::stoll(report.rows[1][evals_col]) == 2LL * m * (m + 1) * 4);
    for (int bits = 3; bits <= 5; ++bits) {
        const auto& row = report.rows[static_cast<std::size_t>(bits - 1)];
        CHECK(row[alg_col] == "highres");
        CHECK(std::stoll(row[evals_col]) == 3LL * m * (m + 1) * (bits - 2));
    }
}

TEST_CASE("reports round trip through json and write to disk") {
    ExperimentConfig config = tiny_config();
    config.trials = 10;
    config.sweep_dbm = {30.0};
    const ExperimentReport report = run_power_sweep(config, {"dft"});
    const ExperimentReport back = report_from_json(report_to_json(report));
    CHECK(back == report);

    const auto dir = std::filesystem::temp_directory_path() / "irsim_report_test";
    std::filesystem::create_directories(dir);
    const auto csv_path = dir / "report.csv";
    write_report(report, csv_path, ReportFormat::csv);
    std::ifstream in(csv_path);
    std::string first_line;
    std::getline(in, first_line);
    CHECK(first_line == report_to_csv(report).substr(0, first_line.size()));

    CHECK_THROWS_WITH_AS(
        write_report(report, dir / "missing_dir" / "report.csv", ReportFormat::csv),
        doctest::Contains("missing_dir"), std::runtime_error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("report metadata carries the config echo and hash") {
    ExperimentConfig config = tiny_config();
    config.trials = 5;
    config.sweep_dbm = {30.0};
    const ExperimentReport report = run_power_sweep(config, {"dft"});
    CHECK(report.metadata.at("config_hash").get<std::string>() == config_hash(config));
    CHECK(report.metadata.at("alpha_set").get<std::string>() == "varactor-2p4ghz");
    CHECK(report.metadata.at("config").at("trials").get<int>() == 5);
    CHECK(report.metadata.contains("wall_time_s"));
}
