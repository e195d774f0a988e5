#include "irsim/experiments.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace irsim {

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct DesignOutcome {
    bool feasible = false;
    std::optional<PatternMatrix> pattern;
    double objective = std::numeric_limits<double>::infinity();
    long long evals = 0;
    std::string error;
};

DesignOutcome design_for_algorithm(const std::string& name, const ExperimentConfig& config,
                                   const ResponseModel& model) {
    DesignOutcome out;
    const int m = config.m_elements;
    const int k = m + 1;
    const DesignConfig& d = config.design;
    try {
        if (name == "dft") {
            PatternMatrix pattern = dft_hadamard_init(m, k, PhaseCodebook::with_bits(d.bits),
                                                      model, config.grid, d.cond_threshold);
            out.objective = design_objective(pattern, model, config.grid, d.cond_threshold);
            out.pattern = std::move(pattern);
            out.evals = 0;
        } else if (name == "ao") {
            const PatternMatrix init = dft_hadamard_init(m, k, PhaseCodebook::with_bits(d.bits),
                                                         model, config.grid, d.cond_threshold);
            DesignResult res = ao_design(init, d, model, config.grid);
            out.objective = res.objective;
            out.evals = res.eval_count;
            out.pattern = std::move(res.pattern);
        } else if (name == "highres") {
            if (d.bits < 3) {
                throw std::invalid_argument("highres refinement requires bits >= 3");
            }
            DesignConfig base_cfg = d;
            base_cfg.bits = d.highres_base_bits;
            const PatternMatrix init =
                dft_hadamard_init(m, k, PhaseCodebook::with_bits(base_cfg.bits), model,
                                  config.grid, d.cond_threshold);
            const DesignResult base = ao_design(init, base_cfg, model, config.grid);
            DesignResult res = high_res_design(base, d.bits, d, model, config.grid);
            out.objective = res.objective;
            out.evals = base.eval_count + res.eval_count;
            out.pattern = std::move(res.pattern);
        } else {
            throw std::invalid_argument("unknown design algorithm: " + name);
        }
        out.feasible = std::isfinite(out.objective);
        if (!out.feasible) {
            out.error = "designed pattern violates the conditioning constraint";
        }
    } catch (const std::exception& e) {
        out.feasible = false;
        out.error = e.what();
    }
    return out;
}

double denominator_energy(const ExperimentConfig& config) {
    if (config.analytic_denominator) {
        return config.grid.n_subcarriers *
               mean_stacked_power(config.geometry, config.m_elements);
    }
    std::vector<ChannelRealization> draws;
    draws.reserve(static_cast<std::size_t>(config.denominator_realizations));
    for (int t = 0; t < config.denominator_realizations; ++t) {
        Rng rng = make_rng(config.seed, Stream::denominator, static_cast<std::uint64_t>(t));
        draws.push_back(realize_channels(rng, config.geometry, config.grid, config.m_elements,
                                         config.tap_profile));
    }
    return mean_stacked_energy(draws);
}

nlohmann::json base_metadata(const ExperimentConfig& config) {
    nlohmann::json meta;
    meta["generator"] = "irsim";
    meta["version"] = kVersion;
    meta["alpha_set"] = config.alpha_set;
    meta["config"] = config.to_json();
    meta["config_hash"] = config_hash(config);
    return meta;
}

class WallClock {
  public:
    WallClock() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace

ExperimentConfig ExperimentConfig::desk_profile() {
    return ExperimentConfig{
        .grid = OfdmGrid(16, 0.2e9, 2.4e9, 4, 8),
        .m_elements = 8,
        .geometry = LinkGeometry{50.0, 2.0, 50.0, 2.2, 2.4, 3.5, -30.0},
        .tap_profile = TapProfile::equal,
        .noise = NoiseModel{dbm_to_watts(-80.0)},
        .circuit = CircuitParams::varactor_2p4ghz(),
        .alpha_set = "varactor-2p4ghz",
        .mode = ResponseMode::practical,
        .design = DesignConfig{},
        .sweep_dbm = {20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0},
        .trials = 500,
        .seed = 1,
    };
}

ExperimentConfig ExperimentConfig::paper_profile() {
    ExperimentConfig c = desk_profile();
    c.grid = OfdmGrid(64, 0.2e9, 2.4e9, 8, 16);
    c.m_elements = 36;
    return c;
}

void ExperimentConfig::validate() const {
    geometry.validate();
    if (m_elements < 1) {
        throw std::invalid_argument("element count must be positive");
    }
    if (!(noise.sigma2 > 0.0)) {
        throw std::invalid_argument("noise power must be positive");
    }
    if (trials < 1) {
        throw std::invalid_argument("trial count must be positive");
    }
    if (design.bits < 1 || design.s_max < 1) {
        throw std::invalid_argument("design resolution and sweep count must be positive");
    }
    if (!analytic_denominator && denominator_realizations < 1) {
        throw std::invalid_argument("denominator realizations must be positive");
    }
    // Rejects coefficient sets whose amplitude leaves (0, 1] anywhere on the band.
    ResponseModel(circuit, mode, grid);
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["grid"] = {{"n_subcarriers", grid.n_subcarriers},
                 {"bandwidth_hz", grid.bandwidth_hz},
                 {"carrier_hz", grid.carrier_hz},
                 {"tap_count", grid.tap_count},
                 {"cp_length", grid.cp_length}};
    j["m_elements"] = m_elements;
    j["channel"] = {{"dist_ap_irs_m", geometry.dist_ap_irs_m},
                    {"dist_irs_user_m", geometry.dist_irs_user_m},
                    {"dist_ap_user_m", geometry.dist_ap_user_m},
                    {"ple_ap_irs", geometry.ple_ap_irs},
                    {"ple_irs_user", geometry.ple_irs_user},
                    {"ple_ap_user", geometry.ple_ap_user},
                    {"ref_gain_db", geometry.ref_gain_db},
                    {"profile", tap_profile == TapProfile::equal ? "equal" : "exponential"}};
    j["noise"] = {{"sigma2_watts", noise.sigma2}};
    j["response_model"] = {{"alpha", circuit.alpha},
                           {"alpha_set", alpha_set},
                           {"mode", mode == ResponseMode::practical ? "practical" : "ideal"}};
    j["design"] = {{"bits", design.bits},
                   {"s_max", design.s_max},
                   {"cond_threshold", design.cond_threshold},
                   {"ao_bits_cap", design.ao_bits_cap},
                   {"highres_base_bits", design.highres_base_bits}};
    if (design.eval_budget) {
        j["design"]["eval_budget"] = *design.eval_budget;
    }
    j["sweep"] = {{"power_dbm", sweep_dbm}};
    j["trials"] = trials;
    j["seed"] = seed;
    j["nmse_denominator"] = {{"mode", analytic_denominator ? "analytic" : "empirical"},
                             {"realizations", denominator_realizations}};
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, ExperimentConfig base) {
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        base.grid = OfdmGrid(g.value("n_subcarriers", base.grid.n_subcarriers),
                             g.value("bandwidth_hz", base.grid.bandwidth_hz),
                             g.value("carrier_hz", base.grid.carrier_hz),
                             g.value("tap_count", base.grid.tap_count),
                             g.value("cp_length", base.grid.cp_length));
    }
    base.m_elements = j.value("m_elements", base.m_elements);
    if (j.contains("channel")) {
        const auto& c = j.at("channel");
        base.geometry.dist_ap_irs_m = c.value("dist_ap_irs_m", base.geometry.dist_ap_irs_m);
        base.geometry.dist_irs_user_m = c.value("dist_irs_user_m", base.geometry.dist_irs_user_m);
        base.geometry.dist_ap_user_m = c.value("dist_ap_user_m", base.geometry.dist_ap_user_m);
        base.geometry.ple_ap_irs = c.value("ple_ap_irs", base.geometry.ple_ap_irs);
        base.geometry.ple_irs_user = c.value("ple_irs_user", base.geometry.ple_irs_user);
        base.geometry.ple_ap_user = c.value("ple_ap_user", base.geometry.ple_ap_user);
        base.geometry.ref_gain_db = c.value("ref_gain_db", base.geometry.ref_gain_db);
        if (c.contains("profile")) {
            const auto profile = c.at("profile").get<std::string>();
            if (profile == "equal") {
                base.tap_profile = TapProfile::equal;
            } else if (profile == "exponential") {
                base.tap_profile = TapProfile::exponential;
            } else {
                throw std::invalid_argument("channel.profile must be equal or exponential");
            }
        }
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        if (n.contains("sigma2_watts")) {
            base.noise.sigma2 = n.at("sigma2_watts").get<double>();
        } else if (n.contains("sigma2_dbm")) {
            base.noise.sigma2 = dbm_to_watts(n.at("sigma2_dbm").get<double>());
        }
    }
    if (j.contains("response_model")) {
        const auto& r = j.at("response_model");
        if (r.contains("alpha")) {
            const auto alpha = r.at("alpha").get<std::vector<double>>();
            if (alpha.size() != 7) {
                throw std::invalid_argument("response_model.alpha must have 7 entries");
            }
            std::copy(alpha.begin(), alpha.end(), base.circuit.alpha.begin());
            base.alpha_set = r.value("alpha_set", std::string("custom"));
        } else if (r.contains("alpha_set")) {
            base.alpha_set = r.at("alpha_set").get<std::string>();
            base.circuit = CircuitParams::named(base.alpha_set);
        }
        if (r.contains("mode")) {
            const auto mode = r.at("mode").get<std::string>();
            if (mode == "practical") {
                base.mode = ResponseMode::practical;
            } else if (mode == "ideal") {
                base.mode = ResponseMode::ideal;
            } else {
                throw std::invalid_argument("response_model.mode must be practical or ideal");
            }
        }
    }
    if (j.contains("design")) {
        const auto& d = j.at("design");
        base.design.bits = d.value("bits", base.design.bits);
        base.design.s_max = d.value("s_max", base.design.s_max);
        base.design.cond_threshold = d.value("cond_threshold", base.design.cond_threshold);
        base.design.ao_bits_cap = d.value("ao_bits_cap", base.design.ao_bits_cap);
        base.design.highres_base_bits =
            d.value("highres_base_bits", base.design.highres_base_bits);
        if (d.contains("eval_budget")) {
            base.design.eval_budget = d.at("eval_budget").get<long long>();
        }
    }
    if (j.contains("sweep")) {
        base.sweep_dbm = j.at("sweep").value("power_dbm", base.sweep_dbm);
    }
    base.trials = j.value("trials", base.trials);
    base.seed = j.value("seed", base.seed);
    if (j.contains("nmse_denominator")) {
        const auto& d = j.at("nmse_denominator");
        if (d.contains("mode")) {
            const auto mode = d.at("mode").get<std::string>();
            if (mode == "analytic") {
                base.analytic_denominator = true;
            } else if (mode == "empirical") {
                base.analytic_denominator = false;
            } else {
                throw std::invalid_argument("nmse_denominator.mode must be analytic or empirical");
            }
        }
        base.denominator_realizations =
            d.value("realizations", base.denominator_realizations);
    }
    return base;
}

std::string config_hash(const ExperimentConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(config.to_json().dump()));
    return std::string(buf);
}

std::string format_cell(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return std::string(buf);
}

std::string format_cell(long long value) { return std::to_string(value); }

ExperimentReport run_power_sweep(const ExperimentConfig& config,
                                 const std::vector<std::string>& algorithms) {
    if (algorithms.empty()) {
        throw std::invalid_argument("at least one design algorithm is required");
    }
    for (const auto& name : algorithms) {
        if (name != "dft" && name != "ao" && name != "highres") {
            throw std::invalid_argument("unknown design algorithm: " + name);
        }
    }
    config.validate();
    if (config.sweep_dbm.empty()) {
        throw std::invalid_argument("power sweep list is empty");
    }

    const WallClock clock;
    const OfdmGrid& grid = config.grid;
    const int n = grid.n_subcarriers;
    const int k = config.m_elements + 1;
    const ResponseModel truth_model(config.circuit, config.mode, grid);
    const ResponseModel ideal_model(config.circuit, ResponseMode::ideal, grid);

    struct Cell {
        DesignOutcome design;
        ExpandedPattern truth;
        ExpandedPattern assumed;
    };
    std::vector<Cell> cells;
    cells.reserve(algorithms.size());
    for (const auto& name : algorithms) {
        Cell cell;
        cell.design = design_for_algorithm(name, config, truth_model);
        if (cell.design.feasible) {
            cell.truth = expand_pattern(*cell.design.pattern, truth_model, grid);
            cell.assumed = expand_pattern(*cell.design.pattern, ideal_model, grid);
        }
        cells.push_back(std::move(cell));
    }

    const double denom = denominator_energy(config);

    ExperimentReport report;
    report.columns = {"power_dbm",      "pattern",          "estimator",
                      "feasible",       "nmse",             "nmse_theoretical",
                      "trials",         "design_objective", "design_evals"};
    report.metadata = base_metadata(config);
    report.metadata["algorithms"] = algorithms;
    report.metadata["nmse_denominator_energy"] = denom;

    for (double power_dbm : config.sweep_dbm) {
        const double pt = dbm_to_watts(power_dbm);
        for (std::size_t a = 0; a < algorithms.size(); ++a) {
            const Cell& cell = cells[a];
            if (!cell.design.feasible) {
                for (const char* estimator : {"practical", "mismatched"}) {
                    report.rows.push_back({format_cell(power_dbm), algorithms[a], estimator, "0",
                                           "nan", "nan", format_cell(0LL), "inf",
                                           format_cell(cell.design.evals)});
                }
                continue;
            }
            const double theoretical =
                theoretical_nmse(cell.truth, config.noise.sigma2, pt, denom);
            std::vector<TrialTerms> practical_terms;
            std::vector<TrialTerms> mismatched_terms;
            practical_terms.reserve(static_cast<std::size_t>(config.trials));
            mismatched_terms.reserve(static_cast<std::size_t>(config.trials));
            bool mismatched_ok = true;
            for (int t = 0; t < config.trials; ++t) {
                const auto trial = static_cast<std::uint64_t>(t);
                Rng ch_rng = make_rng(config.seed, Stream::channel, trial);
                const ChannelRealization real = realize_channels(
                    ch_rng, config.geometry, grid, config.m_elements, config.tap_profile);
                Rng pilot_rng = make_rng(config.seed, Stream::pilot, trial);
                const PilotBlock pilots = generate_pilots(pilot_rng, grid, k, pt);
                Rng noise_rng = make_rng(config.seed, Stream::noise, trial);
                const ReceivedBlock received =
                    simulate_reception(real, cell.truth, pilots, config.noise, noise_rng);
                practical_terms.push_back(trial_terms(
                    run_estimate(received, pilots, cell.truth, config.design.cond_threshold),
                    real));
                if (mismatched_ok) {
                    try {
                        mismatched_terms.push_back(trial_terms(
                            run_estimate(received, pilots, cell.assumed,
                                         config.design.cond_threshold),
                            real));
                    } catch (const IllConditionedError&) {
                        mismatched_ok = false;
                    }
                }
            }
            report.rows.push_back({format_cell(power_dbm), algorithms[a], "practical", "1",
                                   format_cell(empirical_nmse(practical_terms, n)),
                                   format_cell(theoretical),
                                   format_cell(static_cast<long long>(config.trials)),
                                   format_cell(cell.design.objective),
                                   format_cell(cell.design.evals)});
            report.rows.push_back(
                {format_cell(power_dbm), algorithms[a], "mismatched",
                 mismatched_ok ? "1" : "0",
                 mismatched_ok ? format_cell(empirical_nmse(mismatched_terms, n)) : "nan", "nan",
                 format_cell(static_cast<long long>(mismatched_ok ? config.trials : 0)),
                 format_cell(cell.design.objective), format_cell(cell.design.evals)});
        }
    }
    report.metadata["wall_time_s"] = clock.seconds();
    return report;
}

ExperimentReport run_convergence_trace(const ExperimentConfig& config, int sweeps) {
    config.validate();
    if (sweeps < 1) {
        throw std::invalid_argument("at least one sweep is required");
    }
    const WallClock clock;
    const ResponseModel model(config.circuit, config.mode, config.grid);
    DesignConfig d = config.design;
    d.s_max = sweeps;
    const int m = config.m_elements;
    const PatternMatrix init =
        dft_hadamard_init(m, m + 1, PhaseCodebook::with_bits(d.bits), model, config.grid,
                          d.cond_threshold);
    const DesignResult res = ao_design(init, d, model, config.grid);

    const std::size_t updates_per_sweep = static_cast<std::size_t>(m) * (m + 1);
    ExperimentReport report;
    report.columns = {"sweep", "objective"};
    report.metadata = base_metadata(config);
    report.metadata["bits"] = d.bits;
    report.metadata["eval_count"] = res.eval_count;
    for (int s = 0; s <= sweeps; ++s) {
        const std::size_t idx = static_cast<std::size_t>(s) * updates_per_sweep;
        report.rows.push_back(
            {format_cell(static_cast<long long>(s)), format_cell(res.objective_trace.at(idx))});
    }
    report.metadata["wall_time_s"] = clock.seconds();
    return report;
}

ExperimentReport run_resolution_sweep(const ExperimentConfig& config, int max_bits) {
    config.validate();
    if (max_bits < 1) {
        throw std::invalid_argument("resolution sweep needs max_bits >= 1");
    }
    const WallClock clock;
    const ResponseModel model(config.circuit, config.mode, config.grid);
    const int m = config.m_elements;
    const std::size_t updates_per_sweep = static_cast<std::size_t>(m) * (m + 1);

    ExperimentReport report;
    report.columns = {"bits", "algorithm", "objective", "design_evals"};
    report.metadata = base_metadata(config);

    std::optional<DesignResult> base2;
    for (int bits = 1; bits <= std::min(max_bits, 2); ++bits) {
        DesignConfig d = config.design;
        d.bits = bits;
        const PatternMatrix init =
            dft_hadamard_init(m, m + 1, PhaseCodebook::with_bits(bits), model, config.grid,
                              d.cond_threshold);
        DesignResult res = ao_design(init, d, model, config.grid);
        report.rows.push_back({format_cell(static_cast<long long>(bits)), "ao",
                               format_cell(res.objective), format_cell(res.eval_count)});
        if (bits == 2) {
            base2 = std::move(res);
        }
    }
    if (max_bits >= 3) {
        if (!base2) {
            DesignConfig d = config.design;
            d.bits = 2;
            const PatternMatrix init =
                dft_hadamard_init(m, m + 1, PhaseCodebook::with_bits(2), model, config.grid,
                                  d.cond_threshold);
            base2 = ao_design(init, d, model, config.grid);
        }
        const DesignResult refined =
            high_res_design(*base2, max_bits, config.design, model, config.grid);
        for (int bits = 3; bits <= max_bits; ++bits) {
            const std::size_t idx = static_cast<std::size_t>(bits - 2) * updates_per_sweep;
            const long long evals =
                3LL * m * (m + 1) * (bits - 2);
            report.rows.push_back({format_cell(static_cast<long long>(bits)), "highres",
                                   format_cell(refined.objective_trace.at(idx)),
                                   format_cell(evals)});
        }
    }
    report.metadata["wall_time_s"] = clock.seconds();
    return report;
}

std::string report_to_csv(const ExperimentReport& report) {
    std::ostringstream out;
    for (std::size_t i = 0; i < report.columns.size(); ++i) {
        out << (i ? "," : "") << report.columns[i];
    }
    out << '\n';
    for (const auto& row : report.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << row[i];
        }
        out << '\n';
    }
    return out.str();
}

nlohmann::json report_to_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["columns"] = report.columns;
    j["rows"] = report.rows;
    j["metadata"] = report.metadata;
    return j;
}

ExperimentReport report_from_json(const nlohmann::json& j) {
    ExperimentReport report;
    report.columns = j.at("columns").get<std::vector<std::string>>();
    report.rows = j.at("rows").get<std::vector<std::vector<std::string>>>();
    report.metadata = j.at("metadata");
    return report;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& path,
                  ReportFormat format) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open report file for writing: " + path.string());
    }
    if (format == ReportFormat::csv) {
        out << report_to_csv(report);
    } else {
        out << report_to_json(report).dump(2) << '\n';
    }
    if (!out) {
        throw std::runtime_error("failed while writing report: " + path.string());
    }
}

} // namespace irsim
