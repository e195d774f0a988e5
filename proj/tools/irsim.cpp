// Command-line front end: pattern design, Monte Carlo estimation runs and the
// three standard sweeps, all driven by a sectioned JSON config plus flag
// overrides.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "irsim/experiments.hpp"

namespace {

using irsim::ExperimentConfig;

struct CommonOpts {
    std::string profile = "desk";
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> m_elements;
    std::optional<int> n_subcarriers;
    std::optional<int> bits;
    std::optional<int> s_max;
    std::string alpha_file;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--profile", opts.profile, "Base profile: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--config", opts.config_file, "JSON config overlaying the profile");
    cmd->add_option("--seed", opts.seed, "Root seed");
    cmd->add_option("--trials", opts.trials, "Monte Carlo trials per cell");
    cmd->add_option("--m", opts.m_elements, "Number of reflecting elements");
    cmd->add_option("--n", opts.n_subcarriers, "Number of subcarriers");
    cmd->add_option("--bits", opts.bits, "Phase resolution in bits");
    cmd->add_option("--smax", opts.s_max, "Coordinate sweeps of the alternating search");
    cmd->add_option("--alpha-file", opts.alpha_file,
                    "JSON file with {\"alpha\": [7 reals]} or {\"alpha_set\": name}");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig config = opts.profile == "paper" ? ExperimentConfig::paper_profile()
                                                      : ExperimentConfig::desk_profile();
    if (!opts.config_file.empty()) {
        std::ifstream in(opts.config_file);
        if (!in) {
            throw std::runtime_error("cannot open config file: " + opts.config_file);
        }
        nlohmann::json j;
        in >> j;
        config = ExperimentConfig::from_json(j, std::move(config));
    }
    if (!opts.alpha_file.empty()) {
        std::ifstream in(opts.alpha_file);
        if (!in) {
            throw std::runtime_error("cannot open alpha file: " + opts.alpha_file);
        }
        nlohmann::json j;
        in >> j;
        nlohmann::json wrapped;
        wrapped["response_model"] = j;
        config = ExperimentConfig::from_json(wrapped, std::move(config));
    }
    if (opts.seed) {
        config.seed = *opts.seed;
    }
    if (opts.trials) {
        config.trials = *opts.trials;
    }
    if (opts.m_elements) {
        config.m_elements = *opts.m_elements;
    }
    if (opts.n_subcarriers) {
        config.grid = irsim::OfdmGrid(*opts.n_subcarriers, config.grid.bandwidth_hz,
                                      config.grid.carrier_hz, config.grid.tap_count,
                                      config.grid.cp_length);
    }
    if (opts.bits) {
        config.design.bits = *opts.bits;
    }
    if (opts.s_max) {
        config.design.s_max = *opts.s_max;
    }
    return config;
}

irsim::ReportFormat parse_format(const std::string& format) {
    return format == "json" ? irsim::ReportFormat::json : irsim::ReportFormat::csv;
}

irsim::DesignResult design_with(const std::string& algorithm, const ExperimentConfig& config,
                                const irsim::ResponseModel& model) {
    const int m = config.m_elements;
    const irsim::DesignConfig& d = config.design;
    const auto init_at = [&](int bits) {
        return irsim::dft_hadamard_init(m, m + 1, irsim::PhaseCodebook::with_bits(bits), model,
                                        config.grid, d.cond_threshold);
    };
    if (algorithm == "dft") {
        irsim::PatternMatrix pattern = init_at(d.bits);
        const double objective =
            irsim::design_objective(pattern, model, config.grid, d.cond_threshold);
        return irsim::DesignResult{std::move(pattern), objective, {objective}, 0};
    }
    if (algorithm == "ao") {
        return irsim::ao_design(init_at(d.bits), d, model, config.grid);
    }
    if (algorithm == "highres") {
        if (d.bits < 3) {
            throw std::runtime_error("highres refinement requires --bits >= 3");
        }
        irsim::DesignConfig base_cfg = d;
        base_cfg.bits = d.highres_base_bits;
        const irsim::DesignResult base =
            irsim::ao_design(init_at(base_cfg.bits), base_cfg, model, config.grid);
        return irsim::high_res_design(base, d.bits, d, model, config.grid);
    }
    throw std::runtime_error("unknown design algorithm: " + algorithm);
}

void write_trace_csv(const irsim::DesignResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open trace file for writing: " + path);
    }
    out << "update_index,objective\n";
    for (std::size_t i = 0; i < result.objective_trace.size(); ++i) {
        out << i << ',' << irsim::format_cell(result.objective_trace[i]) << '\n';
    }
}

int run_design(const CommonOpts& opts, const std::string& algorithm, const std::string& out_path,
               const std::string& trace_path) {
    ExperimentConfig config = resolve_config(opts);
    config.validate();
    const irsim::ResponseModel model(config.circuit, config.mode, config.grid);
    const irsim::DesignResult result = design_with(algorithm, config, model);
    const auto report =
        irsim::check_feasibility(result.pattern, model, config.grid, config.design.cond_threshold);
    irsim::save_pattern(result.pattern, out_path);
    if (!trace_path.empty()) {
        write_trace_csv(result, trace_path);
    }
    std::cout << "algorithm=" << algorithm << " objective=" << irsim::format_cell(result.objective)
              << " evals=" << result.eval_count << " feasible=" << (report.feasible ? 1 : 0)
              << " pattern=" << out_path << "\n";
    return report.feasible ? 0 : 1;
}

int run_estimate_cmd(const CommonOpts& opts, const std::string& algorithm,
                     const std::string& pattern_file, const std::string& estimator,
                     double power_dbm, const std::string& out_path,
                     const std::string& trials_csv) {
    ExperimentConfig config = resolve_config(opts);
    config.validate();
    const irsim::OfdmGrid& grid = config.grid;
    const irsim::ResponseModel truth_model(config.circuit, config.mode, grid);
    const irsim::ResponseModel ideal_model(config.circuit, irsim::ResponseMode::ideal, grid);

    irsim::PatternMatrix pattern = pattern_file.empty()
                                       ? design_with(algorithm, config, truth_model).pattern
                                       : irsim::load_pattern(pattern_file);
    const std::string pattern_label = pattern_file.empty() ? algorithm : "file";
    if (pattern.m_elements() != config.m_elements) {
        config.m_elements = pattern.m_elements();
    }
    config.design.bits = pattern.bits;
    const irsim::ExpandedPattern truth = irsim::expand_pattern(pattern, truth_model, grid);
    const irsim::ExpandedPattern solver_view =
        estimator == "mismatched" ? irsim::expand_pattern(pattern, ideal_model, grid) : truth;

    const double pt = irsim::dbm_to_watts(power_dbm);
    const int k = pattern.k_slots();
    std::vector<irsim::TrialTerms> terms;
    terms.reserve(static_cast<std::size_t>(config.trials));
    std::ofstream csv;
    if (!trials_csv.empty()) {
        csv.open(trials_csv);
        if (!csv) {
            throw std::runtime_error("cannot open trial CSV for writing: " + trials_csv);
        }
        csv << "seed,pt_dbm,b,algorithm,nmse_num,nmse_den\n";
    }
    for (int t = 0; t < config.trials; ++t) {
        const auto trial = static_cast<std::uint64_t>(t);
        irsim::Rng ch_rng = irsim::make_rng(config.seed, irsim::Stream::channel, trial);
        const auto real = irsim::realize_channels(ch_rng, config.geometry, grid,
                                                  config.m_elements, config.tap_profile);
        irsim::Rng pilot_rng = irsim::make_rng(config.seed, irsim::Stream::pilot, trial);
        const auto pilots = irsim::generate_pilots(pilot_rng, grid, k, pt);
        irsim::Rng noise_rng = irsim::make_rng(config.seed, irsim::Stream::noise, trial);
        const auto received =
            irsim::simulate_reception(real, truth, pilots, config.noise, noise_rng);
        const auto estimate =
            irsim::run_estimate(received, pilots, solver_view, config.design.cond_threshold);
        const auto tt = irsim::trial_terms(estimate, real);
        terms.push_back(tt);
        if (csv.is_open()) {
            csv << irsim::derive_seed(config.seed, irsim::Stream::channel, trial) << ','
                << irsim::format_cell(power_dbm) << ',' << pattern.bits << ',' << pattern_label
                << ',' << irsim::format_cell(tt.error_energy) << ','
                << irsim::format_cell(tt.channel_energy) << '\n';
        }
    }
    const double nmse = irsim::empirical_nmse(terms, grid.n_subcarriers);
    nlohmann::json out;
    out["nmse"] = nmse;
    out["trials"] = config.trials;
    out["config_hash"] = irsim::config_hash(config);
    out["power_dbm"] = power_dbm;
    out["estimator"] = estimator;
    out["algorithm"] = pattern_label;
    out["bits"] = pattern.bits;
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) {
            throw std::runtime_error("cannot open output file for writing: " + out_path);
        }
        f << out.dump(2) << '\n';
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int strict_exit(const irsim::ExperimentReport& report, bool strict) {
    if (!strict) {
        return 0;
    }
    const auto it =
        std::find(report.columns.begin(), report.columns.end(), std::string("feasible"));
    if (it == report.columns.end()) {
        return 0;
    }
    const std::size_t idx = static_cast<std::size_t>(it - report.columns.begin());
    for (const auto& row : report.rows) {
        if (row.at(idx) == "0") {
            return 2;
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"IRS-assisted OFDM channel estimation and training pattern design"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* validate = app.add_subcommand("validate-config", "Parse and validate a configuration");
    add_common(validate, opts);

    auto* design = app.add_subcommand("design", "Design a training reflection pattern");
    add_common(design, opts);
    std::string algorithm = "ao";
    std::string out_path = "pattern.json";
    std::string trace_path;
    design->add_option("--algorithm", algorithm, "dft, ao or highres")
        ->check(CLI::IsMember({"dft", "ao", "highres"}));
    design->add_option("--out", out_path, "Pattern JSON output path");
    design->add_option("--trace-out", trace_path, "Objective trace CSV (update_index,objective)");

    auto* estimate = app.add_subcommand("estimate", "Monte Carlo estimation at one power point");
    add_common(estimate, opts);
    std::string est_algorithm = "ao";
    std::string pattern_file;
    std::string estimator = "practical";
    double power_dbm = 30.0;
    std::string est_out;
    std::string trials_csv;
    estimate->add_option("--algorithm", est_algorithm, "Pattern design when no --pattern given")
        ->check(CLI::IsMember({"dft", "ao", "highres"}));
    estimate->add_option("--pattern", pattern_file, "Pattern JSON produced by design");
    estimate->add_option("--estimator", estimator, "practical or mismatched")
        ->check(CLI::IsMember({"practical", "mismatched"}));
    estimate->add_option("--power-dbm", power_dbm, "Transmit power in dBm");
    estimate->add_option("--out", est_out, "Aggregated JSON output path");
    estimate->add_option("--trials-csv", trials_csv, "Per-trial CSV output path");

    auto* sweep_power = app.add_subcommand("sweep-power", "NMSE versus transmit power");
    add_common(sweep_power, opts);
    std::vector<std::string> algorithms{"dft", "ao"};
    std::string sweep_out = "power_sweep.csv";
    std::string format = "csv";
    bool strict = false;
    sweep_power->add_option("--algorithms", algorithms, "Subset of dft, ao, highres");
    sweep_power->add_option("--out", sweep_out, "Report output path");
    sweep_power->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    sweep_power->add_flag("--strict", strict, "Exit nonzero on any infeasible design cell");

    auto* trace = app.add_subcommand("trace-convergence", "Objective per coordinate sweep");
    add_common(trace, opts);
    int sweeps = 6;
    std::string trace_out = "convergence.csv";
    std::string trace_format = "csv";
    trace->add_option("--sweeps", sweeps, "Number of full sweeps to trace");
    trace->add_option("--out", trace_out, "Report output path");
    trace->add_option("--format", trace_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* bits_sweep = app.add_subcommand("sweep-bits", "Designed objective per resolution");
    add_common(bits_sweep, opts);
    int max_bits = 6;
    std::string bits_out = "resolution_sweep.csv";
    std::string bits_format = "csv";
    bits_sweep->add_option("--max-bits", max_bits, "Highest resolution to design");
    bits_sweep->add_option("--out", bits_out, "Report output path");
    bits_sweep->add_option("--format", bits_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            ExperimentConfig config = resolve_config(opts);
            config.validate();
            std::cout << config.to_json().dump(2) << "\n"
                      << "config_hash=" << irsim::config_hash(config) << "\nok\n";
            return 0;
        }
        if (design->parsed()) {
            return run_design(opts, algorithm, out_path, trace_path);
        }
        if (estimate->parsed()) {
            return run_estimate_cmd(opts, est_algorithm, pattern_file, estimator, power_dbm,
                                    est_out, trials_csv);
        }
        if (sweep_power->parsed()) {
            ExperimentConfig config = resolve_config(opts);
            const auto report = irsim::run_power_sweep(config, algorithms);
            irsim::write_report(report, sweep_out, parse_format(format));
            std::cout << "wrote " << sweep_out << " (" << report.rows.size() << " rows)\n";
            return strict_exit(report, strict);
        }
        if (trace->parsed()) {
            ExperimentConfig config = resolve_config(opts);
            const auto report = irsim::run_convergence_trace(config, sweeps);
            irsim::write_report(report, trace_out, parse_format(trace_format));
            std::cout << "wrote " << trace_out << " (" << report.rows.size() << " rows)\n";
            return 0;
        }
        if (bits_sweep->parsed()) {
            ExperimentConfig config = resolve_config(opts);
            const auto report = irsim::run_resolution_sweep(config, max_bits);
            irsim::write_report(report, bits_out, parse_format(bits_format));
            std::cout << "wrote " << bits_out << " (" << report.rows.size() << " rows)\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
