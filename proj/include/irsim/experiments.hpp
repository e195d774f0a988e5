#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "irsim/channel.hpp"
#include "irsim/estimation.hpp"
#include "irsim/pattern_design.hpp"
#include "irsim/reflection_model.hpp"

namespace irsim {

inline constexpr const char* kVersion = "0.1.0";

enum class ReportFormat { csv, json };

// Everything a run needs; a report is a pure function of (config, seed).
struct ExperimentConfig {
    OfdmGrid grid;
    int m_elements;
    LinkGeometry geometry;
    TapProfile tap_profile = TapProfile::equal;
    NoiseModel noise;
    CircuitParams circuit;
    std::string alpha_set; // name recorded in outputs; "custom" for explicit alphas
    ResponseMode mode = ResponseMode::practical;
    DesignConfig design;
    std::vector<double> sweep_dbm; // transmit powers
    int trials;
    std::uint64_t seed;
    // NMSE denominator: Monte Carlo average by default, or the closed-form
    // link-budget expectation.
    bool analytic_denominator = false;
    int denominator_realizations = 10000;

    static ExperimentConfig desk_profile();  // M=8, N=16, fast enough for CI
    static ExperimentConfig paper_profile(); // M=36, N=64, opt-in

    nlohmann::json to_json() const;
    // Overlays the keys present in j onto base (sectioned, flat keys).
    static ExperimentConfig from_json(const nlohmann::json& j, ExperimentConfig base);
    void validate() const;
};

std::string config_hash(const ExperimentConfig& config);

// Tabular result with pre-formatted cells so CSV output is byte-stable.
struct ExperimentReport {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    nlohmann::json metadata;

    bool operator==(const ExperimentReport&) const = default;
};

// Estimation error versus transmit power for each designed pattern, under
// both the dispersion-aware estimator and the frequency-flat mismatched one.
// algorithms: subset of {"dft", "ao", "highres"}. Design failures mark their
// rows infeasible and the sweep continues.
ExperimentReport run_power_sweep(const ExperimentConfig& config,
                                 const std::vector<std::string>& algorithms);

// Objective after each full coordinate sweep, starting from the baseline.
ExperimentReport run_convergence_trace(const ExperimentConfig& config, int sweeps = 6);

// Designed-pattern objective per codebook resolution 1..max_bits, with the
// instrumented search counts.
ExperimentReport run_resolution_sweep(const ExperimentConfig& config, int max_bits);

std::string report_to_csv(const ExperimentReport& report);
nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);
void write_report(const ExperimentReport& report, const std::filesystem::path& path,
                  ReportFormat format);

std::string format_cell(double value);
std::string format_cell(long long value);

} // namespace irsim
