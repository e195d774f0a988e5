#pragma once

#include <array>
#include <optional>
#include <vector>

#include "irsim/estimation.hpp"
#include "irsim/reflection_model.hpp"

namespace irsim {

struct DesignConfig {
    int s_max = 2;          // full coordinate sweeps of the alternating search
    int bits = 1;           // codebook resolution
    double cond_threshold = kDefaultCondThreshold;
    int ao_bits_cap = 3;    // exhaustive per-coordinate search is 2^bits wide
    int highres_base_bits = 2;
    std::optional<long long> eval_budget; // hard cap on objective evaluations
};

struct DesignResult {
    PatternMatrix pattern;
    double objective;
    // trace[0] is the initial objective, then one entry per completed
    // coordinate update; non-increasing by construction.
    std::vector<double> objective_trace;
    long long eval_count;
};

// sum_n ||Psi_n^{-1}||_F^2 of the expanded pattern, or +inf when any
// training matrix is rank-deficient or has condition number above the
// threshold.
double design_objective(const PatternMatrix& pattern, const ResponseModel& model,
                        const OfdmGrid& grid, double cond_threshold = kDefaultCondThreshold);

struct FeasibilityReport {
    bool feasible;
    std::vector<double> condition_numbers; // one per subcarrier
};

FeasibilityReport check_feasibility(const PatternMatrix& pattern, const ResponseModel& model,
                                    const OfdmGrid& grid,
                                    double cond_threshold = kDefaultCondThreshold);

// Spectral condition number of each training matrix.
std::vector<double> pattern_condition_numbers(const ExpandedPattern& expanded);

// Training baseline: a {0, pi} Hadamard-type pattern when an order-(M+1)
// Hadamard matrix exists and bits == 1, otherwise the codebook quantization
// of the DFT phases 2*pi*m*(k-1)/(M+1). Retries with half-step offsets if
// the quantized pattern is infeasible.
PatternMatrix dft_hadamard_init(int m_elements, int k_slots, const PhaseCodebook& codebook,
                                const ResponseModel& model, const OfdmGrid& grid,
                                double cond_threshold = kDefaultCondThreshold);

// Coordinate descent over the full codebook: s_max sweeps over element rows
// and slots, each coordinate set to the exhaustive argmin with everything
// else fixed; ties keep the incumbent.
DesignResult ao_design(const PatternMatrix& init, const DesignConfig& config,
                       const ResponseModel& model, const OfdmGrid& grid);

// The codebook value and its two circular neighbors at this resolution.
std::array<double, 3> neighbor_set(const PhaseCodebook& codebook, double value);

// Resolution refinement: starting from a low-resolution design, doubles the
// codebook one bit at a time and restricts each coordinate update to the
// neighbor set of its current value.
DesignResult high_res_design(const DesignResult& base, int target_bits,
                             const DesignConfig& config, const ResponseModel& model,
                             const OfdmGrid& grid);

} // namespace irsim
