#pragma once

#include <armadillo>
#include <span>

#include "irsim/channel.hpp"
#include "irsim/reflection_model.hpp"
#include "irsim/rng.hpp"

namespace irsim {

inline constexpr double kDefaultCondThreshold = 1e8;

// Constant-modulus pilots x(n, k) = sqrt(Pt/N) * exp(j*w), w uniform in
// [0, 2*pi); power is split equally across subcarriers.
struct PilotBlock {
    arma::cx_mat symbols;        // N x K
    double per_subcarrier_power; // Pt / N
};

PilotBlock generate_pilots(Rng& rng, const OfdmGrid& grid, int k_slots, double total_power);

struct ReceivedBlock {
    arma::cx_mat samples; // N x K
};

// y(n, k) = g_hat(:, n)^H * psi_n(:, k) * x(n, k) + v,  v ~ CN(0, sigma2).
ReceivedBlock simulate_reception(const ChannelRealization& realization,
                                 const ExpandedPattern& expanded, const PilotBlock& pilots,
                                 const NoiseModel& noise, Rng& rng);

// Per-slot normalization z(n, k) = y(n, k) / x(n, k).
arma::cx_mat per_slot_estimate(const ReceivedBlock& received, const PilotBlock& pilots);

// Stacks the K slot estimates of one subcarrier into the column vector the
// LS step inverts: column n equals conj(z(n, :))^T, so z_agg = Psi_n^H g_hat_n
// plus scaled noise.
arma::cx_mat aggregate_slots(const arma::cx_mat& z);

struct EstimateSet {
    arma::cx_mat g_tilde; // (M+1) x N
};

// Solves Psi_n^H g = z_agg(:, n) per subcarrier with a pivoted factorization.
// Throws IllConditionedError when any training matrix has a condition number
// above the threshold.
EstimateSet ls_solve(const arma::cx_mat& z_aggregated, const ExpandedPattern& expanded,
                     double cond_threshold = kDefaultCondThreshold);

// Closed-form estimation error:
//   (sigma2 / Pt) * sum_n ||Psi_n^{-1}||_F^2 / sum_mean_stacked_power
// where sum_mean_stacked_power = sum_n E{||g_hat(:, n)||^2}, supplied either
// analytically (N * mean_stacked_power) or as a Monte Carlo average.
double theoretical_nmse(const ExpandedPattern& expanded, double sigma2, double total_power,
                        double sum_mean_stacked_power);

// Monte Carlo average of sum_n ||g_hat(:, n)||^2 over realizations.
double mean_stacked_energy(std::span<const ChannelRealization> realizations);

// Per-trial error and channel energies, the two columns every trial row
// carries; the NMSE estimators below aggregate them.
struct TrialTerms {
    double error_energy;   // sum_n ||g_tilde_n - g_hat_n||^2
    double channel_energy; // sum_n ||g_hat_n||^2
};

TrialTerms trial_terms(const EstimateSet& estimate, const ChannelRealization& realization);

// Ratio of Monte Carlo sums (the default estimator).
double empirical_nmse(std::span<const TrialTerms> trials, int n_subcarriers);
// Mean of per-trial ratios, exposed for comparison.
double empirical_nmse_mean_ratio(std::span<const TrialTerms> trials, int n_subcarriers);

// Normalize + aggregate + solve against the given solver-side expansion.
EstimateSet run_estimate(const ReceivedBlock& received, const PilotBlock& pilots,
                         const ExpandedPattern& solver_view,
                         double cond_threshold = kDefaultCondThreshold);

// Reception is simulated under the practical response while the solver
// assumes the frequency-flat ideal element, reproducing estimators that
// ignore dispersion.
EstimateSet run_mismatched_estimate(const ChannelRealization& realization,
                                    const PatternMatrix& pattern, const CircuitParams& params,
                                    const OfdmGrid& grid, const PilotBlock& pilots,
                                    const NoiseModel& noise, Rng& rng,
                                    double cond_threshold = kDefaultCondThreshold);

} // namespace irsim
