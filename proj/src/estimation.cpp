#include "irsim/estimation.hpp"

#include <numbers>
#include <sstream>
#include <stdexcept>

namespace irsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double spectral_cond(const arma::cx_mat& m, double* inv_frob_sq = nullptr) {
    arma::vec s;
    if (!arma::svd(s, m) || s.n_elem == 0 || s(s.n_elem - 1) <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    if (inv_frob_sq != nullptr) {
        double acc = 0.0;
        for (arma::uword i = 0; i < s.n_elem; ++i) {
            acc += 1.0 / (s(i) * s(i));
        }
        *inv_frob_sq = acc;
    }
    return s(0) / s(s.n_elem - 1);
}

} // namespace

PilotBlock generate_pilots(Rng& rng, const OfdmGrid& grid, int k_slots, double total_power) {
    if (k_slots < 1) {
        throw std::invalid_argument("at least one training slot is required");
    }
    if (!(total_power > 0.0)) {
        throw std::invalid_argument("transmit power must be positive");
    }
    const int n = grid.n_subcarriers;
    const double modulus = std::sqrt(total_power / n);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    PilotBlock block;
    block.per_subcarrier_power = total_power / n;
    block.symbols.set_size(static_cast<arma::uword>(n), static_cast<arma::uword>(k_slots));
    for (int row = 0; row < n; ++row) {
        for (int col = 0; col < k_slots; ++col) {
            block.symbols(static_cast<arma::uword>(row), static_cast<arma::uword>(col)) =
                std::polar(modulus, phase(rng));
        }
    }
    return block;
}

ReceivedBlock simulate_reception(const ChannelRealization& realization,
                                 const ExpandedPattern& expanded, const PilotBlock& pilots,
                                 const NoiseModel& noise, Rng& rng) {
    const int n = static_cast<int>(pilots.symbols.n_rows);
    const int k = static_cast<int>(pilots.symbols.n_cols);
    if (expanded.n_subcarriers() != n || expanded.k_slots() != k ||
        realization.g_hat.n_rows != expanded.psi.front().n_rows ||
        realization.g_hat.n_cols != static_cast<arma::uword>(n)) {
        throw std::invalid_argument("channel, pattern and pilot shapes are inconsistent");
    }
    if (noise.sigma2 < 0.0) {
        throw std::invalid_argument("noise power must be nonnegative");
    }
    ReceivedBlock out;
    out.samples.set_size(static_cast<arma::uword>(n), static_cast<arma::uword>(k));
    for (int row = 0; row < n; ++row) {
        const auto un = static_cast<arma::uword>(row);
        for (int col = 0; col < k; ++col) {
            const auto uk = static_cast<arma::uword>(col);
            const std::complex<double> gain =
                arma::cdot(realization.g_hat.col(un), expanded.psi[un].col(uk));
            out.samples(un, uk) = gain * pilots.symbols(un, uk) + sample_cn(rng, noise.sigma2);
        }
    }
    return out;
}

arma::cx_mat per_slot_estimate(const ReceivedBlock& received, const PilotBlock& pilots) {
    if (received.samples.n_rows != pilots.symbols.n_rows ||
        received.samples.n_cols != pilots.symbols.n_cols) {
        throw std::invalid_argument("received block does not match the pilot block");
    }
    if (arma::abs(pilots.symbols).min() <= 0.0) {
        throw std::invalid_argument("pilot symbols must be nonzero");
    }
    return received.samples / pilots.symbols;
}

arma::cx_mat aggregate_slots(const arma::cx_mat& z) { return z.t(); }

EstimateSet ls_solve(const arma::cx_mat& z_aggregated, const ExpandedPattern& expanded,
                     double cond_threshold) {
    const int n = expanded.n_subcarriers();
    const int k = expanded.k_slots();
    if (expanded.psi.empty() || static_cast<int>(expanded.psi.front().n_rows) != k) {
        throw std::invalid_argument("training matrices must be square (K = M+1)");
    }
    if (z_aggregated.n_rows != static_cast<arma::uword>(k) ||
        z_aggregated.n_cols != static_cast<arma::uword>(n)) {
        throw std::invalid_argument("aggregated estimates do not match the pattern shape");
    }
    EstimateSet out;
    out.g_tilde.set_size(static_cast<arma::uword>(k), static_cast<arma::uword>(n));
    for (int sc = 0; sc < n; ++sc) {
        const auto un = static_cast<arma::uword>(sc);
        const double cond = spectral_cond(expanded.psi[un]);
        if (!(cond < cond_threshold)) {
            std::ostringstream msg;
            msg << "training matrix of subcarrier " << sc + 1 << " has condition number " << cond
                << " (threshold " << cond_threshold << ")";
            throw IllConditionedError(msg.str());
        }
        out.g_tilde.col(un) = arma::solve(expanded.psi[un].t(), z_aggregated.col(un),
                                          arma::solve_opts::no_approx);
    }
    return out;
}

double theoretical_nmse(const ExpandedPattern& expanded, double sigma2, double total_power,
                        double sum_mean_stacked_power) {
    if (!(total_power > 0.0)) {
        throw std::invalid_argument("transmit power must be positive");
    }
    if (!(sum_mean_stacked_power > 0.0)) {
        throw std::invalid_argument("expected channel energy must be positive");
    }
    if (sigma2 < 0.0) {
        throw std::invalid_argument("noise power must be nonnegative");
    }
    double trace_sum = 0.0;
    for (const auto& psi : expanded.psi) {
        double inv_frob_sq = 0.0;
        const double cond = spectral_cond(psi, &inv_frob_sq);
        if (!std::isfinite(cond)) {
            throw IllConditionedError("training matrix is singular");
        }
        trace_sum += inv_frob_sq;
    }
    return sigma2 / total_power * trace_sum / sum_mean_stacked_power;
}

double mean_stacked_energy(std::span<const ChannelRealization> realizations) {
    if (realizations.empty()) {
        throw std::invalid_argument("at least one realization is required");
    }
    double acc = 0.0;
    for (const auto& r : realizations) {
        acc += arma::accu(arma::square(arma::abs(r.g_hat)));
    }
    return acc / static_cast<double>(realizations.size());
}

TrialTerms trial_terms(const EstimateSet& estimate, const ChannelRealization& realization) {
    if (estimate.g_tilde.n_rows != realization.g_hat.n_rows ||
        estimate.g_tilde.n_cols != realization.g_hat.n_cols) {
        throw std::invalid_argument("estimate and realization shapes differ");
    }
    TrialTerms t;
    t.error_energy = arma::accu(arma::square(arma::abs(estimate.g_tilde - realization.g_hat)));
    t.channel_energy = arma::accu(arma::square(arma::abs(realization.g_hat)));
    return t;
}

double empirical_nmse(std::span<const TrialTerms> trials, int n_subcarriers) {
    if (trials.empty()) {
        throw std::invalid_argument("at least one trial is required");
    }
    double num = 0.0;
    double den = 0.0;
    for (const auto& t : trials) {
        num += t.error_energy;
        den += t.channel_energy;
    }
    if (!(den > 0.0)) {
        throw std::invalid_argument("all-zero channels: NMSE denominator vanishes");
    }
    return num / den / n_subcarriers;
}

double empirical_nmse_mean_ratio(std::span<const TrialTerms> trials, int n_subcarriers) {
    if (trials.empty()) {
        throw std::invalid_argument("at least one trial is required");
    }
    double acc = 0.0;
    for (const auto& t : trials) {
        if (!(t.channel_energy > 0.0)) {
            throw std::invalid_argument("all-zero channel in a trial: ratio undefined");
        }
        acc += t.error_energy / t.channel_energy;
    }
    return acc / static_cast<double>(trials.size()) / n_subcarriers;
}

EstimateSet run_estimate(const ReceivedBlock& received, const PilotBlock& pilots,
                         const ExpandedPattern& solver_view, double cond_threshold) {
    const arma::cx_mat z = per_slot_estimate(received, pilots);
    return ls_solve(aggregate_slots(z), solver_view, cond_threshold);
}

EstimateSet run_mismatched_estimate(const ChannelRealization& realization,
                                    const PatternMatrix& pattern, const CircuitParams& params,
                                    const OfdmGrid& grid, const PilotBlock& pilots,
                                    const NoiseModel& noise, Rng& rng, double cond_threshold) {
    const ResponseModel practical(params, ResponseMode::practical, grid);
    const ResponseModel ideal(params, ResponseMode::ideal, grid);
    const ExpandedPattern truth = expand_pattern(pattern, practical, grid);
    const ExpandedPattern assumed = expand_pattern(pattern, ideal, grid);
    const ReceivedBlock received = simulate_reception(realization, truth, pilots, noise, rng);
    return run_estimate(received, pilots, assumed, cond_threshold);
}

} // namespace irsim
