#pragma once

#include <random>
#include <stdexcept>

#include "irsim/channel.hpp"
#include "irsim/pattern_design.hpp"
#include "irsim/reflection_model.hpp"
#include "irsim/rng.hpp"

namespace test_support {

inline irsim::OfdmGrid desk_grid() { return irsim::OfdmGrid(16, 0.2e9, 2.4e9, 4, 8); }

inline irsim::LinkGeometry desk_geometry() {
    return irsim::LinkGeometry{50.0, 2.0, 50.0, 2.2, 2.4, 3.5, -30.0};
}

// Random coefficient draw that stays inside the valid amplitude region:
// 0 <= a4*phi + a5 < 4 holds for every phi in [0, 2*pi) by construction,
// while the resonance lands near the 2.4 GHz band so the landscape varies
// across draws.
inline irsim::CircuitParams random_circuit_params(irsim::Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    irsim::CircuitParams p{};
    p.alpha[0] = 0.2 + 0.5 * u(rng);   // resonance tan coefficient
    p.alpha[1] = -0.3 + 0.6 * u(rng);  // resonance sin coefficient
    p.alpha[2] = -1.2 + 1.6 * u(rng);  // slope vs phase
    p.alpha[3] = 0.08 * u(rng);        // amplitude dip slope
    p.alpha[4] = 0.5 + 2.0 * u(rng);   // amplitude dip floor
    p.alpha[5] = 2.3 + 0.3 * u(rng);   // resonance center, GHz
    p.alpha[6] = 3.0 + 9.0 * u(rng);   // slope offset
    return p;
}

inline irsim::PatternMatrix random_pattern(irsim::Rng& rng, int m, int k,
                                           const irsim::PhaseCodebook& codebook) {
    std::uniform_int_distribution<std::size_t> pick(0, codebook.size() - 1);
    arma::mat phases(static_cast<arma::uword>(m), static_cast<arma::uword>(k));
    for (arma::uword i = 0; i < phases.n_elem; ++i) {
        phases(i) = codebook.values[pick(rng)];
    }
    return irsim::PatternMatrix(std::move(phases), codebook.bits);
}

inline irsim::PatternMatrix random_feasible_pattern(irsim::Rng& rng, int m, int k,
                                                    const irsim::PhaseCodebook& codebook,
                                                    const irsim::ResponseModel& model,
                                                    const irsim::OfdmGrid& grid,
                                                    double max_cond = 1e4) {
    for (int attempt = 0; attempt < 500; ++attempt) {
        irsim::PatternMatrix candidate = random_pattern(rng, m, k, codebook);
        if (irsim::check_feasibility(candidate, model, grid, max_cond).feasible) {
            return candidate;
        }
    }
    throw std::runtime_error("no feasible random pattern after 500 attempts");
}

} // namespace test_support
