#include "irsim/pattern_design.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace irsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInfeasible = std::numeric_limits<double>::infinity();

// Objective evaluator for the coordinate searches. Element responses depend
// only on (codebook value, subcarrier), so they are tabulated once and every
// candidate evaluation reduces to table lookups plus one singular-value
// factorization per subcarrier. The singular values give both the condition
// number and ||Psi^{-1}||_F^2 = sum_i 1/s_i^2.
class PatternObjective {
  public:
    PatternObjective(const PhaseCodebook& codebook, const ResponseModel& model,
                     const OfdmGrid& grid, double cond_threshold)
        : n_subcarriers_(grid.n_subcarriers), cond_threshold_(cond_threshold) {
        table_.set_size(codebook.size(), static_cast<arma::uword>(n_subcarriers_));
        for (int n = 0; n < n_subcarriers_; ++n) {
            const double f = grid.subcarrier_frequency(n + 1);
            for (std::size_t q = 0; q < codebook.size(); ++q) {
                table_(q, static_cast<arma::uword>(n)) = model.coefficient(codebook.values[q], f);
            }
        }
    }

    // code: M x K codebook indices. Returns +inf when any training matrix
    // violates the rank/conditioning constraint.
    double evaluate(const arma::umat& code) const {
        const arma::uword m = code.n_rows;
        const arma::uword k = code.n_cols;
        arma::cx_mat psi(m + 1, k);
        psi.row(0).ones();
        arma::vec s;
        double total = 0.0;
        for (int n = 0; n < n_subcarriers_; ++n) {
            const auto un = static_cast<arma::uword>(n);
            for (arma::uword row = 0; row < m; ++row) {
                for (arma::uword col = 0; col < k; ++col) {
                    psi(row + 1, col) = table_(code(row, col), un);
                }
            }
            if (!arma::svd(s, psi) || s(s.n_elem - 1) <= 0.0 ||
                s(0) / s(s.n_elem - 1) >= cond_threshold_) {
                return kInfeasible;
            }
            for (arma::uword i = 0; i < s.n_elem; ++i) {
                total += 1.0 / (s(i) * s(i));
            }
        }
        return total;
    }

  private:
    int n_subcarriers_;
    double cond_threshold_;
    arma::cx_mat table_; // codebook value x subcarrier
};

arma::umat pattern_to_indices(const PatternMatrix& pattern, const PhaseCodebook& codebook) {
    arma::umat code(pattern.phases.n_rows, pattern.phases.n_cols);
    for (arma::uword i = 0; i < pattern.phases.n_elem; ++i) {
        code(i) = codebook.index_of(pattern.phases(i));
    }
    return code;
}

PatternMatrix indices_to_pattern(const arma::umat& code, const PhaseCodebook& codebook) {
    arma::mat phases(code.n_rows, code.n_cols);
    for (arma::uword i = 0; i < code.n_elem; ++i) {
        phases(i) = codebook.values[code(i)];
    }
    return PatternMatrix(std::move(phases), codebook.bits);
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

bool is_prime(int n) {
    if (n < 2) {
        return false;
    }
    for (int d = 2; d * d <= n; ++d) {
        if (n % d == 0) {
            return false;
        }
    }
    return true;
}

// Legendre symbol of a mod prime p via Euler's criterion.
int legendre(int a, int p) {
    a %= p;
    if (a < 0) {
        a += p;
    }
    if (a == 0) {
        return 0;
    }
    long long result = 1;
    long long base = a;
    int e = (p - 1) / 2;
    while (e > 0) {
        if (e & 1) {
            result = result * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    return result == 1 ? 1 : -1;
}

bool hadamard_order_exists(int order) {
    if (order == 1 || order == 2) {
        return true;
    }
    if (order % 4 != 0) {
        return false;
    }
    return is_power_of_two(order) || (is_prime(order - 1) && (order - 1) % 4 == 3);
}

// +-1 Hadamard matrix with an all-ones first row: Sylvester doubling for
// power-of-two orders, Paley construction I for order q+1 with q prime
// congruent to 3 mod 4.
arma::imat build_hadamard(int order) {
    if (is_power_of_two(order)) {
        arma::imat h(1, 1);
        h(0, 0) = 1;
        while (static_cast<int>(h.n_rows) < order) {
            const arma::uword n = h.n_rows;
            arma::imat next(2 * n, 2 * n);
            next.submat(0, 0, n - 1, n - 1) = h;
            next.submat(0, n, n - 1, 2 * n - 1) = h;
            next.submat(n, 0, 2 * n - 1, n - 1) = h;
            next.submat(n, n, 2 * n - 1, 2 * n - 1) = -h;
            h = next;
        }
        return h;
    }
    const int q = order - 1;
    if (!is_prime(q) || q % 4 != 3) {
        throw std::invalid_argument("no Hadamard construction available for this order");
    }
    arma::imat h(static_cast<arma::uword>(order), static_cast<arma::uword>(order));
    h.row(0).ones();
    for (int i = 1; i < order; ++i) {
        h(static_cast<arma::uword>(i), 0) = -1;
        for (int j = 1; j < order; ++j) {
            const int chi = legendre(i - j, q);
            h(static_cast<arma::uword>(i), static_cast<arma::uword>(j)) = (i == j) ? 1 : chi;
        }
    }
    return h;
}

} // namespace

double design_objective(const PatternMatrix& pattern, const ResponseModel& model,
                        const OfdmGrid& grid, double cond_threshold) {
    const PhaseCodebook codebook = PhaseCodebook::with_bits(pattern.bits);
    const PatternObjective objective(codebook, model, grid, cond_threshold);
    return objective.evaluate(pattern_to_indices(pattern, codebook));
}

std::vector<double> pattern_condition_numbers(const ExpandedPattern& expanded) {
    std::vector<double> conds;
    conds.reserve(expanded.psi.size());
    for (const auto& psi : expanded.psi) {
        arma::vec s;
        if (!arma::svd(s, psi) || s(s.n_elem - 1) <= 0.0) {
            conds.push_back(std::numeric_limits<double>::infinity());
        } else {
            conds.push_back(s(0) / s(s.n_elem - 1));
        }
    }
    return conds;
}

FeasibilityReport check_feasibility(const PatternMatrix& pattern, const ResponseModel& model,
                                    const OfdmGrid& grid, double cond_threshold) {
    const ExpandedPattern expanded = expand_pattern(pattern, model, grid);
    for (const auto& psi : expanded.psi) {
        for (arma::uword col = 0; col < psi.n_cols; ++col) {
            if (psi(0, col) != std::complex<double>(1.0, 0.0)) {
                throw std::logic_error("expanded pattern lost its all-ones first row");
            }
        }
    }
    FeasibilityReport report;
    report.condition_numbers = pattern_condition_numbers(expanded);
    report.feasible = true;
    for (double c : report.condition_numbers) {
        if (!(c < cond_threshold)) {
            report.feasible = false;
        }
    }
    return report;
}

PatternMatrix dft_hadamard_init(int m_elements, int k_slots, const PhaseCodebook& codebook,
                                const ResponseModel& model, const OfdmGrid& grid,
                                double cond_threshold) {
    if (k_slots != m_elements + 1) {
        throw std::invalid_argument("training requires K = M + 1 slots");
    }
    const int order = m_elements + 1;
    arma::mat raw(static_cast<arma::uword>(m_elements), static_cast<arma::uword>(k_slots));
    if (codebook.bits == 1 && hadamard_order_exists(order)) {
        const arma::imat h = build_hadamard(order);
        for (int row = 0; row < m_elements; ++row) {
            for (int col = 0; col < k_slots; ++col) {
                raw(static_cast<arma::uword>(row), static_cast<arma::uword>(col)) =
                    h(static_cast<arma::uword>(row) + 1, static_cast<arma::uword>(col)) > 0
                        ? 0.0
                        : std::numbers::pi;
            }
        }
    } else {
        // Rows 1..M of the (M+1)-point DFT phase matrix; the implicit ones
        // row is its zeroth row.
        for (int row = 0; row < m_elements; ++row) {
            for (int col = 0; col < k_slots; ++col) {
                const double phase = kTwoPi * (row + 1) * col / order;
                raw(static_cast<arma::uword>(row), static_cast<arma::uword>(col)) =
                    std::fmod(phase, kTwoPi);
            }
        }
    }

    // Retry ladder of cyclic quantization offsets: a full circle of half-step
    // offsets first, then progressively finer quanta. The finer rungs matter
    // for odd K at one bit, where the DFT phases quantize symmetrically and
    // every half-step offset leaves duplicate or negated rows.
    std::vector<double> offsets{0.0};
    const double half_step = codebook.step() / 2.0;
    for (int t = 1; t < 2 * static_cast<int>(codebook.size()); ++t) {
        offsets.push_back(t * half_step);
    }
    for (int rung = 2; rung <= 5; ++rung) {
        const double quantum = codebook.step() / std::exp2(rung);
        const int count = static_cast<int>(std::llround(kTwoPi / quantum));
        for (int t = 1; t < count; t += 2) {
            offsets.push_back(t * quantum);
        }
    }
    for (const double offset : offsets) {
        arma::mat quantized(raw.n_rows, raw.n_cols);
        for (arma::uword i = 0; i < raw.n_elem; ++i) {
            quantized(i) = codebook.quantize(raw(i) + offset);
        }
        PatternMatrix candidate(std::move(quantized), codebook.bits);
        if (check_feasibility(candidate, model, grid, cond_threshold).feasible) {
            return candidate;
        }
    }
    throw std::runtime_error("no feasible training baseline found after offset retries");
}

DesignResult ao_design(const PatternMatrix& init, const DesignConfig& config,
                       const ResponseModel& model, const OfdmGrid& grid) {
    if (config.s_max < 1) {
        throw std::invalid_argument("at least one sweep is required");
    }
    if (config.bits > config.ao_bits_cap) {
        std::ostringstream msg;
        msg << "exhaustive per-coordinate search capped at " << config.ao_bits_cap
            << " bits; requested " << config.bits;
        throw std::invalid_argument(msg.str());
    }
    const PhaseCodebook codebook = PhaseCodebook::with_bits(config.bits);
    const PatternObjective objective(codebook, model, grid, config.cond_threshold);
    arma::umat code = pattern_to_indices(init, codebook);

    double current = objective.evaluate(code);
    if (!std::isfinite(current)) {
        throw std::invalid_argument("initial pattern is infeasible");
    }
    std::vector<double> trace{current};
    long long evals = 0;
    const auto n_codes = codebook.size();

    bool budget_hit = false;
    for (int sweep = 0; sweep < config.s_max && !budget_hit; ++sweep) {
        for (arma::uword row = 0; row < code.n_rows && !budget_hit; ++row) {
            for (arma::uword col = 0; col < code.n_cols; ++col) {
                if (config.eval_budget &&
                    evals + static_cast<long long>(n_codes) > *config.eval_budget) {
                    budget_hit = true;
                    break;
                }
                arma::uword best_q = code(row, col);
                double best = current;
                for (std::size_t q = 0; q < n_codes; ++q) {
                    code(row, col) = q;
                    const double value = objective.evaluate(code);
                    ++evals;
                    if (value < best) {
                        best = value;
                        best_q = q;
                    }
                }
                code(row, col) = best_q;
                current = best;
                trace.push_back(current);
            }
        }
    }
    return DesignResult{indices_to_pattern(code, codebook), current, std::move(trace), evals};
}

std::array<double, 3> neighbor_set(const PhaseCodebook& codebook, double value) {
    const std::size_t n = codebook.size();
    const std::size_t q = codebook.index_of(value);
    return {codebook.values[(q + n - 1) % n], codebook.values[q], codebook.values[(q + 1) % n]};
}

DesignResult high_res_design(const DesignResult& base, int target_bits,
                             const DesignConfig& config, const ResponseModel& model,
                             const OfdmGrid& grid) {
    const int base_bits = base.pattern.bits;
    if (target_bits < 3) {
        throw std::invalid_argument("refinement targets at least 3 bits");
    }
    if (target_bits <= base_bits) {
        throw std::invalid_argument("target resolution must exceed the base resolution");
    }

    arma::mat values = base.pattern.phases;
    double current = design_objective(base.pattern, model, grid, config.cond_threshold);
    if (!std::isfinite(current)) {
        throw std::invalid_argument("base pattern is infeasible");
    }
    std::vector<double> trace{current};
    long long evals = 0;
    bool budget_hit = false;

    for (int bits = base_bits + 1; bits <= target_bits && !budget_hit; ++bits) {
        const PhaseCodebook codebook = PhaseCodebook::with_bits(bits);
        const PatternObjective objective(codebook, model, grid, config.cond_threshold);
        arma::umat code(values.n_rows, values.n_cols);
        for (arma::uword i = 0; i < values.n_elem; ++i) {
            code(i) = codebook.index_of(values(i));
        }
        const std::size_t n = codebook.size();
        for (arma::uword row = 0; row < code.n_rows && !budget_hit; ++row) {
            for (arma::uword col = 0; col < code.n_cols; ++col) {
                if (config.eval_budget && evals + 3 > *config.eval_budget) {
                    budget_hit = true;
                    break;
                }
                const std::size_t q = code(row, col);
                const std::array<std::size_t, 3> candidates{(q + n - 1) % n, q, (q + 1) % n};
                std::size_t best_q = q;
                double best = current;
                for (std::size_t cand : candidates) {
                    code(row, col) = cand;
                    const double value = objective.evaluate(code);
                    ++evals;
                    if (value < best) {
                        best = value;
                        best_q = cand;
                    }
                }
                code(row, col) = best_q;
                current = best;
                trace.push_back(current);
            }
        }
        for (arma::uword i = 0; i < values.n_elem; ++i) {
            values(i) = codebook.values[code(i)];
        }
    }
    return DesignResult{PatternMatrix(std::move(values), target_bits), current, std::move(trace),
                        evals};
}

} // namespace irsim
