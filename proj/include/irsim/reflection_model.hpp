#pragma once

#include <armadillo>
#include <array>
#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "irsim/errors.hpp"

namespace irsim {

// Response curves of one reflecting element. With f in Hz and phi_c the phase
// commanded at the carrier frequency,
//
//   A(phi_c, f) = 1 - (a4*phi_c + a5) / ((0.05*(f/1e9 - D1(phi_c)))^2 + 4)
//   W(phi_c, f) = -2 * atan(D2(phi_c) * (f/1e9 - D1(phi_c)))
//   D1(phi_c)   = a1*tan(phi_c/3) + a2*sin(phi_c) + a6      [resonance, GHz]
//   D2(phi_c)   = a3*phi_c + a7                             [phase slope]
//
// A valid coefficient set keeps A inside (0, 1] for every commanded phase in
// [0, 2*pi) and every frequency in the configured band.
struct CircuitParams {
    std::array<double, 7> alpha; // a1..a7

    // Default set for a varactor-tuned element around 2.4 GHz. The resonance
    // sweeps through the band as the commanded phase varies, the amplitude
    // dips to ~0.56 at resonance and the phase disperses by up to ~2.9 rad
    // across a 0.2 GHz band.
    static CircuitParams varactor_2p4ghz();

    // Look up a named set; throws std::invalid_argument for unknown names.
    static CircuitParams named(const std::string& name);
};

double amplitude_response(const CircuitParams& params, double phi_c, double f_hz);
double phase_response(const CircuitParams& params, double phi_c, double f_hz);

// OFDM dimensioning. Subcarrier n (1-based) sits at
// carrier_hz + (n - (N+1)/2) * bandwidth_hz / N.
struct OfdmGrid {
    int n_subcarriers;   // N
    double bandwidth_hz; // B
    double carrier_hz;   // f_c
    int tap_count;       // L
    int cp_length;       // L_cp, must be >= L so the channel acts circularly

    OfdmGrid(int n_subcarriers, double bandwidth_hz, double carrier_hz, int tap_count,
             int cp_length);

    double subcarrier_frequency(int n) const; // n in 1..N
    double band_low_hz() const { return subcarrier_frequency(1); }
    double band_high_hz() const { return subcarrier_frequency(n_subcarriers); }
};

// Uniform b-bit phase codebook {0, dw, ..., (2^b - 1)*dw} with dw = 2*pi/2^b.
// Every b-bit value is also a member of all finer codebooks.
struct PhaseCodebook {
    int bits;
    std::vector<double> values;

    static PhaseCodebook with_bits(int bits);

    std::size_t size() const { return values.size(); }
    double step() const;
    bool contains(double phase) const;
    std::size_t index_of(double phase) const; // throws if not a member
    double quantize(double phase) const;      // circularly nearest member
};

inline PhaseCodebook build_codebook(int bits) { return PhaseCodebook::with_bits(bits); }

enum class ResponseMode { practical, ideal };

// Binds a coefficient set to a mode and validates it against a grid's band.
// The ideal mode is the frequency-flat unit-amplitude element assumed by
// estimators that ignore dispersion: A == 1 and W(phi_c, f) == phi_c.
class ResponseModel {
  public:
    ResponseModel(CircuitParams params, ResponseMode mode, const OfdmGrid& grid);

    double amplitude(double phi_c, double f_hz) const;
    double phase(double phi_c, double f_hz) const;
    std::complex<double> coefficient(double phi_c, double f_hz) const;

    ResponseMode mode() const { return mode_; }
    const CircuitParams& params() const { return params_; }

  private:
    CircuitParams params_;
    ResponseMode mode_;
};

// Carrier-frequency reflection pattern: entry (m, k) is the phase commanded
// to element m during training slot k. The constant all-ones first row of the
// training matrices is implicit and never stored here.
struct PatternMatrix {
    arma::mat phases; // M x K radians, every entry a member of the bits-codebook
    int bits;

    PatternMatrix(arma::mat phases, int bits);

    int m_elements() const { return static_cast<int>(phases.n_rows); }
    int k_slots() const { return static_cast<int>(phases.n_cols); }
};

// Per-subcarrier training matrices. psi[n] has shape (M+1) x K with an
// all-ones first row; entry (m+1, k) is the element-m response at subcarrier
// n+1 under the commanded phase of slot k.
struct ExpandedPattern {
    std::vector<arma::cx_mat> psi;

    int n_subcarriers() const { return static_cast<int>(psi.size()); }
    int m_elements() const { return psi.empty() ? 0 : static_cast<int>(psi.front().n_rows) - 1; }
    int k_slots() const { return psi.empty() ? 0 : static_cast<int>(psi.front().n_cols); }
};

ExpandedPattern expand_pattern(const PatternMatrix& pattern, const ResponseModel& model,
                               const OfdmGrid& grid);

// Pattern files: {"m": M, "k": K, "bits": b, "phases": [row-major radians]}.
std::string pattern_to_json(const PatternMatrix& pattern);
PatternMatrix pattern_from_json(const std::string& text);
void save_pattern(const PatternMatrix& pattern, const std::filesystem::path& path);
PatternMatrix load_pattern(const std::filesystem::path& path);

} // namespace irsim
