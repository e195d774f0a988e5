#pragma once

#include <armadillo>
#include <cmath>
#include <string>

#include "irsim/reflection_model.hpp"
#include "irsim/rng.hpp"

namespace irsim {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

enum class Link { ap_irs, irs_user, ap_user };

// Distance/exponent link budget with a common reference gain at 1 m.
struct LinkGeometry {
    double dist_ap_irs_m;
    double dist_irs_user_m;
    double dist_ap_user_m;
    double ple_ap_irs;
    double ple_irs_user;
    double ple_ap_user;
    double ref_gain_db; // channel power gain at 1 m

    void validate() const; // distances >= 1 m, exponents in [1.5, 6]
};

double path_gain(const LinkGeometry& geometry, Link link);

// Power delay profile of the tap gains. The expected total power equals the
// link path gain either way; "exponential" decays with a time constant of a
// third of the impulse length.
enum class TapProfile { equal, exponential };

// Impulse response of one scalar link; taps are independent Rayleigh with the
// chosen profile summing to the link path gain in expectation.
struct TapChannel {
    arma::cx_vec taps;
};

TapChannel sample_taps(Rng& rng, int tap_count, double total_gain,
                       TapProfile profile = TapProfile::equal);

// Zero-padded DFT of the impulse response:
// cfr(n) = sum_l taps(l) * exp(-j*2*pi*(n-1)*l / N), n = 1..N.
arma::cx_vec taps_to_cfr(const TapChannel& taps, int n_subcarriers);

struct NoiseModel {
    double sigma2; // linear watts, > 0 (0 allowed for noise-free checks)
};

// One quasi-static draw of all links, held fixed over a training block.
// g_hat column n stacks the direct gain over the cascade column:
// g_hat(:, n) = [h_d(n); G(:, n)] with G = H_u elementwise* H_a.
struct ChannelRealization {
    arma::cx_vec h_d;   // N
    arma::cx_mat H_a;   // M x N
    arma::cx_mat H_u;   // M x N
    arma::cx_mat G;     // M x N
    arma::cx_mat g_hat; // (M+1) x N
};

ChannelRealization realize_channels(Rng& rng, const LinkGeometry& geometry, const OfdmGrid& grid,
                                    int m_elements, TapProfile profile = TapProfile::equal);

// E{||g_hat(:, n)||^2} from the link budget; identical for every subcarrier.
double mean_stacked_power(const LinkGeometry& geometry, int m_elements);

// Regression fixtures.
std::string realization_to_json(const ChannelRealization& realization);
ChannelRealization realization_from_json(const std::string& text);

} // namespace irsim
