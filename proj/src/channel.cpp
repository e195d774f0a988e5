#include "irsim/channel.hpp"

#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace irsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

nlohmann::json cx_to_json(const arma::cx_mat& m) {
    nlohmann::json j;
    j["rows"] = m.n_rows;
    j["cols"] = m.n_cols;
    std::vector<double> data;
    data.reserve(2 * m.n_elem);
    for (arma::uword r = 0; r < m.n_rows; ++r) {
        for (arma::uword c = 0; c < m.n_cols; ++c) {
            data.push_back(m(r, c).real());
            data.push_back(m(r, c).imag());
        }
    }
    j["data"] = data;
    return j;
}

arma::cx_mat cx_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<arma::uword>();
    const auto cols = j.at("cols").get<arma::uword>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != 2 * rows * cols) {
        throw std::invalid_argument("complex matrix fixture has inconsistent dimensions");
    }
    arma::cx_mat m(rows, cols);
    std::size_t idx = 0;
    for (arma::uword r = 0; r < rows; ++r) {
        for (arma::uword c = 0; c < cols; ++c) {
            const double re = data[idx++];
            const double im = data[idx++];
            m(r, c) = {re, im};
        }
    }
    return m;
}

} // namespace

void LinkGeometry::validate() const {
    for (double d : {dist_ap_irs_m, dist_irs_user_m, dist_ap_user_m}) {
        if (!(d >= 1.0)) {
            throw std::invalid_argument("link distances must be at least 1 m");
        }
    }
    for (double e : {ple_ap_irs, ple_irs_user, ple_ap_user}) {
        if (!(e >= 1.5) || !(e <= 6.0)) {
            throw std::invalid_argument("path-loss exponents must lie in [1.5, 6]");
        }
    }
    if (!std::isfinite(ref_gain_db)) {
        throw std::invalid_argument("reference gain must be finite");
    }
}

double path_gain(const LinkGeometry& geometry, Link link) {
    const double ref = db_to_linear(geometry.ref_gain_db);
    switch (link) {
    case Link::ap_irs:
        return ref * std::pow(geometry.dist_ap_irs_m, -geometry.ple_ap_irs);
    case Link::irs_user:
        return ref * std::pow(geometry.dist_irs_user_m, -geometry.ple_irs_user);
    case Link::ap_user:
        return ref * std::pow(geometry.dist_ap_user_m, -geometry.ple_ap_user);
    }
    throw std::invalid_argument("unknown link");
}

TapChannel sample_taps(Rng& rng, int tap_count, double total_gain, TapProfile profile) {
    if (tap_count < 1) {
        throw std::invalid_argument("tap count must be positive");
    }
    if (total_gain < 0.0) {
        throw std::invalid_argument("link gain must be nonnegative");
    }
    TapChannel ch;
    ch.taps.zeros(static_cast<arma::uword>(tap_count));
    if (total_gain == 0.0) {
        return ch;
    }
    arma::vec weights(static_cast<arma::uword>(tap_count));
    if (profile == TapProfile::equal) {
        weights.fill(1.0);
    } else {
        const double tau = tap_count / 3.0;
        for (int l = 0; l < tap_count; ++l) {
            weights(static_cast<arma::uword>(l)) = std::exp(-l / tau);
        }
    }
    weights *= total_gain / arma::accu(weights);
    for (arma::uword l = 0; l < ch.taps.n_elem; ++l) {
        ch.taps(l) = sample_cn(rng, weights(l));
    }
    return ch;
}

arma::cx_vec taps_to_cfr(const TapChannel& taps, int n_subcarriers) {
    const auto tap_count = static_cast<int>(taps.taps.n_elem);
    if (tap_count > n_subcarriers) {
        throw std::invalid_argument("impulse response longer than the DFT size");
    }
    arma::cx_vec cfr(static_cast<arma::uword>(n_subcarriers));
    for (int n = 0; n < n_subcarriers; ++n) {
        std::complex<double> acc = 0.0;
        for (int l = 0; l < tap_count; ++l) {
            const double angle = -kTwoPi * static_cast<double>(n) * l / n_subcarriers;
            acc += taps.taps(static_cast<arma::uword>(l)) * std::polar(1.0, angle);
        }
        cfr(static_cast<arma::uword>(n)) = acc;
    }
    return cfr;
}

ChannelRealization realize_channels(Rng& rng, const LinkGeometry& geometry, const OfdmGrid& grid,
                                    int m_elements, TapProfile profile) {
    geometry.validate();
    if (m_elements < 1) {
        throw std::invalid_argument("element count must be positive");
    }
    const int n = grid.n_subcarriers;
    const int l = grid.tap_count;
    const double gain_ai = path_gain(geometry, Link::ap_irs);
    const double gain_iu = path_gain(geometry, Link::irs_user);
    const double gain_au = path_gain(geometry, Link::ap_user);

    ChannelRealization out;
    out.H_a.set_size(static_cast<arma::uword>(m_elements), static_cast<arma::uword>(n));
    out.H_u.set_size(static_cast<arma::uword>(m_elements), static_cast<arma::uword>(n));
    // Draw order is fixed: the M AP-IRS links, the M IRS-user links, then the
    // direct link.
    for (int m = 0; m < m_elements; ++m) {
        out.H_a.row(static_cast<arma::uword>(m)) =
            taps_to_cfr(sample_taps(rng, l, gain_ai, profile), n).st();
    }
    for (int m = 0; m < m_elements; ++m) {
        out.H_u.row(static_cast<arma::uword>(m)) =
            taps_to_cfr(sample_taps(rng, l, gain_iu, profile), n).st();
    }
    out.h_d = taps_to_cfr(sample_taps(rng, l, gain_au, profile), n);

    out.G = out.H_u % out.H_a;
    out.g_hat.set_size(static_cast<arma::uword>(m_elements) + 1, static_cast<arma::uword>(n));
    out.g_hat.row(0) = out.h_d.st();
    out.g_hat.rows(1, static_cast<arma::uword>(m_elements)) = out.G;
    return out;
}

double mean_stacked_power(const LinkGeometry& geometry, int m_elements) {
    geometry.validate();
    return path_gain(geometry, Link::ap_user) +
           m_elements * path_gain(geometry, Link::ap_irs) * path_gain(geometry, Link::irs_user);
}

std::string realization_to_json(const ChannelRealization& realization) {
    nlohmann::json j;
    j["h_d"] = cx_to_json(arma::cx_mat(realization.h_d));
    j["H_a"] = cx_to_json(realization.H_a);
    j["H_u"] = cx_to_json(realization.H_u);
    return j.dump();
}

ChannelRealization realization_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ChannelRealization out;
    out.h_d = arma::cx_vec(cx_from_json(j.at("h_d")));
    out.H_a = cx_from_json(j.at("H_a"));
    out.H_u = cx_from_json(j.at("H_u"));
    if (out.H_a.n_rows != out.H_u.n_rows || out.H_a.n_cols != out.H_u.n_cols ||
        out.h_d.n_elem != out.H_a.n_cols) {
        throw std::invalid_argument("realization fixture has inconsistent dimensions");
    }
    out.G = out.H_u % out.H_a;
    out.g_hat.set_size(out.H_a.n_rows + 1, out.H_a.n_cols);
    out.g_hat.row(0) = out.h_d.st();
    out.g_hat.rows(1, out.H_a.n_rows) = out.G;
    return out;
}

} // namespace irsim
