#include "irsim/reflection_model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace irsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double resonance_ghz(const std::array<double, 7>& a, double phi_c) {
    return a[0] * std::tan(phi_c / 3.0) + a[1] * std::sin(phi_c) + a[5];
}

double phase_slope(const std::array<double, 7>& a, double phi_c) {
    return a[2] * phi_c + a[6];
}

} // namespace

CircuitParams CircuitParams::varactor_2p4ghz() {
    return CircuitParams{{0.45, -0.13, -1.2, 0.024, 1.6, 2.42, 9.0}};
}

CircuitParams CircuitParams::named(const std::string& name) {
    if (name == "varactor-2p4ghz") {
        return varactor_2p4ghz();
    }
    throw std::invalid_argument("unknown circuit parameter set: " + name);
}

double amplitude_response(const CircuitParams& params, double phi_c, double f_hz) {
    const auto& a = params.alpha;
    const double detune = 0.05 * (f_hz / 1e9 - resonance_ghz(a, phi_c));
    const double amp = 1.0 - (a[3] * phi_c + a[4]) / (detune * detune + 4.0);
    if (!(amp > 0.0) || amp > 1.0 || !std::isfinite(amp)) {
        std::ostringstream msg;
        msg << "element amplitude " << amp << " outside (0, 1] at phi_c=" << phi_c
            << ", f=" << f_hz;
        throw ModelValidityError(msg.str());
    }
    return amp;
}

double phase_response(const CircuitParams& params, double phi_c, double f_hz) {
    const auto& a = params.alpha;
    return -2.0 * std::atan(phase_slope(a, phi_c) * (f_hz / 1e9 - resonance_ghz(a, phi_c)));
}

OfdmGrid::OfdmGrid(int n_subcarriers, double bandwidth_hz, double carrier_hz, int tap_count,
                   int cp_length)
    : n_subcarriers(n_subcarriers), bandwidth_hz(bandwidth_hz), carrier_hz(carrier_hz),
      tap_count(tap_count), cp_length(cp_length) {
    if (n_subcarriers < 1) {
        throw std::invalid_argument("subcarrier count must be positive");
    }
    if (!(bandwidth_hz > 0.0) || !(carrier_hz > 0.0)) {
        throw std::invalid_argument("bandwidth and carrier frequency must be positive");
    }
    if (tap_count < 1) {
        throw std::invalid_argument("tap count must be positive");
    }
    if (cp_length < tap_count) {
        throw std::invalid_argument("cyclic prefix shorter than the channel impulse response");
    }
    if (band_low_hz() <= 0.0) {
        throw std::invalid_argument("band extends below 0 Hz");
    }
}

double OfdmGrid::subcarrier_frequency(int n) const {
    if (n < 1 || n > n_subcarriers) {
        throw std::out_of_range("subcarrier index out of range");
    }
    const double offset = static_cast<double>(n) - 0.5 * (n_subcarriers + 1);
    return carrier_hz + offset * (bandwidth_hz / n_subcarriers);
}

PhaseCodebook PhaseCodebook::with_bits(int bits) {
    if (bits < 1 || bits > 30) {
        throw std::invalid_argument("codebook resolution must be in 1..30 bits");
    }
    PhaseCodebook cb;
    cb.bits = bits;
    const std::size_t n = std::size_t{1} << bits;
    const double step = kTwoPi / static_cast<double>(n);
    cb.values.resize(n);
    for (std::size_t q = 0; q < n; ++q) {
        cb.values[q] = static_cast<double>(q) * step;
    }
    return cb;
}

double PhaseCodebook::step() const { return kTwoPi / static_cast<double>(values.size()); }

bool PhaseCodebook::contains(double phase) const {
    const auto n = static_cast<long long>(values.size());
    long long q = std::llround(phase / step());
    q = ((q % n) + n) % n;
    return std::abs(values[static_cast<std::size_t>(q)] - phase) <= 1e-9;
}

std::size_t PhaseCodebook::index_of(double phase) const {
    const auto n = static_cast<long long>(values.size());
    long long q = std::llround(phase / step());
    q = ((q % n) + n) % n;
    if (std::abs(values[static_cast<std::size_t>(q)] - phase) > 1e-9) {
        std::ostringstream msg;
        msg << "phase " << phase << " is not a member of the " << bits << "-bit codebook";
        throw std::invalid_argument(msg.str());
    }
    return static_cast<std::size_t>(q);
}

double PhaseCodebook::quantize(double phase) const {
    const auto n = static_cast<long long>(values.size());
    long long q = std::llround(phase / step());
    q = ((q % n) + n) % n;
    return values[static_cast<std::size_t>(q)];
}

ResponseModel::ResponseModel(CircuitParams params, ResponseMode mode, const OfdmGrid& grid)
    : params_(params), mode_(mode) {
    for (double a : params_.alpha) {
        if (!std::isfinite(a)) {
            throw std::invalid_argument("circuit parameters must be finite");
        }
    }
    if (mode_ == ResponseMode::ideal) {
        return;
    }
    // Amplitude-range check over a dense phase grid at every subcarrier; the
    // 1024-point grid contains all codebook values up to 10 bits.
    constexpr int kPhaseGrid = 1024;
    for (int q = 0; q < kPhaseGrid; ++q) {
        const double phi = static_cast<double>(q) * (kTwoPi / kPhaseGrid);
        for (int n = 1; n <= grid.n_subcarriers; ++n) {
            amplitude_response(params_, phi, grid.subcarrier_frequency(n));
        }
    }
}

double ResponseModel::amplitude(double phi_c, double f_hz) const {
    if (mode_ == ResponseMode::ideal) {
        return 1.0;
    }
    return amplitude_response(params_, phi_c, f_hz);
}

double ResponseModel::phase(double phi_c, double f_hz) const {
    if (mode_ == ResponseMode::ideal) {
        return phi_c;
    }
    return phase_response(params_, phi_c, f_hz);
}

std::complex<double> ResponseModel::coefficient(double phi_c, double f_hz) const {
    return std::polar(amplitude(phi_c, f_hz), phase(phi_c, f_hz));
}

PatternMatrix::PatternMatrix(arma::mat phases_in, int bits_in)
    : phases(std::move(phases_in)), bits(bits_in) {
    if (phases.n_rows == 0 || phases.n_cols == 0) {
        throw std::invalid_argument("pattern matrix must be non-empty");
    }
    const PhaseCodebook cb = PhaseCodebook::with_bits(bits);
    for (arma::uword i = 0; i < phases.n_elem; ++i) {
        if (!cb.contains(phases(i))) {
            std::ostringstream msg;
            msg << "pattern entry " << phases(i) << " is not in the " << bits << "-bit codebook";
            throw std::invalid_argument(msg.str());
        }
    }
}

ExpandedPattern expand_pattern(const PatternMatrix& pattern, const ResponseModel& model,
                               const OfdmGrid& grid) {
    const int m = pattern.m_elements();
    const int k = pattern.k_slots();
    ExpandedPattern out;
    out.psi.reserve(static_cast<std::size_t>(grid.n_subcarriers));
    for (int n = 1; n <= grid.n_subcarriers; ++n) {
        const double f = grid.subcarrier_frequency(n);
        arma::cx_mat psi(static_cast<arma::uword>(m) + 1, static_cast<arma::uword>(k));
        psi.row(0).ones();
        for (int row = 0; row < m; ++row) {
            for (int col = 0; col < k; ++col) {
                psi(static_cast<arma::uword>(row) + 1, static_cast<arma::uword>(col)) =
                    model.coefficient(pattern.phases(row, col), f);
            }
        }
        out.psi.push_back(std::move(psi));
    }
    return out;
}

std::string pattern_to_json(const PatternMatrix& pattern) {
    nlohmann::json j;
    j["m"] = pattern.m_elements();
    j["k"] = pattern.k_slots();
    j["bits"] = pattern.bits;
    std::vector<double> flat;
    flat.reserve(pattern.phases.n_elem);
    for (int row = 0; row < pattern.m_elements(); ++row) {
        for (int col = 0; col < pattern.k_slots(); ++col) {
            flat.push_back(pattern.phases(row, col));
        }
    }
    j["phases"] = flat;
    return j.dump(2);
}

PatternMatrix pattern_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const int m = j.at("m").get<int>();
    const int k = j.at("k").get<int>();
    const int bits = j.at("bits").get<int>();
    const auto flat = j.at("phases").get<std::vector<double>>();
    if (m < 1 || k < 1 || flat.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(k)) {
        throw std::invalid_argument("pattern file has inconsistent dimensions");
    }
    arma::mat phases(static_cast<arma::uword>(m), static_cast<arma::uword>(k));
    std::size_t idx = 0;
    for (int row = 0; row < m; ++row) {
        for (int col = 0; col < k; ++col) {
            phases(row, col) = flat[idx++];
        }
    }
    return PatternMatrix(std::move(phases), bits);
}

void save_pattern(const PatternMatrix& pattern, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open pattern file for writing: " + path.string());
    }
    out << pattern_to_json(pattern) << '\n';
}

PatternMatrix load_pattern(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open pattern file: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return pattern_from_json(buf.str());
}

} // namespace irsim
