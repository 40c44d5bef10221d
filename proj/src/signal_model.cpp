#include "sigdim/signal_model.hpp"

#include <cmath>
#include <stdexcept>

namespace sigdim {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

void validate_sources(const ArrayConfig& cfg, const std::vector<Source>& sources) {
    if (static_cast<int>(sources.size()) >= cfg.n_elements) {
        throw std::invalid_argument("source count must be smaller than the element count");
    }
    for (const auto& s : sources) {
        if (!(s.doa_deg >= -90.0 && s.doa_deg <= 90.0)) {
            throw std::domain_error("source DoA outside [-90, 90] degrees");
        }
    }
}

}  // namespace

void ArrayConfig::validate() const {
    if (n_elements < 2) throw std::invalid_argument("ArrayConfig: n_elements must be >= 2");
    if (!(d_over_lambda > 0.0)) throw std::invalid_argument("ArrayConfig: d_over_lambda must be > 0");
}

CVector steering_vector(const ArrayConfig& cfg, double doa_deg) {
    cfg.validate();
    if (!(doa_deg >= -90.0 && doa_deg <= 90.0)) {
        throw std::domain_error("steering_vector: DoA outside [-90, 90] degrees");
    }
    const double step = 2.0 * kPi * cfg.d_over_lambda * std::sin(doa_deg * kPi / 180.0);
    CVector b(static_cast<std::size_t>(cfg.n_elements));
    for (int i = 0; i < cfg.n_elements; ++i) {
        b[static_cast<std::size_t>(i)] = std::polar(1.0, step * static_cast<double>(i));
    }
    return b;
}

Snapshot noiseless_snapshot(const ArrayConfig& cfg, const std::vector<Source>& sources) {
    cfg.validate();
    validate_sources(cfg, sources);
    Snapshot snap;
    snap.samples.assign(static_cast<std::size_t>(cfg.n_elements), cdouble(0.0, 0.0));
    for (const auto& src : sources) {
        const CVector b = steering_vector(cfg, src.doa_deg);
        for (std::size_t i = 0; i < snap.samples.size(); ++i) {
            snap.samples[i] += src.amplitude * b[i];
        }
    }
    return snap;
}

CVector draw_noise(int n_elements, double snr_db, RngStream& rng) {
    const double sigma = std::sqrt(noise_variance(snr_db) / 2.0);  // per real component
    CVector eps(static_cast<std::size_t>(n_elements));
    for (auto& e : eps) {
        const auto [re, im] = rng.normal_pair();
        e = cdouble(sigma * re, sigma * im);
    }
    return eps;
}

Snapshot synthesize_snapshot(const ArrayConfig& cfg, const std::vector<Source>& sources,
                             double snr_db, RngStream& rng) {
    Snapshot snap = noiseless_snapshot(cfg, sources);
    const CVector eps = draw_noise(cfg.n_elements, snr_db, rng);
    for (std::size_t i = 0; i < snap.samples.size(); ++i) {
        snap.samples[i] += eps[i];
    }
    return snap;
}

Snapshot synthesize_snapshot(const ArrayConfig& cfg, const std::vector<Source>& sources,
                             const NoiseConfig& noise) {
    RngStream rng = RngStream::derive(noise.seed, {static_cast<std::uint64_t>(RngDomain::Direct)});
    return synthesize_snapshot(cfg, sources, noise.snr_db, rng);
}

}  // namespace sigdim
