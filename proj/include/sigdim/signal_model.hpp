#pragma once

#include <cstdint>
#include <vector>

#include "sigdim/linalg.hpp"
#include "sigdim/rng.hpp"

namespace sigdim {

/// Uniform linear array geometry. Only the ratio d*f_c/c enters the element
/// phase, so carrier frequency, spacing and wave speed collapse to one field.
struct ArrayConfig {
    int n_elements = 32;
    double d_over_lambda = 0.5;

    void validate() const;
};

/// One complex observation across the array at a single instant.
struct Snapshot {
    CVector samples;

    int size() const { return static_cast<int>(samples.size()); }
};

/// A far-field point source: incidence angle and complex amplitude
/// (magnitude carries power, argument carries phase).
struct Source {
    double doa_deg = 0.0;
    cdouble amplitude{1.0, 0.0};
};

struct NoiseConfig {
    double snr_db = 30.0;
    std::uint64_t seed = 0;
};

/// Per-element noise variance for an SNR relative to a 0 dB power source.
inline double noise_variance(double snr_db) {
    return std::pow(10.0, -snr_db / 10.0);
}

/// Array response b(x): element i (0-based) is
/// exp(j * 2*pi * d_over_lambda * i * sin(doa)). Unit-modulus entries.
/// Throws std::domain_error when doa_deg is outside [-90, 90].
CVector steering_vector(const ArrayConfig& cfg, double doa_deg);

/// Sum of steering vectors weighted by the source amplitudes, no noise.
Snapshot noiseless_snapshot(const ArrayConfig& cfg, const std::vector<Source>& sources);

/// Noiseless superposition plus circularly symmetric complex Gaussian noise
/// with per-element variance 10^(-snr_db/10), drawn from the given stream.
/// The noise draw depends only on the stream and N, never on the sources.
Snapshot synthesize_snapshot(const ArrayConfig& cfg, const std::vector<Source>& sources,
                             double snr_db, RngStream& rng);

/// Convenience overload seeding a fresh stream from the noise config.
Snapshot synthesize_snapshot(const ArrayConfig& cfg, const std::vector<Source>& sources,
                             const NoiseConfig& noise);

/// The noise vector alone (used by the superposition identity and tests).
CVector draw_noise(int n_elements, double snr_db, RngStream& rng);

}  // namespace sigdim
