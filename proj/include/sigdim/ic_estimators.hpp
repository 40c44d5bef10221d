#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "sigdim/linalg.hpp"
#include "sigdim/signal_model.hpp"

namespace sigdim {

enum class IcVariant { Aic, Mdl, Gic };

const char* to_string(IcVariant v);

struct IcConfig {
    std::size_t m = 17;                 ///< spatial smoothing length M
    IcVariant variant = IcVariant::Aic;
    /// GIC complexity weight alpha(M); empty means the default sqrt(M).
    std::function<double(std::size_t)> gic_penalty;
    /// Relative floor applied to eigenvalues before the log terms.
    double eig_floor = 1e-12;
    /// Reproduce the literal AIC data multiplier M*(N'-1) instead of M*(N'-k).
    bool aic_as_printed = false;
    /// Reproduce the literal GIC data term (log of the arithmetic mean alone,
    /// no geometric-mean denominator) instead of the sphericity ratio.
    bool gic_as_printed = false;

    double gic_alpha() const;
};

/// Criterion value for every candidate dimension k in [0, N'-1].
struct IcScoreTable {
    std::vector<double> scores;
    std::size_t argmin_k = 0;  ///< ties broken toward smaller k
};

struct IcEstimate {
    std::size_t k_hat = 0;
    IcScoreTable table;
};

/// ln of (arithmetic mean / geometric mean) of the trailing eigenvalues
/// lambda_{k+1..N'}, computed in the log domain. Non-negative by AM-GM.
/// Eigenvalues are floored at eig_floor * lambda_1 before the logs; throws
/// std::invalid_argument when the whole spectrum is zero.
double sphericity_term(const EigenSpectrum& lambdas, std::size_t k, double eig_floor = 1e-12);

/// Score tables straight from a spectrum (shared by the snapshot wrappers,
/// the evaluation harness and the tests).
IcScoreTable ic_score_table(const EigenSpectrum& lambdas, const IcConfig& cfg);

IcEstimate estimate_aic(const Snapshot& r, const IcConfig& cfg);
IcEstimate estimate_mdl(const Snapshot& r, const IcConfig& cfg);
IcEstimate estimate_gic(const Snapshot& r, const IcConfig& cfg);

/// Dispatch on cfg.variant.
IcEstimate estimate_ic(const Snapshot& r, const IcConfig& cfg);

}  // namespace sigdim
