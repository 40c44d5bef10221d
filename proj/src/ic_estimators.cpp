#include "sigdim/ic_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sigdim {

const char* to_string(IcVariant v) {
    switch (v) {
        case IcVariant::Aic: return "aic";
        case IcVariant::Mdl: return "mdl";
        case IcVariant::Gic: return "gic";
    }
    return "?";
}

double IcConfig::gic_alpha() const {
    const double a = gic_penalty ? gic_penalty(m) : std::sqrt(static_cast<double>(m));
    if (!(a > 0.0)) throw std::invalid_argument("IcConfig: gic penalty alpha(M) must be > 0");
    return a;
}

namespace {

std::vector<double> floored(const EigenSpectrum& lambdas, double eig_floor) {
    if (lambdas.values.empty()) throw std::invalid_argument("empty eigenvalue spectrum");
    const double lead = lambdas.values.front();
    if (!(lead > 0.0)) throw std::invalid_argument("all eigenvalues are zero after flooring");
    const double floor_v = eig_floor * lead;
    std::vector<double> out(lambdas.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::max(lambdas.values[i], floor_v);
    }
    return out;
}

double sphericity_of(const std::vector<double>& lam, std::size_t k) {
    const std::size_t np = lam.size();
    const double count = static_cast<double>(np - k);
    double sum = 0.0, log_sum = 0.0;
    for (std::size_t i = k; i < np; ++i) {
        sum += lam[i];
        log_sum += std::log(lam[i]);
    }
    const double term = std::log(sum / count) - log_sum / count;
    return std::max(term, 0.0);  // AM-GM, guard round-off
}

}  // namespace

double sphericity_term(const EigenSpectrum& lambdas, std::size_t k, double eig_floor) {
    if (k >= lambdas.values.size()) throw std::invalid_argument("sphericity_term: k out of range");
    return sphericity_of(floored(lambdas, eig_floor), k);
}

IcScoreTable ic_score_table(const EigenSpectrum& lambdas, const IcConfig& cfg) {
    const std::vector<double> lam = floored(lambdas, cfg.eig_floor);
    const std::size_t np = lam.size();
    const double m = static_cast<double>(cfg.m);
    const double npd = static_cast<double>(np);

    IcScoreTable table;
    table.scores.resize(np);
    for (std::size_t k = 0; k < np; ++k) {
        const double kd = static_cast<double>(k);
        const double remaining = npd - kd;
        double data = 0.0;
        double penalty = 0.0;
        switch (cfg.variant) {
            case IcVariant::Aic: {
                const double mult = cfg.aic_as_printed ? m * (npd - 1.0) : m * remaining;
                data = mult * sphericity_of(lam, k);
                penalty = kd * (2.0 * npd - kd);
                break;
            }
            case IcVariant::Mdl: {
                data = m * remaining * sphericity_of(lam, k);
                penalty = 0.5 * (kd * (2.0 * npd - kd) + 1.0) * std::log(m);
                break;
            }
            case IcVariant::Gic: {
                if (cfg.gic_as_printed) {
                    double sum = 0.0;
                    for (std::size_t i = k; i < np; ++i) sum += lam[i];
                    data = m * remaining * std::log(sum / remaining);
                } else {
                    data = m * remaining * sphericity_of(lam, k);
                }
                penalty = cfg.gic_alpha() * (2.0 * npd - kd) * kd;
                break;
            }
        }
        table.scores[k] = data + penalty;
    }

    table.argmin_k = 0;
    for (std::size_t k = 1; k < np; ++k) {
        if (table.scores[k] < table.scores[table.argmin_k]) table.argmin_k = k;
    }
    return table;
}

namespace {

IcEstimate estimate_with(const Snapshot& r, const IcConfig& cfg, IcVariant variant) {
    IcConfig local = cfg;
    local.variant = variant;
    const ComplexMatrix cov = smoothed_covariance(r.samples, local.m);
    const EigenSpectrum spectrum = eigvals_hermitian(cov);
    IcEstimate est;
    est.table = ic_score_table(spectrum, local);
    est.k_hat = est.table.argmin_k;
    return est;
}

}  // namespace

IcEstimate estimate_aic(const Snapshot& r, const IcConfig& cfg) { return estimate_with(r, cfg, IcVariant::Aic); }
IcEstimate estimate_mdl(const Snapshot& r, const IcConfig& cfg) { return estimate_with(r, cfg, IcVariant::Mdl); }
IcEstimate estimate_gic(const Snapshot& r, const IcConfig& cfg) { return estimate_with(r, cfg, IcVariant::Gic); }
IcEstimate estimate_ic(const Snapshot& r, const IcConfig& cfg) { return estimate_with(r, cfg, cfg.variant); }

}  // namespace sigdim
