#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sigdim/dlsde.hpp"
#include "sigdim/ic_estimators.hpp"
#include "sigdim/scenario.hpp"

namespace sigdim {

enum class EstimatorKind { Aic, Mdl, Gic, Dlsde };

const char* to_string(EstimatorKind k);
EstimatorKind estimator_from_string(const std::string& name);

/// Monte Carlo sweep: success-rate vs SNR or vs DoA separation.
struct SweepConfig {
    std::vector<EstimatorKind> estimators;
    ScenarioSpec scenario_spec;
    int trials_per_point = 20000;
    std::vector<double> axis;  ///< SNR values in dB, or separations in degrees
    std::size_t m = 17;        ///< spatial smoothing length for AIC/MDL/GIC
    std::string checkpoint_path;  ///< required when Dlsde is selected
    std::uint64_t seed = 0;
    int threads = 1;
    ArrayConfig array;
    /// Reproduce the literal paper formulas instead of the corrected ones.
    bool aic_as_printed = false;
    bool gic_as_printed = false;
};

struct PointResult {
    EstimatorKind estimator;
    double axis_value = 0.0;
    std::uint64_t successes = 0;
    std::uint64_t trials = 0;
    double rate = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  // Wilson 95%
};

struct EvalReport {
    std::string axis_name;                  // "snr_db" or "sep_deg"
    std::vector<std::string> metadata;      // "key=value" comment lines
    std::vector<PointResult> points;        // grouped by estimator, axis order
};

/// Each trial draws its stream from (seed, Evaluation domain, point, trial);
/// every selected estimator sees the identical snapshot. Estimator errors are
/// counted as failures and tallied in the metadata, never fatal.
EvalReport run_snr_sweep(const SweepConfig& cfg);

/// Fixed-separation K=2 protocol: scenario_spec must be in fixed_sep mode
/// (the axis supplies the separations); success means k_hat == 2.
EvalReport run_resolution_sweep(const SweepConfig& cfg);

struct WilsonInterval {
    double lo = 0.0, hi = 0.0;
};
WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                               double z = 1.959963984540054);

std::string report_to_csv(const EvalReport& report);
EvalReport report_from_csv(const std::string& text);

struct CompareEntry {
    std::string estimator_a, estimator_b;
    double axis_value = 0.0;
    double delta_rate = 0.0;  // a - b
    bool intervals_overlap = true;
};

struct CompareSummary {
    std::vector<CompareEntry> entries;
};

/// Per-point rate deltas between two reports over the same axis. Estimators
/// are matched by name; when each report carries exactly one estimator the
/// pair is compared regardless of names. Throws on axis mismatch.
CompareSummary compare_report(const EvalReport& a, const EvalReport& b);
std::string compare_to_text(const CompareSummary& s);

/// Parse "lo:hi:step" or a comma-separated list into axis values.
std::vector<double> parse_axis(const std::string& text);

}  // namespace sigdim
