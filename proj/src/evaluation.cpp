#include "sigdim/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sigdim {

const char* to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::Aic: return "aic";
        case EstimatorKind::Mdl: return "mdl";
        case EstimatorKind::Gic: return "gic";
        case EstimatorKind::Dlsde: return "dlsde";
    }
    return "?";
}

EstimatorKind estimator_from_string(const std::string& name) {
    if (name == "aic") return EstimatorKind::Aic;
    if (name == "mdl") return EstimatorKind::Mdl;
    if (name == "gic") return EstimatorKind::Gic;
    if (name == "dlsde") return EstimatorKind::Dlsde;
    throw std::invalid_argument("unknown estimator: " + name);
}

WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
    if (trials == 0) throw std::invalid_argument("wilson_interval: zero trials");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

enum class SweepKind { Snr, Resolution };

struct TrialCounters {
    std::vector<std::uint64_t> successes;  // per estimator
    std::uint64_t errors = 0;
};

EvalReport run_sweep(const SweepConfig& cfg, SweepKind kind) {
    if (cfg.estimators.empty()) throw std::invalid_argument("sweep: estimator set is empty");
    if (cfg.axis.empty()) throw std::invalid_argument("sweep: axis is empty");
    if (cfg.trials_per_point < 1) throw std::invalid_argument("sweep: trials_per_point must be >= 1");
    cfg.array.validate();
    if (kind == SweepKind::Resolution && !cfg.scenario_spec.equal_power)
        throw std::invalid_argument("resolution sweep: scenario must be equal power");

    const bool wants_dlsde =
        std::find(cfg.estimators.begin(), cfg.estimators.end(), EstimatorKind::Dlsde) != cfg.estimators.end();
    Checkpoint ckpt;
    if (wants_dlsde) {
        if (cfg.checkpoint_path.empty())
            throw std::invalid_argument("sweep: DLSDE selected but no checkpoint path given");
        ckpt = load_checkpoint(cfg.checkpoint_path);
    }

    IcConfig ic;
    ic.m = cfg.m;
    ic.aic_as_printed = cfg.aic_as_printed;
    ic.gic_as_printed = cfg.gic_as_printed;

    const std::size_t n_est = cfg.estimators.size();
    const bool wants_classical = std::any_of(cfg.estimators.begin(), cfg.estimators.end(),
                                             [](EstimatorKind k) { return k != EstimatorKind::Dlsde; });

    EvalReport report;
    report.axis_name = (kind == SweepKind::Snr) ? "snr_db" : "sep_deg";

    std::vector<std::vector<std::uint64_t>> success(cfg.axis.size(),
                                                    std::vector<std::uint64_t>(n_est, 0));
    std::uint64_t total_errors = 0;

    for (std::size_t point = 0; point < cfg.axis.size(); ++point) {
        ScenarioSpec spec = cfg.scenario_spec;
        if (kind == SweepKind::Snr) {
            spec.snr_db = cfg.axis[point];
        } else {
            spec.fixed_sep_deg = cfg.axis[point];
        }
        spec.validate();

        const int threads = std::max(1, cfg.threads);
        const int trials = cfg.trials_per_point;
        std::vector<TrialCounters> partial(static_cast<std::size_t>(threads));
        for (auto& p : partial) p.successes.assign(n_est, 0);

        auto worker = [&](int w) {
            TrialCounters& local = partial[static_cast<std::size_t>(w)];
            for (int trial = w; trial < trials; trial += threads) {
                RngStream rng = RngStream::derive(
                    cfg.seed, {static_cast<std::uint64_t>(RngDomain::Evaluation),
                               static_cast<std::uint64_t>(point), static_cast<std::uint64_t>(trial)});
                const Scenario scenario = sample_scenario(spec, rng);
                const Snapshot snap = synthesize_snapshot(cfg.array, scenario.sources, scenario.snr_db, rng);
                const int truth = (kind == SweepKind::Resolution) ? 2 : scenario.k;

                EigenSpectrum spectrum;
                bool classical_ok = false;
                if (wants_classical) {
                    try {
                        spectrum = eigvals_hermitian(smoothed_covariance(snap.samples, cfg.m));
                        classical_ok = true;
                    } catch (const std::exception&) {
                        ++local.errors;
                    }
                }

                for (std::size_t e = 0; e < n_est; ++e) {
                    const EstimatorKind est = cfg.estimators[e];
                    try {
                        int k_hat = -1;
                        if (est == EstimatorKind::Dlsde) {
                            k_hat = infer(ckpt, snap).k_hat;
                        } else if (classical_ok) {
                            IcConfig local_ic = ic;
                            local_ic.variant = est == EstimatorKind::Aic   ? IcVariant::Aic
                                               : est == EstimatorKind::Mdl ? IcVariant::Mdl
                                                                           : IcVariant::Gic;
                            k_hat = static_cast<int>(ic_score_table(spectrum, local_ic).argmin_k);
                        }
                        if (k_hat == truth) ++local.successes[e];
                    } catch (const std::exception&) {
                        ++local.errors;  // counted as failure, never fatal
                    }
                }
            }
        };

        if (threads == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
            for (auto& th : pool) th.join();
        }

        for (const auto& p : partial) {
            for (std::size_t e = 0; e < n_est; ++e) success[point][e] += p.successes[e];
            total_errors += p.errors;
        }
    }

    char buf[240];
    report.metadata.push_back(std::string("generator=") + kRngName);
    std::snprintf(buf, sizeof(buf), "seed=%llu", static_cast<unsigned long long>(cfg.seed));
    report.metadata.push_back(buf);
    {
        std::string names;
        for (EstimatorKind e : cfg.estimators) {
            if (!names.empty()) names += "+";
            names += to_string(e);
        }
        report.metadata.push_back("estimators=" + names);
    }
    std::snprintf(buf, sizeof(buf), "trials_per_point=%d", cfg.trials_per_point);
    report.metadata.push_back(buf);
    std::snprintf(buf, sizeof(buf), "m=%zu", cfg.m);
    report.metadata.push_back(buf);
    std::snprintf(buf, sizeof(buf), "n_elements=%d d_over_lambda=%.10g", cfg.array.n_elements,
                  cfg.array.d_over_lambda);
    report.metadata.push_back(buf);
    {
        const ScenarioSpec& s = cfg.scenario_spec;
        std::snprintf(buf, sizeof(buf),
                      "scenario: k=[%d,%d] doa=[%.10g,%.10g] min_sep=%.10g power=[%.10g,%.10g] "
                      "equal_power=%d snr_db=%.10g",
                      s.k_min, s.k_max, s.doa_lo_deg, s.doa_hi_deg, s.min_sep_deg, s.power_lo_db,
                      s.power_hi_db, s.equal_power ? 1 : 0, s.snr_db);
        report.metadata.push_back(buf);
    }
    if (!cfg.checkpoint_path.empty()) report.metadata.push_back("checkpoint=" + cfg.checkpoint_path);
    std::snprintf(buf, sizeof(buf), "estimator_errors=%llu", static_cast<unsigned long long>(total_errors));
    report.metadata.push_back(buf);
    report.metadata.push_back(std::string("build=") + "sigdim-1.0.0");

    for (std::size_t e = 0; e < n_est; ++e) {
        for (std::size_t point = 0; point < cfg.axis.size(); ++point) {
            PointResult r;
            r.estimator = cfg.estimators[e];
            r.axis_value = cfg.axis[point];
            r.successes = success[point][e];
            r.trials = static_cast<std::uint64_t>(cfg.trials_per_point);
            r.rate = static_cast<double>(r.successes) / static_cast<double>(r.trials);
            const WilsonInterval ci = wilson_interval(r.successes, r.trials);
            r.ci_lo = ci.lo;
            r.ci_hi = ci.hi;
            report.points.push_back(r);
        }
    }
    return report;
}

}  // namespace

EvalReport run_snr_sweep(const SweepConfig& cfg) { return run_sweep(cfg, SweepKind::Snr); }

EvalReport run_resolution_sweep(const SweepConfig& cfg) {
    SweepConfig local = cfg;
    // The axis supplies the separations; pin the spec to the paired-source mode.
    local.scenario_spec.equal_power = true;
    local.scenario_spec.k_min = 2;
    local.scenario_spec.k_max = 2;
    if (!local.scenario_spec.fixed_sep_deg) local.scenario_spec.fixed_sep_deg = local.axis.front();
    return run_sweep(local, SweepKind::Resolution);
}

std::string report_to_csv(const EvalReport& report) {
    std::string out;
    for (const auto& m : report.metadata) {
        out += "# " + m + "\n";
    }
    out += "estimator,axis,axis_value,successes,trials,rate,ci_lo,ci_hi\n";
    char line[256];
    for (const auto& p : report.points) {
        std::snprintf(line, sizeof(line), "%s,%s,%.10g,%llu,%llu,%.10g,%.10g,%.10g\n",
                      to_string(p.estimator), report.axis_name.c_str(), p.axis_value,
                      static_cast<unsigned long long>(p.successes),
                      static_cast<unsigned long long>(p.trials), p.rate, p.ci_lo, p.ci_hi);
        out += line;
    }
    return out;
}

EvalReport report_from_csv(const std::string& text) {
    EvalReport report;
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string meta = line.substr(1);
            if (!meta.empty() && meta[0] == ' ') meta.erase(0, 1);
            report.metadata.push_back(meta);
            continue;
        }
        if (!header_seen) {
            if (line != "estimator,axis,axis_value,successes,trials,rate,ci_lo,ci_hi")
                throw std::runtime_error("report CSV: unexpected header: " + line);
            header_seen = true;
            continue;
        }
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 8) throw std::runtime_error("report CSV: malformed row: " + line);
        PointResult p;
        p.estimator = estimator_from_string(fields[0]);
        if (report.axis_name.empty()) {
            report.axis_name = fields[1];
        } else if (report.axis_name != fields[1]) {
            throw std::runtime_error("report CSV: mixed axis names");
        }
        p.axis_value = std::stod(fields[2]);
        p.successes = std::stoull(fields[3]);
        p.trials = std::stoull(fields[4]);
        p.rate = std::stod(fields[5]);
        p.ci_lo = std::stod(fields[6]);
        p.ci_hi = std::stod(fields[7]);
        report.points.push_back(p);
    }
    if (!header_seen) throw std::runtime_error("report CSV: missing header");
    if (report.points.empty()) throw std::runtime_error("report CSV: no data rows");
    return report;
}

namespace {

std::vector<double> axis_of(const EvalReport& r) {
    std::vector<double> axis;
    for (const auto& p : r.points) {
        if (std::find(axis.begin(), axis.end(), p.axis_value) == axis.end()) axis.push_back(p.axis_value);
    }
    return axis;
}

std::vector<std::string> estimators_of(const EvalReport& r) {
    std::vector<std::string> names;
    for (const auto& p : r.points) {
        const std::string n = to_string(p.estimator);
        if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    }
    return names;
}

const PointResult* find_point(const EvalReport& r, const std::string& est, double axis_value) {
    for (const auto& p : r.points) {
        if (to_string(p.estimator) == est && p.axis_value == axis_value) return &p;
    }
    return nullptr;
}

}  // namespace

CompareSummary compare_report(const EvalReport& a, const EvalReport& b) {
    const std::vector<double> axis_a = axis_of(a);
    const std::vector<double> axis_b = axis_of(b);
    if (axis_a != axis_b) throw std::invalid_argument("compare_report: axis mismatch");

    const auto est_a = estimators_of(a);
    const auto est_b = estimators_of(b);

    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& ea : est_a) {
        if (std::find(est_b.begin(), est_b.end(), ea) != est_b.end()) pairs.emplace_back(ea, ea);
    }
    if (pairs.empty() && est_a.size() == 1 && est_b.size() == 1) {
        pairs.emplace_back(est_a.front(), est_b.front());
    }
    if (pairs.empty()) throw std::invalid_argument("compare_report: no comparable estimator pair");

    CompareSummary out;
    for (const auto& [ea, eb] : pairs) {
        for (double x : axis_a) {
            const PointResult* pa = find_point(a, ea, x);
            const PointResult* pb = find_point(b, eb, x);
            if (!pa || !pb) throw std::invalid_argument("compare_report: axis mismatch");
            CompareEntry entry;
            entry.estimator_a = ea;
            entry.estimator_b = eb;
            entry.axis_value = x;
            entry.delta_rate = pa->rate - pb->rate;
            entry.intervals_overlap = !(pa->ci_lo > pb->ci_hi || pb->ci_lo > pa->ci_hi);
            out.entries.push_back(entry);
        }
    }
    return out;
}

std::string compare_to_text(const CompareSummary& s) {
    std::string out = "estimator_a,estimator_b,axis_value,delta_rate,intervals_overlap\n";
    char line[160];
    for (const auto& e : s.entries) {
        std::snprintf(line, sizeof(line), "%s,%s,%.10g,%.10g,%d\n", e.estimator_a.c_str(),
                      e.estimator_b.c_str(), e.axis_value, e.delta_rate, e.intervals_overlap ? 1 : 0);
        out += line;
    }
    return out;
}

std::vector<double> parse_axis(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double lo = 0.0, hi = 0.0, step = 0.0;
        if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || !(step > 0.0))
            throw std::invalid_argument("axis range must be lo:hi:step with step > 0");
        for (double v = lo; v <= hi + 1e-9 * step; v += step) out.push_back(v);
    } else {
        std::istringstream in(text);
        std::string field;
        while (std::getline(in, field, ',')) {
            if (field.empty()) continue;
            out.push_back(std::stod(field));
        }
    }
    if (out.empty()) throw std::invalid_argument("axis is empty");
    return out;
}

}  // namespace sigdim
