// sigdim: single-snapshot signal dimension estimation toolkit.
//
// Subcommands: datagen, train, eval-snr, eval-resolution, infer, plot.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "sigdim/dlsde.hpp"
#include "sigdim/evaluation.hpp"
#include "sigdim/io_util.hpp"
#include "sigdim/scenario.hpp"
#include "sigdim/svg_plot.hpp"

namespace {

using namespace sigdim;

int default_threads() {
    if (const char* env = std::getenv("SIGDIM_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

struct ScenarioFlags {
    ScenarioSpec spec;
    std::optional<double> fixed_sep;

    void attach(CLI::App* cmd) {
        cmd->add_option("--k-min", spec.k_min, "Minimum source count");
        cmd->add_option("--k-max", spec.k_max, "Maximum source count");
        cmd->add_option("--doa-lo", spec.doa_lo_deg, "DoA interval lower bound, degrees");
        cmd->add_option("--doa-hi", spec.doa_hi_deg, "DoA interval upper bound, degrees");
        cmd->add_option("--min-sep", spec.min_sep_deg, "Minimum pairwise DoA separation, degrees");
        cmd->add_option("--power-lo", spec.power_lo_db, "Per-source power lower bound, dB");
        cmd->add_option("--power-hi", spec.power_hi_db, "Per-source power upper bound, dB");
        cmd->add_flag("--equal-power", spec.equal_power, "All sources at 0 dB");
        cmd->add_option("--fixed-sep", fixed_sep, "Exactly 2 sources with this DoA spacing, degrees");
    }

    ScenarioSpec resolve() const {
        ScenarioSpec s = spec;
        if (fixed_sep) s.fixed_sep_deg = *fixed_sep;
        return s;
    }
};

std::vector<EstimatorKind> parse_estimators(const std::string& csv) {
    std::vector<EstimatorKind> out;
    std::string token;
    std::istringstream in(csv);
    while (std::getline(in, token, ',')) {
        if (!token.empty()) out.push_back(estimator_from_string(token));
    }
    if (out.empty()) throw std::invalid_argument("estimator list is empty");
    return out;
}

Snapshot read_snapshot_file(const std::string& path) {
    const std::string bytes = io::read_file(path);
    Snapshot snap;
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "SNAP", 4) == 0) {
        io::Cursor cur(bytes);
        cur.skip(4);
        if (cur.u16() != 1) throw std::runtime_error("snapshot file: unsupported version");
        const std::uint16_t n = cur.u16();
        snap.samples.resize(n);
        for (auto& v : snap.samples) {
            const double re = cur.f64();
            const double im = cur.f64();
            v = cdouble(re, im);
        }
        if (!cur.at_end()) throw std::runtime_error("snapshot file: trailing bytes");
        return snap;
    }
    std::istringstream in(bytes);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        double re = 0.0, im = 0.0;
        if (std::sscanf(line.c_str(), "%lf , %lf", &re, &im) != 2) {
            throw std::runtime_error("snapshot file line " + std::to_string(lineno) +
                                     ": expected \"re,im\"");
        }
        snap.samples.emplace_back(re, im);
    }
    if (snap.samples.empty()) throw std::runtime_error("snapshot file is empty");
    return snap;
}

std::string join_scores(const std::vector<double>& v) {
    std::string out;
    char buf[40];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof(buf), i ? ",%.6g" : "%.6g", v[i]);
        out += buf;
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Single-snapshot signal dimension estimation (AIC/MDL/GIC and a 2D-CNN classifier)"};
    app.set_config("--config", "",
                   "Flat key=value config file (keys like datagen.count or [datagen] sections); "
                   "command-line flags override file values");
    app.require_subcommand(1);

    // ---- datagen ---------------------------------------------------------------
    auto* datagen = app.add_subcommand("datagen", "Generate a labeled SDIM dataset");
    std::string dg_out;
    std::uint64_t dg_count = 30000, dg_seed = 1;
    double dg_snr = 30.0;
    int dg_n = 32, dg_g = 4;
    double dg_dl = 0.5;
    bool dg_raw_mode = false;
    std::string dg_dump_raw;
    ScenarioFlags dg_flags;
    datagen->add_option("--out", dg_out, "Output dataset path")->required();
    datagen->add_option("--count", dg_count, "Record count");
    datagen->add_option("--seed", dg_seed, "Dataset seed");
    datagen->add_option("--snr", dg_snr, "SNR in dB");
    datagen->add_option("--n-elements", dg_n, "Array element count N");
    datagen->add_option("--g-classes", dg_g, "Class count G");
    datagen->add_option("--d-over-lambda", dg_dl, "Element spacing over wavelength");
    datagen->add_flag("--raw-images", dg_raw_mode, "Skip RMS normalization of the input images");
    datagen->add_option("--dump-raw", dg_dump_raw, "Also dump raw snapshots to this CSV (debug)");
    dg_flags.attach(datagen);

    // ---- train -----------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "Train the DLSDE classifier on an SDIM dataset");
    std::string tr_data, tr_out, tr_log;
    DlsdeConfig tr_cfg;
    tr_cfg.epochs = 200;
    tr_cfg.batch_size = 128;
    int tr_threads = default_threads();
    train_cmd->add_option("--data", tr_data, "Training dataset (SDIM)")->required();
    train_cmd->add_option("--out", tr_out, "Checkpoint output path")->required();
    train_cmd->add_option("--log", tr_log, "Per-epoch CSV log path");
    train_cmd->add_option("--epochs", tr_cfg.epochs, "Epoch cap");
    train_cmd->add_option("--batch", tr_cfg.batch_size, "Mini-batch size");
    train_cmd->add_option("--lr", tr_cfg.lr, "Adam learning rate");
    train_cmd->add_option("--lr-decay", tr_cfg.lr_decay, "Step-decay factor for the learning rate");
    train_cmd->add_option("--lr-decay-every", tr_cfg.lr_decay_every,
                          "Apply --lr-decay every this many epochs (0 = off)");
    train_cmd->add_option("--beta1", tr_cfg.beta1, "Adam beta1");
    train_cmd->add_option("--beta2", tr_cfg.beta2, "Adam beta2");
    train_cmd->add_option("--eps", tr_cfg.eps, "Adam epsilon");
    train_cmd->add_option("--seed", tr_cfg.seed, "Training seed");
    train_cmd->add_option("--holdout", tr_cfg.holdout_frac, "Held-out tail fraction");
    train_cmd->add_option("--stop-holdout-acc", tr_cfg.stop_holdout_acc,
                          "Stop once held-out accuracy reaches this (0 = off)");
    train_cmd->add_option("--stop-train-loss", tr_cfg.stop_train_loss,
                          "Stop once training has memorized to this loss (0 = off)");
    train_cmd->add_option("--data-seed", tr_cfg.dataset_seed, "Dataset seed echoed into metadata");
    train_cmd->add_option("--shards", tr_cfg.shards, "Gradient accumulation shard count");
    train_cmd->add_option("--threads", tr_threads, "Worker threads (SIGDIM_THREADS)");

    // ---- eval-snr ---------------------------------------------------------------
    auto* eval_snr = app.add_subcommand("eval-snr", "Success-rate vs SNR Monte Carlo sweep");
    std::string es_estimators = "aic,mdl,gic";
    std::string es_axis, es_model, es_out;
    int es_case = 1;
    bool es_fast = false;
    SweepConfig es_cfg;
    es_cfg.threads = default_threads();
    ScenarioFlags es_flags;
    eval_snr->add_option("--estimators", es_estimators, "Comma list from aic,mdl,gic,dlsde");
    eval_snr->add_option("--snr", es_axis, "SNR axis, lo:hi:step or comma list (dB)")->required();
    eval_snr->add_option("--model", es_model, "DLSDE checkpoint (needed for dlsde)");
    eval_snr->add_option("--out", es_out, "Report CSV path (default stdout)");
    eval_snr->add_option("--trials", es_cfg.trials_per_point, "Trials per axis point");
    eval_snr->add_flag("--fast", es_fast, "Use 2000 trials per point");
    eval_snr->add_option("--case", es_case, "Scenario preset: 1 = DoA in [-10,10], 2 = [-5,5]")
        ->check(CLI::Range(1, 2));
    eval_snr->add_option("--m", es_cfg.m, "Spatial smoothing length M");
    eval_snr->add_option("--seed", es_cfg.seed, "Sweep seed");
    eval_snr->add_option("--threads", es_cfg.threads, "Worker threads (SIGDIM_THREADS)");
    eval_snr->add_option("--n-elements", es_cfg.array.n_elements, "Array element count N");
    eval_snr->add_option("--d-over-lambda", es_cfg.array.d_over_lambda, "Element spacing over wavelength");
    eval_snr->add_flag("--aic-as-printed", es_cfg.aic_as_printed, "Literal AIC data multiplier M(N'-1)");
    eval_snr->add_flag("--gic-as-printed", es_cfg.gic_as_printed, "Literal GIC data term (no GM)");
    es_flags.attach(eval_snr);

    // ---- eval-resolution ----------------------------------------------------------
    auto* eval_res = app.add_subcommand("eval-resolution", "Success-rate vs DoA separation sweep");
    std::string er_estimators = "aic,mdl,gic";
    std::string er_axis, er_model, er_out;
    double er_snr = 15.0;
    SweepConfig er_cfg;
    er_cfg.threads = default_threads();
    ScenarioFlags er_flags;
    eval_res->add_option("--sep", er_axis, "Separation axis, lo:hi:step or comma list (deg)")->required();
    eval_res->add_option("--estimators", er_estimators, "Comma list from aic,mdl,gic,dlsde");
    eval_res->add_option("--model", er_model, "DLSDE checkpoint (needed for dlsde)");
    eval_res->add_option("--out", er_out, "Report CSV path (default stdout)");
    eval_res->add_option("--snr", er_snr, "Fixed SNR in dB (15 default; 10 matches the alternate setting)");
    eval_res->add_option("--trials", er_cfg.trials_per_point, "Trials per axis point");
    eval_res->add_option("--m", er_cfg.m, "Spatial smoothing length M");
    eval_res->add_option("--seed", er_cfg.seed, "Sweep seed");
    eval_res->add_option("--threads", er_cfg.threads, "Worker threads (SIGDIM_THREADS)");
    eval_res->add_option("--n-elements", er_cfg.array.n_elements, "Array element count N");
    eval_res->add_option("--d-over-lambda", er_cfg.array.d_over_lambda, "Element spacing over wavelength");
    er_flags.attach(eval_res);

    // ---- infer ---------------------------------------------------------------------
    auto* infer_cmd = app.add_subcommand("infer", "Run every estimator on one snapshot file");
    std::string in_snapshot, in_model;
    std::size_t in_m = 17;
    double in_dl = 0.5;
    infer_cmd->add_option("snapshot", in_snapshot,
                          "Snapshot file: N lines of re,im; or binary SNAP format")->required();
    infer_cmd->add_option("--model", in_model, "DLSDE checkpoint; omit for classical only");
    infer_cmd->add_option("--m", in_m, "Spatial smoothing length M");
    infer_cmd->add_option("--d-over-lambda", in_dl, "Element spacing over wavelength");

    // ---- plot ------------------------------------------------------------------------
    auto* plot_cmd = app.add_subcommand("plot", "Render a sweep report CSV as SVG");
    std::string pl_in, pl_out;
    plot_cmd->add_option("--in", pl_in, "Report CSV path")->required();
    plot_cmd->add_option("--out", pl_out, "SVG output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help / --version
            return app.exit(e);
        }
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 1;
    }

    try {
        if (*datagen) {
            ScenarioSpec spec = dg_flags.resolve();
            spec.snr_db = dg_snr;
            DatagenOptions opt;
            opt.array.n_elements = dg_n;
            opt.array.d_over_lambda = dg_dl;
            opt.g_classes = dg_g;
            opt.normalize_input = !dg_raw_mode;
            opt.raw_dump_path = dg_dump_raw;
            write_dataset(dg_out, spec, dg_count, dg_seed, opt);
            std::printf("wrote %llu records to %s\n", static_cast<unsigned long long>(dg_count),
                        dg_out.c_str());
        } else if (*train_cmd) {
            {
                DatasetReader reader(tr_data);
                tr_cfg.n_elements = reader.header().n_elements;
                tr_cfg.g_classes = reader.header().g_classes;
            }
            TrainResult result = train(tr_data, tr_cfg, tr_threads, [](const EpochLog& row) {
                std::fprintf(stderr, "epoch %d  loss %.6g  train_acc %.4f  holdout_acc %.4f\n",
                             row.epoch, row.loss, row.train_acc, row.holdout_acc);
            });
            save_checkpoint(tr_out, result.checkpoint);
            if (!tr_log.empty()) io::atomic_write_file(tr_log, training_log_csv(result.log));
            const EpochLog& last = result.log.empty() ? EpochLog{} : result.log.back();
            std::printf("trained %u epochs, final loss %.6g, train acc %.4g, holdout acc %.4g\n",
                        result.checkpoint.meta.epochs_run, last.loss, last.train_acc, last.holdout_acc);
        } else if (*eval_snr) {
            es_cfg.estimators = parse_estimators(es_estimators);
            es_cfg.axis = parse_axis(es_axis);
            es_cfg.scenario_spec = (es_case == 2) ? ScenarioSpec::case2() : ScenarioSpec::case1();
            const ScenarioSpec cli_spec = es_flags.resolve();
            for (const char* opt : {"--k-min", "--k-max", "--doa-lo", "--doa-hi", "--min-sep",
                                    "--power-lo", "--power-hi", "--equal-power", "--fixed-sep"}) {
                if (eval_snr->count(opt) == 0) continue;
                ScenarioSpec& dst = es_cfg.scenario_spec;
                if (!std::strcmp(opt, "--k-min")) dst.k_min = cli_spec.k_min;
                else if (!std::strcmp(opt, "--k-max")) dst.k_max = cli_spec.k_max;
                else if (!std::strcmp(opt, "--doa-lo")) dst.doa_lo_deg = cli_spec.doa_lo_deg;
                else if (!std::strcmp(opt, "--doa-hi")) dst.doa_hi_deg = cli_spec.doa_hi_deg;
                else if (!std::strcmp(opt, "--min-sep")) dst.min_sep_deg = cli_spec.min_sep_deg;
                else if (!std::strcmp(opt, "--power-lo")) dst.power_lo_db = cli_spec.power_lo_db;
                else if (!std::strcmp(opt, "--power-hi")) dst.power_hi_db = cli_spec.power_hi_db;
                else if (!std::strcmp(opt, "--equal-power")) dst.equal_power = cli_spec.equal_power;
                else if (!std::strcmp(opt, "--fixed-sep")) dst.fixed_sep_deg = cli_spec.fixed_sep_deg;
            }
            if (es_fast) es_cfg.trials_per_point = 2000;
            es_cfg.checkpoint_path = es_model;
            const EvalReport report = run_snr_sweep(es_cfg);
            const std::string csv = report_to_csv(report);
            if (es_out.empty()) std::fputs(csv.c_str(), stdout);
            else io::atomic_write_file(es_out, csv);
        } else if (*eval_res) {
            er_cfg.estimators = parse_estimators(er_estimators);
            er_cfg.axis = parse_axis(er_axis);
            er_cfg.scenario_spec = er_flags.resolve();
            er_cfg.scenario_spec.snr_db = er_snr;
            er_cfg.scenario_spec.equal_power = true;
            er_cfg.checkpoint_path = er_model;
            const EvalReport report = run_resolution_sweep(er_cfg);
            const std::string csv = report_to_csv(report);
            if (er_out.empty()) std::fputs(csv.c_str(), stdout);
            else io::atomic_write_file(er_out, csv);
        } else if (*infer_cmd) {
            const Snapshot snap = read_snapshot_file(in_snapshot);
            IcConfig ic;
            ic.m = in_m;
            const auto aic = estimate_aic(snap, ic);
            const auto mdl = estimate_mdl(snap, ic);
            const auto gic = estimate_gic(snap, ic);
            std::printf("aic k_hat=%zu scores=%s\n", aic.k_hat, join_scores(aic.table.scores).c_str());
            std::printf("mdl k_hat=%zu scores=%s\n", mdl.k_hat, join_scores(mdl.table.scores).c_str());
            std::printf("gic k_hat=%zu scores=%s\n", gic.k_hat, join_scores(gic.table.scores).c_str());
            if (!in_model.empty()) {
                const Checkpoint ckpt = load_checkpoint(in_model);
                const Inference inf = infer(ckpt, snap);
                std::printf("dlsde k_hat=%d logits=%s\n", inf.k_hat, join_scores(inf.logits).c_str());
            }
        } else if (*plot_cmd) {
            const EvalReport report = report_from_csv(io::read_file(pl_in));
            io::atomic_write_file(pl_out, render_report_svg(report));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
