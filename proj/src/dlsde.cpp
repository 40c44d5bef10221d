#include "sigdim/dlsde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "sigdim/io_util.hpp"
#include "sigdim/linalg.hpp"
#include "sigdim/scenario.hpp"

namespace sigdim {

namespace {

constexpr char kMagic[4] = {'S', 'D', 'M', 'O'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

void DlsdeConfig::validate() const {
    if (n_elements < 2) throw std::invalid_argument("DlsdeConfig: n_elements must be >= 2");
    if (g_classes < 1) throw std::invalid_argument("DlsdeConfig: g_classes must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("DlsdeConfig: batch_size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("DlsdeConfig: epochs must be >= 0");
    if (!(lr > 0.0)) throw std::invalid_argument("DlsdeConfig: lr must be > 0");
    if (!(holdout_frac >= 0.0 && holdout_frac < 1.0))
        throw std::invalid_argument("DlsdeConfig: holdout_frac must be in [0, 1)");
    if (shards < 1) throw std::invalid_argument("DlsdeConfig: shards must be >= 1");
    const auto& arch = architecture;
    if (!arch.empty()) validate_architecture(arch, n_elements, g_classes);
}

nn::Tensor build_input(const Snapshot& r, bool normalize) {
    const std::size_t n = r.samples.size();
    if (n == 0) throw std::invalid_argument("build_input: empty snapshot");

    double power = 0.0;
    for (const auto& v : r.samples) power += std::norm(v);
    if (power == 0.0) throw std::invalid_argument("build_input: all-zero snapshot");

    CVector scaled = r.samples;
    if (normalize) {
        const double inv_rms = 1.0 / std::sqrt(power / static_cast<double>(n));
        for (auto& v : scaled) v *= inv_rms;
    }
    const ComplexMatrix cov = outer_product(scaled);

    nn::Tensor out({2, n, n});
    double* re_plane = out.data.data();
    double* im_plane = out.data.data() + n * n;
    for (std::size_t i = 0; i < n * n; ++i) {
        re_plane[i] = cov.data()[i].real();
        im_plane[i] = cov.data()[i].imag();
    }
    return out;
}

std::vector<nn::LayerSpec> default_architecture(int n_elements, int g_classes) {
    if (n_elements < 8) throw std::invalid_argument("default_architecture: unsupported N (need >= 8)");
    using nn::LayerSpec;
    const int h1 = nn::conv_out_extent(n_elements, 3, 1, 1);
    const int h2 = nn::conv_out_extent(h1, 3, 2, 1);
    const int h3 = nn::conv_out_extent(h2, 3, 2, 1);
    const int flat = 32 * h3 * h3;
    std::vector<LayerSpec> arch = {
        LayerSpec::conv2d(2, 8, 3, 3, 1, 1),   LayerSpec::relu(),
        LayerSpec::conv2d(8, 16, 3, 3, 2, 1),  LayerSpec::relu(),
        LayerSpec::conv2d(16, 32, 3, 3, 2, 1), LayerSpec::relu(),
        LayerSpec::flatten(),
        LayerSpec::dense(flat, 128),           LayerSpec::relu(),
        LayerSpec::dense(128, g_classes),
    };
    return arch;
}

void validate_architecture(const std::vector<nn::LayerSpec>& arch, int n_elements, int g_classes) {
    using nn::LayerKind;
    int c = 2, h = n_elements, w = n_elements;
    bool flat = false;
    int features = 0;
    int param_layers = 0;
    for (const auto& spec : arch) {
        spec.validate();
        switch (spec.kind) {
            case LayerKind::Conv2d:
                if (flat) throw std::invalid_argument("architecture: conv2d after flatten");
                if (spec.in_channels != c) throw std::invalid_argument("architecture: conv2d channel mismatch");
                h = nn::conv_out_extent(h, spec.kernel_h, spec.stride, spec.padding);
                w = nn::conv_out_extent(w, spec.kernel_w, spec.stride, spec.padding);
                if (h < 1 || w < 1) throw std::invalid_argument("architecture: conv2d output is empty");
                c = spec.out_channels;
                ++param_layers;
                break;
            case LayerKind::Flatten:
                if (flat) throw std::invalid_argument("architecture: repeated flatten");
                flat = true;
                features = c * h * w;
                break;
            case LayerKind::Dense:
                if (!flat) throw std::invalid_argument("architecture: dense before flatten");
                if (spec.in_features != features)
                    throw std::invalid_argument("architecture: dense in_features mismatch");
                features = spec.out_features;
                ++param_layers;
                break;
            case LayerKind::Relu:
                break;
        }
    }
    if (!flat) throw std::invalid_argument("architecture: missing flatten");
    if (features != g_classes) throw std::invalid_argument("architecture: final width must equal g_classes");
    if (param_layers != 5)
        throw std::invalid_argument("architecture: expected 5 transfer layers (3 conv + 2 dense)");
}

int argmax_class(const std::vector<double>& logits) {
    if (logits.empty()) throw std::invalid_argument("argmax_class: empty logits");
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) best = i;
    }
    return static_cast<int>(best) + 1;
}

Inference infer(const Checkpoint& ckpt, const Snapshot& r) {
    if (r.size() != ckpt.config.n_elements)
        throw std::invalid_argument("infer: snapshot length does not match the checkpoint");
    const nn::Tensor input = build_input(r, ckpt.config.normalize_input);
    const nn::Tensor logits = ckpt.model.forward(input);
    Inference out;
    out.logits = logits.data;
    out.k_hat = argmax_class(out.logits);
    return out;
}

// ---- checkpoint serialization ---------------------------------------------------

namespace {

void encode_layer(std::string& out, const nn::LayerSpec& s) {
    io::put_u16(out, static_cast<std::uint16_t>(s.kind));
    io::put_u32(out, static_cast<std::uint32_t>(s.in_channels));
    io::put_u32(out, static_cast<std::uint32_t>(s.out_channels));
    io::put_u32(out, static_cast<std::uint32_t>(s.kernel_h));
    io::put_u32(out, static_cast<std::uint32_t>(s.kernel_w));
    io::put_u32(out, static_cast<std::uint32_t>(s.stride));
    io::put_u32(out, static_cast<std::uint32_t>(s.padding));
    io::put_u32(out, static_cast<std::uint32_t>(s.in_features));
    io::put_u32(out, static_cast<std::uint32_t>(s.out_features));
}

nn::LayerSpec decode_layer(io::Cursor& cur) {
    nn::LayerSpec s;
    s.kind = static_cast<nn::LayerKind>(cur.u16());
    s.in_channels = static_cast<int>(cur.u32());
    s.out_channels = static_cast<int>(cur.u32());
    s.kernel_h = static_cast<int>(cur.u32());
    s.kernel_w = static_cast<int>(cur.u32());
    s.stride = static_cast<int>(cur.u32());
    s.padding = static_cast<int>(cur.u32());
    s.in_features = static_cast<int>(cur.u32());
    s.out_features = static_cast<int>(cur.u32());
    return s;
}

}  // namespace

std::string checkpoint_to_bytes(const Checkpoint& ckpt) {
    const DlsdeConfig& c = ckpt.config;
    std::string out;
    out.append(kMagic, 4);
    io::put_u16(out, kVersion);
    io::put_u16(out, static_cast<std::uint16_t>(c.n_elements));
    io::put_u16(out, static_cast<std::uint16_t>(c.g_classes));
    io::put_u8(out, c.normalize_input ? 1 : 0);
    io::put_u32(out, static_cast<std::uint32_t>(c.batch_size));
    io::put_u32(out, static_cast<std::uint32_t>(c.epochs));
    io::put_u64(out, c.seed);
    io::put_f64(out, c.lr);
    io::put_f64(out, c.beta1);
    io::put_f64(out, c.beta2);
    io::put_f64(out, c.eps);
    io::put_f64(out, c.holdout_frac);
    io::put_u64(out, ckpt.meta.dataset_seed);
    io::put_f64(out, ckpt.meta.final_loss);
    io::put_u32(out, ckpt.meta.epochs_run);

    const auto& layers = ckpt.model.layers();
    io::put_u16(out, static_cast<std::uint16_t>(layers.size()));
    for (const auto& l : layers) encode_layer(out, l);

    const auto& tensors = ckpt.model.params().tensors;
    io::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        io::put_u8(out, static_cast<std::uint8_t>(t.shape.size()));
        for (std::size_t d : t.shape) io::put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (const auto& t : tensors) {
        for (double v : t.data) io::put_f32(out, static_cast<float>(v));
    }
    return out;
}

Checkpoint checkpoint_from_bytes(const std::string& bytes) {
    io::Cursor cur(bytes);
    char magic[4];
    cur.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("bad checkpoint magic");
    if (cur.u16() != kVersion) throw std::runtime_error("unsupported checkpoint version");

    Checkpoint ckpt;
    DlsdeConfig& c = ckpt.config;
    c.n_elements = cur.u16();
    c.g_classes = cur.u16();
    c.normalize_input = cur.u8() != 0;
    c.batch_size = static_cast<int>(cur.u32());
    c.epochs = static_cast<int>(cur.u32());
    c.seed = cur.u64();
    c.lr = cur.f64();
    c.beta1 = cur.f64();
    c.beta2 = cur.f64();
    c.eps = cur.f64();
    c.holdout_frac = cur.f64();
    ckpt.meta.dataset_seed = cur.u64();
    ckpt.meta.final_loss = cur.f64();
    ckpt.meta.epochs_run = cur.u32();

    const std::uint16_t layer_count = cur.u16();
    std::vector<nn::LayerSpec> layers;
    layers.reserve(layer_count);
    for (std::uint16_t i = 0; i < layer_count; ++i) layers.push_back(decode_layer(cur));
    c.architecture = layers;
    validate_architecture(layers, c.n_elements, c.g_classes);

    const std::uint32_t tensor_count = cur.u32();
    std::vector<std::vector<std::size_t>> shapes(tensor_count);
    for (auto& shape : shapes) {
        const std::uint8_t ndim = cur.u8();
        shape.resize(ndim);
        for (auto& d : shape) d = cur.u32();
    }
    nn::ModelParams params;
    for (const auto& shape : shapes) {
        nn::Tensor t(shape);
        for (auto& v : t.data) v = static_cast<double>(cur.f32());
        params.tensors.push_back(std::move(t));
    }
    if (!cur.at_end()) throw std::runtime_error("checkpoint has trailing bytes");

    ckpt.model = nn::Model(layers, std::move(params));  // validates shape consistency
    return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    io::atomic_write_file(path, checkpoint_to_bytes(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
    return checkpoint_from_bytes(io::read_file(path));
}

// ---- training --------------------------------------------------------------------

namespace {

struct LoadedDataset {
    DatasetHeader header;
    std::vector<std::uint16_t> labels;
    std::vector<float> images;  // record-major, 2*N*N each
    std::size_t image_len = 0;
};

LoadedDataset load_for_training(const std::string& path, const DlsdeConfig& cfg) {
    LoadedDataset ds;
    DatasetReader reader(path);
    ds.header = reader.header();
    if (ds.header.n_elements != cfg.n_elements || ds.header.g_classes != cfg.g_classes)
        throw std::invalid_argument("train: dataset header does not match the config (N, G)");
    ds.image_len = 2 * static_cast<std::size_t>(cfg.n_elements) * static_cast<std::size_t>(cfg.n_elements);
    ds.labels.reserve(static_cast<std::size_t>(ds.header.record_count));
    ds.images.reserve(static_cast<std::size_t>(ds.header.record_count) * ds.image_len);
    DatasetRecord rec;
    while (reader.next(rec)) {
        if (rec.label >= ds.header.g_classes) throw std::runtime_error("train: dataset label out of range");
        ds.labels.push_back(rec.label);
        ds.images.insert(ds.images.end(), rec.image.begin(), rec.image.end());
    }
    return ds;
}

void fill_input(const LoadedDataset& ds, std::size_t index, std::size_t n, nn::Tensor& out) {
    if (out.data.size() != ds.image_len) out = nn::Tensor({2, n, n});
    const float* src = ds.images.data() + index * ds.image_len;
    for (std::size_t i = 0; i < ds.image_len; ++i) out.data[i] = static_cast<double>(src[i]);
}

/// Static shard -> thread assignment; shard results are reduced in shard
/// order, so the outcome is independent of the worker count.
template <typename Fn>
void run_sharded(int n_shards, int threads, Fn&& fn) {
    const int t = std::max(1, std::min(threads, n_shards));
    if (t == 1) {
        for (int s = 0; s < n_shards; ++s) fn(s);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t));
    for (int w = 0; w < t; ++w) {
        pool.emplace_back([&fn, w, t, n_shards] {
            for (int s = w; s < n_shards; s += t) fn(s);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

TrainResult train(const std::string& dataset_path, const DlsdeConfig& cfg, int threads,
                  const EpochObserver& on_epoch) {
    cfg.validate();
    LoadedDataset ds = load_for_training(dataset_path, cfg);
    const std::size_t count = ds.labels.size();
    const std::size_t n = static_cast<std::size_t>(cfg.n_elements);

    const auto holdout = static_cast<std::size_t>(cfg.holdout_frac * static_cast<double>(count));
    const std::size_t train_n = count - holdout;
    if (train_n < 1) throw std::invalid_argument("train: no training samples left after the holdout split");

    const std::vector<nn::LayerSpec> arch =
        cfg.architecture.empty() ? default_architecture(cfg.n_elements, cfg.g_classes) : cfg.architecture;
    validate_architecture(arch, cfg.n_elements, cfg.g_classes);

    RngStream init_rng = RngStream::derive(cfg.seed, {static_cast<std::uint64_t>(RngDomain::WeightInit)});
    nn::Model model = nn::Model::init(arch, init_rng);
    nn::AdamState adam = nn::AdamState::init(model.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);

    const int n_shards = cfg.shards;
    std::vector<std::vector<nn::Tensor>> shard_grads(static_cast<std::size_t>(n_shards));
    for (auto& g : shard_grads) g = nn::zero_like(model.params());
    std::vector<double> shard_loss(static_cast<std::size_t>(n_shards));
    std::vector<std::int64_t> shard_correct(static_cast<std::size_t>(n_shards));

    std::vector<std::size_t> perm(train_n);
    std::vector<nn::Tensor> total_grads = nn::zero_like(model.params());

    TrainResult result;
    double last_loss = 0.0;
    int epochs_run = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.lr_decay_every > 0) {
            adam.lr = cfg.lr * std::pow(cfg.lr_decay, (epoch - 1) / cfg.lr_decay_every);
        }
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        RngStream shuffle_rng = RngStream::derive(
            cfg.seed, {static_cast<std::uint64_t>(RngDomain::TrainShuffle), static_cast<std::uint64_t>(epoch)});
        for (std::size_t i = train_n; i > 1; --i) {
            const std::size_t j = shuffle_rng.uniform_below(i);
            std::swap(perm[i - 1], perm[j]);
        }

        double epoch_loss_sum = 0.0;
        std::int64_t epoch_correct = 0;

        for (std::size_t b0 = 0; b0 < train_n; b0 += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t b1 = std::min(train_n, b0 + static_cast<std::size_t>(cfg.batch_size));
            const std::size_t batch_n = b1 - b0;

            run_sharded(n_shards, threads, [&](int s) {
                auto& grads = shard_grads[static_cast<std::size_t>(s)];
                for (auto& t : grads) t.fill(0.0);
                double loss = 0.0;
                std::int64_t correct = 0;
                const std::size_t lo = b0 + batch_n * static_cast<std::size_t>(s) / static_cast<std::size_t>(n_shards);
                const std::size_t hi = b0 + batch_n * (static_cast<std::size_t>(s) + 1) / static_cast<std::size_t>(n_shards);
                nn::Tensor input;
                nn::Model::Trace trace;
                for (std::size_t i = lo; i < hi; ++i) {
                    const std::size_t idx = perm[i];
                    fill_input(ds, idx, n, input);
                    const int label = ds.labels[idx];
                    model.forward(input, trace);
                    nn::SoftmaxLoss sm = nn::softmax_cross_entropy(trace.output, label);
                    loss += sm.loss;
                    if (argmax_class(trace.output.data) - 1 == label) ++correct;
                    model.backward(sm.grad_logits, trace, grads, true);
                }
                shard_loss[static_cast<std::size_t>(s)] = loss;
                shard_correct[static_cast<std::size_t>(s)] = correct;
            });

            for (auto& t : total_grads) t.fill(0.0);
            for (int s = 0; s < n_shards; ++s) {
                const auto& grads = shard_grads[static_cast<std::size_t>(s)];
                for (std::size_t t = 0; t < grads.size(); ++t) {
                    for (std::size_t k = 0; k < grads[t].data.size(); ++k)
                        total_grads[t].data[k] += grads[t].data[k];
                }
                epoch_loss_sum += shard_loss[static_cast<std::size_t>(s)];
                epoch_correct += shard_correct[static_cast<std::size_t>(s)];
            }
            const double inv_batch = 1.0 / static_cast<double>(batch_n);
            for (auto& t : total_grads)
                for (auto& v : t.data) v *= inv_batch;
            nn::adam_step(model.params(), total_grads, adam);
        }

        const double train_loss = epoch_loss_sum / static_cast<double>(train_n);
        const double train_acc = static_cast<double>(epoch_correct) / static_cast<double>(train_n);
        if (!std::isfinite(train_loss)) {
            char msg[128];
            std::snprintf(msg, sizeof(msg), "train: non-finite loss at epoch %d (lr=%g)", epoch, cfg.lr);
            throw std::runtime_error(msg);
        }

        double holdout_acc = std::numeric_limits<double>::quiet_NaN();
        if (holdout > 0) {
            std::vector<std::int64_t> chunk_correct(static_cast<std::size_t>(n_shards), 0);
            run_sharded(n_shards, threads, [&](int s) {
                const std::size_t lo = train_n + holdout * static_cast<std::size_t>(s) / static_cast<std::size_t>(n_shards);
                const std::size_t hi = train_n + holdout * (static_cast<std::size_t>(s) + 1) / static_cast<std::size_t>(n_shards);
                nn::Tensor input;
                nn::Model::Trace trace;
                std::int64_t correct = 0;
                for (std::size_t i = lo; i < hi; ++i) {
                    fill_input(ds, i, n, input);
                    model.forward(input, trace);
                    if (argmax_class(trace.output.data) - 1 == ds.labels[i]) ++correct;
                }
                chunk_correct[static_cast<std::size_t>(s)] = correct;
            });
            std::int64_t correct = 0;
            for (auto c : chunk_correct) correct += c;
            holdout_acc = static_cast<double>(correct) / static_cast<double>(holdout);
        }

        result.log.push_back(EpochLog{epoch, train_loss, train_acc, holdout_acc});
        if (on_epoch) on_epoch(result.log.back());
        last_loss = train_loss;
        epochs_run = epoch;

        if (cfg.stop_holdout_acc > 0.0 && holdout > 0 && holdout_acc >= cfg.stop_holdout_acc) break;
        if (cfg.stop_train_loss > 0.0 && train_acc >= 1.0 && train_loss <= cfg.stop_train_loss) break;
    }

    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.config.architecture = arch;
    ckpt.model = std::move(model);
    ckpt.meta.dataset_seed = cfg.dataset_seed;
    ckpt.meta.final_loss = last_loss;
    ckpt.meta.epochs_run = static_cast<std::uint32_t>(epochs_run);
    result.checkpoint = std::move(ckpt);
    return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
    std::string out = "epoch,loss,train_acc,holdout_acc\n";
    char line[160];
    for (const auto& row : log) {
        std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%.10g\n", row.epoch, row.loss, row.train_acc,
                      row.holdout_acc);
        out += line;
    }
    return out;
}

}  // namespace sigdim
