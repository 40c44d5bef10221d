#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sigdim/neuralnet.hpp"
#include "sigdim/signal_model.hpp"

namespace sigdim {

/// Configuration of the deep-learning signal dimension estimator: a 5-layer
/// (3 conv + 2 dense) classifier over the 2-channel image of r*r^H.
struct DlsdeConfig {
    int n_elements = 32;
    int g_classes = 4;
    /// Empty means default_architecture(n_elements, g_classes).
    std::vector<nn::LayerSpec> architecture;
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    /// Step decay: lr is multiplied by lr_decay every lr_decay_every epochs
    /// (0 disables the schedule).
    double lr_decay = 1.0;
    int lr_decay_every = 0;
    int batch_size = 1024;
    int epochs = 10000;
    std::uint64_t seed = 0;
    /// Fraction of the dataset tail reserved for the held-out metric.
    double holdout_frac = 0.05;
    /// Early-stop targets; 0 disables each.
    double stop_holdout_acc = 0.0;
    double stop_train_loss = 0.0;
    /// RMS-normalize snapshots before forming the input image (raw mode for ablation).
    bool normalize_input = true;
    /// Dataset seed echoed into checkpoint metadata (not used for training draws).
    std::uint64_t dataset_seed = 0;
    /// Fixed gradient-accumulation shard count; results are independent of the
    /// worker thread count because shards are reduced in index order.
    int shards = 8;

    void validate() const;
};

/// Normalized network input: scale the snapshot to unit RMS, form R = r*r^H,
/// channel 0 = Re(R), channel 1 = Im(R). Throws on an all-zero snapshot.
nn::Tensor build_input(const Snapshot& r, bool normalize = true);

/// The 3-conv + 2-dense stack used throughout: conv(2->8, 3x3, s1, p1),
/// conv(8->16, 3x3, s2, p1), conv(16->32, 3x3, s2, p1), each followed by relu,
/// then flatten, dense(->128), relu, dense(128->G).
std::vector<nn::LayerSpec> default_architecture(int n_elements, int g_classes);

/// Walks the layer chain from a [2, N, N] input and returns the logits width;
/// throws when shapes are inconsistent or the final width differs from G.
void validate_architecture(const std::vector<nn::LayerSpec>& arch, int n_elements, int g_classes);

struct TrainingMeta {
    std::uint64_t dataset_seed = 0;
    double final_loss = 0.0;
    std::uint32_t epochs_run = 0;
};

struct Checkpoint {
    DlsdeConfig config;
    nn::Model model;
    TrainingMeta meta;
};

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
    double holdout_acc = 0.0;  // NaN when no holdout split
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochLog> log;
};

/// Mini-batch Adam on softmax cross-entropy over an SDIM dataset file.
/// Per-epoch shuffling uses a seeded permutation; the last holdout_frac of the
/// file is never shuffled into training. Throws on dataset/config mismatch and
/// on a non-finite loss. on_epoch, when set, observes every log row as it is
/// produced (progress reporting; it must not mutate anything).
using EpochObserver = std::function<void(const EpochLog&)>;
TrainResult train(const std::string& dataset_path, const DlsdeConfig& cfg, int threads = 1,
                  const EpochObserver& on_epoch = {});

struct Inference {
    int k_hat = 1;  // in [1, G]
    std::vector<double> logits;
};

/// 1 + argmax of the logits; ties broken toward the smaller class.
int argmax_class(const std::vector<double>& logits);

Inference infer(const Checkpoint& ckpt, const Snapshot& r);

/// "SDMO" checkpoint container, weights stored as IEEE-754 binary32
/// little-endian. save(load(x)) is byte-identical.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);
std::string checkpoint_to_bytes(const Checkpoint& ckpt);
Checkpoint checkpoint_from_bytes(const std::string& bytes);

/// CSV with header epoch,loss,train_acc,holdout_acc.
std::string training_log_csv(const std::vector<EpochLog>& log);

}  // namespace sigdim
