#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sigdim/rng.hpp"

namespace sigdim::nn {

/// Dense row-major real tensor, binary64 throughout.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

    std::size_t size() const { return data.size(); }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

enum class LayerKind : std::uint16_t { Conv2d = 0, Dense = 1, Relu = 2, Flatten = 3 };

/// One layer of the network. conv2d uses the cross-correlation convention
/// (no kernel flip); relu and flatten carry no parameters.
struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    // conv2d
    int in_channels = 0, out_channels = 0;
    int kernel_h = 0, kernel_w = 0;
    int stride = 1, padding = 0;
    // dense
    int in_features = 0, out_features = 0;

    static LayerSpec conv2d(int in_ch, int out_ch, int k_h, int k_w, int stride, int padding);
    static LayerSpec dense(int in_features, int out_features);
    static LayerSpec relu() { return LayerSpec{LayerKind::Relu}; }
    static LayerSpec flatten() { return LayerSpec{LayerKind::Flatten}; }

    bool has_params() const { return kind == LayerKind::Conv2d || kind == LayerKind::Dense; }
    void validate() const;
};

/// Output spatial extent of a conv dimension: floor((in + 2p - k)/stride) + 1.
int conv_out_extent(int in, int kernel, int stride, int padding);

// ---- layer primitives (free functions, oracle-testable) --------------------

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      const LayerSpec& spec);

struct Conv2dGrads {
    Tensor grad_input, grad_weights, grad_bias;
};
Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                            const LayerSpec& spec);

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                     const LayerSpec& spec);

struct DenseGrads {
    Tensor grad_input, grad_weights, grad_bias;
};
DenseGrads dense_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                          const LayerSpec& spec);

Tensor relu_forward(const Tensor& input);
/// Subgradient 0 at 0.
Tensor relu_backward(const Tensor& grad_out, const Tensor& input);

Tensor flatten(const Tensor& input);

struct SoftmaxLoss {
    double loss = 0.0;
    Tensor grad_logits;
    std::vector<double> probs;
};
/// Cross-entropy of softmax(logits) against a class index, max-subtracted for
/// stability. grad = softmax(logits) - onehot(label).
SoftmaxLoss softmax_cross_entropy(const Tensor& logits, int label);

// ---- model ------------------------------------------------------------------

/// Weight and bias tensors for every parameterized layer, in layer order
/// (weights then bias per layer).
struct ModelParams {
    std::vector<Tensor> tensors;
};

/// A feed-forward stack of the layers above. Forward on distinct inputs is
/// const and safe to run concurrently.
class Model {
public:
    Model() = default;
    Model(std::vector<LayerSpec> layers, ModelParams params);

    /// He-style uniform init, bound sqrt(2/fan_in), zero biases, seeded.
    static Model init(const std::vector<LayerSpec>& layers, RngStream& rng);

    const std::vector<LayerSpec>& layers() const { return layers_; }
    const ModelParams& params() const { return params_; }
    ModelParams& params() { return params_; }
    std::size_t param_count() const;

    Tensor forward(const Tensor& input) const;

    /// Inputs seen by each layer, cached for backward. Reused across calls.
    struct Trace {
        std::vector<Tensor> inputs;
        Tensor output;
    };
    const Tensor& forward(const Tensor& input, Trace& trace) const;

    /// Gradients w.r.t. every parameter tensor, aligned with params().tensors.
    /// Accumulates into grads when accumulate is true (shapes must match).
    void backward(const Tensor& grad_output, const Trace& trace, std::vector<Tensor>& grads,
                  bool accumulate) const;

    /// Sign pattern of every relu input, concatenated. Used by the gradient
    /// checker to reject finite-difference steps that cross a relu kink.
    std::vector<std::uint8_t> relu_mask(const Trace& trace) const;

private:
    std::vector<LayerSpec> layers_;
    ModelParams params_;
    std::vector<int> param_index_;  // layer -> index of its weight tensor, -1 if none
};

std::vector<Tensor> zero_like(const ModelParams& params);

// ---- optimizer ---------------------------------------------------------------

struct AdamState {
    std::int64_t step = 0;
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<Tensor> m, v;

    static AdamState init(const ModelParams& params, double lr, double beta1, double beta2,
                          double eps);
};

/// Bias-corrected Adam update, in place.
void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state);

// ---- gradient checking --------------------------------------------------------

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped_kinks = 0;  // parameters whose +/-step flipped a relu
};

/// Central-difference check of the full model gradient on one (input, label)
/// pair over a random parameter sample. sample_fraction defaults to 5%;
/// max_per_tensor (0 = unlimited) caps the draws per parameter tensor.
GradCheckReport grad_check(Model& model, const Tensor& input, int label, double step,
                           RngStream& rng, double sample_fraction = 0.05,
                           std::size_t max_per_tensor = 0);

/// |a-b| / max(|a|, |b|, scale_floor).
double relative_error(double a, double b, double scale_floor = 1e-3);

}  // namespace sigdim::nn
