#include "sigdim/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace sigdim::nn {

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_product(shape), 0.0) {}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

LayerSpec LayerSpec::conv2d(int in_ch, int out_ch, int k_h, int k_w, int stride, int padding) {
    LayerSpec s;
    s.kind = LayerKind::Conv2d;
    s.in_channels = in_ch;
    s.out_channels = out_ch;
    s.kernel_h = k_h;
    s.kernel_w = k_w;
    s.stride = stride;
    s.padding = padding;
    s.validate();
    return s;
}

LayerSpec LayerSpec::dense(int in_features, int out_features) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.in_features = in_features;
    s.out_features = out_features;
    s.validate();
    return s;
}

void LayerSpec::validate() const {
    switch (kind) {
        case LayerKind::Conv2d:
            if (in_channels < 1 || out_channels < 1 || kernel_h < 1 || kernel_w < 1 || stride < 1)
                throw std::invalid_argument("conv2d spec: dimensions must be positive");
            if (padding < 0 || padding >= std::min(kernel_h, kernel_w))
                throw std::invalid_argument("conv2d spec: padding must satisfy 0 <= padding < kernel");
            break;
        case LayerKind::Dense:
            if (in_features < 1 || out_features < 1)
                throw std::invalid_argument("dense spec: dimensions must be positive");
            break;
        default:
            break;
    }
}

int conv_out_extent(int in, int kernel, int stride, int padding) {
    return (in + 2 * padding - kernel) / stride + 1;
}

namespace {

void require_shape(const Tensor& t, const std::vector<std::size_t>& shape, const char* what) {
    if (t.shape != shape) throw std::invalid_argument(std::string("shape mismatch: ") + what);
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      const LayerSpec& spec) {
    const auto ci = static_cast<std::size_t>(spec.in_channels);
    const auto co = static_cast<std::size_t>(spec.out_channels);
    const auto kh = static_cast<std::size_t>(spec.kernel_h);
    const auto kw = static_cast<std::size_t>(spec.kernel_w);
    if (input.shape.size() != 3 || input.shape[0] != ci)
        throw std::invalid_argument("conv2d_forward: input must be [C_in, H, W]");
    require_shape(weights, {co, ci, kh, kw}, "conv2d weights");
    require_shape(bias, {co}, "conv2d bias");

    const int h = static_cast<int>(input.shape[1]);
    const int w = static_cast<int>(input.shape[2]);
    const int s = spec.stride;
    const int p = spec.padding;
    const int oh = conv_out_extent(h, spec.kernel_h, s, p);
    const int ow = conv_out_extent(w, spec.kernel_w, s, p);
    if (oh < 1 || ow < 1) throw std::invalid_argument("conv2d_forward: output extent is empty");

    Tensor out({co, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
    const double* in_base = input.data.data();
    const double* w_base = weights.data.data();
    double* out_base = out.data.data();

    for (int o = 0; o < spec.out_channels; ++o) {
        double* out_plane = out_base + static_cast<std::size_t>(o) * oh * ow;
        const double b = bias.data[static_cast<std::size_t>(o)];
        for (int i = 0; i < oh * ow; ++i) out_plane[i] = b;
        for (int c = 0; c < spec.in_channels; ++c) {
            const double* in_plane = in_base + static_cast<std::size_t>(c) * h * w;
            const double* w_plane =
                w_base + (static_cast<std::size_t>(o) * ci + static_cast<std::size_t>(c)) * kh * kw;
            for (int u = 0; u < spec.kernel_h; ++u) {
                // oy range keeping iy = oy*s + u - p inside [0, h)
                const int oy_lo = std::max(0, (p - u + s - 1) / s);
                const int oy_hi = std::min(oh, (h - 1 - u + p) / s + 1);
                for (int v = 0; v < spec.kernel_w; ++v) {
                    const double wv = w_plane[u * spec.kernel_w + v];
                    if (wv == 0.0) continue;
                    const int ox_lo = std::max(0, (p - v + s - 1) / s);
                    const int ox_hi = std::min(ow, (w - 1 - v + p) / s + 1);
                    for (int oy = oy_lo; oy < oy_hi; ++oy) {
                        const int iy = oy * s + u - p;
                        double* orow = out_plane + oy * ow;
                        const double* irow = in_plane + iy * w + (v - p);
                        if (s == 1) {
                            for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * irow[ox];
                        } else {
                            for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * irow[ox * s];
                        }
                    }
                }
            }
        }
    }
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                            const LayerSpec& spec) {
    const auto ci = static_cast<std::size_t>(spec.in_channels);
    const auto co = static_cast<std::size_t>(spec.out_channels);
    const auto kh = static_cast<std::size_t>(spec.kernel_h);
    const auto kw = static_cast<std::size_t>(spec.kernel_w);
    const int h = static_cast<int>(input.shape[1]);
    const int w = static_cast<int>(input.shape[2]);
    const int s = spec.stride;
    const int p = spec.padding;
    const int oh = conv_out_extent(h, spec.kernel_h, s, p);
    const int ow = conv_out_extent(w, spec.kernel_w, s, p);
    require_shape(grad_out, {co, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)},
                  "conv2d grad_out");
    require_shape(weights, {co, ci, kh, kw}, "conv2d weights");

    Conv2dGrads g;
    g.grad_input = Tensor(input.shape);
    g.grad_weights = Tensor(weights.shape);
    g.grad_bias = Tensor({co});

    const double* go_base = grad_out.data.data();
    const double* in_base = input.data.data();
    const double* w_base = weights.data.data();

    for (int o = 0; o < spec.out_channels; ++o) {
        const double* go_plane = go_base + static_cast<std::size_t>(o) * oh * ow;
        double acc = 0.0;
        for (int i = 0; i < oh * ow; ++i) acc += go_plane[i];
        g.grad_bias.data[static_cast<std::size_t>(o)] = acc;

        for (int c = 0; c < spec.in_channels; ++c) {
            const double* in_plane = in_base + static_cast<std::size_t>(c) * h * w;
            double* gi_plane = g.grad_input.data.data() + static_cast<std::size_t>(c) * h * w;
            const std::size_t w_off =
                (static_cast<std::size_t>(o) * ci + static_cast<std::size_t>(c)) * kh * kw;
            const double* w_plane = w_base + w_off;
            double* gw_plane = g.grad_weights.data.data() + w_off;

            for (int u = 0; u < spec.kernel_h; ++u) {
                const int oy_lo = std::max(0, (p - u + s - 1) / s);
                const int oy_hi = std::min(oh, (h - 1 - u + p) / s + 1);
                for (int v = 0; v < spec.kernel_w; ++v) {
                    const int ox_lo = std::max(0, (p - v + s - 1) / s);
                    const int ox_hi = std::min(ow, (w - 1 - v + p) / s + 1);
                    const double wv = w_plane[u * spec.kernel_w + v];
                    double wsum = 0.0;
                    for (int oy = oy_lo; oy < oy_hi; ++oy) {
                        const int iy = oy * s + u - p;
                        const double* gorow = go_plane + oy * ow;
                        const double* irow = in_plane + iy * w + (v - p);
                        double* girow = gi_plane + iy * w + (v - p);
                        if (s == 1) {
                            for (int ox = ox_lo; ox < ox_hi; ++ox) {
                                wsum += gorow[ox] * irow[ox];
                                girow[ox] += wv * gorow[ox];
                            }
                        } else {
                            for (int ox = ox_lo; ox < ox_hi; ++ox) {
                                wsum += gorow[ox] * irow[ox * s];
                                girow[ox * s] += wv * gorow[ox];
                            }
                        }
                    }
                    gw_plane[u * spec.kernel_w + v] = wsum;
                }
            }
        }
    }
    return g;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                     const LayerSpec& spec) {
    const auto fin = static_cast<std::size_t>(spec.in_features);
    const auto fout = static_cast<std::size_t>(spec.out_features);
    if (input.size() != fin) throw std::invalid_argument("dense_forward: input size mismatch");
    require_shape(weights, {fout, fin}, "dense weights");
    require_shape(bias, {fout}, "dense bias");

    Tensor out({fout});
    const double* x = input.data.data();
    for (std::size_t i = 0; i < fout; ++i) {
        const double* row = weights.data.data() + i * fin;
        // Four fixed accumulators: deterministic order, keeps the FP chain short.
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        std::size_t j = 0;
        for (; j + 4 <= fin; j += 4) {
            s0 += row[j] * x[j];
            s1 += row[j + 1] * x[j + 1];
            s2 += row[j + 2] * x[j + 2];
            s3 += row[j + 3] * x[j + 3];
        }
        for (; j < fin; ++j) s0 += row[j] * x[j];
        out.data[i] = ((s0 + s1) + (s2 + s3)) + bias.data[i];
    }
    return out;
}

DenseGrads dense_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                          const LayerSpec& spec) {
    const auto fin = static_cast<std::size_t>(spec.in_features);
    const auto fout = static_cast<std::size_t>(spec.out_features);
    require_shape(grad_out, {fout}, "dense grad_out");
    require_shape(weights, {fout, fin}, "dense weights");
    if (input.size() != fin) throw std::invalid_argument("dense_backward: input size mismatch");

    DenseGrads g;
    g.grad_input = Tensor({fin});
    g.grad_weights = Tensor(weights.shape);
    g.grad_bias = Tensor({fout});

    const double* x = input.data.data();
    for (std::size_t i = 0; i < fout; ++i) {
        const double gi = grad_out.data[i];
        g.grad_bias.data[i] = gi;
        const double* row = weights.data.data() + i * fin;
        double* gw_row = g.grad_weights.data.data() + i * fin;
        double* gx = g.grad_input.data.data();
        for (std::size_t j = 0; j < fin; ++j) {
            gw_row[j] = gi * x[j];
            gx[j] += gi * row[j];
        }
    }
    return g;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out(input.shape);
    for (std::size_t i = 0; i < input.size(); ++i) {
        out.data[i] = input.data[i] > 0.0 ? input.data[i] : 0.0;
    }
    return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& input) {
    if (grad_out.size() != input.size())
        throw std::invalid_argument("relu_backward: size mismatch");
    Tensor g(input.shape);
    for (std::size_t i = 0; i < input.size(); ++i) {
        g.data[i] = input.data[i] > 0.0 ? grad_out.data[i] : 0.0;
    }
    return g;
}

Tensor flatten(const Tensor& input) {
    Tensor out({input.size()});
    out.data = input.data;
    return out;
}

SoftmaxLoss softmax_cross_entropy(const Tensor& logits, int label) {
    const std::size_t g = logits.size();
    if (label < 0 || static_cast<std::size_t>(label) >= g)
        throw std::invalid_argument("softmax_cross_entropy: label out of range");

    double mx = logits.data[0];
    for (double z : logits.data) mx = std::max(mx, z);
    double sum = 0.0;
    std::vector<double> e(g);
    for (std::size_t i = 0; i < g; ++i) {
        e[i] = std::exp(logits.data[i] - mx);
        sum += e[i];
    }

    SoftmaxLoss out;
    out.loss = std::log(sum) - (logits.data[static_cast<std::size_t>(label)] - mx);
    out.grad_logits = Tensor({g});
    out.probs.resize(g);
    for (std::size_t i = 0; i < g; ++i) {
        out.probs[i] = e[i] / sum;
        out.grad_logits.data[i] = out.probs[i];
    }
    out.grad_logits.data[static_cast<std::size_t>(label)] -= 1.0;
    return out;
}

// ---- model ------------------------------------------------------------------

Model::Model(std::vector<LayerSpec> layers, ModelParams params)
    : layers_(std::move(layers)), params_(std::move(params)) {
    param_index_.assign(layers_.size(), -1);
    std::size_t next = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i].validate();
        if (layers_[i].has_params()) {
            param_index_[i] = static_cast<int>(next);
            next += 2;
        }
    }
    if (params_.tensors.size() != next)
        throw std::invalid_argument("Model: parameter tensor count does not match the layer list");
}

Model Model::init(const std::vector<LayerSpec>& layers, RngStream& rng) {
    ModelParams params;
    for (const auto& spec : layers) {
        if (!spec.has_params()) continue;
        if (spec.kind == LayerKind::Conv2d) {
            const double fan_in = static_cast<double>(spec.in_channels) * spec.kernel_h * spec.kernel_w;
            const double bound = std::sqrt(2.0 / fan_in);
            Tensor w({static_cast<std::size_t>(spec.out_channels), static_cast<std::size_t>(spec.in_channels),
                      static_cast<std::size_t>(spec.kernel_h), static_cast<std::size_t>(spec.kernel_w)});
            for (auto& x : w.data) x = rng.uniform(-bound, bound);
            params.tensors.push_back(std::move(w));
            params.tensors.push_back(Tensor({static_cast<std::size_t>(spec.out_channels)}));
        } else {
            const double bound = std::sqrt(2.0 / static_cast<double>(spec.in_features));
            Tensor w({static_cast<std::size_t>(spec.out_features), static_cast<std::size_t>(spec.in_features)});
            for (auto& x : w.data) x = rng.uniform(-bound, bound);
            params.tensors.push_back(std::move(w));
            params.tensors.push_back(Tensor({static_cast<std::size_t>(spec.out_features)}));
        }
    }
    return Model(layers, std::move(params));
}

std::size_t Model::param_count() const {
    std::size_t n = 0;
    for (const auto& t : params_.tensors) n += t.size();
    return n;
}

const Tensor& Model::forward(const Tensor& input, Trace& trace) const {
    trace.inputs.resize(layers_.size());
    Tensor current = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& spec = layers_[i];
        trace.inputs[i] = std::move(current);
        const Tensor& x = trace.inputs[i];
        switch (spec.kind) {
            case LayerKind::Conv2d: {
                const int pi = param_index_[i];
                current = conv2d_forward(x, params_.tensors[pi], params_.tensors[pi + 1], spec);
                break;
            }
            case LayerKind::Dense: {
                const int pi = param_index_[i];
                current = dense_forward(x, params_.tensors[pi], params_.tensors[pi + 1], spec);
                break;
            }
            case LayerKind::Relu:
                current = relu_forward(x);
                break;
            case LayerKind::Flatten:
                current = flatten(x);
                break;
        }
    }
    trace.output = std::move(current);
    return trace.output;
}

Tensor Model::forward(const Tensor& input) const {
    Trace trace;
    forward(input, trace);
    return std::move(trace.output);
}

void Model::backward(const Tensor& grad_output, const Trace& trace, std::vector<Tensor>& grads,
                     bool accumulate) const {
    if (!accumulate) {
        grads = zero_like(params_);
    } else if (grads.size() != params_.tensors.size()) {
        throw std::invalid_argument("Model::backward: gradient buffer shape mismatch");
    }

    Tensor grad = grad_output;
    for (std::size_t idx = layers_.size(); idx-- > 0;) {
        const LayerSpec& spec = layers_[idx];
        const Tensor& x = trace.inputs[idx];
        switch (spec.kind) {
            case LayerKind::Conv2d: {
                const int pi = param_index_[idx];
                Conv2dGrads g = conv2d_backward(grad, x, params_.tensors[pi], spec);
                for (std::size_t k = 0; k < g.grad_weights.size(); ++k)
                    grads[pi].data[k] += g.grad_weights.data[k];
                for (std::size_t k = 0; k < g.grad_bias.size(); ++k)
                    grads[pi + 1].data[k] += g.grad_bias.data[k];
                grad = std::move(g.grad_input);
                break;
            }
            case LayerKind::Dense: {
                const int pi = param_index_[idx];
                DenseGrads g = dense_backward(grad, x, params_.tensors[pi], spec);
                for (std::size_t k = 0; k < g.grad_weights.size(); ++k)
                    grads[pi].data[k] += g.grad_weights.data[k];
                for (std::size_t k = 0; k < g.grad_bias.size(); ++k)
                    grads[pi + 1].data[k] += g.grad_bias.data[k];
                grad = std::move(g.grad_input);
                break;
            }
            case LayerKind::Relu:
                grad = relu_backward(grad, x);
                break;
            case LayerKind::Flatten: {
                Tensor g(x.shape);
                g.data = grad.data;
                grad = std::move(g);
                break;
            }
        }
    }
}

std::vector<std::uint8_t> Model::relu_mask(const Trace& trace) const {
    std::vector<std::uint8_t> mask;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i].kind != LayerKind::Relu) continue;
        const Tensor& x = trace.inputs[i];
        for (double v : x.data) mask.push_back(v > 0.0 ? 1 : 0);
    }
    return mask;
}

std::vector<Tensor> zero_like(const ModelParams& params) {
    std::vector<Tensor> out;
    out.reserve(params.tensors.size());
    for (const auto& t : params.tensors) out.emplace_back(t.shape);
    return out;
}

// ---- optimizer ---------------------------------------------------------------

AdamState AdamState::init(const ModelParams& params, double lr, double beta1, double beta2,
                          double eps) {
    AdamState st;
    st.lr = lr;
    st.beta1 = beta1;
    st.beta2 = beta2;
    st.eps = eps;
    st.m = zero_like(params);
    st.v = zero_like(params);
    return st;
}

void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state) {
    if (grads.size() != params.tensors.size())
        throw std::invalid_argument("adam_step: gradient count mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t t = 0; t < params.tensors.size(); ++t) {
        auto& theta = params.tensors[t].data;
        const auto& g = grads[t].data;
        auto& m = state.m[t].data;
        auto& v = state.v[t].data;
        if (g.size() != theta.size()) throw std::invalid_argument("adam_step: gradient shape mismatch");
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            theta[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

// ---- gradient checking --------------------------------------------------------

double relative_error(double a, double b, double scale_floor) {
    const double denom = std::max({std::abs(a), std::abs(b), scale_floor});
    return std::abs(a - b) / denom;
}

GradCheckReport grad_check(Model& model, const Tensor& input, int label, double step,
                           RngStream& rng, double sample_fraction, std::size_t max_per_tensor) {
    Model::Trace trace;
    model.forward(input, trace);
    SoftmaxLoss base = softmax_cross_entropy(trace.output, label);
    std::vector<Tensor> analytic;
    model.backward(base.grad_logits, trace, analytic, false);

    GradCheckReport report;
    Model::Trace tp, tm;
    for (std::size_t t = 0; t < model.params().tensors.size(); ++t) {
        const std::size_t n = model.params().tensors[t].size();
        std::size_t want = static_cast<std::size_t>(std::ceil(sample_fraction * static_cast<double>(n)));
        want = std::max<std::size_t>(want, 1);
        if (max_per_tensor > 0) want = std::min(want, max_per_tensor);
        want = std::min(want, n);

        std::unordered_set<std::size_t> picked;
        while (picked.size() < want) picked.insert(rng.uniform_below(n));

        for (std::size_t idx : picked) {
            double& theta = model.params().tensors[t].data[idx];
            const double saved = theta;

            theta = saved + step;
            model.forward(input, tp);
            const double lp = softmax_cross_entropy(tp.output, label).loss;
            theta = saved - step;
            model.forward(input, tm);
            const double lm = softmax_cross_entropy(tm.output, label).loss;
            theta = saved;

            // A relu flipping between the two evaluations puts a kink inside the
            // difference interval; the central quotient is invalid there.
            if (model.relu_mask(tp) != model.relu_mask(tm)) {
                ++report.skipped_kinks;
                continue;
            }

            const double numeric = (lp - lm) / (2.0 * step);
            const double err = relative_error(analytic[t].data[idx], numeric);
            report.max_rel_error = std::max(report.max_rel_error, err);
            ++report.checked;
        }
    }
    return report;
}

}  // namespace sigdim::nn
