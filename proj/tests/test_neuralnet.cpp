#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sigdim/neuralnet.hpp"

using namespace sigdim;
using namespace sigdim::nn;
using doctest::Approx;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, RngStream& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(-scale, scale);
    return t;
}

// Scalar objective L = sum(c .* out) with fixed random c, so every output
// element contributes to the finite-difference loss.
double weighted_sum(const Tensor& out, const Tensor& c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) acc += c.data[i] * out.data[i];
    return acc;
}

}  // namespace

TEST_CASE("conv identity: 1x1 unit kernel reproduces the input") {
    RngStream rng(61);
    const LayerSpec spec = LayerSpec::conv2d(1, 1, 1, 1, 1, 0);
    const Tensor input = random_tensor({1, 5, 7}, rng);
    Tensor w({1, 1, 1, 1});
    w.data[0] = 1.0;
    const Tensor bias({1});
    const Tensor out = conv2d_forward(input, w, bias, spec);
    REQUIRE(out.shape == input.shape);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data[i] == input.data[i]);
}

TEST_CASE("conv of a constant input with an all-ones 3x3 kernel gives 9c") {
    const LayerSpec spec = LayerSpec::conv2d(1, 1, 3, 3, 1, 0);
    Tensor input({1, 6, 6});
    input.fill(0.5);
    Tensor w({1, 1, 3, 3});
    w.fill(1.0);
    const Tensor bias({1});
    const Tensor out = conv2d_forward(input, w, bias, spec);
    REQUIRE(out.shape == std::vector<std::size_t>{1, 4, 4});
    for (double v : out.data) CHECK(v == Approx(4.5).epsilon(1e-14));
}

TEST_CASE("conv forward matches the direct-summation oracle on random configs") {
    RngStream rng(62);
    for (int t = 0; t < 50; ++t) {
        const int ci = 1 + static_cast<int>(rng.uniform_below(3));
        const int co = 1 + static_cast<int>(rng.uniform_below(4));
        const int k = 1 + static_cast<int>(rng.uniform_below(3));
        const int stride = 1 + static_cast<int>(rng.uniform_below(2));
        const int pad = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(k)));
        const int h = k + 2 + static_cast<int>(rng.uniform_below(5));
        const int w = k + 2 + static_cast<int>(rng.uniform_below(5));
        const LayerSpec spec = LayerSpec::conv2d(ci, co, k, k, stride, pad);

        const Tensor input = random_tensor(
            {static_cast<std::size_t>(ci), static_cast<std::size_t>(h), static_cast<std::size_t>(w)}, rng);
        const Tensor weights = random_tensor({static_cast<std::size_t>(co), static_cast<std::size_t>(ci),
                                              static_cast<std::size_t>(k), static_cast<std::size_t>(k)},
                                             rng);
        const Tensor bias = random_tensor({static_cast<std::size_t>(co)}, rng);

        const Tensor got = conv2d_forward(input, weights, bias, spec);
        const Tensor want = oracle::conv2d_direct(input, weights, bias, spec);
        REQUIRE(got.shape == want.shape);
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(std::abs(got.data[i] - want.data[i]) <= 1e-12);
        }
    }
}

TEST_CASE("conv backward matches central differences") {
    RngStream rng(63);
    const LayerSpec spec = LayerSpec::conv2d(2, 3, 3, 3, 1, 1);
    const Tensor input = random_tensor({2, 6, 6}, rng);
    const Tensor weights = random_tensor({3, 2, 3, 3}, rng);
    const Tensor bias = random_tensor({3}, rng);
    const Tensor out0 = conv2d_forward(input, weights, bias, spec);
    const Tensor c = random_tensor(out0.shape, rng);

    // Analytic: dL/dout = c.
    const Conv2dGrads g = conv2d_backward(c, input, weights, spec);

    const double h = 1e-5;
    Tensor w_mut = weights, in_mut = input, b_mut = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double saved = w_mut.data[i];
        w_mut.data[i] = saved + h;
        const double lp = weighted_sum(conv2d_forward(input, w_mut, bias, spec), c);
        w_mut.data[i] = saved - h;
        const double lm = weighted_sum(conv2d_forward(input, w_mut, bias, spec), c);
        w_mut.data[i] = saved;
        CHECK(relative_error(g.grad_weights.data[i], (lp - lm) / (2.0 * h)) < 1e-6);
    }
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double saved = in_mut.data[i];
        in_mut.data[i] = saved + h;
        const double lp = weighted_sum(conv2d_forward(in_mut, weights, bias, spec), c);
        in_mut.data[i] = saved - h;
        const double lm = weighted_sum(conv2d_forward(in_mut, weights, bias, spec), c);
        in_mut.data[i] = saved;
        CHECK(relative_error(g.grad_input.data[i], (lp - lm) / (2.0 * h)) < 1e-6);
    }
    for (std::size_t i = 0; i < bias.size(); ++i) {
        const double saved = b_mut.data[i];
        b_mut.data[i] = saved + h;
        const double lp = weighted_sum(conv2d_forward(input, weights, b_mut, spec), c);
        b_mut.data[i] = saved - h;
        const double lm = weighted_sum(conv2d_forward(input, weights, b_mut, spec), c);
        b_mut.data[i] = saved;
        CHECK(relative_error(g.grad_bias.data[i], (lp - lm) / (2.0 * h)) < 1e-6);
    }
}

TEST_CASE("conv backward edge identities") {
    RngStream rng(64);
    const LayerSpec spec = LayerSpec::conv2d(2, 2, 3, 3, 2, 1);
    const Tensor input = random_tensor({2, 7, 7}, rng);
    const Tensor weights = random_tensor({2, 2, 3, 3}, rng);

    SUBCASE("zero upstream gradient zeroes everything") {
        Tensor zero({2, 4, 4});
        const Conv2dGrads g = conv2d_backward(zero, input, weights, spec);
        for (double v : g.grad_input.data) CHECK(v == 0.0);
        for (double v : g.grad_weights.data) CHECK(v == 0.0);
        for (double v : g.grad_bias.data) CHECK(v == 0.0);
    }
    SUBCASE("bias gradient is the spatial sum of the upstream gradient") {
        const Tensor go = random_tensor({2, 4, 4}, rng);
        const Conv2dGrads g = conv2d_backward(go, input, weights, spec);
        for (int o = 0; o < 2; ++o) {
            double want = 0.0;
            for (int i = 0; i < 16; ++i) want += go.data[static_cast<std::size_t>(o) * 16 + i];
            CHECK(g.grad_bias.data[static_cast<std::size_t>(o)] == Approx(want).epsilon(1e-13));
        }
    }
}

TEST_CASE("dense forward and backward") {
    RngStream rng(65);
    SUBCASE("identity weights reproduce the input") {
        const LayerSpec spec = LayerSpec::dense(4, 4);
        Tensor w({4, 4});
        for (int i = 0; i < 4; ++i) w.data[static_cast<std::size_t>(i) * 4 + i] = 1.0;
        const Tensor b({4});
        const Tensor x = random_tensor({4}, rng);
        const Tensor y = dense_forward(x, w, b, spec);
        for (std::size_t i = 0; i < 4; ++i) CHECK(y.data[i] == Approx(x.data[i]).epsilon(1e-15));
    }
    SUBCASE("backward matches central differences") {
        const LayerSpec spec = LayerSpec::dense(7, 5);
        const Tensor x = random_tensor({7}, rng);
        const Tensor w = random_tensor({5, 7}, rng);
        const Tensor b = random_tensor({5}, rng);
        const Tensor c = random_tensor({5}, rng);
        const DenseGrads g = dense_backward(c, x, w, spec);

        const double h = 1e-5;
        Tensor w_mut = w;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double saved = w_mut.data[i];
            w_mut.data[i] = saved + h;
            const double lp = weighted_sum(dense_forward(x, w_mut, b, spec), c);
            w_mut.data[i] = saved - h;
            const double lm = weighted_sum(dense_forward(x, w_mut, b, spec), c);
            w_mut.data[i] = saved;
            CHECK(relative_error(g.grad_weights.data[i], (lp - lm) / (2.0 * h)) < 1e-6);
        }
        Tensor x_mut = x;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double saved = x_mut.data[i];
            x_mut.data[i] = saved + h;
            const double lp = weighted_sum(dense_forward(x_mut, w, b, spec), c);
            x_mut.data[i] = saved - h;
            const double lm = weighted_sum(dense_forward(x_mut, w, b, spec), c);
            x_mut.data[i] = saved;
            CHECK(relative_error(g.grad_input.data[i], (lp - lm) / (2.0 * h)) < 1e-6);
        }
    }
}

TEST_CASE("relu forward and subgradient at zero") {
    Tensor x({3});
    x.data = {-1.0, 0.0, 2.0};
    const Tensor y = relu_forward(x);
    CHECK(y.data[0] == 0.0);
    CHECK(y.data[1] == 0.0);
    CHECK(y.data[2] == 2.0);

    Tensor go({3});
    go.data = {5.0, 5.0, 5.0};
    const Tensor gx = relu_backward(go, x);
    CHECK(gx.data[0] == 0.0);
    CHECK(gx.data[1] == 0.0);  // subgradient 0 at 0
    CHECK(gx.data[2] == 5.0);
}

TEST_CASE("softmax cross-entropy") {
    SUBCASE("uniform logits give ln G") {
        Tensor logits({4});
        const SoftmaxLoss sm = softmax_cross_entropy(logits, 2);
        CHECK(sm.loss == Approx(std::log(4.0)).epsilon(1e-14));
    }
    SUBCASE("shift invariance") {
        RngStream rng(66);
        Tensor logits = random_tensor({5}, rng, 3.0);
        const SoftmaxLoss a = softmax_cross_entropy(logits, 1);
        Tensor shifted = logits;
        for (auto& v : shifted.data) v += 123.456;
        const SoftmaxLoss b = softmax_cross_entropy(shifted, 1);
        CHECK(a.loss == Approx(b.loss).epsilon(1e-12));
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(a.grad_logits.data[i] == Approx(b.grad_logits.data[i]).epsilon(1e-10));
        }
    }
    SUBCASE("probabilities sum to one, positive, loss positive") {
        RngStream rng(67);
        for (int t = 0; t < 20; ++t) {
            const Tensor logits = random_tensor({6}, rng, 4.0);
            const SoftmaxLoss sm = softmax_cross_entropy(logits, 0);
            double sum = 0.0;
            for (double p : sm.probs) {
                CHECK(p > 0.0);
                sum += p;
            }
            CHECK(sum == Approx(1.0).epsilon(1e-12));
            CHECK(sm.loss > 0.0);
        }
    }
    SUBCASE("gradient matches central differences") {
        RngStream rng(68);
        Tensor logits = random_tensor({4}, rng, 2.0);
        const SoftmaxLoss sm = softmax_cross_entropy(logits, 3);
        const double h = 1e-6;
        for (std::size_t i = 0; i < 4; ++i) {
            const double saved = logits.data[i];
            logits.data[i] = saved + h;
            const double lp = softmax_cross_entropy(logits, 3).loss;
            logits.data[i] = saved - h;
            const double lm = softmax_cross_entropy(logits, 3).loss;
            logits.data[i] = saved;
            CHECK(std::abs(sm.grad_logits.data[i] - (lp - lm) / (2.0 * h)) < 1e-8);
        }
    }
    SUBCASE("label out of range") {
        Tensor logits({4});
        CHECK_THROWS_AS(softmax_cross_entropy(logits, 4), std::invalid_argument);
        CHECK_THROWS_AS(softmax_cross_entropy(logits, -1), std::invalid_argument);
    }
}

TEST_CASE("adam single steps") {
    LayerSpec dense = LayerSpec::dense(1, 1);
    ModelParams params;
    params.tensors.push_back(Tensor({1, 1}));
    params.tensors.push_back(Tensor({1}));
    params.tensors[0].data[0] = 0.5;

    SUBCASE("first step with unit gradient moves by about lr") {
        AdamState st = AdamState::init(params, 1e-3, 0.9, 0.999, 1e-8);
        std::vector<Tensor> grads = zero_like(params);
        grads[0].data[0] = 1.0;
        adam_step(params, grads, st);
        CHECK(std::abs((0.5 - params.tensors[0].data[0]) - 1e-3) <= 1e-10);
    }
    SUBCASE("zero gradient with zero moments leaves parameters unchanged") {
        AdamState st = AdamState::init(params, 1e-3, 0.9, 0.999, 1e-8);
        std::vector<Tensor> grads = zero_like(params);
        adam_step(params, grads, st);
        CHECK(params.tensors[0].data[0] == 0.5);
        CHECK(params.tensors[1].data[0] == 0.0);
    }
}

TEST_CASE("adam on f(theta)=theta^2 matches the scalar recursion and converges") {
    ModelParams params;
    params.tensors.push_back(Tensor({1}));
    params.tensors[0].data[0] = 1.0;
    AdamState st = AdamState::init(params, 0.01, 0.9, 0.999, 1e-8);

    // Independent scalar recursion of the same update rule.
    double theta = 1.0, m = 0.0, v = 0.0;
    double prev_abs = 1.0;
    bool monotone_after_warmup = true;
    for (int t = 1; t <= 100; ++t) {
        std::vector<Tensor> grads = zero_like(params);
        grads[0].data[0] = 2.0 * params.tensors[0].data[0];
        adam_step(params, grads, st);

        const double g = 2.0 * theta;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mhat = m / (1.0 - std::pow(0.9, t));
        const double vhat = v / (1.0 - std::pow(0.999, t));
        theta -= 0.01 * mhat / (std::sqrt(vhat) + 1e-8);

        CHECK(params.tensors[0].data[0] == Approx(theta).epsilon(1e-12));
        if (t > 10) {
            if (std::abs(theta) > prev_abs + 1e-12) monotone_after_warmup = false;
        }
        prev_abs = std::abs(theta);
    }
    CHECK(monotone_after_warmup);
    CHECK(std::abs(params.tensors[0].data[0]) < 0.5);
}

TEST_CASE("model init follows the He-uniform bound with zero biases") {
    RngStream rng(69);
    const std::vector<LayerSpec> arch = {LayerSpec::conv2d(2, 4, 3, 3, 1, 1), LayerSpec::relu(),
                                         LayerSpec::flatten(), LayerSpec::dense(4 * 5 * 5, 3)};
    const Model model = Model::init(arch, rng);
    const double conv_bound = std::sqrt(2.0 / 18.0);
    for (double v : model.params().tensors[0].data) CHECK(std::abs(v) <= conv_bound);
    for (double v : model.params().tensors[1].data) CHECK(v == 0.0);
    const double dense_bound = std::sqrt(2.0 / 100.0);
    for (double v : model.params().tensors[2].data) CHECK(std::abs(v) <= dense_bound);
}

TEST_CASE("full-model gradient check, small stack") {
    RngStream rng(70);
    const std::vector<LayerSpec> arch = {
        LayerSpec::conv2d(2, 4, 3, 3, 1, 1), LayerSpec::relu(),
        LayerSpec::conv2d(4, 4, 3, 3, 2, 1), LayerSpec::relu(),
        LayerSpec::flatten(),
        LayerSpec::dense(4 * 4 * 4, 4),
    };
    Model model = Model::init(arch, rng);
    const Tensor input = random_tensor({2, 8, 8}, rng);
    RngStream check_rng(71);
    const GradCheckReport report = grad_check(model, input, 2, 1e-5, check_rng, 0.25, 0);
    CHECK(report.checked > 100);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("linear-only model gradient check is near exact") {
    RngStream rng(72);
    const std::vector<LayerSpec> arch = {LayerSpec::flatten(), LayerSpec::dense(32, 8),
                                         LayerSpec::dense(8, 4)};
    Model model = Model::init(arch, rng);
    const Tensor input = random_tensor({2, 4, 4}, rng);
    RngStream check_rng(73);
    const GradCheckReport report = grad_check(model, input, 1, 1e-5, check_rng, 1.0, 0);
    CHECK(report.max_rel_error < 1e-8);
}

TEST_CASE("zero input and zero weights give zero conv-weight gradients") {
    const std::vector<LayerSpec> arch = {LayerSpec::conv2d(1, 2, 3, 3, 1, 1), LayerSpec::relu(),
                                         LayerSpec::flatten(), LayerSpec::dense(2 * 4 * 4, 2)};
    ModelParams params;
    params.tensors.push_back(Tensor({2, 1, 3, 3}));
    params.tensors.push_back(Tensor({2}));
    params.tensors.push_back(Tensor({2, 32}));
    params.tensors.push_back(Tensor({2}));
    Model model(arch, params);
    Model::Trace trace;
    const Tensor input({1, 4, 4});
    model.forward(input, trace);
    const SoftmaxLoss sm = softmax_cross_entropy(trace.output, 0);
    std::vector<Tensor> grads;
    model.backward(sm.grad_logits, trace, grads, false);
    for (double v : grads[0].data) CHECK(v == 0.0);  // conv weights see zero input
}

TEST_CASE("memorizing a fixed batch of 64 samples in 500 steps") {
    RngStream rng(74);
    const std::vector<LayerSpec> arch = {
        LayerSpec::conv2d(2, 4, 3, 3, 1, 1),  LayerSpec::relu(),
        LayerSpec::conv2d(4, 8, 3, 3, 2, 1),  LayerSpec::relu(),
        LayerSpec::flatten(),
        LayerSpec::dense(8 * 4 * 4, 32),      LayerSpec::relu(),
        LayerSpec::dense(32, 4),
    };
    Model model = Model::init(arch, rng);
    AdamState adam = AdamState::init(model.params(), 1e-3, 0.9, 0.999, 1e-8);

    std::vector<Tensor> batch;
    std::vector<int> labels;
    for (int i = 0; i < 64; ++i) {
        batch.push_back(random_tensor({2, 8, 8}, rng));
        labels.push_back(static_cast<int>(rng.uniform_below(4)));
    }

    double last_loss = 1e9;
    Model::Trace trace;
    for (int step = 0; step < 500; ++step) {
        std::vector<Tensor> total = zero_like(model.params());
        double loss = 0.0;
        for (int i = 0; i < 64; ++i) {
            model.forward(batch[static_cast<std::size_t>(i)], trace);
            const SoftmaxLoss sm = softmax_cross_entropy(trace.output, labels[static_cast<std::size_t>(i)]);
            loss += sm.loss;
            model.backward(sm.grad_logits, trace, total, true);
        }
        for (auto& t : total)
            for (auto& v : t.data) v /= 64.0;
        adam_step(model.params(), total, adam);
        last_loss = loss / 64.0;
    }
    CHECK(last_loss < 0.05);
}
