// Test-only oracles, all independent of the library implementation paths they
// check: a determinant-scan eigenvalue solver, closed-form determinants, and a
// direct seven-loop convolution.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "sigdim/linalg.hpp"
#include "sigdim/neuralnet.hpp"
#include "sigdim/rng.hpp"

namespace oracle {

using sigdim::cdouble;
using sigdim::ComplexMatrix;

/// det(A) by Gaussian elimination with partial pivoting, complex arithmetic.
inline cdouble determinant(ComplexMatrix a) {
    const std::size_t n = a.rows();
    cdouble det(1.0, 0.0);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        }
        if (std::abs(a(pivot, col)) == 0.0) return {0.0, 0.0};
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(pivot, c), a(col, c));
            det = -det;
        }
        det *= a(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const cdouble f = a(r, col) / a(col, col);
            for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
        }
    }
    return det;
}

/// Re(det(A - lambda I)); real for Hermitian A.
inline double char_poly(const ComplexMatrix& a, double lambda) {
    ComplexMatrix shifted = a;
    for (std::size_t i = 0; i < a.rows(); ++i) shifted(i, i) -= lambda;
    return determinant(shifted).real();
}

/// All eigenvalues of a Hermitian matrix with distinct eigenvalues, by
/// bracketing sign changes of the characteristic polynomial over the
/// Gershgorin interval and bisecting. Sorted descending.
inline std::vector<double> eigvals_detscan(const ComplexMatrix& a) {
    const std::size_t n = a.rows();
    double lo = a(0, 0).real(), hi = lo;
    for (std::size_t i = 0; i < n; ++i) {
        double radius = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) radius += std::abs(a(i, j));
        }
        lo = std::min(lo, a(i, i).real() - radius);
        hi = std::max(hi, a(i, i).real() + radius);
    }
    const double pad = 1e-6 * std::max(1.0, hi - lo);
    lo -= pad;
    hi += pad;

    std::vector<double> roots;
    for (std::size_t grid = 4096; roots.size() < n && grid <= 4096 * 64; grid *= 4) {
        roots.clear();
        double x_prev = lo;
        double f_prev = char_poly(a, x_prev);
        for (std::size_t i = 1; i <= grid; ++i) {
            const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid);
            const double f = char_poly(a, x);
            if (f == 0.0) {
                roots.push_back(x);
            } else if (f_prev != 0.0 && ((f_prev < 0.0) != (f < 0.0))) {
                double a_lo = x_prev, a_hi = x, fa = f_prev;
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (a_lo + a_hi);
                    const double fm = char_poly(a, mid);
                    if (fm == 0.0) {
                        a_lo = a_hi = mid;
                        break;
                    }
                    if ((fa < 0.0) != (fm < 0.0)) {
                        a_hi = mid;
                    } else {
                        a_lo = mid;
                        fa = fm;
                    }
                    if (a_hi - a_lo < 1e-13 * std::max(1.0, std::abs(mid))) break;
                }
                roots.push_back(0.5 * (a_lo + a_hi));
            }
            x_prev = x;
            f_prev = f;
        }
    }
    if (roots.size() != n) throw std::runtime_error("detscan oracle: could not isolate all roots");
    std::sort(roots.begin(), roots.end(), std::greater<double>());
    return roots;
}

/// Closed-form determinant of a 2x2 or 3x3 Hermitian matrix (real result).
inline double hermitian_det_closed_form(const ComplexMatrix& a) {
    if (a.rows() == 2) {
        return a(0, 0).real() * a(1, 1).real() - std::norm(a(0, 1));
    }
    if (a.rows() == 3) {
        const cdouble d = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                          a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                          a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
        return d.real();
    }
    throw std::invalid_argument("closed-form determinant: only 2x2 and 3x3");
}

inline ComplexMatrix random_hermitian(std::size_t n, sigdim::RngStream& rng, double scale = 1.0) {
    ComplexMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = cdouble(rng.uniform(-scale, scale), 0.0);
        for (std::size_t j = i + 1; j < n; ++j) {
            const cdouble v(rng.uniform(-scale, scale), rng.uniform(-scale, scale));
            a(i, j) = v;
            a(j, i) = std::conj(v);
        }
    }
    return a;
}

/// Direct summation convolution, cross-correlation convention, zero padding.
inline sigdim::nn::Tensor conv2d_direct(const sigdim::nn::Tensor& input,
                                        const sigdim::nn::Tensor& weights,
                                        const sigdim::nn::Tensor& bias,
                                        const sigdim::nn::LayerSpec& spec) {
    using sigdim::nn::Tensor;
    const int ci = spec.in_channels, co = spec.out_channels;
    const int kh = spec.kernel_h, kw = spec.kernel_w;
    const int h = static_cast<int>(input.shape[1]);
    const int w = static_cast<int>(input.shape[2]);
    const int s = spec.stride, p = spec.padding;
    const int oh = (h + 2 * p - kh) / s + 1;
    const int ow = (w + 2 * p - kw) / s + 1;

    Tensor out({static_cast<std::size_t>(co), static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
    for (int o = 0; o < co; ++o) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = bias.data[static_cast<std::size_t>(o)];
                for (int c = 0; c < ci; ++c) {
                    for (int u = 0; u < kh; ++u) {
                        for (int v = 0; v < kw; ++v) {
                            const int iy = oy * s + u - p;
                            const int ix = ox * s + v - p;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            const double in_v =
                                input.data[(static_cast<std::size_t>(c) * h + iy) * w + ix];
                            const double w_v =
                                weights.data[((static_cast<std::size_t>(o) * ci + c) * kh + u) * kw + v];
                            acc += w_v * in_v;
                        }
                    }
                }
                out.data[(static_cast<std::size_t>(o) * oh + oy) * ow + ox] = acc;
            }
        }
    }
    return out;
}

}  // namespace oracle
