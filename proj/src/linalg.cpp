#include "sigdim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sigdim {

cdouble ComplexMatrix::trace() const {
    if (rows_ != cols_) throw std::invalid_argument("trace: matrix is not square");
    cdouble t = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
    return t;
}

double ComplexMatrix::frobenius_norm() const {
    double s = 0.0;
    for (const auto& v : data_) s += std::norm(v);
    return std::sqrt(s);
}

double ComplexMatrix::max_abs_entry() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, std::abs(v));
    return m;
}

bool ComplexMatrix::is_hermitian(double tol) const {
    if (rows_ != cols_) return false;
    for (std::size_t i = 0; i < rows_; ++i) {
        if (std::abs((*this)(i, i).imag()) > tol) return false;
        for (std::size_t j = i + 1; j < cols_; ++j) {
            if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol) return false;
        }
    }
    return true;
}

ComplexMatrix outer_product(const CVector& r) {
    const std::size_t n = r.size();
    ComplexMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out(i, j) = r[i] * std::conj(r[j]);
        }
    }
    return out;
}

ComplexMatrix hankel(const CVector& r, std::size_t m) {
    const std::size_t n = r.size();
    if (m < 1 || m > n) throw std::invalid_argument("hankel: smoothing length out of [1, N]");
    const std::size_t rows = n - m + 1;
    ComplexMatrix phi(rows, m);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            phi(i, j) = r[i + j];
        }
    }
    return phi;
}

ComplexMatrix smoothed_covariance(const CVector& r, std::size_t m) {
    const ComplexMatrix phi = hankel(r, m);
    const std::size_t np = phi.rows();
    ComplexMatrix cov(np, np);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < np; ++i) {
        for (std::size_t j = i; j < np; ++j) {
            cdouble acc = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                acc += phi(i, k) * std::conj(phi(j, k));
            }
            acc *= inv_m;
            cov(i, j) = acc;
            cov(j, i) = std::conj(acc);
        }
        cov(i, i) = cdouble(cov(i, i).real(), 0.0);
    }
    return cov;
}

namespace {

constexpr int kMaxSweeps = 100;

double offdiag_norm(const ComplexMatrix& a) {
    const std::size_t n = a.rows();
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            s += 2.0 * std::norm(a(p, q));
        }
    }
    return std::sqrt(s);
}

// One Jacobi rotation zeroing a(p, q). The unitary plane rotation is
//   J[p][p] = c, J[p][q] = s, J[q][p] = -conj(s), J[q][q] = c
// with c real, s = sigma * exp(i * arg(a_pq)), applied as A <- J^H A J.
void rotate(ComplexMatrix& a, std::size_t p, std::size_t q) {
    const cdouble apq = a(p, q);
    const double abs_apq = std::abs(apq);
    if (abs_apq == 0.0) return;

    const double app = a(p, p).real();
    const double aqq = a(q, q).real();
    const double theta = (aqq - app) / (2.0 * abs_apq);
    const double t = ((theta >= 0.0) ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const cdouble phase = apq / abs_apq;
    const cdouble s = t * c * phase;
    const cdouble s_conj = std::conj(s);

    const std::size_t n = a.rows();
    // Column update: A <- A J.
    for (std::size_t i = 0; i < n; ++i) {
        const cdouble aip = a(i, p);
        const cdouble aiq = a(i, q);
        a(i, p) = c * aip - s_conj * aiq;
        a(i, q) = s * aip + c * aiq;
    }
    // Row update: A <- J^H A.
    for (std::size_t j = 0; j < n; ++j) {
        const cdouble apj = a(p, j);
        const cdouble aqj = a(q, j);
        a(p, j) = c * apj - s * aqj;
        a(q, j) = s_conj * apj + c * aqj;
    }
    // Force the exact structure the rotation achieves in exact arithmetic.
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    a(p, p) = cdouble(a(p, p).real(), 0.0);
    a(q, q) = cdouble(a(q, q).real(), 0.0);
}

}  // namespace

EigenSpectrum eigvals_hermitian(const ComplexMatrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("eigvals_hermitian: matrix is not square");
    const std::size_t n = a.rows();
    if (n == 0) return {};

    const double herm_tol = 1e-9 * std::max(a.max_abs_entry(), 1e-300);
    if (!a.is_hermitian(herm_tol)) {
        throw std::invalid_argument("eigvals_hermitian: matrix is not Hermitian within tolerance");
    }

    // Symmetrize to suppress round-off asymmetry before iterating.
    ComplexMatrix w(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        w(i, i) = cdouble(a(i, i).real(), 0.0);
        for (std::size_t j = i + 1; j < n; ++j) {
            const cdouble v = 0.5 * (a(i, j) + std::conj(a(j, i)));
            w(i, j) = v;
            w(j, i) = std::conj(v);
        }
    }

    const double fro = w.frobenius_norm();
    const double threshold = 1e-12 * fro;

    bool converged = (offdiag_norm(w) <= threshold);
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                rotate(w, p, q);
            }
        }
        converged = (offdiag_norm(w) <= threshold);
    }
    if (!converged) {
        throw std::runtime_error("eigvals_hermitian: Jacobi iteration did not converge in 100 sweeps");
    }

    EigenSpectrum spec;
    spec.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) spec.values[i] = w(i, i).real();
    std::sort(spec.values.begin(), spec.values.end(), std::greater<double>());

    // Clamp round-off negatives; genuinely negative eigenvalues are kept.
    const double clamp = 1e-12 * fro;
    for (auto& v : spec.values) {
        if (v < 0.0 && v >= -clamp) v = 0.0;
    }
    return spec;
}

}  // namespace sigdim
