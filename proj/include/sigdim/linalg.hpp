#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace sigdim {

using cdouble = std::complex<double>;
using CVector = std::vector<cdouble>;

/// Dense row-major complex matrix. Small and immutable in spirit: all the
/// operations below build a fresh matrix rather than mutating inputs.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cdouble& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const cdouble& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<cdouble>& data() const { return data_; }
    std::vector<cdouble>& data() { return data_; }

    cdouble trace() const;
    double frobenius_norm() const;
    double max_abs_entry() const;
    bool is_hermitian(double tol) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cdouble> data_;
};

/// Real eigenvalues sorted descending (lambda_1 >= lambda_2 >= ...).
struct EigenSpectrum {
    std::vector<double> values;
};

/// R[i][j] = r_i * conj(r_j). Hermitian, rank <= 1.
ComplexMatrix outer_product(const CVector& r);

/// (N-M+1) x M Hankel matrix with constant anti-diagonals:
/// row i is the window r[i], r[i+1], ..., r[i+M-1].
/// Throws std::invalid_argument when m is outside [1, N].
ComplexMatrix hankel(const CVector& r, std::size_t m);

/// Spatially smoothed covariance (1/M) * Phi * Phi^H, size N' x N' with
/// N' = N - M + 1. Hermitian positive semidefinite.
ComplexMatrix smoothed_covariance(const CVector& r, std::size_t m);

/// All eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
/// The input is symmetrized as (A + A^H)/2 before iterating; inputs that are
/// not Hermitian within 1e-9 * max|entry| are rejected. Sweep cap 100,
/// off-diagonal convergence threshold 1e-12 * ||A||_F. Negative values within
/// round-off of zero are clamped to 0 at reporting.
EigenSpectrum eigvals_hermitian(const ComplexMatrix& a);

}  // namespace sigdim
