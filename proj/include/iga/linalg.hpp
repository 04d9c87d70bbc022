#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "iga/errors.hpp"

namespace iga {

/// Row-major dense matrix. Used for setup-time work and test oracles only.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    [[nodiscard]] std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

    [[nodiscard]] DenseMatrix transpose() const;
    [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const;
    [[nodiscard]] DenseMatrix submatrix(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const;
    [[nodiscard]] double max_abs() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix kronecker(const DenseMatrix& outer, const DenseMatrix& inner);

/// Lower Cholesky factor L with A = L L^T. Throws NumericalError when A is not SPD.
DenseMatrix cholesky(const DenseMatrix& a);
/// Solves A x = b given the Cholesky factor of A.
std::vector<double> cholesky_solve(const DenseMatrix& l, std::span<const double> b);
/// Inverse of an SPD matrix through its Cholesky factor.
DenseMatrix spd_inverse(const DenseMatrix& a);
/// Inverse of a general square matrix (partial pivoting).
DenseMatrix inverse(const DenseMatrix& a);

/// Writes "rows cols" on the first line followed by whitespace-delimited rows.
void write_matrix(std::ostream& os, const DenseMatrix& m);
DenseMatrix read_matrix(std::istream& is);

/// Symmetric matrix with half-bandwidth beta in packed band storage.
///
/// Row i stores A(i, i + k) for k = 0..beta. Periodic instances wrap the
/// column index modulo N (circulant band pattern); they require N > 2 beta.
class BandedSymmetricMatrix {
public:
    BandedSymmetricMatrix() = default;
    BandedSymmetricMatrix(std::size_t n, std::size_t half_bandwidth, bool periodic = false);

    [[nodiscard]] std::size_t dimension() const noexcept { return n_; }
    [[nodiscard]] std::size_t half_bandwidth() const noexcept { return beta_; }
    [[nodiscard]] bool periodic() const noexcept { return periodic_; }

    /// Entry (i, j); zero outside the band.
    [[nodiscard]] double at(std::size_t i, std::size_t j) const;
    /// Adds v to (i, j) and, by symmetry, (j, i). Throws if outside the band.
    void add(std::size_t i, std::size_t j, double v);
    void set(std::size_t i, std::size_t j, double v);

    [[nodiscard]] bool in_band(std::size_t i, std::size_t j) const;

    void multiply(std::span<const double> x, std::span<double> y) const;
    [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const;
    [[nodiscard]] std::vector<double> row_sums() const;
    [[nodiscard]] DenseMatrix to_dense() const;
    /// Principal submatrix keeping indices [lo, hi) of a non-periodic matrix.
    [[nodiscard]] BandedSymmetricMatrix principal(std::size_t lo, std::size_t hi) const;
    /// Number of stored reals.
    [[nodiscard]] std::size_t storage() const noexcept { return band_.size(); }

private:
    [[nodiscard]] long offset(std::size_t i, std::size_t j) const;
    std::size_t n_ = 0, beta_ = 0;
    bool periodic_ = false;
    std::vector<double> band_;
};

/// SPD solver for a BandedSymmetricMatrix: band Cholesky for clamped
/// patterns, dense Cholesky for periodic ones.
class SpdSolver {
public:
    SpdSolver() = default;
    explicit SpdSolver(const BandedSymmetricMatrix& a);

    [[nodiscard]] std::size_t dimension() const noexcept { return n_; }
    void solve_in_place(std::span<double> x) const;
    [[nodiscard]] std::vector<double> solve(std::span<const double> b) const;

private:
    std::size_t n_ = 0, beta_ = 0;
    bool dense_ = false;
    std::vector<double> band_;  // lower band factor, row i holds L(i, i - beta..i)
    DenseMatrix dense_factor_;
};

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
/// Iterates until the off-diagonal Frobenius norm falls below
/// `off_tolerance` times the Frobenius norm of the input.
std::vector<double> jacobi_eigenvalues(DenseMatrix a, double off_tolerance = 1e-12, int max_sweeps = 100);

}  // namespace iga
