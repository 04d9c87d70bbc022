#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "iga/linalg.hpp"
#include "iga/spline.hpp"

namespace iga {

using ScalarField1D = std::function<double(double)>;

/// G_ij = integral of B_i B_j w. An empty weight means w = 1. The default
/// rule has p + 1 points per element (p + 2 when a weight is given).
BandedSymmetricMatrix grammian(const SplineSpace& space, const ScalarField1D& weight = {},
                               int points_per_element = 0);

/// Dense inverse of the Grammian, i.e. the coefficients of the exact dual
/// functions. Intended as a test oracle; throws beyond `cap` functions.
DenseMatrix exact_dual_coeffs(const SplineSpace& space, std::size_t cap = 512);

/// Banded SPD coefficient matrix S of the approximate dual functions
/// lambda_i = sum_j S_ij B_j.
class ApproximateDualBasis {
public:
    ApproximateDualBasis(SplineSpace space, BandedSymmetricMatrix gram, BandedSymmetricMatrix coeffs);

    [[nodiscard]] const SplineSpace& space() const noexcept { return space_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return s_.dimension(); }
    [[nodiscard]] std::size_t half_bandwidth() const noexcept { return s_.half_bandwidth(); }
    [[nodiscard]] const BandedSymmetricMatrix& S() const noexcept { return s_; }
    [[nodiscard]] const BandedSymmetricMatrix& G() const noexcept { return g_; }

    /// out = S x.
    void apply(std::span<const double> x, std::span<double> out) const { s_.multiply(x, out); }
    /// Dense product S G.
    [[nodiscard]] DenseMatrix coupling() const;

private:
    SplineSpace space_;
    BandedSymmetricMatrix g_, s_;
};

/// Builds S as the minimizer of ||S G - I||_F over symmetric matrices of
/// half-bandwidth `half_bandwidth` (default p) subject to reproducing every
/// polynomial of degree <= p. Widens the band up to 2p when the constraints
/// cannot be met; throws NumericalError if none works or S is not SPD.
ApproximateDualBasis approximate_dual(const SplineSpace& space, int half_bandwidth = -1);

/// Inverse of the principal submatrix of S^{-1} obtained by deleting the
/// first and/or last index, built from S by rank-two Woodbury updates.
class ConstrainedDual {
public:
    ConstrainedDual(const ApproximateDualBasis& basis, bool left, bool right);

    [[nodiscard]] const SplineSpace& space() const noexcept { return space_; }
    /// The unconstrained coefficient matrix S.
    [[nodiscard]] const BandedSymmetricMatrix& base() const noexcept { return s_; }
    [[nodiscard]] bool left() const noexcept { return left_; }
    [[nodiscard]] bool right() const noexcept { return right_; }
    /// Number of retained (free) indices.
    [[nodiscard]] std::size_t dimension() const noexcept { return free_.size(); }
    [[nodiscard]] const std::vector<std::size_t>& free_indices() const noexcept { return free_; }

    /// out = (restricted operator) x for vectors over the free indices.
    void apply(std::span<const double> x, std::span<double> out) const;
    [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;
    [[nodiscard]] DenseMatrix to_dense() const;
    /// Number of stored reals (band plus low-rank factors).
    [[nodiscard]] std::size_t storage() const noexcept;

private:
    struct RankTwo {
        std::vector<double> p0, p1;  // columns of S U C^{-1}
        std::vector<double> q0, q1;  // rows of V^T S
    };
    void apply_full(std::span<const double> x, std::span<double> out) const;

    SplineSpace space_;
    BandedSymmetricMatrix s_;
    bool left_, right_;
    std::vector<std::size_t> free_;
    std::vector<RankTwo> updates_;
};

inline ConstrainedDual constrain_dual(const ApproximateDualBasis& basis, bool left, bool right) {
    return {basis, left, right};
}

/// Moments m_j = integral of f B_j w (w = 1 if empty).
std::vector<double> moments(const SplineSpace& space, const ScalarField1D& f, const ScalarField1D& weight = {},
                            int points_per_element = 0);

/// u = S m with m the moments of f.
std::vector<double> quasi_project(const ApproximateDualBasis& basis, const ScalarField1D& f,
                                  const ScalarField1D& weight = {});
/// Constrained variant; returns a full-length vector with zeros at the
/// constrained ends.
std::vector<double> quasi_project(const ConstrainedDual& dual, const ScalarField1D& f,
                                  const ScalarField1D& weight = {});

/// Writes G.txt, S.txt and C.txt (C = S G) as dense matrices into `dir`.
void dump_dual(const ApproximateDualBasis& basis, const std::filesystem::path& dir);

}  // namespace iga
