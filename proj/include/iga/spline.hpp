#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace iga {

enum class BoundaryKind { clamped, periodic };

/// Non-decreasing knot sequence together with the polynomial degree.
class KnotVector {
public:
    KnotVector() = default;
    KnotVector(std::vector<double> knots, int degree);

    [[nodiscard]] int degree() const noexcept { return degree_; }
    [[nodiscard]] std::size_t size() const noexcept { return knots_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return knots_[i]; }
    [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }

    /// Distinct knot values in increasing order.
    [[nodiscard]] std::vector<double> breakpoints() const;

private:
    std::vector<double> knots_;
    int degree_ = 0;
};

/// Univariate spline space S^p_r on [a, b].
///
/// Clamped spaces use an open knot vector. Periodic spaces identify the
/// domain ends; internally they carry a knot vector extended by p knot spans
/// on either side (wrapped spacing) so that Cox-de Boor runs unchanged, and
/// basis indices are reduced modulo the dimension.
class SplineSpace {
public:
    SplineSpace() = default;
    SplineSpace(KnotVector knots, BoundaryKind kind);

    [[nodiscard]] int degree() const noexcept { return knots_.degree(); }
    [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }
    [[nodiscard]] BoundaryKind boundary_kind() const noexcept { return kind_; }
    [[nodiscard]] bool periodic() const noexcept { return kind_ == BoundaryKind::periodic; }
    [[nodiscard]] const KnotVector& knot_vector() const noexcept { return knots_; }
    [[nodiscard]] double lower() const noexcept { return breaks_.front(); }
    [[nodiscard]] double upper() const noexcept { return breaks_.back(); }
    [[nodiscard]] const std::vector<double>& breakpoints() const noexcept { return breaks_; }
    [[nodiscard]] std::size_t num_elements() const noexcept { return breaks_.size() - 1; }

    /// Knot with unbounded integer index. For clamped spaces the index must be
    /// valid; periodic spaces extend the sequence by translation.
    [[nodiscard]] double knot(long i) const;

    /// Global basis index of the (unwrapped) local index i.
    [[nodiscard]] std::size_t wrap(long i) const;

    /// Index of the knot span [t_mu, t_{mu+1}) containing x (last span closed).
    [[nodiscard]] long find_span(double x) const;

    /// Element index containing x, same convention as find_span.
    [[nodiscard]] std::size_t find_element(double x) const;

private:
    KnotVector knots_;
    BoundaryKind kind_ = BoundaryKind::clamped;
    std::vector<double> breaks_;
    std::size_t dimension_ = 0;
    long offset_ = 0;  // knots_[k] corresponds to unbounded index k - offset_
};

/// Nonzero basis functions (and derivatives) at a point.
struct BasisEval {
    long first_index = 0;  ///< unwrapped index of the first nonzero function
    int degree = 0;
    int max_deriv = 0;
    std::vector<double> values;  ///< (max_deriv + 1) rows of (degree + 1) values

    [[nodiscard]] double value(int deriv, int local) const {
        return values[static_cast<std::size_t>(deriv * (degree + 1) + local)];
    }
    [[nodiscard]] std::span<const double> row(int deriv) const {
        return {values.data() + deriv * (degree + 1), static_cast<std::size_t>(degree + 1)};
    }
};

/// Builds the spline space from breakpoints, degree and interior regularities.
/// `regularity` holds r_k for each interior breakpoint; an empty vector means
/// maximal smoothness p - 1 everywhere.
SplineSpace make_space(std::span<const double> breakpoints, int degree,
                       std::span<const int> regularity, BoundaryKind kind);

/// Uniform mesh of `num_elements` elements on [a, b] with maximal smoothness.
SplineSpace uniform_space(std::size_t num_elements, int degree, BoundaryKind kind = BoundaryKind::clamped,
                          double a = 0.0, double b = 1.0);

BasisEval eval_basis(const SplineSpace& space, double x, int max_deriv = 0);

/// Value of a single B-spline with local knots t[0..p+1] (derivative `deriv`).
double eval_single_basis(std::span<const double> local_knots, int degree, double x, int deriv = 0);

/// Greville abscissae of a clamped space.
std::vector<double> greville(const SplineSpace& space);

/// Coefficients c such that sum_i c_i B_i(x) = x^q.
std::vector<double> monomial_coefficients(const SplineSpace& space, int q);

/// Evaluates sum_i coeffs_i B_i^{(deriv)}(x).
double evaluate(const SplineSpace& space, std::span<const double> coeffs, double x, int deriv = 0);

}  // namespace iga
