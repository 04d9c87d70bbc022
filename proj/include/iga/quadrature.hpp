#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "iga/spline.hpp"

namespace iga {

struct QuadratureRule {
    std::vector<double> nodes;    ///< in (-1, 1), ascending
    std::vector<double> weights;  ///< positive, sum to 2
    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
};

/// Gauss-Legendre rule with n points, 1 <= n <= 64.
QuadratureRule gauss_rule(int n);

/// Basis values and first derivatives at every quadrature point of a space,
/// element by element. Weights include the element Jacobian.
class BasisTable {
public:
    BasisTable(const SplineSpace& space, int points_per_element, int max_deriv = 1);

    [[nodiscard]] const SplineSpace& space() const noexcept { return space_; }
    [[nodiscard]] std::size_t size() const noexcept { return x_.size(); }
    [[nodiscard]] int points_per_element() const noexcept { return nq_; }
    [[nodiscard]] int degree() const noexcept { return p_; }
    [[nodiscard]] double x(std::size_t q) const { return x_[q]; }
    [[nodiscard]] double weight(std::size_t q) const { return w_[q]; }
    [[nodiscard]] long first(std::size_t q) const { return first_[q]; }
    /// Global (wrapped) index of local function k at point q.
    [[nodiscard]] std::size_t index(std::size_t q, int k) const { return space_.wrap(first_[q] + k); }
    [[nodiscard]] double value(std::size_t q, int k, int deriv = 0) const {
        return vals_[(q * static_cast<std::size_t>(nd_ + 1) + static_cast<std::size_t>(deriv)) *
                         static_cast<std::size_t>(p_ + 1) +
                     static_cast<std::size_t>(k)];
    }

private:
    SplineSpace space_;
    int p_, nq_, nd_;
    std::vector<double> x_, w_;
    std::vector<long> first_;
    std::vector<double> vals_;
};

/// Integrand signature for integrate_1d: point, weight-free basis data.
using Integrand1D = std::function<double(double x, const BasisEval& basis)>;

/// Element-by-element integral of `f` over the domain of `space`.
/// `points_per_element` defaults to p + 1.
double integrate_1d(const SplineSpace& space, const Integrand1D& f, int points_per_element = 0);

/// Accumulates f(x, basis) * w into a vector indexed by global basis number, one
/// contribution per nonzero function: out_i = integral of f_i.
std::vector<double> integrate_1d_vector(const SplineSpace& space,
                                        const std::function<double(double x, int local, const BasisEval&)>& f,
                                        int points_per_element = 0);

/// Tensor-product integral of f(x1, x2) over [a1,b1] x [a2,b2] with the
/// element structure of both spaces.
double integrate_2d(const SplineSpace& s1, const SplineSpace& s2, const std::function<double(double, double)>& f,
                    int points_per_element = 0);

}  // namespace iga
