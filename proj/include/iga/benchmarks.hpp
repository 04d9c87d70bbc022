#pragma once

#include <span>

#include "iga/assembly.hpp"

namespace iga {

/// Bessel function of the first kind J_n(x), n >= 0, x >= 0: ascending
/// series for x < 5, backward recurrence normalized by
/// J_0 + 2 sum J_2k = 1 otherwise.
double bessel_j(int n, double x);

/// k-th positive zero of J_n (k >= 1): scan at spacing pi / 4 starting at n,
/// bisection to a bracket of 1e-12. Throws NumericalError when the scan
/// window holds fewer than k sign changes.
double bessel_zero(int n, int k);

/// Free vibration of the annulus a <= r <= b:
/// u(r, theta, t) = J_4(r) cos(omega t) cos(4 theta), a = j_{4,2}, b = j_{4,4},
/// omega = a, which solves u_tt = kappa Laplace(u) with kappa = omega^2.
struct ManufacturedSolution {
    int wavenumber = 4;
    double a = 0.0, b = 0.0;
    double omega = 0.0;
    double kappa = 0.0;

    [[nodiscard]] double period() const;
    [[nodiscard]] double value(double r, double theta, double t) const;
    [[nodiscard]] double velocity(double r, double theta, double t) const;
    [[nodiscard]] double acceleration(double r, double theta, double t) const;
    /// Same in Cartesian coordinates of the physical domain.
    [[nodiscard]] double value_xy(double x, double y, double t) const;
    [[nodiscard]] double velocity_xy(double x, double y, double t) const;
};

ManufacturedSolution annulus_solution();

/// k pi, the k-th frequency of the unit fixed-fixed string with unit wave speed.
double string_frequency(int k);

/// ||u_h - u|| / ||u|| in L2 of the physical domain for a full-grid coefficient
/// vector, by tensor Gauss quadrature with the geometric weight det(F).
/// `points_per_element` = 0 selects p + 3; fewer than p + 2 is rejected.
/// Throws NumericalError when the exact field has zero norm.
double l2_error(const DiscreteSystem& system, std::span<const double> coefficients, const PhysicalField& exact,
                int points_per_element = 0);

}  // namespace iga
