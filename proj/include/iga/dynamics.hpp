#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iga/linalg.hpp"
#include "iga/spline.hpp"

namespace iga {

/// Explicit Runge-Kutta method; a is strictly lower triangular (row-major).
struct ButcherTableau {
    std::string name;
    std::vector<std::vector<double>> a;
    std::vector<double> b, c;
    int order = 0;

    [[nodiscard]] std::size_t stages() const noexcept { return b.size(); }
};

ButcherTableau forward_euler();
/// Heun's second-order method.
ButcherTableau heun_rk2();
ButcherTableau classical_rk4();
/// 17-stage sixth-order method: Gragg's midpoint rule with step counts
/// 2, 4, 6, 8 sharing the first stage, combined by extrapolation weights w
/// with sum w = 1, sum w / n^2 = sum w / n^4 = 0 and sum w / n^6 = -1e-4
/// (the last weight condition keeps a segment of the imaginary axis stable).
ButcherTableau extrapolated_rk6();
/// "euler", "rk2", "rk4" or "rk6"; throws std::invalid_argument otherwise.
ButcherTableau tableau_by_name(std::string_view name);
/// RK4 for p <= 4, RK6 above.
ButcherTableau tableau_for_degree(int degree);
/// Imaginary-axis constants used to size time steps: 2.0 (rk2 and
/// central_difference), 2.785 (rk4), 3.387 (rk6).
double default_cmax(std::string_view name);

/// R(z) = 1 + z b^T (I - z A)^{-1} 1 evaluated at z = i y; returns |R|.
double stability_modulus(const ButcherTableau& tableau, double y);
/// Largest y with |R(i y')| <= 1 + 1e-12 on [0, y] (scan by 1e-3, then bisection).
/// Returns 0 when the axis is unstable right away.
double stability_limit(const ButcherTableau& tableau);
/// C_max / omega_max.
double critical_dt(double cmax, double omega_max);

/// Second-order state: d, its time derivative v, and the time.
struct DynamicState {
    std::vector<double> d, v;
    double t = 0.0;
};

/// Acceleration a = rhs(d).
using Acceleration = std::function<void(std::span<const double> d, std::span<double> a)>;

/// One explicit step of y' = (v, rhs(d)). Throws NumericalError on a
/// non-finite result, naming `step_index`.
DynamicState rk_step(const ButcherTableau& tableau, const Acceleration& rhs, const DynamicState& state, double dt,
                     std::size_t step_index = 0);
/// `steps` steps of size dt; `observer` (optional) sees the state after every step.
DynamicState integrate(const ButcherTableau& tableau, const Acceleration& rhs, DynamicState state, double dt,
                       std::size_t steps, const std::function<void(std::size_t, const DynamicState&)>& observer = {});

/// Velocity form of the central difference method (Stoermer-Verlet):
/// v += dt/2 a(d); d += dt v; v += dt/2 a(d). Second order, stable for
/// omega dt < 2. Throws NumericalError on a non-finite result.
DynamicState central_difference_step(const Acceleration& rhs, const DynamicState& state, double dt,
                                     std::size_t step_index = 0);
DynamicState integrate_central_difference(const Acceleration& rhs, DynamicState state, double dt, std::size_t steps,
                                          const std::function<void(std::size_t, const DynamicState&)>& observer = {});

/// Scheme names accepted by integrate_by_name: the tableau names and "central_difference".
bool is_scheme_name(std::string_view name);
/// Order of accuracy of a named scheme.
int scheme_order(std::string_view name);
/// Imaginary-axis limit of a named scheme: stability_limit of the tableau, or
/// for central_difference the largest omega dt with |2 - (omega dt)^2| <= 2
/// (trace of its unimodular amplification matrix).
double scheme_stability_limit(std::string_view name);
DynamicState integrate_by_name(std::string_view scheme, const Acceleration& rhs, DynamicState state, double dt,
                               std::size_t steps,
                               const std::function<void(std::size_t, const DynamicState&)>& observer = {});

/// Linear map y = A x on vectors of a fixed size.
using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

struct PowerIterationOptions {
    double tolerance = 1e-8;  ///< relative eigenvalue error, estimated from successive changes
    int max_iterations = 5000;  ///< cap on operator applications
    unsigned seed = 1;
    /// Degree of the Chebyshev filter applied between Rayleigh quotients after
    /// 30 plain steps; 0 runs plain power iteration throughout.
    int filter_degree = 32;
};

/// Largest eigenvalue of A = M^{-1} K (real, non-negative spectrum) by power
/// iteration with the Euclidean Rayleigh quotient, accelerated by a Chebyshev
/// filter that damps [0, b] for b slightly below the current estimate.
/// Returns omega_max = sqrt(lambda_max). Throws NumericalError with the last
/// two quotients when it does not converge.
double max_frequency(const LinearMap& op, std::size_t n, const PowerIterationOptions& options = {});

struct SpectrumResult {
    std::vector<double> frequencies;  ///< ascending
    std::string mass_kind;
    bool outlier_removed = false;
    [[nodiscard]] std::size_t count() const noexcept { return frequencies.size(); }
};

/// Frequencies of K x = omega^2 M x for symmetric K and SPD M: Cholesky of M,
/// Jacobi on L^{-1} K L^{-T}. With `invert`, the pencil (M, K) is solved
/// instead (K must be SPD) and omega = 1 / sqrt(mu), which keeps the low
/// frequencies accurate to relative precision.
SpectrumResult eigensolve(const DenseMatrix& k, const DenseMatrix& m, bool invert = false);
/// Same for a non-symmetric M (Petrov mass): eigenvalues of M^{-1} K, real parts.
SpectrumResult eigensolve_general(const DenseMatrix& k, const DenseMatrix& m);

/// Number of even-derivative constraints per end used for outlier removal: floor((p - 1) / 2).
int outlier_constraint_count(int degree);

/// Rows u^(2k)(a) = 0 and u^(2k)(b) = 0, k = 1..count, over the free indices
/// [free_lo, free_hi) of a clamped space; count < 0 selects outlier_constraint_count(p).
/// Empty when the count is zero.
DenseMatrix outlier_constraints(const SplineSpace& space, std::size_t free_lo, std::size_t free_hi,
                                int problem_order = 2, int count = -1);

/// Orthonormal basis T of the null space of C (columns), n x (n - rank C).
DenseMatrix nullspace_basis(const DenseMatrix& c);

/// Second direction lift of 1D constraint rows over a grid with n2 lines:
/// rows C (x) e_i2 on the free grid v[i2 * n1 + i1].
DenseMatrix lift_constraints(const DenseMatrix& c1, std::size_t n2);

/// P = X - X C^T (C X C^T)^{-1} C X, the inverse mass on the subspace C x = 0,
/// given X = M^{-1} as a linear map.
class ConstraintProjection {
public:
    ConstraintProjection(LinearMap inverse_mass, DenseMatrix constraints);

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] std::size_t rank() const noexcept { return c_.rows(); }
    void apply(std::span<const double> r, std::span<double> out) const;
    /// out = x - X C^T (C X C^T)^{-1} C x: the point of C x = 0 closest to x
    /// in the norm of X^{-1}.
    void project_state(std::span<const double> x, std::span<double> out) const;

private:
    void subtract_correction(std::span<const double> cx_source, std::span<double> out) const;

    LinearMap x_;
    DenseMatrix c_;
    std::size_t n_;
    DenseMatrix y_;      // X C^T, n x m
    DenseMatrix w_inv_;  // (C X C^T)^{-1}, m x m
};

}  // namespace iga
