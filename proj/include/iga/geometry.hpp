#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>

namespace iga {

using Vec2 = std::array<double, 2>;
/// Row-major 2x2 matrix: m[i][j] = d Phi_i / d xhat_j for a Jacobian.
using Mat2 = std::array<std::array<double, 2>, 2>;
/// Parametric derivatives of the Jacobian: g[k] = dF / d xhat_k.
using Mat2Gradient = std::array<Mat2, 2>;

using Field2D = std::function<double(double, double)>;

double det(const Mat2& m);
Mat2 inverse(const Mat2& m);

/// Mapping from the parametric unit square to a physical domain, with the
/// density of the medium.
struct GeometryMap {
    std::string name;
    std::function<Vec2(double, double)> value;
    std::function<Mat2(double, double)> jacobian;
    std::function<Mat2Gradient(double, double)> jacobian_gradient;
    Field2D density;
    std::function<Vec2(double, double)> density_gradient;
    /// When c = det(F) rho factors as c1(x1) c2(x2), the factors.
    std::optional<std::pair<std::function<double(double)>, std::function<double(double)>>> separable_weight;
};

GeometryMap identity_map(double rho = 1.0);
/// Polar map Phi(x1, x2) = (r cos theta, r sin theta), r = a + (b - a) x1,
/// theta = 2 pi x2, for 0 < a < b.
GeometryMap annulus_map(double a, double b, double rho = 1.0);

/// Scalar weight c = det(F) rho and its parametric gradient.
struct WeightField {
    Field2D value;
    std::function<Vec2(double, double)> gradient;
};

/// Builds c and grad c (the latter from the Jacobian gradient via Jacobi's
/// formula). Checks det(F) > 0 on a `samples` x `samples` grid.
WeightField weight_field(const GeometryMap& map, int samples = 64);

/// Flux matrix det(F) F^{-1} F^{-T} at a parametric point.
Mat2 flux_metric(const GeometryMap& map, double x1, double x2);

/// Central-difference approximations, for testing the analytic derivatives.
Mat2Gradient fd_jacobian_gradient(const GeometryMap& map, double x1, double x2, double step = 1e-6);
Vec2 fd_weight_gradient(const GeometryMap& map, double x1, double x2, double step = 1e-6);

}  // namespace iga
