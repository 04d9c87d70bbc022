#include "iga/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "iga/errors.hpp"

namespace iga {

double det(const Mat2& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

Mat2 inverse(const Mat2& m) {
    const double d = det(m);
    if (d == 0.0) throw NumericalError("singular 2x2 matrix");
    return {{{m[1][1] / d, -m[0][1] / d}, {-m[1][0] / d, m[0][0] / d}}};
}

GeometryMap identity_map(double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("identity_map: density must be positive");
    GeometryMap g;
    g.name = "identity";
    g.value = [](double x1, double x2) { return Vec2{x1, x2}; };
    g.jacobian = [](double, double) { return Mat2{{{1.0, 0.0}, {0.0, 1.0}}}; };
    g.jacobian_gradient = [](double, double) { return Mat2Gradient{}; };
    g.density = [rho](double, double) { return rho; };
    g.density_gradient = [](double, double) { return Vec2{0.0, 0.0}; };
    g.separable_weight = std::pair{std::function<double(double)>([rho](double) { return rho; }),
                                   std::function<double(double)>([](double) { return 1.0; })};
    return g;
}

GeometryMap annulus_map(double a, double b, double rho) {
    if (!(a > 0.0 && b > a)) throw std::invalid_argument("annulus_map: need 0 < a < b");
    if (!(rho > 0.0)) throw std::invalid_argument("annulus_map: density must be positive");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double w = b - a;
    GeometryMap g;
    g.name = "annulus";
    g.value = [=](double x1, double x2) {
        const double r = a + w * x1, t = two_pi * x2;
        return Vec2{r * std::cos(t), r * std::sin(t)};
    };
    g.jacobian = [=](double x1, double x2) {
        const double r = a + w * x1, t = two_pi * x2;
        const double c = std::cos(t), s = std::sin(t);
        return Mat2{{{w * c, -two_pi * r * s}, {w * s, two_pi * r * c}}};
    };
    g.jacobian_gradient = [=](double x1, double x2) {
        const double r = a + w * x1, t = two_pi * x2;
        const double c = std::cos(t), s = std::sin(t);
        Mat2Gradient d{};
        // d/dx1
        d[0] = Mat2{{{0.0, -two_pi * w * s}, {0.0, two_pi * w * c}}};
        // d/dx2
        d[1] = Mat2{{{-two_pi * w * s, -two_pi * two_pi * r * c}, {two_pi * w * c, -two_pi * two_pi * r * s}}};
        return d;
    };
    g.density = [rho](double, double) { return rho; };
    g.density_gradient = [](double, double) { return Vec2{0.0, 0.0}; };
    g.separable_weight =
        std::pair{std::function<double(double)>([=](double x1) { return two_pi * w * (a + w * x1) * rho; }),
                  std::function<double(double)>([](double) { return 1.0; })};
    return g;
}

WeightField weight_field(const GeometryMap& map, int samples) {
    for (int i = 0; i < samples; ++i)
        for (int j = 0; j < samples; ++j) {
            const double x1 = (i + 0.5) / samples, x2 = (j + 0.5) / samples;
            if (!(det(map.jacobian(x1, x2)) > 0.0))
                throw NumericalError("weight_field: non-positive Jacobian determinant at (" + std::to_string(x1) +
                                     ", " + std::to_string(x2) + ")");
        }
    WeightField c;
    c.value = [map](double x1, double x2) { return det(map.jacobian(x1, x2)) * map.density(x1, x2); };
    c.gradient = [map](double x1, double x2) {
        const Mat2 f = map.jacobian(x1, x2);
        const Mat2 fi = inverse(f);
        const auto df = map.jacobian_gradient(x1, x2);
        const double d = det(f), rho = map.density(x1, x2);
        const Vec2 drho = map.density_gradient(x1, x2);
        Vec2 g{};
        for (int k = 0; k < 2; ++k) {
            double tr = 0.0;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) tr += fi[i][j] * df[k][j][i];
            g[k] = d * tr * rho + d * drho[k];
        }
        return g;
    };
    return c;
}

Mat2 flux_metric(const GeometryMap& map, double x1, double x2) {
    const Mat2 f = map.jacobian(x1, x2);
    const Mat2 fi = inverse(f);
    const double d = det(f);
    Mat2 a{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) a[i][j] = d * (fi[i][0] * fi[j][0] + fi[i][1] * fi[j][1]);
    return a;
}

Mat2Gradient fd_jacobian_gradient(const GeometryMap& map, double x1, double x2, double step) {
    Mat2Gradient g{};
    const Mat2 p1 = map.jacobian(x1 + step, x2), m1 = map.jacobian(x1 - step, x2);
    const Mat2 p2 = map.jacobian(x1, x2 + step), m2 = map.jacobian(x1, x2 - step);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            g[0][i][j] = (p1[i][j] - m1[i][j]) / (2 * step);
            g[1][i][j] = (p2[i][j] - m2[i][j]) / (2 * step);
        }
    return g;
}

Vec2 fd_weight_gradient(const GeometryMap& map, double x1, double x2, double step) {
    auto c = [&](double u, double v) { return det(map.jacobian(u, v)) * map.density(u, v); };
    return {(c(x1 + step, x2) - c(x1 - step, x2)) / (2 * step), (c(x1, x2 + step) - c(x1, x2 - step)) / (2 * step)};
}

}  // namespace iga
