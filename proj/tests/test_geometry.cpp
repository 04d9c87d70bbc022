#include "doctest.h"

#include <cmath>
#include <numbers>

#include "iga/errors.hpp"
#include "iga/geometry.hpp"

using namespace iga;

TEST_CASE("identity map") {
    const auto g = identity_map(2.5);
    const auto c = weight_field(g);
    CHECK(c.value(0.3, 0.7) == 2.5);
    CHECK(c.gradient(0.3, 0.7)[0] == 0.0);
    const auto a = flux_metric(g, 0.1, 0.9);
    CHECK(a[0][0] == 1.0);
    CHECK(a[0][1] == 0.0);
    CHECK(a[1][1] == 1.0);
    CHECK_THROWS_AS(identity_map(0.0), std::invalid_argument);
}

TEST_CASE("annulus map") {
    const double a = 1.5, b = 4.0;
    const auto g = annulus_map(a, b);
    const auto c = weight_field(g);
    const double two_pi = 2 * std::numbers::pi;
    for (double x1 : {0.0, 0.3, 1.0})
        for (double x2 : {0.0, 0.2, 0.77}) {
            const double r = a + (b - a) * x1;
            const auto p = g.value(x1, x2);
            CHECK(std::hypot(p[0], p[1]) == doctest::Approx(r).epsilon(1e-14));
            CHECK(c.value(x1, x2) == doctest::Approx(two_pi * (b - a) * r).epsilon(1e-13));
            const auto gc = c.gradient(x1, x2);
            CHECK(gc[0] == doctest::Approx(two_pi * (b - a) * (b - a)).epsilon(1e-12));
            CHECK(std::abs(gc[1]) <= 1e-10);
            const auto m = flux_metric(g, x1, x2);
            CHECK(m[0][0] == doctest::Approx(two_pi * r / (b - a)).epsilon(1e-12));
            CHECK(m[1][1] == doctest::Approx((b - a) / (two_pi * r)).epsilon(1e-12));
            CHECK(std::abs(m[0][1]) <= 1e-12);
            const auto sep = g.separable_weight.value();
            CHECK(sep.first(x1) * sep.second(x2) == doctest::Approx(c.value(x1, x2)).epsilon(1e-13));
        }
    CHECK_THROWS_AS(annulus_map(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(annulus_map(2.0, 1.0), std::invalid_argument);
}

TEST_CASE("analytic derivatives agree with finite differences") {
    const auto g = annulus_map(0.7, 2.1, 1.3);
    const auto c = weight_field(g);
    for (double x1 : {0.1, 0.5, 0.9})
        for (double x2 : {0.05, 0.4, 0.8}) {
            const auto dj = g.jacobian_gradient(x1, x2);
            const auto fd = fd_jacobian_gradient(g, x1, x2);
            for (int k = 0; k < 2; ++k)
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) CHECK(std::abs(dj[k][i][j] - fd[k][i][j]) <= 1e-6);
            const auto gc = c.gradient(x1, x2);
            const auto fc = fd_weight_gradient(g, x1, x2);
            CHECK(std::abs(gc[0] - fc[0]) <= 1e-6);
            CHECK(std::abs(gc[1] - fc[1]) <= 1e-6);
        }
}

TEST_CASE("degenerate maps are rejected") {
    GeometryMap g = identity_map();
    g.jacobian = [](double x1, double) { return Mat2{{{x1 - 0.5, 0.0}, {0.0, 1.0}}}; };
    CHECK_THROWS_AS(weight_field(g), NumericalError);
}

TEST_CASE("annulus: corner point, determinant and area") {
    const double a = 2.0, b = 3.5;
    const auto g = annulus_map(a, b);
    const auto p = g.value(0.0, 0.0);
    CHECK(p[0] == a);
    CHECK(p[1] == 0.0);
    CHECK(det(g.jacobian(1.0, 0.3)) == doctest::Approx(2 * std::numbers::pi * (b - a) * b).epsilon(1e-14));
    // pullback of phi = 1 by midpoint sums of det(F) (linear in x1, constant in x2)
    const int n = 64;
    double area = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) area += det(g.jacobian((i + 0.5) / n, (j + 0.5) / n)) / (n * n);
    CHECK(std::abs(area - std::numbers::pi * (b * b - a * a)) <= 1e-8);
    const auto c = weight_field(g);
    double var = 0.0;
    for (int j = 0; j <= 20; ++j) var = std::max(var, std::abs(c.value(0.4, j / 20.0) - c.value(0.4, 0.0)));
    CHECK(var <= 1e-12);
}
