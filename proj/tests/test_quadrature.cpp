#include "doctest.h"

#include <cmath>
#include <numbers>

#include "iga/quadrature.hpp"

using namespace iga;

TEST_CASE("gauss_rule small cases") {
    const auto r1 = gauss_rule(1);
    CHECK(r1.nodes[0] == 0.0);
    CHECK(r1.weights[0] == doctest::Approx(2.0).epsilon(1e-15));

    const auto r2 = gauss_rule(2);
    CHECK(r2.nodes[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(r2.nodes[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(r2.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r2.weights[1] == doctest::Approx(1.0).epsilon(1e-15));

    const auto r3 = gauss_rule(3);
    CHECK(r3.nodes[1] == 0.0);
    CHECK(r3.nodes[2] == doctest::Approx(std::sqrt(0.6)).epsilon(1e-15));
    CHECK(r3.weights[1] == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
    CHECK(r3.weights[0] == doctest::Approx(5.0 / 9.0).epsilon(1e-15));

    CHECK_THROWS(gauss_rule(0));
    CHECK_THROWS(gauss_rule(65));
}

TEST_CASE("gauss_rule exactness") {
    for (int n = 1; n <= 20; ++n) {
        const auto r = gauss_rule(n);
        double wsum = 0.0;
        for (double w : r.weights) {
            CHECK(w > 0.0);
            wsum += w;
        }
        CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
        for (int k = 0; k <= 2 * n; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
            const double exact = k % 2 == 1 ? 0.0 : 2.0 / (k + 1);
            if (k <= 2 * n - 1)
                CHECK(std::abs(s - exact) <= 1e-14);
            else
                CHECK(std::abs(s - exact) > 1e-13);
        }
    }
    // large rules stay accurate
    const auto r = gauss_rule(64);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::cos(r.nodes[i]);
    CHECK(s == doctest::Approx(2.0 * std::sin(1.0)).epsilon(1e-14));
}

TEST_CASE("integrate_1d") {
    const auto s = make_space(std::vector<double>{0.0, 0.2, 0.35, 0.8, 1.0}, 2, {}, BoundaryKind::clamped);
    CHECK(integrate_1d(s, [](double, const BasisEval&) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-15));
    for (int p = 1; p <= 5; ++p) {
        const auto sp = uniform_space(3, p);
        const double v = integrate_1d(sp, [p](double x, const BasisEval&) { return std::pow(x, 2 * p); });
        CHECK(v == doctest::Approx(1.0 / (2 * p + 1)).epsilon(1e-14));
    }
    const auto s3 = uniform_space(8, 3);
    const double v = integrate_1d(s3, [](double x, const BasisEval&) { return std::sin(std::numbers::pi * x); });
    CHECK(std::abs(v - 2.0 / std::numbers::pi) <= 1e-10);
}

TEST_CASE("integrate_1d_vector gives basis integrals") {
    // integral of B_i equals (t_{i+p+1} - t_i) / (p + 1)
    const auto s = make_space(std::vector<double>{0.0, 0.2, 0.35, 0.8, 1.0}, 3, {}, BoundaryKind::clamped);
    const auto v = integrate_1d_vector(s, [](double, int k, const BasisEval& ev) { return ev.value(0, k); });
    const auto& t = s.knot_vector().knots();
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == doctest::Approx((t[i + 4] - t[i]) / 4).epsilon(1e-14));
}

TEST_CASE("integrate_2d separable product") {
    const auto s1 = uniform_space(4, 2), s2 = uniform_space(6, 3, BoundaryKind::periodic);
    auto f1 = [](double x) { return std::exp(x); };
    auto f2 = [](double y) { return 1.0 + y * y; };
    const double i1 = integrate_1d(s1, [&](double x, const BasisEval&) { return f1(x); }, 5);
    const double i2 = integrate_1d(s2, [&](double y, const BasisEval&) { return f2(y); }, 5);
    const double i12 = integrate_2d(s1, s2, [&](double x, double y) { return f1(x) * f2(y); }, 5);
    CHECK(std::abs(i12 - i1 * i2) <= 1e-13);
}

TEST_CASE("BasisTable") {
    const auto s = uniform_space(5, 3, BoundaryKind::periodic);
    const BasisTable t(s, 4, 1);
    CHECK(t.size() == 20);
    double wsum = 0.0;
    for (std::size_t q = 0; q < t.size(); ++q) {
        wsum += t.weight(q);
        double sum = 0.0, dsum = 0.0;
        for (int k = 0; k <= 3; ++k) {
            sum += t.value(q, k);
            dsum += t.value(q, k, 1);
            CHECK(t.index(q, k) < 5);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(dsum) <= 1e-12);
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
}
