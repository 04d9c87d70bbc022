#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "iga/dual_basis.hpp"
#include "iga/quadrature.hpp"

using namespace iga;

namespace {

std::vector<double> matvec(const DenseMatrix& a, const std::vector<double>& x) { return a.multiply(x); }

double l2_error_1d(const SplineSpace& s, const std::vector<double>& c, const ScalarField1D& f) {
    const double e2 = integrate_1d(
        s, [&](double x, const BasisEval&) { return std::pow(evaluate(s, c, x) - f(x), 2); }, s.degree() + 3);
    return std::sqrt(e2);
}

DenseMatrix ghat_submatrix_inverse(const BandedSymmetricMatrix& s, bool left, bool right) {
    const auto ghat = inverse(s.to_dense());
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < s.dimension(); ++i)
        if (!(left && i == 0) && !(right && i + 1 == s.dimension())) keep.push_back(i);
    return inverse(ghat.submatrix(keep, keep));
}

}  // namespace

TEST_CASE("grammian entries") {
    SUBCASE("piecewise constants") {
        const auto g = grammian(uniform_space(5, 0));
        for (std::size_t i = 0; i < 5; ++i) CHECK(g.at(i, i) == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(g.half_bandwidth() == 0);
    }
    SUBCASE("hat functions") {
        const double h = 0.125;
        const auto g = grammian(uniform_space(8, 1));
        CHECK(g.at(3, 2) == doctest::Approx(h / 6).epsilon(1e-15));
        CHECK(g.at(3, 3) == doctest::Approx(4 * h / 6).epsilon(1e-15));
        CHECK(g.at(3, 4) == doctest::Approx(h / 6).epsilon(1e-15));
    }
    SUBCASE("SPD for all degrees") {
        for (int p = 0; p <= 5; ++p) {
            CHECK_NOTHROW(SpdSolver(grammian(uniform_space(12, p))));
            if (p > 0) CHECK_NOTHROW(SpdSolver(grammian(uniform_space(12, p, BoundaryKind::periodic))));
        }
    }
    SUBCASE("weighted Grammian and weight errors") {
        const auto s = uniform_space(4, 2);
        const auto g2 = grammian(s, [](double) { return 2.0; });
        const auto g1 = grammian(s);
        CHECK(g2.at(1, 2) == doctest::Approx(2 * g1.at(1, 2)).epsilon(1e-14));
        CHECK_THROWS_AS(grammian(s, [](double x) { return x - 0.5; }), NumericalError);
    }
}

TEST_CASE("exact dual coefficients") {
    const auto d0 = exact_dual_coeffs(uniform_space(4, 0));
    for (std::size_t i = 0; i < 4; ++i) CHECK(d0(i, i) == doctest::Approx(4.0).epsilon(1e-14));

    const auto s = uniform_space(8, 2);  // N = 10
    const auto ginv = exact_dual_coeffs(s);
    const auto g = grammian(s).to_dense();
    CHECK((g * ginv - DenseMatrix::identity(10)).max_abs() <= 1e-10);

    // <lambda_i, B_j> by quadrature
    for (std::size_t i = 0; i < 10; ++i) {
        std::vector<double> c(10);
        for (std::size_t j = 0; j < 10; ++j) c[j] = ginv(i, j);
        const auto m = moments(s, [&](double x) { return evaluate(s, c, x); });
        for (std::size_t j = 0; j < 10; ++j) CHECK(std::abs(m[j] - (i == j ? 1.0 : 0.0)) <= 1e-10);
    }
    CHECK_THROWS(exact_dual_coeffs(uniform_space(600, 1)));
}

TEST_CASE("approximate dual: reproduction constraints") {
    for (int p = 2; p <= 5; ++p) {
        const auto s = uniform_space(40 - static_cast<std::size_t>(p), p);
        const auto basis = approximate_dual(s);
        CHECK(basis.half_bandwidth() == static_cast<std::size_t>(p));
        const auto c = basis.coupling();
        for (std::size_t i = 0; i < c.rows(); ++i) {
            double sum = 0.0;
            for (double v : c.row(i)) sum += v;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
        for (int q = 0; q <= p; ++q) {
            const auto cq = monomial_coefficients(s, q);
            const auto r = matvec(c, cq);
            double worst = 0.0;
            for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(r[i] - cq[i]));
            CHECK(worst <= 1e-10);
        }
    }
}

TEST_CASE("approximate dual on a graded mesh") {
    const std::vector<double> br{0.0, 0.05, 0.15, 0.3, 0.42, 0.6, 0.72, 0.85, 0.93, 1.0};
    for (int p = 2; p <= 4; ++p) {
        const auto s = make_space(br, p, {}, BoundaryKind::clamped);
        const auto basis = approximate_dual(s);
        const auto c = basis.coupling();
        for (int q = 0; q <= p; ++q) {
            const auto cq = monomial_coefficients(s, q);
            const auto r = matvec(c, cq);
            for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(r[i] - cq[i]) <= 1e-10);
        }
    }
}

TEST_CASE("approximate dual: single element gives the exact inverse") {
    for (int p = 1; p <= 5; ++p) {
        const auto s = uniform_space(1, p);
        const auto basis = approximate_dual(s);
        const auto ginv = exact_dual_coeffs(s);
        CHECK((basis.S().to_dense() - ginv).max_abs() <= 1e-9 * ginv.max_abs());
        const auto c = basis.coupling();
        CHECK((c - DenseMatrix::identity(c.rows())).max_abs() <= 1e-11);
    }
}

TEST_CASE("approximate dual: periodic spaces") {
    for (int p = 2; p <= 5; ++p) {
        const auto s = uniform_space(16, p, BoundaryKind::periodic);
        const auto basis = approximate_dual(s);
        CHECK(basis.S().periodic());
        CHECK_NOTHROW(SpdSolver(basis.S()));
        // reproduces constants and, by translation invariance, is circulant
        const auto c = basis.coupling();
        for (std::size_t i = 0; i < c.rows(); ++i) {
            double sum = 0.0;
            for (double v : c.row(i)) sum += v;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
            CHECK(basis.S().at(i, (i + 1) % 16) == doctest::Approx(basis.S().at(0, 1)).epsilon(1e-6));
        }
        // locally, every polynomial of degree p is reproduced by the quasi-projection
        const auto u = quasi_project(basis, [](double x) { return std::cos(2 * std::numbers::pi * x); });
        const double err = l2_error_1d(s, u, [](double x) { return std::cos(2 * std::numbers::pi * x); });
        CHECK(err <= 1e-2);
    }
}

TEST_CASE("customized mass viewpoint: S f solves Ghat u = f") {
    const auto s = uniform_space(15, 3);
    const auto basis = approximate_dual(s);
    const auto ghat = inverse(basis.S().to_dense());
    const auto l = cholesky(ghat);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> f(basis.dimension());
    for (double& v : f) v = u(rng);
    const auto x1 = cholesky_solve(l, f);
    const auto x2 = basis.S().multiply(f);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(x1[i] - x2[i]) <= 1e-10);
}

TEST_CASE("constrained dual equals the dense submatrix inverse") {
    for (int p = 2; p <= 5; ++p) {
        const auto s = uniform_space(20, p);
        const auto basis = approximate_dual(s);
        const auto none = constrain_dual(basis, false, false);
        CHECK((none.to_dense() - basis.S().to_dense()).max_abs() == 0.0);
        for (auto [left, right] : {std::pair{true, false}, std::pair{false, true}, std::pair{true, true}}) {
            const auto cd = constrain_dual(basis, left, right);
            CHECK(cd.dimension() == basis.dimension() - (left ? 1 : 0) - (right ? 1 : 0));
            const auto oracle = ghat_submatrix_inverse(basis.S(), left, right);
            CHECK((cd.to_dense() - oracle).max_abs() <= 1e-10 * oracle.max_abs());
        }
    }
    CHECK_THROWS(constrain_dual(approximate_dual(uniform_space(8, 2, BoundaryKind::periodic)), true, false));
}

TEST_CASE("quasi-projection") {
    SUBCASE("monomials are reproduced") {
        for (int p = 2; p <= 5; ++p) {
            const auto s = uniform_space(12, p);
            const auto basis = approximate_dual(s);
            for (int q = 0; q <= p; ++q) {
                const auto u = quasi_project(basis, [q](double x) { return std::pow(x, q); });
                const auto cq = monomial_coefficients(s, q);
                for (std::size_t i = 0; i < u.size(); ++i) CHECK(std::abs(u[i] - cq[i]) <= 1e-10);
            }
            const auto zero = quasi_project(basis, [](double) { return 0.0; });
            for (double v : zero) CHECK(v == 0.0);
        }
    }
    SUBCASE("boundary-vanishing polynomials under constraints") {
        for (int p = 2; p <= 5; ++p) {
            const auto s = uniform_space(12, p);
            const auto basis = approximate_dual(s);
            auto both = [p](double x) { return x * (1 - x) * std::pow(x, p - 2); };
            auto left = [p](double x) { return x * std::pow(1 + x, p - 1); };
            auto right = [p](double x) { return (1 - x) * std::pow(x + 0.5, p - 1); };
            const std::pair<ScalarField1D, std::pair<bool, bool>> cases[] = {
                {both, {true, true}}, {left, {true, false}}, {right, {false, true}}};
            for (const auto& [f, sides] : cases) {
                const auto cd = constrain_dual(basis, sides.first, sides.second);
                const auto u = quasi_project(cd, f);
                double worst = 0.0;
                for (int i = 0; i <= 200; ++i) {
                    const double x = i / 200.0;
                    worst = std::max(worst, std::abs(evaluate(s, u, x) - f(x)));
                }
                CHECK(worst <= 1e-10);
            }
        }
    }
    SUBCASE("convergence for a smooth function") {
        auto f = [](double x) { return std::sin(std::numbers::pi * x); };
        std::vector<double> err;
        for (std::size_t n : {10u, 20u, 40u}) {
            const auto s = uniform_space(n, 3);
            err.push_back(l2_error_1d(s, quasi_project(approximate_dual(s), f), f));
        }
        CHECK(std::log2(err[0] / err[1]) >= 3.8);
        CHECK(std::log2(err[1] / err[2]) >= 3.8);
    }
}

TEST_CASE("duality is exact when the band covers the space") {
    for (int p = 1; p <= 4; ++p) {
        const auto s = uniform_space(1, p);
        const auto basis = approximate_dual(s);
        const auto c = basis.coupling();
        for (std::size_t i = 0; i < c.rows(); ++i)
            for (std::size_t j = 0; j < c.cols(); ++j) CHECK(std::abs(c(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-12);
    }
}

TEST_CASE("debug dump writes square matrices with a size header") {
    const auto basis = approximate_dual(uniform_space(6, 2));
    const auto dir = std::filesystem::temp_directory_path() / "iga_dual_dump_test";
    dump_dual(basis, dir);
    for (const char* name : {"G.txt", "S.txt", "C.txt"}) {
        std::ifstream is(dir / name);
        std::string header;
        std::getline(is, header);
        CHECK(header == "8 8");
        is.seekg(0);
        CHECK(read_matrix(is).rows() == 8);
    }
    std::filesystem::remove_all(dir);
}
