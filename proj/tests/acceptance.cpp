// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "iga/assembly.hpp"
#include "iga/benchmarks.hpp"
#include "iga/cli.hpp"
#include "iga/dual_basis.hpp"
#include "iga/dynamics.hpp"

using namespace iga;

namespace {

// Tolerances and budgets.
constexpr double duality_tol = 1e-10;
constexpr double rowsum_tol = 1e-12;
constexpr double exactness_tol = 1e-10;
constexpr double woodbury_tol = 1e-10;
constexpr double geometry_tol = 1e-10;
constexpr double spectrum_median_min = 1e3;
constexpr double annulus_factor_max = 2.0;
constexpr double lumped_slope_max = 2.5;
constexpr double compound_min = 1.5;
constexpr double bessel_tol = 1e-3;
constexpr double rk_slope_tol = 0.1;
constexpr double dispersion_tol = 1e-8;

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& failure) {
        if (ok) return;
        if (!pass) detail << "; ";
        else detail.str("");
        pass = false;
        detail << failure;
    }
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Full-grid matrix of a linear map given by its action.
template <class F>
DenseMatrix columns(std::size_t n, F&& apply) {
    DenseMatrix m(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        const auto y = apply(e);
        for (std::size_t i = 0; i < n; ++i) m(i, j) = y[i];
        e[j] = 0.0;
    }
    return m;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------

void polynomial_duality(Verdict& v) {
    double worst = 0.0, worst_rowsum = 0.0;
    for (int p = 2; p <= 5; ++p) {
        for (std::size_t n : {12u, 25u, 40u}) {
            const auto space = uniform_space(n - static_cast<std::size_t>(p), p);
            const auto coupling = approximate_dual(space).coupling();
            for (std::size_t i = 0; i < coupling.rows(); ++i) {
                double sum = 0.0;
                for (double x : coupling.row(i)) sum += x;
                worst_rowsum = std::max(worst_rowsum, std::abs(sum - 1.0));
            }
            for (int q = 0; q <= p; ++q) {
                const auto cq = monomial_coefficients(space, q);
                const double e = max_abs_diff(coupling.multiply(cq), cq);
                worst = std::max(worst, e);
                v.require(e <= duality_tol, "p=" + std::to_string(p) + " N=" + std::to_string(n) +
                                                " q=" + std::to_string(q) + " residual " + fmt(e));
            }
        }
    }
    v.require(worst_rowsum <= rowsum_tol, "row sum deviation " + fmt(worst_rowsum));
    if (v.pass) v.detail << "max residual " << fmt(worst) << ", max row-sum deviation " << fmt(worst_rowsum);
}

void quasi_projection_exactness(Verdict& v) {
    double worst = 0.0, worst_woodbury = 0.0;
    for (int p = 2; p <= 5; ++p) {
        for (std::size_t n : {12u, 25u, 40u}) {
            const auto space = uniform_space(n - static_cast<std::size_t>(p), p);
            const auto basis = approximate_dual(space);
            const std::string tag = "p=" + std::to_string(p) + " N=" + std::to_string(n);
            for (int q = 0; q <= p; ++q) {
                const double e = max_abs_diff(quasi_project(basis, [q](double x) { return std::pow(x, q); }),
                                              monomial_coefficients(space, q));
                worst = std::max(worst, e);
                v.require(e <= exactness_tol, tag + " x^" + std::to_string(q) + " error " + fmt(e));
            }
            struct Case {
                bool left, right;
                ScalarField1D f;
            };
            const Case cases[] = {
                {true, false, [p](double x) { return std::pow(x, p); }},
                {false, true, [p](double x) { return std::pow(1.0 - x, p); }},
                {true, true, [p](double x) { return std::pow(x, p - 1) * (1.0 - x); }},
            };
            const auto ghat = inverse(basis.S().to_dense());
            for (const auto& c : cases) {
                const auto dual = constrain_dual(basis, c.left, c.right);
                const auto u = quasi_project(dual, c.f);
                double e = 0.0;
                for (int i = 0; i <= 400; ++i) {
                    const double x = i / 400.0;
                    e = std::max(e, std::abs(evaluate(space, u, x) - c.f(x)));
                }
                worst = std::max(worst, e);
                const std::string sides = c.left && c.right ? "both" : c.left ? "left" : "right";
                v.require(e <= exactness_tol, tag + " constrained " + sides + " error " + fmt(e));

                std::vector<std::size_t> keep;
                for (std::size_t i = 0; i < basis.dimension(); ++i)
                    if (!(c.left && i == 0) && !(c.right && i + 1 == basis.dimension())) keep.push_back(i);
                const auto oracle = inverse(ghat.submatrix(keep, keep));
                const double w = (dual.to_dense() - oracle).max_abs() / oracle.max_abs();
                worst_woodbury = std::max(worst_woodbury, w);
                v.require(w <= woodbury_tol, tag + " Woodbury " + sides + " deviation " + fmt(w));
            }
        }
    }
    if (v.pass)
        v.detail << "max reproduction error " << fmt(worst) << ", max Woodbury deviation " << fmt(worst_woodbury);
}

void geometry_independence(Verdict& v) {
    const int p = 3;
    const auto make = [&](GeometryMap m) {
        return DiscreteSystem(uniform_space(8, p), uniform_space(16, p, BoundaryKind::periodic), std::move(m),
                              MassKind::petrov_consistent);
    };
    const auto flat = make(identity_map());
    const auto ring = make(annulus_map(11.0, 17.5));
    const std::size_t n = flat.full_size();
    const auto m_flat = columns(n, [&](const std::vector<double>& e) { return mass_form_apply(flat, e); });
    const auto m_ring = columns(n, [&](const std::vector<double>& e) { return mass_form_apply(ring, e); });
    const double d = (m_flat - m_ring).max_abs() / m_flat.max_abs();
    v.require(d <= geometry_tol, "relative entrywise deviation " + fmt(d));
    if (v.pass) v.detail << "relative entrywise deviation " << fmt(d) << " over " << n << "x" << n << " entries";
}

void spectrum_study(Verdict& v) {
    std::ostringstream summary;
    for (int p = 2; p <= 5; ++p) {
        auto config = default_run_config(Experiment::spectrum);
        config.degree = p;
        config.dofs = 250;
        const auto start = std::chrono::steady_clock::now();
        const auto t = run_spectrum(config);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        v.require(seconds <= 60.0, "p=" + std::to_string(p) + " took " + fmt(seconds) + " s");
        const auto cust = t.numbers("err_customized"), lumped = t.numbers("err_lumped");
        const std::size_t half = t.rows.size() / 2, tenth = t.rows.size() / 10;
        std::size_t violations = 0;
        for (std::size_t j = 0; j < half; ++j)
            if (!(cust[j] <= lumped[j])) ++violations;
        v.require(violations == 0, "p=" + std::to_string(p) + ": " + std::to_string(violations) +
                                       " modes in the lowest half with customized error above lumped");
        std::vector<double> ratios;
        for (std::size_t j = 0; j < tenth; ++j)
            ratios.push_back(cust[j] > 0.0 ? lumped[j] / cust[j] : HUGE_VAL);
        const double med = median(ratios);
        if (p >= 3) v.require(med >= spectrum_median_min, "p=" + std::to_string(p) + " median factor " + fmt(med));
        summary << (p > 2 ? ", " : "") << "p=" << p << " median factor " << fmt(med);
    }
    if (v.pass) v.detail << summary.str();
}

void annulus_convergence(Verdict& v) {
    std::ostringstream summary;
    for (int p = 3; p <= 5; ++p) {
        auto config = default_run_config(Experiment::annulus);
        config.degree = p;
        config.rk_scheme = tableau_for_degree(p).name;
        config.lumped_scheme = config.rk_scheme;
        const auto start = std::chrono::steady_clock::now();
        const auto result = run_annulus(config);
        const double sweep = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const auto& t = result.summary;
        const auto kind = t.column("mass_kind"), status = t.column("status");
        const auto radial = t.numbers("n_elem_radial"), err = t.numbers("l2_rel_error");
        const auto slope = t.numbers("slope"), wall = t.numbers("wall_seconds");
        std::map<std::string, std::map<double, double>> error_of;
        std::map<std::string, double> finest_slope;
        double finest_wall = 0.0;
        const std::string tag = "p=" + std::to_string(p);
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const auto& k = t.rows[r][kind];
            v.require(t.rows[r][status] == "ok", tag + " " + k + " " + t.rows[r][status]);
            error_of[k][radial[r]] = err[r];
            if (radial[r] == 32.0) {
                finest_slope[k] = slope[r];
                finest_wall = std::max(finest_wall, wall[r]);
            }
        }
        for (const auto& [n, e] : error_of["galerkin_consistent"]) {
            const double factor = error_of["customized"][n] / e;
            v.require(factor <= annulus_factor_max, "(a) " + tag + " mesh " + fmt(n) + " customized/Galerkin " +
                                                        fmt(factor));
        }
        for (const char* k : {"galerkin_consistent", "customized"})
            v.require(finest_slope[k] >= p, "(b) " + tag + " " + k + " slope " + fmt(finest_slope[k]));
        v.require(finest_slope["rowsum_lumped"] <= lumped_slope_max,
                  "(c) " + tag + " rowsum_lumped slope " + fmt(finest_slope["rowsum_lumped"]) + " > " +
                      fmt(lumped_slope_max));
        if (p == 3) v.require(sweep <= 600.0, "p=3 sweep took " + fmt(sweep) + " s");
        if (p == 5) v.require(finest_wall <= 2700.0, "p=5 finest mesh took " + fmt(finest_wall) + " s");
        summary << (p > 3 ? "; " : "") << tag << " slopes G " << fmt(finest_slope["galerkin_consistent"]) << " C "
                << fmt(finest_slope["customized"]) << " L " << fmt(finest_slope["rowsum_lumped"]);
    }
    if (v.pass) v.detail << summary.str();
    else v.detail << " [" << summary.str() << "]";
}

void critical_timestep(Verdict& v) {
    std::ostringstream summary;
    for (int p = 2; p <= 5; ++p) {
        auto config = default_run_config(Experiment::stability);
        config.degree = p;
        config.dofs = 250;
        const auto t = run_stability(config);
        const auto kind = t.column("mass_kind"), outliers = t.column("outlier_removed");
        const auto ratio = t.numbers("ratio_vs_consistent"), dt = t.numbers("dt_crit");
        std::map<std::pair<std::string, std::string>, std::size_t> row;
        for (std::size_t r = 0; r < t.rows.size(); ++r) row[{t.rows[r][kind], t.rows[r][outliers]}] = r;
        const std::string tag = "p=" + std::to_string(p);
        const double base = ratio[row[{"customized", "false"}]];
        v.require(base > 1.0, tag + " customized/consistent " + fmt(base));
        if (p < 3) {
            summary << tag << " customized/consistent " << fmt(base);
            continue;
        }
        for (const char* k : {"galerkin_consistent", "customized", "rowsum_lumped"}) {
            const double before = dt[row[{k, "false"}]], after = dt[row[{k, "true"}]];
            v.require(after > before, tag + " " + k + " outlier removal does not increase dt");
        }
        const double compound = ratio[row[{"customized", "true"}]];
        v.require(compound >= compound_min, tag + " compound increase " + fmt(compound));
        summary << ", " << tag << " " << fmt(base) << " -> " << fmt(compound);
    }
    if (v.pass) v.detail << summary.str();
}

double oscillator_error(const std::string& scheme, double dt) {
    DynamicState s{{1.0}, {0.0}, 0.0};
    const auto rhs = [](std::span<const double> d, std::span<double> a) { a[0] = -d[0]; };
    s = integrate(tableau_by_name(scheme), rhs, s, dt, static_cast<std::size_t>(std::lround(1.0 / dt)));
    return std::hypot(s.d[0] - std::cos(1.0), s.v[0] + std::sin(1.0));
}

void oracles(Verdict& v) {
    const double z2 = bessel_zero(4, 2), z4 = bessel_zero(4, 4);
    v.require(std::abs(z2 - 11.065) <= bessel_tol, "j(4,2) = " + fmt(z2));
    v.require(std::abs(z4 - 17.616) <= bessel_tol, "j(4,4) = " + fmt(z4));

    std::ostringstream slopes;
    const struct {
        const char* name;
        double dt, order;
    } cases[] = {{"rk2", 0.02, 2.0}, {"rk4", 0.1, 4.0}, {"rk6", 0.25, 6.0}};
    for (const auto& c : cases) {
        const double e1 = oscillator_error(c.name, c.dt), e2 = oscillator_error(c.name, c.dt / 2),
                     e3 = oscillator_error(c.name, c.dt / 4);
        for (double s : {std::log2(e1 / e2), std::log2(e2 / e3)}) {
            v.require(std::abs(s - c.order) <= rk_slope_tol, std::string(c.name) + " slope " + fmt(s));
            slopes << " " << fmt(s);
        }
    }

    const std::size_t ne = 40;
    const double h = 1.0 / ne;
    const auto string = make_string_system(ne, 1, MassKind::galerkin_consistent);
    SemiDiscreteOperator op(string);
    const auto r = eigensolve(op.dense_stiffness(), op.dense_mass());
    double worst = 0.0;
    for (std::size_t j = 0; j < r.count(); ++j) {
        const double c = std::cos((j + 1.0) * std::numbers::pi * h);
        const double exact = std::sqrt(6.0 / (h * h) * (1.0 - c) / (2.0 + c));
        worst = std::max(worst, std::abs(r.frequencies[j] / exact - 1.0));
    }
    v.require(r.count() == ne - 1, "dispersion mode count " + std::to_string(r.count()));
    v.require(worst <= dispersion_tol, "dispersion relative error " + fmt(worst));
    if (v.pass)
        v.detail << "zeros " << fmt(z2) << ", " << fmt(z4) << "; RK slopes" << slopes.str()
                 << "; dispersion error " << fmt(worst);
}

struct Criterion {
    int id;
    const char* title;
    double budget_seconds;
    std::function<void(Verdict&)> run;
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {1, "polynomial duality", 5.0, polynomial_duality},
        {2, "quasi-projection exactness", 5.0, quasi_projection_exactness},
        {3, "geometry independence of the Petrov mass", 10.0, geometry_independence},
        {4, "spectrum study", 240.0, spectrum_study},
        {5, "annulus convergence", 3300.0, annulus_convergence},
        {6, "critical timestep", 60.0, critical_timestep},
        {7, "oracles", 10.0, oracles},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Verdict v;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(v);
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        v.require(seconds <= c.budget_seconds, "runtime " + fmt(seconds) + " s over budget " +
                                                   fmt(c.budget_seconds) + " s");
        if (!v.pass) ++failed;
        std::printf("%s criterion %d (%s): %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.title,
                    v.detail.str().c_str(), seconds);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
    return failed == 0 ? 0 : 1;
}
