#include "iga/dynamics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "iga/errors.hpp"

namespace iga {

namespace {

void check_finite(const DynamicState& s, std::string_view who, std::size_t step_index) {
    for (std::size_t k = 0; k < s.d.size(); ++k)
        if (!std::isfinite(s.d[k]) || !std::isfinite(s.v[k])) {
            std::ostringstream os;
            os << who << ": non-finite state at step " << step_index << " (t = " << s.t << ")";
            throw NumericalError(os.str());
        }
}

ButcherTableau make_tableau(std::string name, std::vector<std::vector<double>> a, std::vector<double> b, int order) {
    ButcherTableau t;
    t.name = std::move(name);
    t.c.resize(b.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i].resize(b.size(), 0.0);
        for (double v : a[i]) t.c[i] += v;
    }
    t.a = std::move(a);
    t.b = std::move(b);
    t.order = order;
    return t;
}

// Solves L X = B for lower triangular L, column by column; B is n x m.
DenseMatrix lower_solve(const DenseMatrix& l, const DenseMatrix& b) {
    const std::size_t n = l.rows(), m = b.cols();
    DenseMatrix x = b;
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = x.row(i);
        for (std::size_t k = 0; k < i; ++k) {
            const double lik = l(i, k);
            if (lik == 0.0) continue;
            auto xk = x.row(k);
            for (std::size_t j = 0; j < m; ++j) xi[j] -= lik * xk[j];
        }
        const double inv = 1.0 / l(i, i);
        for (std::size_t j = 0; j < m; ++j) xi[j] *= inv;
    }
    return x;
}

// L^{-1} A L^{-T} for symmetric A, symmetrized.
DenseMatrix congruence(const DenseMatrix& l, const DenseMatrix& a) {
    DenseMatrix x = lower_solve(l, a);           // L^{-1} A
    DenseMatrix y = lower_solve(l, x.transpose());  // L^{-1} A L^{-T}
    const std::size_t n = y.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = 0.5 * (y(i, j) + y(j, i));
            y(i, j) = s;
            y(j, i) = s;
        }
    return y;
}

double checked_sqrt(double lambda, double scale) {
    if (lambda >= 0.0) return std::sqrt(lambda);
    if (lambda >= -1e-12 * scale) return 0.0;
    std::ostringstream os;
    os << "eigensolve: negative eigenvalue " << lambda;
    throw NumericalError(os.str());
}

void check_square(const DenseMatrix& k, const DenseMatrix& m) {
    if (k.rows() != k.cols() || m.rows() != m.cols() || k.rows() != m.rows())
        throw std::invalid_argument("eigensolve: K and M must be square and of equal size");
    if (k.rows() > 2000) throw std::invalid_argument("eigensolve: dense path limited to N <= 2000");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

ButcherTableau forward_euler() { return make_tableau("euler", {{}}, {1.0}, 1); }

ButcherTableau heun_rk2() { return make_tableau("rk2", {{}, {1.0}}, {0.5, 0.5}, 2); }

ButcherTableau classical_rk4() {
    return make_tableau("rk4", {{}, {0.5}, {0.0, 0.5}, {0.0, 0.0, 1.0}}, {1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6}, 4);
}

ButcherTableau extrapolated_rk6() {
    constexpr std::array<int, 4> counts{2, 4, 6, 8};
    constexpr std::size_t stages = 1 + (2 - 1) + (4 - 1) + (6 - 1) + (8 - 1);

    // Extrapolation weights.
    Eigen::Matrix4d v;
    Eigen::Vector4d rhs(1.0, 0.0, 0.0, -1e-4);
    for (int j = 0; j < 4; ++j) {
        const double inv2 = 1.0 / (counts[j] * counts[j]);
        v(0, j) = 1.0;
        v(1, j) = inv2;
        v(2, j) = inv2 * inv2;
        v(3, j) = inv2 * inv2 * inv2;
    }
    const Eigen::Vector4d w = v.fullPivLu().solve(rhs);

    // Each intermediate value y0 + sum_j coeff_j k_j is a coefficient vector
    // over the stages; stage 0 is f(y0).
    std::vector<std::vector<double>> a(stages, std::vector<double>(stages, 0.0));
    std::vector<double> b(stages, 0.0);
    std::size_t next = 1;
    for (int j = 0; j < 4; ++j) {
        const int n = counts[j];
        const double h = 1.0 / n;
        std::vector<double> prev(stages, 0.0), cur(stages, 0.0);
        cur[0] = h;
        for (int i = 1; i < n; ++i) {
            const std::size_t s = next++;
            a[s] = cur;  // stage s evaluates f(u_i)
            std::vector<double> nxt = prev;
            nxt[s] += 2.0 * h;
            prev = std::move(cur);
            cur = std::move(nxt);
        }
        for (std::size_t s = 0; s < stages; ++s) b[s] += w[j] * cur[s];
    }
    for (std::size_t s = 0; s < stages; ++s) a[s].resize(s);
    return make_tableau("rk6", std::move(a), std::move(b), 6);
}

ButcherTableau tableau_by_name(std::string_view name) {
    if (name == "euler") return forward_euler();
    if (name == "rk2") return heun_rk2();
    if (name == "rk4") return classical_rk4();
    if (name == "rk6") return extrapolated_rk6();
    throw std::invalid_argument("unknown Runge-Kutta scheme '" + std::string(name) + "'");
}

ButcherTableau tableau_for_degree(int degree) { return degree <= 4 ? classical_rk4() : extrapolated_rk6(); }

double default_cmax(std::string_view name) {
    if (name == "rk2" || name == "central_difference") return 2.0;
    if (name == "rk4") return 2.785;
    if (name == "rk6") return 3.387;
    if (name == "euler") return 0.0;
    throw std::invalid_argument("unknown Runge-Kutta scheme '" + std::string(name) + "'");
}

double stability_modulus(const ButcherTableau& tableau, double y) {
    using C = std::complex<double>;
    const C z(0.0, y);
    const std::size_t s = tableau.stages();
    std::vector<C> g(s);
    C r = 1.0;
    for (std::size_t i = 0; i < s; ++i) {
        C acc = 1.0;
        for (std::size_t j = 0; j < i; ++j) acc += z * tableau.a[i][j] * g[j];
        g[i] = acc;
        r += z * tableau.b[i] * g[i];
    }
    return std::abs(r);
}

double stability_limit(const ButcherTableau& tableau) {
    constexpr double bound = 1.0 + 1e-12;
    constexpr double step = 1e-3;
    constexpr double y_max = 50.0;
    double good = 0.0;
    double bad = -1.0;
    for (double y = step; y <= y_max; y += step) {
        if (stability_modulus(tableau, y) > bound) {
            bad = y;
            break;
        }
        good = y;
    }
    if (bad < 0.0) return good;
    if (good == 0.0) return 0.0;
    while (bad - good > 1e-12) {
        const double mid = 0.5 * (good + bad);
        (stability_modulus(tableau, mid) > bound ? bad : good) = mid;
    }
    return good;
}

double critical_dt(double cmax, double omega_max) {
    if (!(omega_max > 0.0)) throw std::invalid_argument("critical_dt: omega_max must be positive");
    return cmax / omega_max;
}

DynamicState rk_step(const ButcherTableau& tableau, const Acceleration& rhs, const DynamicState& state, double dt,
                     std::size_t step_index) {
    if (!(dt > 0.0)) throw std::invalid_argument("rk_step: dt must be positive");
    const std::size_t n = state.d.size();
    if (state.v.size() != n) throw std::invalid_argument("rk_step: d and v differ in size");
    const std::size_t s = tableau.stages();
    std::vector<std::vector<double>> kd(s, std::vector<double>(n)), kv(s, std::vector<double>(n));
    std::vector<double> ds(n);
    for (std::size_t i = 0; i < s; ++i) {
        ds = state.d;
        kd[i] = state.v;
        for (std::size_t j = 0; j < i; ++j) {
            const double c = dt * tableau.a[i][j];
            if (c == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) {
                ds[k] += c * kd[j][k];
                kd[i][k] += c * kv[j][k];
            }
        }
        rhs(ds, kv[i]);
    }
    DynamicState out = state;
    for (std::size_t i = 0; i < s; ++i) {
        const double c = dt * tableau.b[i];
        if (c == 0.0) continue;
        for (std::size_t k = 0; k < n; ++k) {
            out.d[k] += c * kd[i][k];
            out.v[k] += c * kv[i][k];
        }
    }
    out.t = state.t + dt;
    check_finite(out, "rk_step", step_index);
    return out;
}

DynamicState integrate(const ButcherTableau& tableau, const Acceleration& rhs, DynamicState state, double dt,
                       std::size_t steps, const std::function<void(std::size_t, const DynamicState&)>& observer) {
    for (std::size_t k = 0; k < steps; ++k) {
        state = rk_step(tableau, rhs, state, dt, k + 1);
        if (observer) observer(k + 1, state);
    }
    return state;
}

namespace {

// One step given a(d) at the start; leaves a(d) at the end in `acc`.
void verlet_step(const Acceleration& rhs, DynamicState& s, std::vector<double>& acc, double dt) {
    const std::size_t n = s.d.size();
    for (std::size_t k = 0; k < n; ++k) {
        s.v[k] += 0.5 * dt * acc[k];
        s.d[k] += dt * s.v[k];
    }
    rhs(s.d, acc);
    for (std::size_t k = 0; k < n; ++k) s.v[k] += 0.5 * dt * acc[k];
    s.t += dt;
}

DynamicState verlet_run(const Acceleration& rhs, DynamicState state, double dt, std::size_t steps,
                        std::size_t first_index, const std::function<void(std::size_t, const DynamicState&)>& observer) {
    if (!(dt > 0.0)) throw std::invalid_argument("central_difference: dt must be positive");
    if (state.v.size() != state.d.size()) throw std::invalid_argument("central_difference: d and v differ in size");
    std::vector<double> acc(state.d.size());
    rhs(state.d, acc);
    for (std::size_t k = 0; k < steps; ++k) {
        verlet_step(rhs, state, acc, dt);
        check_finite(state, "central_difference", first_index + k);
        if (observer) observer(k + 1, state);
    }
    return state;
}

}  // namespace

DynamicState central_difference_step(const Acceleration& rhs, const DynamicState& state, double dt,
                                     std::size_t step_index) {
    return verlet_run(rhs, state, dt, 1, step_index, {});
}

DynamicState integrate_central_difference(const Acceleration& rhs, DynamicState state, double dt, std::size_t steps,
                                          const std::function<void(std::size_t, const DynamicState&)>& observer) {
    return verlet_run(rhs, std::move(state), dt, steps, 1, observer);
}

bool is_scheme_name(std::string_view name) {
    return name == "euler" || name == "rk2" || name == "rk4" || name == "rk6" || name == "central_difference";
}

int scheme_order(std::string_view name) {
    if (name == "central_difference") return 2;
    return tableau_by_name(name).order;
}

double scheme_stability_limit(std::string_view name) {
    if (name == "central_difference") return 2.0;
    return stability_limit(tableau_by_name(name));
}

DynamicState integrate_by_name(std::string_view scheme, const Acceleration& rhs, DynamicState state, double dt,
                               std::size_t steps,
                               const std::function<void(std::size_t, const DynamicState&)>& observer) {
    if (scheme == "central_difference") return integrate_central_difference(rhs, std::move(state), dt, steps, observer);
    return integrate(tableau_by_name(scheme), rhs, std::move(state), dt, steps, observer);
}

double max_frequency(const LinearMap& op, std::size_t n, const PowerIterationOptions& options) {
    if (n == 0) throw std::invalid_argument("max_frequency: empty system");
    std::mt19937 rng(options.seed);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    std::vector<double> x(n), y(n), t0(n), t1(n);
    for (double& v : x) v = dist(rng);
    const auto normalize = [&](std::vector<double>& v) {
        const double nrm = std::sqrt(dot(v, v));
        if (!std::isfinite(nrm) || !(nrm > 0.0))
            throw NumericalError("max_frequency: operator produced a non-finite or zero vector");
        for (double& e : v) e /= nrm;
        return nrm;
    };
    normalize(x);

    int applies = 0;
    const auto rayleigh = [&] {
        op(x, y);
        ++applies;
        const double l = dot(x, y);
        if (!std::isfinite(l)) throw NumericalError("max_frequency: non-finite Rayleigh quotient");
        return l;
    };
    // The quotient converges geometrically; with r the ratio of successive
    // changes, the remaining error is about |change| r / (1 - r).
    double last_change = std::numeric_limits<double>::quiet_NaN();
    const auto converged = [&](double l, double prev) {
        const double change = std::abs(l - prev);
        const double r = change / last_change;
        last_change = change;
        if (change == 0.0) return true;
        if (!(r < 1.0)) return false;
        return change * r / (1.0 - r) <= options.tolerance * std::abs(l);
    };
    const auto finish = [&](double l) {
        if (l <= 0.0) throw NumericalError("max_frequency: dominant eigenvalue is not positive");
        return std::sqrt(l);
    };

    double prev = std::numeric_limits<double>::quiet_NaN();
    double lambda = rayleigh();
    const int warmup = options.filter_degree > 0 ? 30 : options.max_iterations;
    while (applies < std::min(warmup, options.max_iterations)) {
        x = y;
        normalize(x);
        prev = lambda;
        lambda = rayleigh();
        if (converged(lambda, prev)) return finish(lambda);
    }

    // Chebyshev filter T_m(2 A / b - 1): bounded by 1 on [0, b] and growing
    // fastest at the top of the spectrum when b sits just below it.
    double eta = 1e-2;
    const int m = options.filter_degree;
    last_change = std::numeric_limits<double>::quiet_NaN();
    while (m > 0 && applies + m + 1 <= options.max_iterations) {
        if (!(lambda > 0.0)) throw NumericalError("max_frequency: dominant eigenvalue is not positive");
        const double b = lambda * (1.0 - eta);
        t0 = x;
        op(x, t1);
        ++applies;
        for (std::size_t i = 0; i < n; ++i) t1[i] = 2.0 * t1[i] / b - x[i];
        for (int k = 2; k <= m; ++k) {
            op(t1, y);
            ++applies;
            for (std::size_t i = 0; i < n; ++i) {
                const double next = 2.0 * (2.0 * y[i] / b - t1[i]) - t0[i];
                t0[i] = t1[i];
                t1[i] = next;
            }
        }
        const double growth = std::sqrt(dot(t1, t1));
        x = t1;
        normalize(x);
        prev = lambda;
        lambda = rayleigh();
        if (converged(lambda, prev)) return finish(lambda);
        // No growth means b lies above the top eigenvalue: widen the gap.
        eta = growth <= 1.0 ? std::min(0.5, eta * 10.0)
                            : std::max(1e-6, std::min(eta, 10.0 * std::abs(lambda - prev) / std::abs(lambda)));
    }
    last_change = std::numeric_limits<double>::quiet_NaN();
    while (applies < options.max_iterations) {
        x = y;
        normalize(x);
        prev = lambda;
        lambda = rayleigh();
        if (converged(lambda, prev)) return finish(lambda);
    }
    std::ostringstream os;
    os.precision(17);
    os << "max_frequency: no convergence after " << applies << " operator applications; last Rayleigh quotients "
       << prev << " and " << lambda;
    throw NumericalError(os.str());
}

SpectrumResult eigensolve(const DenseMatrix& k, const DenseMatrix& m, bool invert) {
    check_square(k, m);
    SpectrumResult out;
    if (!invert) {
        const DenseMatrix l = cholesky(m);
        const std::vector<double> lambda = jacobi_eigenvalues(congruence(l, k), 1e-12);
        const double scale = lambda.empty() ? 1.0 : std::abs(lambda.back());
        for (double v : lambda) out.frequencies.push_back(checked_sqrt(v, scale));
    } else {
        const DenseMatrix l = cholesky(k);
        const std::vector<double> mu = jacobi_eigenvalues(congruence(l, m), 1e-12);
        for (double v : mu) {
            if (!(v > 0.0)) throw NumericalError("eigensolve: mass pencil is not definite");
            out.frequencies.push_back(1.0 / std::sqrt(v));
        }
    }
    std::sort(out.frequencies.begin(), out.frequencies.end());
    return out;
}

SpectrumResult eigensolve_general(const DenseMatrix& k, const DenseMatrix& m) {
    check_square(k, m);
    const std::size_t n = k.rows();
    Eigen::MatrixXd ke(n, n), me(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            ke(i, j) = k(i, j);
            me(i, j) = m(i, j);
        }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(me);
    const Eigen::MatrixXd a = lu.solve(ke);
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    if (es.info() != Eigen::Success) throw NumericalError("eigensolve_general: eigenvalue iteration failed");
    SpectrumResult out;
    double scale = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        scale = std::max(scale, std::abs(es.eigenvalues()[i].real()));
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        out.frequencies.push_back(checked_sqrt(es.eigenvalues()[i].real(), scale));
    std::sort(out.frequencies.begin(), out.frequencies.end());
    return out;
}

int outlier_constraint_count(int degree) { return degree < 2 ? 0 : (degree - 1) / 2; }

DenseMatrix outlier_constraints(const SplineSpace& space, std::size_t free_lo, std::size_t free_hi,
                                int problem_order, int count) {
    if (space.periodic()) throw std::invalid_argument("outlier_constraints: clamped direction required");
    if (problem_order != 2) throw std::invalid_argument("outlier_constraints: only second-order problems are supported");
    if (free_lo >= free_hi || free_hi > space.dimension())
        throw std::invalid_argument("outlier_constraints: invalid free range");
    const int p = space.degree();
    if (count < 0) count = outlier_constraint_count(p);
    if (p < 2 || count == 0) return DenseMatrix(0, free_hi - free_lo);
    if (2 * count > p) throw std::invalid_argument("outlier_constraints: derivative order exceeds the degree");
    const std::size_t n = free_hi - free_lo;
    DenseMatrix c(2 * static_cast<std::size_t>(count), n);
    std::size_t row = 0;
    for (double x : {space.lower(), space.upper()}) {
        const BasisEval e = eval_basis(space, x, 2 * count);
        for (int k = 1; k <= count; ++k, ++row) {
            double scale = 0.0;
            for (int l = 0; l <= p; ++l) scale = std::max(scale, std::abs(e.value(2 * k, l)));
            for (int l = 0; l <= p; ++l) {
                const std::size_t g = space.wrap(e.first_index + l);
                if (g >= free_lo && g < free_hi) c(row, g - free_lo) = e.value(2 * k, l) / scale;
            }
        }
    }
    return c;
}

DenseMatrix nullspace_basis(const DenseMatrix& c) {
    const std::size_t m = c.rows(), n = c.cols();
    if (m == 0) return DenseMatrix::identity(n);
    Eigen::MatrixXd ct(n, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ct(j, i) = c(i, j);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ct);
    qr.setThreshold(1e-12);
    const auto r = static_cast<std::size_t>(qr.rank());
    const Eigen::MatrixXd q = qr.householderQ();
    DenseMatrix t(n, n - r);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = r; j < n; ++j) t(i, j - r) = q(i, j);
    return t;
}

DenseMatrix lift_constraints(const DenseMatrix& c1, std::size_t n2) {
    const std::size_t m = c1.rows(), n1 = c1.cols();
    DenseMatrix c(m * n2, n1 * n2);
    for (std::size_t i2 = 0; i2 < n2; ++i2)
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t j = 0; j < n1; ++j) c(i2 * m + r, i2 * n1 + j) = c1(r, j);
    return c;
}

ConstraintProjection::ConstraintProjection(LinearMap inverse_mass, DenseMatrix constraints)
    : x_(std::move(inverse_mass)), c_(std::move(constraints)), n_(c_.cols()) {
    const std::size_t m = c_.rows();
    y_ = DenseMatrix(n_, m);
    std::vector<double> col(n_);
    for (std::size_t r = 0; r < m; ++r) {
        auto row = c_.row(r);
        x_(row, col);
        for (std::size_t i = 0; i < n_; ++i) y_(i, r) = col[i];
    }
    DenseMatrix w(m, m);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t s = 0; s < m; ++s) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n_; ++i) acc += c_(r, i) * y_(i, s);
            w(r, s) = acc;
        }
    if (m > 0) w_inv_ = inverse(w);
}

void ConstraintProjection::apply(std::span<const double> r, std::span<double> out) const {
    if (r.size() != n_ || out.size() != n_) throw std::invalid_argument("ConstraintProjection: size mismatch");
    x_(r, out);
    subtract_correction(out, out);
}

void ConstraintProjection::project_state(std::span<const double> x, std::span<double> out) const {
    if (x.size() != n_ || out.size() != n_) throw std::invalid_argument("ConstraintProjection: size mismatch");
    std::copy(x.begin(), x.end(), out.begin());
    subtract_correction(x, out);
}

void ConstraintProjection::subtract_correction(std::span<const double> cx_source, std::span<double> out) const {
    const std::size_t m = c_.rows();
    if (m == 0) return;
    std::vector<double> t(m, 0.0), s(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) t[k] = dot(c_.row(k), cx_source);
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = 0; l < m; ++l) s[k] += w_inv_(k, l) * t[l];
    for (std::size_t i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < m; ++k) acc += y_(i, k) * s[k];
        out[i] -= acc;
    }
}

}  // namespace iga
