#include "iga/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "iga/errors.hpp"

namespace iga {

namespace {

/// Splits [0, n) into contiguous chunks, one per thread. Each output entry is
/// owned by exactly one chunk, so results do not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
    const std::size_t t = std::min<std::size_t>(threads, n);
    if (t <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(t - 1);
    const std::size_t chunk = (n + t - 1) / t;
    for (std::size_t k = 1; k < t; ++k) {
        const std::size_t lo = k * chunk, hi = std::min(n, lo + chunk);
        if (lo < hi) pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    fn(std::size_t{0}, std::min(n, chunk));
    for (auto& th : pool) th.join();
}

/// Flattened basis table of one direction.
struct Sweep1D {
    std::size_t q = 0;  // number of points
    int nb = 0;         // p + 1
    std::vector<std::size_t> idx;
    std::vector<double> v0, v1;

    explicit Sweep1D(const BasisTable& t) : q(t.size()), nb(t.degree() + 1) {
        const std::size_t m = q * static_cast<std::size_t>(nb);
        idx.resize(m);
        v0.resize(m);
        v1.resize(m);
        for (std::size_t i = 0; i < q; ++i)
            for (int k = 0; k < nb; ++k) {
                const std::size_t j = i * static_cast<std::size_t>(nb) + static_cast<std::size_t>(k);
                idx[j] = t.index(i, k);
                v0[j] = t.value(i, k, 0);
                v1[j] = t.degree() > 0 ? t.value(i, k, 1) : 0.0;
            }
    }
};

/// Values (and parametric gradients) of the field d at all quadrature points.
void interpolate(const DiscreteSystem& sys, std::span<const double> d, bool derivs, std::vector<double>& u,
                 std::vector<double>& u1, std::vector<double>& u2) {
    const Sweep1D a(sys.table(0)), b(sys.table(1));
    const std::size_t n1 = sys.n1(), n2 = sys.n2(), q1 = a.q, q2 = b.q;
    std::vector<double> t0(n2 * q1), t1(derivs ? n2 * q1 : 0);
    parallel_for(n2, sys.threads(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i2 = lo; i2 < hi; ++i2) {
            const double* row = d.data() + i2 * n1;
            for (std::size_t q = 0; q < q1; ++q) {
                double s0 = 0.0, s1 = 0.0;
                const std::size_t base = q * static_cast<std::size_t>(a.nb);
                for (int k = 0; k < a.nb; ++k) {
                    const double v = row[a.idx[base + k]];
                    s0 += a.v0[base + k] * v;
                    s1 += a.v1[base + k] * v;
                }
                t0[i2 * q1 + q] = s0;
                if (derivs) t1[i2 * q1 + q] = s1;
            }
        }
    });
    u.assign(q1 * q2, 0.0);
    if (derivs) {
        u1.assign(q1 * q2, 0.0);
        u2.assign(q1 * q2, 0.0);
    }
    parallel_for(q2, sys.threads(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t q = lo; q < hi; ++q) {
            double* ur = u.data() + q * q1;
            for (int k = 0; k < b.nb; ++k) {
                const std::size_t j = q * static_cast<std::size_t>(b.nb) + k;
                const double bv = b.v0[j], bd = b.v1[j];
                const double* r0 = t0.data() + b.idx[j] * q1;
                for (std::size_t p = 0; p < q1; ++p) ur[p] += bv * r0[p];
                if (derivs) {
                    const double* r1 = t1.data() + b.idx[j] * q1;
                    double* u1r = u1.data() + q * q1;
                    double* u2r = u2.data() + q * q1;
                    for (std::size_t p = 0; p < q1; ++p) {
                        u1r[p] += bv * r1[p];
                        u2r[p] += bd * r0[p];
                    }
                }
            }
        }
    });
    sys.add_visits(n2 * q1 * static_cast<std::size_t>(a.nb) + q2 * q1 * static_cast<std::size_t>(b.nb));
}

/// out_i = sum_q (test_i h + d1 test_i g1 + d2 test_i g2); g1, g2 may be empty.
void test_against(const DiscreteSystem& sys, std::span<const double> h, std::span<const double> g1,
                  std::span<const double> g2, std::span<double> out) {
    const Sweep1D a(sys.table(0)), b(sys.table(1));
    const std::size_t n1 = sys.n1(), n2 = sys.n2(), q1 = a.q, q2 = b.q;
    const bool derivs = !g1.empty();
    std::vector<double> s0(n2 * q1, 0.0), s1(derivs ? n2 * q1 : 0, 0.0);
    parallel_for(q1, sys.threads(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t q = 0; q < q2; ++q) {
            const std::size_t row = q * q1;
            for (int k = 0; k < b.nb; ++k) {
                const std::size_t j = q * static_cast<std::size_t>(b.nb) + k;
                const double bv = b.v0[j], bd = b.v1[j];
                double* r0 = s0.data() + b.idx[j] * q1;
                if (derivs) {
                    double* r1 = s1.data() + b.idx[j] * q1;
                    for (std::size_t p = lo; p < hi; ++p) {
                        r0[p] += bv * h[row + p] + bd * g2[row + p];
                        r1[p] += bv * g1[row + p];
                    }
                } else {
                    for (std::size_t p = lo; p < hi; ++p) r0[p] += bv * h[row + p];
                }
            }
        }
    });
    std::fill(out.begin(), out.end(), 0.0);
    parallel_for(n2, sys.threads(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i2 = lo; i2 < hi; ++i2) {
            double* o = out.data() + i2 * n1;
            for (std::size_t q = 0; q < q1; ++q) {
                const double x0 = s0[i2 * q1 + q], x1 = derivs ? s1[i2 * q1 + q] : 0.0;
                const std::size_t base = q * static_cast<std::size_t>(a.nb);
                for (int k = 0; k < a.nb; ++k) o[a.idx[base + k]] += a.v0[base + k] * x0 + a.v1[base + k] * x1;
            }
        }
    });
    sys.add_visits(n2 * q1 * static_cast<std::size_t>(a.nb) + q2 * q1 * static_cast<std::size_t>(b.nb));
}

std::vector<std::size_t> range_indices(std::array<std::size_t, 2> r) {
    std::vector<std::size_t> v;
    for (std::size_t i = r[0]; i < r[1]; ++i) v.push_back(i);
    return v;
}

std::vector<std::size_t> free_grid_indices(const DiscreteSystem& sys) {
    std::vector<std::size_t> v;
    v.reserve(sys.free_size());
    const auto r1 = sys.free_range(0), r2 = sys.free_range(1);
    for (std::size_t i2 = r2[0]; i2 < r2[1]; ++i2)
        for (std::size_t i1 = r1[0]; i1 < r1[1]; ++i1) v.push_back(i2 * sys.n1() + i1);
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Operator1D / KroneckerOperator

Operator1D::Operator1D(std::size_t n, Apply apply, std::size_t storage)
    : n_(n), apply_(std::move(apply)), storage_(storage) {}

Operator1D Operator1D::identity(std::size_t n) {
    return {n, [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); }, 0};
}

Operator1D Operator1D::diagonal(std::vector<double> d) {
    const std::size_t n = d.size();
    return {n,
            [d = std::move(d)](std::span<const double> x, std::span<double> y) {
                for (std::size_t i = 0; i < d.size(); ++i) y[i] = d[i] * x[i];
            },
            n};
}

Operator1D Operator1D::dense(DenseMatrix a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("Operator1D::dense: matrix must be square");
    const std::size_t n = a.rows();
    return {n,
            [a = std::move(a)](std::span<const double> x, std::span<double> y) {
                for (std::size_t i = 0; i < a.rows(); ++i) {
                    double s = 0.0;
                    const auto r = a.row(i);
                    for (std::size_t j = 0; j < a.cols(); ++j) s += r[j] * x[j];
                    y[i] = s;
                }
            },
            n * n};
}

Operator1D Operator1D::banded(BandedSymmetricMatrix a) {
    const std::size_t n = a.dimension(), st = a.storage();
    return {n, [a = std::move(a)](std::span<const double> x, std::span<double> y) { a.multiply(x, y); }, st};
}

Operator1D Operator1D::banded_inverse(const BandedSymmetricMatrix& a) {
    auto solver = std::make_shared<SpdSolver>(a);
    const std::size_t n = a.dimension();
    const std::size_t st = a.periodic() ? n * n : n * (a.half_bandwidth() + 1);
    return {n,
            [solver](std::span<const double> x, std::span<double> y) {
                std::copy(x.begin(), x.end(), y.begin());
                solver->solve_in_place(y);
            },
            st};
}

Operator1D Operator1D::constrained(ConstrainedDual d) {
    const std::size_t n = d.dimension(), st = d.storage();
    auto p = std::make_shared<ConstrainedDual>(std::move(d));
    return {n, [p](std::span<const double> x, std::span<double> y) { p->apply(x, y); }, st};
}

DenseMatrix Operator1D::to_dense() const {
    DenseMatrix m(n_, n_);
    std::vector<double> e(n_, 0.0), y(n_);
    for (std::size_t j = 0; j < n_; ++j) {
        e[j] = 1.0;
        apply(e, y);
        for (std::size_t i = 0; i < n_; ++i) m(i, j) = y[i];
        e[j] = 0.0;
    }
    return m;
}

KroneckerOperator::KroneckerOperator(Operator1D outer, Operator1D inner)
    : outer_(std::move(outer)), inner_(std::move(inner)) {}

void KroneckerOperator::apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n1 = inner_.size(), n2 = outer_.size();
    if (x.size() != n1 * n2 || y.size() != n1 * n2)
        throw std::invalid_argument("KroneckerOperator::apply: dimension mismatch");
    std::vector<double> tmp(n1 * n2);
    for (std::size_t i2 = 0; i2 < n2; ++i2) inner_.apply(x.subspan(i2 * n1, n1), std::span(tmp).subspan(i2 * n1, n1));
    std::vector<double> col(n2), res(n2);
    for (std::size_t i1 = 0; i1 < n1; ++i1) {
        for (std::size_t i2 = 0; i2 < n2; ++i2) col[i2] = tmp[i2 * n1 + i1];
        outer_.apply(col, res);
        for (std::size_t i2 = 0; i2 < n2; ++i2) y[i2 * n1 + i1] = res[i2];
    }
}

std::vector<double> KroneckerOperator::apply(std::span<const double> x) const {
    std::vector<double> y(size());
    apply(x, y);
    return y;
}

DenseMatrix KroneckerOperator::to_dense() const { return kronecker(outer_.to_dense(), inner_.to_dense()); }

// ---------------------------------------------------------------------------
// Mass kinds

std::string to_string(MassKind kind) {
    switch (kind) {
        case MassKind::galerkin_consistent: return "galerkin_consistent";
        case MassKind::petrov_consistent: return "petrov_consistent";
        case MassKind::customized: return "customized";
        case MassKind::rowsum_lumped: return "rowsum_lumped";
    }
    return "unknown";
}

MassKind parse_mass_kind(std::string_view name) {
    for (auto k : {MassKind::galerkin_consistent, MassKind::petrov_consistent, MassKind::customized,
                   MassKind::rowsum_lumped})
        if (name == to_string(k)) return k;
    throw std::invalid_argument("unknown mass kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// DiscreteSystem

namespace {

int default_points(const SplineSpace& s, int requested) { return requested > 0 ? requested : s.degree() + 2; }

}  // namespace

DiscreteSystem::DiscreteSystem(SplineSpace s1, SplineSpace s2, GeometryMap map, MassKind kind, DirichletSides sides,
                               double kappa, int points_per_element)
    : s1_(std::move(s1)),
      s2_(std::move(s2)),
      map_(std::move(map)),
      c_(weight_field(map_)),
      kind_(kind),
      sides_(sides),
      kappa_(kappa),
      tables_{BasisTable(s1_, default_points(s1_, points_per_element), 1),
              BasisTable(s2_, default_points(s2_, points_per_element), 1)} {
    if (!(kappa > 0.0)) throw std::invalid_argument("DiscreteSystem: kappa must be positive");
    if (s1_.periodic() && (sides.x1_min || sides.x1_max))
        throw std::invalid_argument("DiscreteSystem: cannot constrain the periodic direction x1");
    if (s2_.periodic() && (sides.x2_min || sides.x2_max))
        throw std::invalid_argument("DiscreteSystem: cannot constrain the periodic direction x2");
    free_[0] = {sides.x1_min ? 1u : 0u, n1() - (sides.x1_max ? 1u : 0u)};
    free_[1] = {sides.x2_min ? 1u : 0u, n2() - (sides.x2_max ? 1u : 0u)};
    if (free_[0][0] >= free_[0][1] || free_[1][0] >= free_[1][1])
        throw std::invalid_argument("DiscreteSystem: no free coefficients left");

    const auto& t1 = tables_[0];
    const auto& t2 = tables_[1];
    vol_.resize(t1.size() * t2.size());
    for (std::size_t q2 = 0; q2 < t2.size(); ++q2)
        for (std::size_t q1 = 0; q1 < t1.size(); ++q1)
            vol_[q2 * t1.size() + q1] = t1.weight(q1) * t2.weight(q2) * det(map_.jacobian(t1.x(q1), t2.x(q2)));
}

TestFunctions DiscreteSystem::test_functions() const noexcept {
    return kind_ == MassKind::petrov_consistent || kind_ == MassKind::customized ? TestFunctions::weighted
                                                                                 : TestFunctions::plain;
}

std::vector<double> DiscreteSystem::inject(std::span<const double> free) const {
    if (free.size() != free_size()) throw std::invalid_argument("inject: dimension mismatch");
    std::vector<double> full(full_size(), 0.0);
    std::size_t k = 0;
    for (std::size_t i2 = free_[1][0]; i2 < free_[1][1]; ++i2)
        for (std::size_t i1 = free_[0][0]; i1 < free_[0][1]; ++i1) full[i2 * n1() + i1] = free[k++];
    return full;
}

std::vector<double> DiscreteSystem::restrict_to_free(std::span<const double> full) const {
    if (full.size() != full_size()) throw std::invalid_argument("restrict_to_free: dimension mismatch");
    std::vector<double> free;
    free.reserve(free_size());
    for (std::size_t i2 = free_[1][0]; i2 < free_[1][1]; ++i2)
        for (std::size_t i1 = free_[0][0]; i1 < free_[0][1]; ++i1) free.push_back(full[i2 * n1() + i1]);
    return free;
}

const ApproximateDualBasis& DiscreteSystem::dual(int dir) const {
    if (!duals_[dir]) duals_[dir] = std::make_unique<ApproximateDualBasis>(approximate_dual(space(dir)));
    return *duals_[dir];
}

const ConstrainedDual& DiscreteSystem::constrained_dual(int dir) const {
    if (!cduals_[dir]) {
        const bool lo = dir == 0 ? sides_.x1_min : sides_.x2_min;
        const bool hi = dir == 0 ? sides_.x1_max : sides_.x2_max;
        cduals_[dir] = std::make_unique<ConstrainedDual>(dual(dir), lo, hi);
    }
    return *cduals_[dir];
}

const DiscreteSystem::StiffnessData& DiscreteSystem::stiffness_data(TestFunctions test) const {
    const int slot = test == TestFunctions::plain ? 0 : 1;
    if (!stiff_[slot]) {
        auto sd = std::make_unique<StiffnessData>();
        const auto& t1 = tables_[0];
        const auto& t2 = tables_[1];
        const std::size_t q1 = t1.size(), n = q1 * t2.size();
        sd->d11.resize(n);
        sd->d12.resize(n);
        sd->d22.resize(n);
        if (slot == 1) {
            sd->e1.resize(n);
            sd->e2.resize(n);
        }
        for (std::size_t b = 0; b < t2.size(); ++b)
            for (std::size_t a = 0; a < q1; ++a) {
                const double x1 = t1.x(a), x2 = t2.x(b);
                const std::size_t q = b * q1 + a;
                const Mat2 m = flux_metric(map_, x1, x2);
                double s = kappa_ * t1.weight(a) * t2.weight(b);
                if (slot == 1) {
                    const double c = c_.value(x1, x2);
                    const Vec2 g = c_.gradient(x1, x2);
                    s /= c;
                    sd->e1[q] = g[0] / c;
                    sd->e2[q] = g[1] / c;
                }
                sd->d11[q] = s * m[0][0];
                sd->d12[q] = s * m[0][1];
                sd->d22[q] = s * m[1][1];
            }
        stiff_[slot] = std::move(sd);
    }
    return *stiff_[slot];
}

const std::vector<double>& DiscreteSystem::mass_data(TestFunctions test) const {
    const int slot = test == TestFunctions::plain ? 0 : 1;
    if (!mass_[slot]) {
        auto md = std::make_unique<std::vector<double>>(vol_.size());
        const auto& t1 = tables_[0];
        const auto& t2 = tables_[1];
        for (std::size_t b = 0; b < t2.size(); ++b)
            for (std::size_t a = 0; a < t1.size(); ++a) {
                const std::size_t q = b * t1.size() + a;
                const double x1 = t1.x(a), x2 = t2.x(b);
                // rho det(F) w, divided by c = det(F) rho for weighted tests
                (*md)[q] = slot == 0 ? vol_[q] * map_.density(x1, x2) : t1.weight(a) * t2.weight(b);
            }
        mass_[slot] = std::move(md);
    }
    return *mass_[slot];
}

DiscreteSystem make_string_system(std::size_t num_elements, int degree, MassKind kind, double kappa,
                                  int points_per_element) {
    DirichletSides sides;
    sides.x1_min = sides.x1_max = true;
    return DiscreteSystem(uniform_space(num_elements, degree), uniform_space(1, 0), identity_map(), kind, sides,
                          kappa, points_per_element);
}

// ---------------------------------------------------------------------------
// Operators

void stiffness_apply(const DiscreteSystem& system, std::span<const double> d, std::span<double> out,
                     std::optional<TestFunctions> test) {
    if (d.size() != system.full_size() || out.size() != system.full_size())
        throw std::invalid_argument("stiffness_apply: expected full-grid vectors of size " +
                                    std::to_string(system.full_size()));
    const TestFunctions tf = test.value_or(system.test_functions());
    const auto& sd = system.stiffness_data(tf);
    std::vector<double> u, u1, u2;
    interpolate(system, d, true, u, u1, u2);
    const std::size_t n = u.size();
    std::vector<double>& g1 = u1;  // reused in place
    std::vector<double>& g2 = u2;
    std::vector<double>& h = u;
    parallel_for(n, system.threads(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t q = lo; q < hi; ++q) {
            const double a = sd.d11[q] * u1[q] + sd.d12[q] * u2[q];
            const double b = sd.d12[q] * u1[q] + sd.d22[q] * u2[q];
            g1[q] = a;
            g2[q] = b;
            h[q] = tf == TestFunctions::weighted ? -(sd.e1[q] * a + sd.e2[q] * b) : 0.0;
        }
    });
    test_against(system, h, g1, g2, out);
}

std::vector<double> stiffness_apply(const DiscreteSystem& system, std::span<const double> d,
                                    std::optional<TestFunctions> test) {
    std::vector<double> out(system.full_size());
    stiffness_apply(system, d, out, test);
    return out;
}

std::vector<double> mass_form_apply(const DiscreteSystem& system, std::span<const double> d,
                                    std::optional<TestFunctions> test) {
    if (d.size() != system.full_size()) throw std::invalid_argument("mass_form_apply: dimension mismatch");
    const auto& md = system.mass_data(test.value_or(system.test_functions()));
    std::vector<double> u, u1, u2;
    interpolate(system, d, false, u, u1, u2);
    for (std::size_t q = 0; q < u.size(); ++q) u[q] *= md[q];
    std::vector<double> out(system.full_size());
    test_against(system, u, {}, {}, out);
    return out;
}

std::vector<double> load_vector(const DiscreteSystem& system, const PhysicalField& f,
                                std::span<const NeumannData> neumann, std::span<const double> lift,
                                std::span<const double> lift_accel) {
    const TestFunctions tf = system.test_functions();
    const auto& t1 = system.table(0);
    const auto& t2 = system.table(1);
    const auto& map = system.map();
    std::vector<double> h(t1.size() * t2.size(), 0.0);
    if (f) {
        for (std::size_t b = 0; b < t2.size(); ++b)
            for (std::size_t a = 0; a < t1.size(); ++a) {
                const double x1 = t1.x(a), x2 = t2.x(b);
                const std::size_t q = b * t1.size() + a;
                const Vec2 p = map.value(x1, x2);
                double v = f(p[0], p[1]) * system.volume_weights()[q];
                if (tf == TestFunctions::weighted) v /= system.weight().value(x1, x2);
                h[q] = v;
            }
    }
    std::vector<double> out(system.full_size(), 0.0);
    test_against(system, h, {}, {}, out);

    for (const auto& nd : neumann) {
        if (nd.dir < 0 || nd.dir > 1) throw std::invalid_argument("load_vector: Neumann direction must be 0 or 1");
        // integrate along the other direction on the side x_dir = 0 or 1
        const int along = 1 - nd.dir;
        const SplineSpace& fixed = system.space(nd.dir);
        const double xs = nd.upper ? fixed.upper() : fixed.lower();
        const BasisEval fixed_eval = eval_basis(fixed, xs, 0);
        const auto& tab = system.table(along);
        for (std::size_t q = 0; q < tab.size(); ++q) {
            const double xa = tab.x(q);
            const double x1 = nd.dir == 0 ? xs : xa, x2 = nd.dir == 0 ? xa : xs;
            const Mat2 jac = map.jacobian(x1, x2);
            const double ds = std::hypot(jac[0][along], jac[1][along]);
            const Vec2 p = map.value(x1, x2);
            double v = nd.h(p[0], p[1]) * ds * tab.weight(q);
            if (tf == TestFunctions::weighted) v /= system.weight().value(x1, x2);
            for (int kf = 0; kf <= fixed.degree(); ++kf) {
                const double bf = fixed_eval.value(0, kf);
                if (bf == 0.0) continue;
                const std::size_t jf = fixed.wrap(fixed_eval.first_index + kf);
                for (int ka = 0; ka <= tab.degree(); ++ka) {
                    const std::size_t ja = tab.index(q, ka);
                    const double w = v * bf * tab.value(q, ka, 0);
                    const std::size_t i = nd.dir == 0 ? ja * system.n1() + jf : jf * system.n1() + ja;
                    out[i] += w;
                }
            }
        }
    }
    if (!lift.empty()) {
        const auto kg = stiffness_apply(system, lift, tf);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= kg[i];
    }
    if (!lift_accel.empty()) {
        const auto mg = mass_form_apply(system, lift_accel, tf);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= mg[i];
    }
    return out;
}

MassOperator mass_operator(const DiscreteSystem& system) {
    MassOperator m;
    m.kind = system.mass_kind();
    m.size = system.free_size();
    std::array<Operator1D, 2> apply_f, solve_f;
    switch (system.mass_kind()) {
        case MassKind::galerkin_consistent: {
            const auto& sep = system.map().separable_weight;
            if (!sep)
                throw std::invalid_argument("galerkin_consistent mass needs a separable weight c(x1) c(x2)");
            for (int dir = 0; dir < 2; ++dir) {
                const auto& s = system.space(dir);
                const auto& w = dir == 0 ? sep->first : sep->second;
                auto g = grammian(s, w, system.points_per_element(dir));
                const auto r = system.free_range(dir);
                if (!s.periodic() && (r[0] > 0 || r[1] < s.dimension())) g = g.principal(r[0], r[1]);
                solve_f[dir] = Operator1D::banded_inverse(g);
                apply_f[dir] = Operator1D::banded(std::move(g));
            }
            break;
        }
        case MassKind::petrov_consistent: {
            for (int dir = 0; dir < 2; ++dir) {
                const auto keep = range_indices(system.free_range(dir));
                const auto c = system.dual(dir).coupling().submatrix(keep, keep);
                solve_f[dir] = Operator1D::dense(inverse(c));
                apply_f[dir] = Operator1D::dense(c);
            }
            break;
        }
        case MassKind::customized: {
            for (int dir = 0; dir < 2; ++dir) {
                const auto& basis = system.dual(dir);
                auto solver = std::make_shared<SpdSolver>(basis.S());
                const auto r = system.free_range(dir);
                const std::size_t n = basis.dimension(), nf = r[1] - r[0];
                apply_f[dir] = Operator1D(
                    nf,
                    [solver, r, n](std::span<const double> x, std::span<double> y) {
                        std::vector<double> full(n, 0.0);
                        std::copy(x.begin(), x.end(), full.begin() + static_cast<long>(r[0]));
                        solver->solve_in_place(full);
                        std::copy(full.begin() + static_cast<long>(r[0]), full.begin() + static_cast<long>(r[1]),
                                  y.begin());
                    },
                    0);
                solve_f[dir] = Operator1D::constrained(system.constrained_dual(dir));
            }
            break;
        }
        case MassKind::rowsum_lumped: {
            const std::vector<double> ones(system.full_size(), 1.0);
            const auto diag = system.restrict_to_free(mass_form_apply(system, ones, TestFunctions::plain));
            for (double v : diag)
                if (!(v > 0.0)) throw NumericalError("rowsum_lumped: non-positive lumped mass entry");
            auto inv = diag;
            for (double& v : inv) v = 1.0 / v;
            m.apply = [diag](std::span<const double> x, std::span<double> y) {
                for (std::size_t i = 0; i < diag.size(); ++i) y[i] = diag[i] * x[i];
            };
            m.solve = [inv](std::span<const double> x, std::span<double> y) {
                for (std::size_t i = 0; i < inv.size(); ++i) y[i] = inv[i] * x[i];
            };
            m.storage = diag.size();
            return m;
        }
    }
    auto ka = std::make_shared<KroneckerOperator>(apply_f[1], apply_f[0]);
    KroneckerOperator ks(solve_f[1], solve_f[0]);
    auto kss = std::make_shared<KroneckerOperator>(ks);
    m.apply = [ka](std::span<const double> x, std::span<double> y) { ka->apply(x, y); };
    m.solve = [kss](std::span<const double> x, std::span<double> y) { kss->apply(x, y); };
    m.storage = ks.storage();
    m.solve_factors = std::move(ks);
    return m;
}

// ---------------------------------------------------------------------------
// SemiDiscreteOperator

namespace {

std::shared_ptr<KroneckerOperator> full_dual_operator(const DiscreteSystem& sys) {
    return std::make_shared<KroneckerOperator>(Operator1D::banded(sys.dual(1).S()),
                                               Operator1D::banded(sys.dual(0).S()));
}

}  // namespace

SemiDiscreteOperator::SemiDiscreteOperator(const DiscreteSystem& system, std::vector<double> load)
    : system_(&system), mass_(mass_operator(system)) {
    if (system.mass_kind() == MassKind::petrov_consistent) dual_full_ = full_dual_operator(system);
    if (load.empty()) {
        load_.assign(system.free_size(), 0.0);
    } else {
        if (load.size() != system.full_size()) throw std::invalid_argument("SemiDiscreteOperator: load size");
        if (system.mass_kind() == MassKind::petrov_consistent) load = dual_full_->apply(load);
        load_ = system.restrict_to_free(load);
    }
}

void SemiDiscreteOperator::stiffness(std::span<const double> d, std::span<double> out) const {
    const auto full = system_->inject(d);
    auto r = stiffness_apply(*system_, full);
    if (dual_full_) r = dual_full_->apply(r);
    const auto f = system_->restrict_to_free(r);
    std::copy(f.begin(), f.end(), out.begin());
}

void SemiDiscreteOperator::acceleration(std::span<const double> d, std::span<double> out) const {
    std::vector<double> r(size());
    stiffness(d, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = load_[i] - r[i];
    mass_.solve(r, out);
}

void SemiDiscreteOperator::operator_apply(std::span<const double> d, std::span<double> out) const {
    std::vector<double> r(size());
    stiffness(d, r);
    mass_.solve(r, out);
}

DenseMatrix SemiDiscreteOperator::dense_stiffness() const {
    const std::size_t n = size();
    DenseMatrix k(n, n);
    std::vector<double> e(n, 0.0), y(n);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        stiffness(e, y);
        for (std::size_t i = 0; i < n; ++i) k(i, j) = y[i];
        e[j] = 0.0;
    }
    return k;
}

DenseMatrix SemiDiscreteOperator::dense_mass() const {
    const std::size_t n = size();
    DenseMatrix m(n, n);
    std::vector<double> e(n, 0.0), y(n);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        mass_.apply(e, y);
        for (std::size_t i = 0; i < n; ++i) m(i, j) = y[i];
        e[j] = 0.0;
    }
    return m;
}

std::vector<double> quasi_project(const DiscreteSystem& system, const std::function<double(double, double)>& f) {
    const auto& t1 = system.table(0);
    const auto& t2 = system.table(1);
    std::vector<double> h(t1.size() * t2.size());
    for (std::size_t b = 0; b < t2.size(); ++b)
        for (std::size_t a = 0; a < t1.size(); ++a)
            h[b * t1.size() + a] = f(t1.x(a), t2.x(b)) * t1.weight(a) * t2.weight(b);
    std::vector<double> m(system.full_size());
    test_against(system, h, {}, {}, m);
    const KroneckerOperator dual(Operator1D::constrained(system.constrained_dual(1)),
                                 Operator1D::constrained(system.constrained_dual(0)));
    return system.inject(dual.apply(system.restrict_to_free(m)));
}

std::vector<double> apply_dirichlet(const DiscreteSystem& system, std::span<const double> full) {
    return system.restrict_to_free(full);
}

DenseMatrix apply_dirichlet(const DiscreteSystem& system, const DenseMatrix& full) {
    if (full.rows() != system.full_size() || full.cols() != system.full_size())
        throw std::invalid_argument("apply_dirichlet: matrix dimension mismatch");
    const auto keep = free_grid_indices(system);
    return full.submatrix(keep, keep);
}

}  // namespace iga
