#include "iga/dual_basis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "iga/errors.hpp"
#include "iga/quadrature.hpp"

namespace iga {

namespace {

int default_points(const SplineSpace& space, int requested, bool weighted) {
    if (requested > 0) return requested;
    return space.degree() + (weighted ? 2 : 1);
}

// Elementary symmetric polynomial e_q of v.
double elementary_symmetric(std::span<const double> v, int q) {
    std::vector<double> e(static_cast<std::size_t>(q) + 1, 0.0);
    e[0] = 1.0;
    for (double x : v)
        for (int k = q; k >= 1; --k) e[static_cast<std::size_t>(k)] += x * e[static_cast<std::size_t>(k - 1)];
    return e[static_cast<std::size_t>(q)];
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Local knots t_i..t_{i+p+1} of the (unwrapped) basis function i.
std::vector<double> local_knots(const SplineSpace& space, long i) {
    const int p = space.degree();
    std::vector<double> t(static_cast<std::size_t>(p) + 2);
    for (int k = 0; k <= p + 1; ++k) t[static_cast<std::size_t>(k)] = space.knot(i + k);
    return t;
}

// Integral of ((x - c) / h)^q B_j(x) over the support of B_j, exact for q <= p.
double local_moment(const SplineSpace& space, long j, double c, double h, int q, const QuadratureRule& rule) {
    const int p = space.degree();
    const auto t = local_knots(space, j);
    double sum = 0.0;
    for (int k = 0; k <= p; ++k) {
        const double a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>(k) + 1];
        if (b <= a) continue;
        for (std::size_t g = 0; g < rule.size(); ++g) {
            // evaluate strictly inside the span so the half-open convention picks it
            const double x = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[g];
            sum += 0.5 * (b - a) * rule.weights[g] * std::pow((x - c) / h, q) * eval_single_basis(t, p, x);
        }
    }
    return sum;
}

struct Unknown {
    std::size_t row;  // i
    long offset;      // j = i + offset (unwrapped)
};

bool solve_band(const SplineSpace& space, const BandedSymmetricMatrix& gram, std::size_t beta,
                BandedSymmetricMatrix& out);

// Row i of the clamped construction on a window of unrolled knots around the
// periodic basis function i: entries S(i, i + d), d = -beta..beta, stored at
// d + beta. Empty when the window problem is infeasible.
std::vector<double> window_row(const SplineSpace& space, long i, std::size_t beta) {
    const int p = space.degree();
    const long pad = 3L * (p + 1);
    std::vector<double> breaks;
    std::vector<int> mult;
    for (long l = i - pad; l <= i + p + 1 + pad; ++l) {
        const double t = space.knot(l);
        if (!breaks.empty() && t - breaks.back() <= 1e-14 * (1.0 + std::abs(t))) {
            ++mult.back();
        } else {
            breaks.push_back(t);
            mult.push_back(1);
        }
    }
    std::vector<int> regularity;
    for (std::size_t k = 1; k + 1 < breaks.size(); ++k) regularity.push_back(p - mult[k]);
    const SplineSpace win = make_space(breaks, p, regularity, BoundaryKind::clamped);

    const auto target = local_knots(space, i);
    long jw = -1;
    for (long j = 0; j < static_cast<long>(win.dimension()); ++j) {
        const auto t = local_knots(win, j);
        bool same = true;
        for (std::size_t k = 0; k < t.size() && same; ++k)
            same = std::abs(t[k] - target[k]) <= 1e-12 * (1.0 + std::abs(target[k]));
        if (same) {
            jw = j;
            break;
        }
    }
    BandedSymmetricMatrix sw;
    if (jw < 0 || !solve_band(win, grammian(win), std::min(beta, win.dimension() - 1), sw)) return {};
    std::vector<double> row(2 * beta + 1, 0.0);
    const auto b = static_cast<long>(beta);
    for (long d = -b; d <= b; ++d) {
        const long j = jw + d;
        if (j < 0 || j >= static_cast<long>(win.dimension())) continue;
        row[static_cast<std::size_t>(d + b)] = sw.at(static_cast<std::size_t>(jw), static_cast<std::size_t>(j));
    }
    return row;
}

// Returns S or an empty optional-like flag when the constraints are infeasible.
bool solve_band(const SplineSpace& space, const BandedSymmetricMatrix& gram, std::size_t beta,
                BandedSymmetricMatrix& out) {
    const std::size_t n = space.dimension();
    const int p = space.degree();
    const bool periodic = space.periodic();

    std::vector<Unknown> unknowns;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d <= beta; ++d) {
            if (!periodic && i + d >= n) break;
            unknowns.push_back({i, static_cast<long>(d)});
        }
    const std::size_t nu = unknowns.size();

    // Entries of row r: (unknown index, unwrapped offset of the partner).
    std::vector<std::vector<std::pair<std::size_t, long>>> row_entries(n);
    for (std::size_t k = 0; k < nu; ++k) {
        const auto [i, d] = unknowns[k];
        row_entries[i].push_back({k, d});
        if (d != 0) row_entries[space.wrap(static_cast<long>(i) + d)].push_back({k, -d});
    }

    // Constraints: row r reproduces (x - x_r)^q for q = 0..p, in local scaling.
    const auto rule = gauss_rule(p + 1);
    const std::size_t m = n * static_cast<std::size_t>(p + 1);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(nu));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < n; ++r) {
        const long rl = static_cast<long>(r);
        const auto t = local_knots(space, rl);
        const double h = (t.back() - t.front()) / (p + 1);
        double center = 0.0;
        if (p == 0) {
            center = 0.5 * (t[0] + t[1]);
        } else {
            for (int k = 1; k <= p; ++k) center += t[static_cast<std::size_t>(k)];
            center /= p;
        }
        std::vector<double> shifted;
        for (int k = 1; k <= p; ++k) shifted.push_back((t[static_cast<std::size_t>(k)] - center) / h);
        for (int q = 0; q <= p; ++q) {
            const auto row = static_cast<Eigen::Index>(r * static_cast<std::size_t>(p + 1) + static_cast<std::size_t>(q));
            rhs(row) = elementary_symmetric(shifted, q) / binomial(p, q);
            for (const auto& [k, off] : row_entries[r])
                a(row, static_cast<Eigen::Index>(k)) += local_moment(space, rl + off, center, h, q, rule);
        }
    }

    // Row equilibration; it leaves the solution unchanged.
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double nrm = a.row(i).norm();
        if (nrm > 0.0) {
            a.row(i) /= nrm;
            rhs(i) /= nrm;
        }
    }

    // Particular solution and nullspace from a rank-revealing QR of A^T.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.transpose());
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    const Eigen::MatrixXd q = qr.householderQ();
    const Eigen::VectorXd pb = qr.colsPermutation().transpose() * rhs;
    const Eigen::MatrixXd r11 = qr.matrixR().topLeftCorner(rank, rank).template triangularView<Eigen::Upper>();
    const Eigen::VectorXd w1 =
        r11.transpose().template triangularView<Eigen::Lower>().solve(pb.head(rank));
    Eigen::VectorXd s = q.leftCols(rank) * w1;
    const double residual = (a * s - rhs).lpNorm<Eigen::Infinity>();
    if (!(residual <= 1e-9 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()))) return false;

    // Minimize ||S G - I||_F over the nullspace, as a least-squares problem in
    // the rows of S G that can be nonzero.
    const Eigen::Index nz = static_cast<Eigen::Index>(nu) - rank;
    bool fitted = false;
    if (nz > 0 && periodic) {
        // The periodic nullspace is spanned by translation-invariant stencils that
        // no boundary pins down. Select the feasible S closest to the rows of the
        // clamped construction on local windows, where the boundary does.
        Eigen::VectorXd target(static_cast<Eigen::Index>(nu));
        bool ok = true;
        std::vector<std::vector<double>> rows(n);
        for (std::size_t i = 0; i < n && ok; ++i) {
            rows[i] = window_row(space, static_cast<long>(i), beta);
            ok = !rows[i].empty();
        }
        if (ok) {
            for (std::size_t k = 0; k < nu; ++k) {
                const auto [i, d] = unknowns[k];
                const std::size_t j = space.wrap(static_cast<long>(i) + d);
                const auto b = static_cast<long>(beta);
                // average the two windows that see the entry (i, j)
                target(static_cast<Eigen::Index>(k)) =
                    0.5 * (rows[i][static_cast<std::size_t>(b + d)] + rows[j][static_cast<std::size_t>(b - d)]);
            }
            const Eigen::MatrixXd z = q.rightCols(nz);
            s += z * (z.transpose() * (target - s));
            fitted = true;
        }
    }
    if (nz > 0 && !fitted) {
        const Eigen::MatrixXd z = q.rightCols(nz);
        const auto gd = gram.to_dense();
        const long pl = p;
        std::vector<std::pair<std::size_t, std::size_t>> cells;  // (row r, column c)
        std::vector<char> mark(n);
        for (std::size_t r = 0; r < n; ++r) {
            std::fill(mark.begin(), mark.end(), 0);
            for (const auto& [k, off] : row_entries[r]) {
                const long b = static_cast<long>(r) + off;
                for (long c = b - pl; c <= b + pl; ++c) {
                    if (!periodic && (c < 0 || c >= static_cast<long>(n))) continue;
                    mark[space.wrap(c)] = 1;
                }
            }
            for (std::size_t c = 0; c < n; ++c)
                if (mark[c]) cells.push_back({r, c});
        }
        Eigen::MatrixXd lz = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cells.size()), nz);
        Eigen::VectorXd target(static_cast<Eigen::Index>(cells.size()));
        for (std::size_t row = 0; row < cells.size(); ++row) {
            const auto [r, c] = cells[row];
            double sg = 0.0;
            for (const auto& [k, off] : row_entries[r]) {
                const double g = gd(space.wrap(static_cast<long>(r) + off), c);
                if (g == 0.0) continue;
                sg += g * s(static_cast<Eigen::Index>(k));
                lz.row(static_cast<Eigen::Index>(row)) += g * z.row(static_cast<Eigen::Index>(k));
            }
            target(static_cast<Eigen::Index>(row)) = (r == c ? 1.0 : 0.0) - sg;
        }
        s += z * lz.colPivHouseholderQr().solve(target);
    }
    out = BandedSymmetricMatrix(n, beta, periodic);
    for (std::size_t k = 0; k < nu; ++k) {
        const auto [i, d] = unknowns[k];
        out.set(i, space.wrap(static_cast<long>(i) + d), s(static_cast<Eigen::Index>(k)));
    }
    return true;
}

double smallest_eigenvalue(const BandedSymmetricMatrix& s) {
    const auto d = s.to_dense();
    const auto n = static_cast<Eigen::Index>(d.rows());
    Eigen::MatrixXd e(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) e(i, j) = d(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

}  // namespace

BandedSymmetricMatrix grammian(const SplineSpace& space, const ScalarField1D& weight, int points_per_element) {
    const int p = space.degree();
    const BasisTable table(space, default_points(space, points_per_element, static_cast<bool>(weight)), 0);
    BandedSymmetricMatrix g(space.dimension(), static_cast<std::size_t>(p), space.periodic());
    for (std::size_t q = 0; q < table.size(); ++q) {
        double w = table.weight(q);
        if (weight) {
            const double c = weight(table.x(q));
            if (!(c > 0.0)) throw NumericalError("grammian: non-positive weight at x = " + std::to_string(table.x(q)));
            w *= c;
        }
        for (int k = 0; k <= p; ++k)
            for (int l = k; l <= p; ++l)
                g.add(table.index(q, k), table.index(q, l), w * table.value(q, k) * table.value(q, l));
    }
    return g;
}

DenseMatrix exact_dual_coeffs(const SplineSpace& space, std::size_t cap) {
    if (space.dimension() > cap)
        throw std::invalid_argument("exact_dual_coeffs: dimension " + std::to_string(space.dimension()) +
                                    " exceeds oracle cap " + std::to_string(cap));
    return spd_inverse(grammian(space).to_dense());
}

ApproximateDualBasis::ApproximateDualBasis(SplineSpace space, BandedSymmetricMatrix gram, BandedSymmetricMatrix coeffs)
    : space_(std::move(space)), g_(std::move(gram)), s_(std::move(coeffs)) {}

DenseMatrix ApproximateDualBasis::coupling() const { return s_.to_dense() * g_.to_dense(); }

ApproximateDualBasis approximate_dual(const SplineSpace& space, int half_bandwidth) {
    const int p = space.degree();
    const int beta0 = half_bandwidth < 0 ? p : half_bandwidth;
    if (beta0 < p) throw std::invalid_argument("approximate_dual: half-bandwidth must be at least p");
    auto gram = grammian(space);
    const std::size_t n = space.dimension();
    for (int beta = beta0; beta <= std::max(beta0, 2 * p); ++beta) {
        auto b = static_cast<std::size_t>(beta);
        if (space.periodic() && n <= 2 * b) break;
        if (!space.periodic()) b = std::min(b, n - 1);
        BandedSymmetricMatrix s;
        if (!solve_band(space, gram, b, s)) continue;
        try {
            SpdSolver check(s);
        } catch (const NumericalError&) {
            std::ostringstream msg;
            msg << "approximate_dual: S is not SPD (smallest eigenvalue " << smallest_eigenvalue(s) << ")";
            throw NumericalError(msg.str());
        }
        return {space, std::move(gram), std::move(s)};
    }
    throw NumericalError("approximate_dual: reproduction constraints infeasible for half-bandwidth up to " +
                         std::to_string(std::max(beta0, 2 * p)));
}

ConstrainedDual::ConstrainedDual(const ApproximateDualBasis& basis, bool left, bool right)
    : space_(basis.space()), s_(basis.S()), left_(left), right_(right) {
    const std::size_t n = s_.dimension();
    if ((left || right) && space_.periodic()) throw std::invalid_argument("constrain_dual: periodic direction");
    if (left && right && n < 3) throw std::invalid_argument("constrain_dual: too few functions");
    for (std::size_t i = 0; i < n; ++i)
        if (!(left && i == 0) && !(right && i + 1 == n)) free_.push_back(i);
    if (!left && !right) return;

    const SpdSolver solver(s_);
    std::vector<std::size_t> ends;
    if (left) ends.push_back(0);
    if (right) ends.push_back(n - 1);
    std::vector<double> e(n), x(n);
    for (const std::size_t end : ends) {
        std::fill(e.begin(), e.end(), 0.0);
        e[end] = 1.0;
        // diagonal entry of the (rank-two modified) customized mass is unchanged
        const double g = solver.solve(e)[end];
        apply_full(e, x);
        const double s = x[end];
        const double det = g * s;
        if (!(std::abs(det) > 1e-300) || !std::isfinite(det))
            throw NumericalError("constrain_dual: singular capacitance matrix");
        // capacitance C = [[g s, s], [-g (1 - g s), g s]]
        const double c00 = g * s, c01 = s, c10 = -g * (1.0 - g * s), c11 = g * s;
        const double i00 = c11 / det, i01 = -c01 / det, i10 = -c10 / det, i11 = c00 / det;
        RankTwo u;
        u.p0.resize(n);
        u.p1.resize(n);
        u.q0.resize(n);
        u.q1.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double su0 = e[i] - g * x[i];  // (S U) column 0
            const double su1 = -x[i];            // (S U) column 1
            u.p0[i] = su0 * i00 + su1 * i10;
            u.p1[i] = su0 * i01 + su1 * i11;
            u.q0[i] = -x[i];
            u.q1[i] = e[i] - g * x[i];
        }
        updates_.push_back(std::move(u));
    }
}

void ConstrainedDual::apply_full(std::span<const double> x, std::span<double> out) const {
    s_.multiply(x, out);
    for (const auto& u : updates_) {
        double a0 = 0.0, a1 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            a0 += u.q0[i] * x[i];
            a1 += u.q1[i] * x[i];
        }
        for (std::size_t i = 0; i < x.size(); ++i) out[i] -= u.p0[i] * a0 + u.p1[i] * a1;
    }
}

void ConstrainedDual::apply(std::span<const double> x, std::span<double> out) const {
    if (x.size() != free_.size() || out.size() != free_.size())
        throw std::invalid_argument("ConstrainedDual::apply: size mismatch");
    const std::size_t n = s_.dimension();
    std::vector<double> full(n, 0.0), res(n);
    for (std::size_t k = 0; k < free_.size(); ++k) full[free_[k]] = x[k];
    apply_full(full, res);
    for (std::size_t k = 0; k < free_.size(); ++k) out[k] = res[free_[k]];
}

std::vector<double> ConstrainedDual::apply(std::span<const double> x) const {
    std::vector<double> out(free_.size());
    apply(x, out);
    return out;
}

DenseMatrix ConstrainedDual::to_dense() const {
    const std::size_t m = free_.size();
    DenseMatrix d(m, m);
    std::vector<double> e(m), col(m);
    for (std::size_t j = 0; j < m; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        apply(e, col);
        for (std::size_t i = 0; i < m; ++i) d(i, j) = col[i];
    }
    return d;
}

std::size_t ConstrainedDual::storage() const noexcept { return s_.storage() + 4 * s_.dimension() * updates_.size(); }

std::vector<double> moments(const SplineSpace& space, const ScalarField1D& f, const ScalarField1D& weight,
                            int points_per_element) {
    const int p = space.degree();
    const BasisTable table(space, points_per_element > 0 ? points_per_element : p + 2, 0);
    std::vector<double> m(space.dimension(), 0.0);
    for (std::size_t q = 0; q < table.size(); ++q) {
        const double x = table.x(q);
        double fw = f(x) * table.weight(q);
        if (weight) fw *= weight(x);
        for (int k = 0; k <= p; ++k) m[table.index(q, k)] += fw * table.value(q, k);
    }
    return m;
}

std::vector<double> quasi_project(const ApproximateDualBasis& basis, const ScalarField1D& f,
                                  const ScalarField1D& weight) {
    const auto m = moments(basis.space(), f, weight);
    std::vector<double> u(m.size());
    basis.apply(m, u);
    return u;
}

std::vector<double> quasi_project(const ConstrainedDual& dual, const ScalarField1D& f, const ScalarField1D& weight) {
    const auto m = moments(dual.space(), f, weight);
    const auto& free = dual.free_indices();
    std::vector<double> mf(free.size()), uf(free.size());
    for (std::size_t k = 0; k < free.size(); ++k) mf[k] = m[free[k]];
    dual.apply(mf, uf);
    std::vector<double> u(m.size(), 0.0);
    for (std::size_t k = 0; k < free.size(); ++k) u[free[k]] = uf[k];
    return u;
}

void dump_dual(const ApproximateDualBasis& basis, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const char* name, const DenseMatrix& m) {
        std::ofstream os(dir / name);
        if (!os) throw std::runtime_error("dump_dual: cannot write " + (dir / name).string());
        write_matrix(os, m);
    };
    write("G.txt", basis.G().to_dense());
    write("S.txt", basis.S().to_dense());
    write("C.txt", basis.coupling());
}

}  // namespace iga
