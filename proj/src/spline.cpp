#include "iga/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace iga {

KnotVector::KnotVector(std::vector<double> knots, int degree) : knots_(std::move(knots)), degree_(degree) {
    if (degree_ < 0) throw std::invalid_argument("KnotVector: negative degree");
    if (knots_.size() < static_cast<std::size_t>(2 * degree_ + 2))
        throw std::invalid_argument("KnotVector: too few knots for degree " + std::to_string(degree_));
    for (std::size_t i = 1; i < knots_.size(); ++i)
        if (knots_[i] < knots_[i - 1]) throw std::invalid_argument("KnotVector: knots must be non-decreasing");
}

std::vector<double> KnotVector::breakpoints() const {
    std::vector<double> out;
    for (double k : knots_)
        if (out.empty() || k > out.back()) out.push_back(k);
    return out;
}

SplineSpace::SplineSpace(KnotVector knots, BoundaryKind kind) : knots_(std::move(knots)), kind_(kind) {
    const int p = knots_.degree();
    if (kind_ == BoundaryKind::clamped) {
        dimension_ = knots_.size() - static_cast<std::size_t>(p) - 1;
        const auto& k = knots_.knots();
        breaks_.assign(k.begin() + p, k.end() - p);
        breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
    } else {
        // extended knots: n + 2p + 1 simple knots, the base period sits at [p, n + p]
        const auto& k = knots_.knots();
        breaks_.assign(k.begin() + p, k.end() - p);
        dimension_ = breaks_.size() - 1;
    }
    if (breaks_.size() < 2) throw std::invalid_argument("SplineSpace: empty domain");
}

double SplineSpace::knot(long i) const {
    if (kind_ == BoundaryKind::clamped) {
        if (i < 0 || i >= static_cast<long>(knots_.size()))
            throw std::out_of_range("SplineSpace::knot: index " + std::to_string(i));
        return knots_[static_cast<std::size_t>(i)];
    }
    const long n = static_cast<long>(dimension_);
    const long p = degree();
    const long shifted = i - p;
    long period = shifted >= 0 ? shifted / n : -((-shifted + n - 1) / n);
    const long local = shifted - period * n;
    return breaks_[static_cast<std::size_t>(local)] + static_cast<double>(period) * (upper() - lower());
}

std::size_t SplineSpace::wrap(long i) const {
    const long n = static_cast<long>(dimension_);
    if (kind_ == BoundaryKind::clamped) {
        if (i < 0 || i >= n) throw std::out_of_range("SplineSpace::wrap: index " + std::to_string(i));
        return static_cast<std::size_t>(i);
    }
    long r = i % n;
    if (r < 0) r += n;
    return static_cast<std::size_t>(r);
}

std::size_t SplineSpace::find_element(double x) const {
    if (x < lower() || x > upper()) throw std::domain_error("x outside spline domain");
    if (x >= breaks_[breaks_.size() - 2]) return breaks_.size() - 2;
    const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    return static_cast<std::size_t>(it - breaks_.begin()) - 1;
}

long SplineSpace::find_span(double x) const {
    const int p = degree();
    if (kind_ == BoundaryKind::periodic) return static_cast<long>(find_element(x)) + p;
    if (x < lower() || x > upper()) throw std::domain_error("x outside spline domain");
    const auto& k = knots_.knots();
    const long n = static_cast<long>(dimension_);
    if (x >= k[static_cast<std::size_t>(n)]) {
        // last nonempty span
        long mu = n - 1;
        while (mu > p && k[static_cast<std::size_t>(mu)] == k[static_cast<std::size_t>(mu + 1)]) --mu;
        return mu;
    }
    const auto it = std::upper_bound(k.begin(), k.end(), x);
    return static_cast<long>(it - k.begin()) - 1;
}

SplineSpace make_space(std::span<const double> breakpoints, int degree, std::span<const int> regularity,
                       BoundaryKind kind) {
    if (degree < 0) throw std::invalid_argument("make_space: negative degree");
    if (breakpoints.size() < 2) throw std::invalid_argument("make_space: need at least two breakpoints");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
        if (!(breakpoints[i] > breakpoints[i - 1]))
            throw std::invalid_argument("make_space: breakpoints must be strictly increasing");
    const std::size_t n_interior = breakpoints.size() - 2;
    if (!regularity.empty() && regularity.size() != n_interior)
        throw std::invalid_argument("make_space: expected " + std::to_string(n_interior) + " regularity values");
    auto reg = [&](std::size_t k) { return regularity.empty() ? degree - 1 : regularity[k]; };
    for (std::size_t k = 0; k < n_interior; ++k) {
        const int r = reg(k);
        // r = -1 (discontinuous) is accepted so that p = 0 spaces can be built
        if (r < -1 || r > degree - 1 || (r < 0 && degree > 0 && !regularity.empty()))
            throw std::invalid_argument("make_space: regularity " + std::to_string(r) + " out of range at breakpoint " +
                                        std::to_string(k + 1));
    }

    const int p = degree;
    std::vector<double> knots;
    if (kind == BoundaryKind::clamped) {
        knots.insert(knots.end(), static_cast<std::size_t>(p + 1), breakpoints.front());
        for (std::size_t k = 0; k < n_interior; ++k)
            knots.insert(knots.end(), static_cast<std::size_t>(p - reg(k)), breakpoints[k + 1]);
        knots.insert(knots.end(), static_cast<std::size_t>(p + 1), breakpoints.back());
        return SplineSpace(KnotVector(std::move(knots), p), kind);
    }

    if (p < 1) throw std::invalid_argument("make_space: periodic spaces need degree >= 1");
    for (std::size_t k = 0; k < n_interior; ++k)
        if (reg(k) != p - 1) throw std::invalid_argument("make_space: periodic spaces need regularity p-1");
    const std::size_t n = breakpoints.size() - 1;
    if (n < static_cast<std::size_t>(p + 1))
        throw std::invalid_argument("make_space: periodic space needs at least p+1 elements");
    const double length = breakpoints.back() - breakpoints.front();
    for (long i = 0; i < static_cast<long>(n) + 2 * p + 1; ++i) {
        const long s = i - p;
        const long period = s >= 0 ? s / static_cast<long>(n) : -1;
        const long local = s - period * static_cast<long>(n);
        knots.push_back(breakpoints[static_cast<std::size_t>(local)] + static_cast<double>(period) * length);
    }
    return SplineSpace(KnotVector(std::move(knots), p), kind);
}

SplineSpace uniform_space(std::size_t num_elements, int degree, BoundaryKind kind, double a, double b) {
    if (num_elements == 0) throw std::invalid_argument("uniform_space: need at least one element");
    std::vector<double> br(num_elements + 1);
    for (std::size_t i = 0; i <= num_elements; ++i)
        br[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(num_elements);
    br.back() = b;
    return make_space(br, degree, {}, kind);
}

BasisEval eval_basis(const SplineSpace& space, double x, int max_deriv) {
    const int p = space.degree();
    if (max_deriv < 0) throw std::invalid_argument("eval_basis: negative derivative order");
    const long mu = space.find_span(x);
    const int nd = std::min(max_deriv, p);

    // Piegl & Tiller, algorithm A2.3
    std::vector<double> left(static_cast<std::size_t>(p + 1)), right(static_cast<std::size_t>(p + 1));
    std::vector<double> ndu(static_cast<std::size_t>((p + 1) * (p + 1)));
    auto NDU = [&](int i, int j) -> double& { return ndu[static_cast<std::size_t>(i * (p + 1) + j)]; };
    NDU(0, 0) = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[static_cast<std::size_t>(j)] = x - space.knot(mu + 1 - j);
        right[static_cast<std::size_t>(j)] = space.knot(mu + j) - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            NDU(j, r) = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
            const double temp = NDU(r, j - 1) / NDU(j, r);
            NDU(r, j) = saved + right[static_cast<std::size_t>(r + 1)] * temp;
            saved = left[static_cast<std::size_t>(j - r)] * temp;
        }
        NDU(j, j) = saved;
    }

    BasisEval out;
    out.first_index = mu - p;
    out.degree = p;
    out.max_deriv = max_deriv;
    out.values.assign(static_cast<std::size_t>((max_deriv + 1) * (p + 1)), 0.0);
    auto OUT = [&](int k, int j) -> double& { return out.values[static_cast<std::size_t>(k * (p + 1) + j)]; };
    for (int j = 0; j <= p; ++j) OUT(0, j) = NDU(j, p);

    std::vector<double> a(static_cast<std::size_t>(2 * (p + 1)));
    auto A = [&](int s, int j) -> double& { return a[static_cast<std::size_t>(s * (p + 1) + j)]; };
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        A(0, 0) = 1.0;
        for (int k = 1; k <= nd; ++k) {
            double d = 0.0;
            const int rk = r - k, pk = p - k;
            if (r >= k) {
                A(s2, 0) = A(s1, 0) / NDU(pk + 1, rk);
                d = A(s2, 0) * NDU(rk, pk);
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                A(s2, j) = (A(s1, j) - A(s1, j - 1)) / NDU(pk + 1, rk + j);
                d += A(s2, j) * NDU(rk + j, pk);
            }
            if (r <= pk) {
                A(s2, k) = -A(s1, k - 1) / NDU(pk + 1, r);
                d += A(s2, k) * NDU(r, pk);
            }
            OUT(k, r) = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int k = 1; k <= nd; ++k) {
        for (int j = 0; j <= p; ++j) OUT(k, j) *= factor;
        factor *= (p - k);
    }
    return out;
}

double eval_single_basis(std::span<const double> t, int p, double x, int deriv) {
    // Cox-de Boor on a single function, derivatives by the standard recurrence
    if (deriv > p) return 0.0;
    if (x < t.front() || x > t[static_cast<std::size_t>(p + 1)]) return 0.0;
    if (deriv > 0) {
        const double d1 = t[static_cast<std::size_t>(p)] - t[0];
        const double d2 = t[static_cast<std::size_t>(p + 1)] - t[1];
        double v = 0.0;
        if (d1 > 0) v += p / d1 * eval_single_basis(t.subspan(0, static_cast<std::size_t>(p + 1)), p - 1, x, deriv - 1);
        if (d2 > 0) v -= p / d2 * eval_single_basis(t.subspan(1, static_cast<std::size_t>(p + 1)), p - 1, x, deriv - 1);
        return v;
    }
    std::vector<double> n(static_cast<std::size_t>(p + 1), 0.0);
    const bool at_end = x == t[static_cast<std::size_t>(p + 1)];
    for (int j = 0; j <= p; ++j) {
        const double lo = t[static_cast<std::size_t>(j)], hi = t[static_cast<std::size_t>(j + 1)];
        if ((x >= lo && x < hi) || (at_end && x == hi && lo < hi)) n[static_cast<std::size_t>(j)] = 1.0;
    }
    if (at_end) {
        // keep only the last nonempty span (closed right end)
        bool found = false;
        for (int j = p; j >= 0; --j) {
            if (found) n[static_cast<std::size_t>(j)] = 0.0;
            if (n[static_cast<std::size_t>(j)] == 1.0) found = true;
        }
    }
    for (int k = 1; k <= p; ++k) {
        for (int j = 0; j <= p - k; ++j) {
            const double tj = t[static_cast<std::size_t>(j)], tjk = t[static_cast<std::size_t>(j + k)];
            const double tj1 = t[static_cast<std::size_t>(j + 1)], tjk1 = t[static_cast<std::size_t>(j + k + 1)];
            double v = 0.0;
            if (tjk > tj) v += (x - tj) / (tjk - tj) * n[static_cast<std::size_t>(j)];
            if (tjk1 > tj1) v += (tjk1 - x) / (tjk1 - tj1) * n[static_cast<std::size_t>(j + 1)];
            n[static_cast<std::size_t>(j)] = v;
        }
    }
    return n[0];
}

std::vector<double> greville(const SplineSpace& space) {
    if (space.periodic()) throw std::invalid_argument("greville: clamped space required");
    const int p = space.degree();
    const auto& t = space.knot_vector();
    std::vector<double> g(space.dimension());
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (p == 0) {
            g[i] = 0.5 * (t[i] + t[i + 1]);
            continue;
        }
        double s = 0.0;
        for (int k = 1; k <= p; ++k) s += t[i + static_cast<std::size_t>(k)];
        g[i] = s / p;
    }
    return g;
}

std::vector<double> monomial_coefficients(const SplineSpace& space, int q) {
    const int p = space.degree();
    if (q < 0 || q > p) throw std::invalid_argument("monomial_coefficients: need 0 <= q <= p");
    if (space.periodic()) throw std::invalid_argument("monomial_coefficients: clamped space required");
    const std::size_t n = space.dimension();
    const auto g = greville(space);

    // Banded collocation system; the B-spline collocation matrix at Greville
    // points is totally positive, so elimination without pivoting is stable.
    const int bw = p;
    const int width = 2 * bw + 1;
    std::vector<double> band(n * static_cast<std::size_t>(width), 0.0);
    auto B = [&](std::size_t i, std::size_t j) -> double& {
        return band[i * static_cast<std::size_t>(width) + (j + static_cast<std::size_t>(bw) - i)];
    };
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ev = eval_basis(space, g[i], 0);
        for (int k = 0; k <= p; ++k) {
            const long j = ev.first_index + k;
            if (std::abs(j - static_cast<long>(i)) > bw) continue;
            B(i, static_cast<std::size_t>(j)) = ev.value(0, k);
        }
        rhs[i] = std::pow(g[i], q);
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double piv = B(k, k);
        if (piv == 0.0) throw std::runtime_error("monomial_coefficients: singular collocation system");
        const std::size_t iend = std::min(n, k + static_cast<std::size_t>(bw) + 1);
        for (std::size_t i = k + 1; i < iend; ++i) {
            const double f = B(i, k) / piv;
            if (f == 0.0) continue;
            for (std::size_t j = k; j < iend; ++j) B(i, j) -= f * B(k, j);
            rhs[i] -= f * rhs[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        double s = rhs[k];
        const std::size_t jend = std::min(n, k + static_cast<std::size_t>(bw) + 1);
        for (std::size_t j = k + 1; j < jend; ++j) s -= B(k, j) * rhs[j];
        rhs[k] = s / B(k, k);
    }
    return rhs;
}

double evaluate(const SplineSpace& space, std::span<const double> coeffs, double x, int deriv) {
    if (coeffs.size() != space.dimension()) throw std::invalid_argument("evaluate: coefficient size mismatch");
    const auto ev = eval_basis(space, x, deriv);
    double s = 0.0;
    for (int k = 0; k <= space.degree(); ++k) s += coeffs[space.wrap(ev.first_index + k)] * ev.value(deriv, k);
    return s;
}

}  // namespace iga
