#include "iga/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace iga {

QuadratureRule gauss_rule(int n) {
    if (n < 1 || n > 64) throw std::invalid_argument("gauss_rule: n must be in [1, 64], got " + std::to_string(n));
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const int m = (n + 1) / 2;
    auto legendre = [n](double z) {
        double prev = 1.0, cur = z;  // P_{k-1}, P_k
        for (int k = 2; k <= n; ++k) {
            const double next = ((2.0 * k - 1.0) * z * cur - (k - 1.0) * prev) / k;
            prev = cur;
            cur = next;
        }
        const double deriv = n * (z * cur - prev) / (z * z - 1.0);
        return std::pair{cur, deriv};
    };
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [pn, dpn] = legendre(z);
            const double dz = pn / dpn;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double dp = legendre(z).second;
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -z;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = z;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

BasisTable::BasisTable(const SplineSpace& space, int points_per_element, int max_deriv)
    : space_(space), p_(space.degree()), nq_(points_per_element), nd_(max_deriv) {
    const auto rule = gauss_rule(nq_);
    const auto& br = space.breakpoints();
    const std::size_t ne = br.size() - 1;
    const std::size_t total = ne * static_cast<std::size_t>(nq_);
    x_.reserve(total);
    w_.reserve(total);
    first_.reserve(total);
    vals_.reserve(total * static_cast<std::size_t>((nd_ + 1) * (p_ + 1)));
    for (std::size_t e = 0; e < ne; ++e) {
        const double a = br[e], b = br[e + 1];
        for (int q = 0; q < nq_; ++q) {
            const double x = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[static_cast<std::size_t>(q)];
            const auto ev = eval_basis(space, x, nd_);
            x_.push_back(x);
            w_.push_back(0.5 * (b - a) * rule.weights[static_cast<std::size_t>(q)]);
            first_.push_back(ev.first_index);
            vals_.insert(vals_.end(), ev.values.begin(), ev.values.end());
        }
    }
}

double integrate_1d(const SplineSpace& space, const Integrand1D& f, int points_per_element) {
    const int nq = points_per_element > 0 ? points_per_element : space.degree() + 1;
    const auto rule = gauss_rule(nq);
    const auto& br = space.breakpoints();
    double sum = 0.0;
    for (std::size_t e = 0; e + 1 < br.size(); ++e) {
        const double a = br[e], b = br[e + 1];
        double local = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double x = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[q];
            local += rule.weights[q] * f(x, eval_basis(space, x, 1));
        }
        sum += 0.5 * (b - a) * local;
    }
    return sum;
}

std::vector<double> integrate_1d_vector(const SplineSpace& space,
                                        const std::function<double(double, int, const BasisEval&)>& f,
                                        int points_per_element) {
    const int nq = points_per_element > 0 ? points_per_element : space.degree() + 1;
    BasisTable table(space, nq, 0);
    std::vector<double> out(space.dimension(), 0.0);
    for (std::size_t q = 0; q < table.size(); ++q) {
        const auto ev = eval_basis(space, table.x(q), 1);
        for (int k = 0; k <= space.degree(); ++k) out[table.index(q, k)] += table.weight(q) * f(table.x(q), k, ev);
    }
    return out;
}

double integrate_2d(const SplineSpace& s1, const SplineSpace& s2, const std::function<double(double, double)>& f,
                    int points_per_element) {
    const int nq1 = points_per_element > 0 ? points_per_element : s1.degree() + 1;
    const int nq2 = points_per_element > 0 ? points_per_element : s2.degree() + 1;
    const auto r1 = gauss_rule(nq1), r2 = gauss_rule(nq2);
    const auto& b1 = s1.breakpoints();
    const auto& b2 = s2.breakpoints();
    double sum = 0.0;
    for (std::size_t e2 = 0; e2 + 1 < b2.size(); ++e2) {
        const double h2 = b2[e2 + 1] - b2[e2];
        for (std::size_t q2 = 0; q2 < r2.size(); ++q2) {
            const double x2 = b2[e2] + 0.5 * h2 * (1.0 + r2.nodes[q2]);
            const double w2 = 0.5 * h2 * r2.weights[q2];
            for (std::size_t e1 = 0; e1 + 1 < b1.size(); ++e1) {
                const double h1 = b1[e1 + 1] - b1[e1];
                for (std::size_t q1 = 0; q1 < r1.size(); ++q1) {
                    const double x1 = b1[e1] + 0.5 * h1 * (1.0 + r1.nodes[q1]);
                    sum += w2 * 0.5 * h1 * r1.weights[q1] * f(x1, x2);
                }
            }
        }
    }
    return sum;
}

}  // namespace iga
