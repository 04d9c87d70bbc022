#include "iga/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "iga/errors.hpp"
#include "iga/quadrature.hpp"

namespace iga {

namespace {

double bessel_series(int n, double x) {
    const double half = 0.5 * x;
    double term = 1.0;
    for (int k = 1; k <= n; ++k) term *= half / k;
    double sum = term;
    const double q = -half * half;
    for (int k = 1; k < 200; ++k) {
        term *= q / (static_cast<double>(k) * (k + n));
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

double bessel_miller(int n, double x) {
    // Start index well beyond max(n, x) so that the dominant solution has
    // decayed; even, so the normalization sum closes on J_0.
    const int top = std::max(n, static_cast<int>(x));
    int m = top + 20 + static_cast<int>(std::sqrt(40.0 * top));
    m += m % 2;
    double jp1 = 0.0, j = 1e-300, result = 0.0, norm = 0.0;
    for (int k = m; k >= 1; --k) {
        const double jm1 = 2.0 * k / x * j - jp1;
        jp1 = j;
        j = jm1;
        if (k - 1 == n) result = j;
        if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * j;
        if (std::abs(j) > 1e250) {  // rescale to avoid overflow
            j *= 1e-250;
            jp1 *= 1e-250;
            result *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += j;  // J_0 term
    return result / norm;
}

}  // namespace

double bessel_j(int n, double x) {
    if (n < 0 || x < 0.0) throw std::invalid_argument("bessel_j: requires n >= 0 and x >= 0");
    if (x == 0.0) return n == 0 ? 1.0 : 0.0;
    return x < 5.0 ? bessel_series(n, x) : bessel_miller(n, x);
}

double bessel_zero(int n, int k) {
    if (k < 1) throw std::invalid_argument("bessel_zero: k must be at least 1");
    if (n < 0) throw std::invalid_argument("bessel_zero: n must be non-negative");
    const double step = std::numbers::pi / 4.0;
    const double x_end = n + std::numbers::pi * (k + 4) + 10.0;
    double lo = std::max(static_cast<double>(n), step);
    double f_lo = bessel_j(n, lo);
    int found = 0;
    for (double hi = lo + step; hi <= x_end; hi += step) {
        const double f_hi = bessel_j(n, hi);
        if (f_lo == 0.0 || (f_lo < 0.0) != (f_hi < 0.0)) {
            if (++found == k) {
                double l = lo, h = hi, fl = f_lo;
                while (h - l > 1e-12) {
                    const double mid = 0.5 * (l + h);
                    const double fm = bessel_j(n, mid);
                    if ((fm < 0.0) == (fl < 0.0)) {
                        l = mid;
                        fl = fm;
                    } else {
                        h = mid;
                    }
                }
                return 0.5 * (l + h);
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
    throw NumericalError("bessel_zero: zero not bracketed in the scan window");
}

double ManufacturedSolution::period() const { return 2.0 * std::numbers::pi / omega; }

double ManufacturedSolution::value(double r, double theta, double t) const {
    return bessel_j(wavenumber, r) * std::cos(omega * t) * std::cos(wavenumber * theta);
}

double ManufacturedSolution::velocity(double r, double theta, double t) const {
    return -omega * bessel_j(wavenumber, r) * std::sin(omega * t) * std::cos(wavenumber * theta);
}

double ManufacturedSolution::acceleration(double r, double theta, double t) const {
    return -omega * omega * value(r, theta, t);
}

double ManufacturedSolution::value_xy(double x, double y, double t) const {
    return value(std::hypot(x, y), std::atan2(y, x), t);
}

double ManufacturedSolution::velocity_xy(double x, double y, double t) const {
    return velocity(std::hypot(x, y), std::atan2(y, x), t);
}

ManufacturedSolution annulus_solution() {
    ManufacturedSolution s;
    s.wavenumber = 4;
    s.a = bessel_zero(4, 2);
    s.b = bessel_zero(4, 4);
    s.omega = s.a;
    s.kappa = s.omega * s.omega;
    return s;
}

double string_frequency(int k) {
    if (k < 1) throw std::invalid_argument("string_frequency: k must be at least 1");
    return k * std::numbers::pi;
}

double l2_error(const DiscreteSystem& system, std::span<const double> coefficients, const PhysicalField& exact,
                int points_per_element) {
    if (coefficients.size() != system.full_size())
        throw std::invalid_argument("l2_error: coefficient vector does not match the full grid");
    const int pmax = std::max(system.space(0).degree(), system.space(1).degree());
    if (points_per_element == 0) points_per_element = pmax + 3;
    if (points_per_element < pmax + 2) throw std::invalid_argument("l2_error: quadrature order below p + 2");
    const BasisTable t1(system.space(0), points_per_element, 0);
    const BasisTable t2(system.space(1), points_per_element, 0);
    const int p1 = t1.degree(), p2 = t2.degree();
    const std::size_t n1 = system.n1();
    const auto& map = system.map();

    double err2 = 0.0, ref2 = 0.0;
    for (std::size_t q2 = 0; q2 < t2.size(); ++q2) {
        for (std::size_t q1 = 0; q1 < t1.size(); ++q1) {
            double uh = 0.0;
            for (int k2 = 0; k2 <= p2; ++k2) {
                const double b2 = t2.value(q2, k2);
                const std::size_t row = t2.index(q2, k2) * n1;
                double inner = 0.0;
                for (int k1 = 0; k1 <= p1; ++k1) inner += t1.value(q1, k1) * coefficients[row + t1.index(q1, k1)];
                uh += b2 * inner;
            }
            const double x1 = t1.x(q1), x2 = t2.x(q2);
            const Vec2 xy = map.value(x1, x2);
            const double u = exact(xy[0], xy[1]);
            const double w = t1.weight(q1) * t2.weight(q2) * std::abs(det(map.jacobian(x1, x2)));
            err2 += w * (uh - u) * (uh - u);
            ref2 += w * u * u;
        }
    }
    if (!(ref2 > 0.0)) throw NumericalError("l2_error: exact field has zero norm");
    return std::sqrt(err2 / ref2);
}

}  // namespace iga
