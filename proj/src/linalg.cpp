#include "iga/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace iga {

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
    if (x.size() != cols_) throw std::invalid_argument("DenseMatrix::multiply: size mismatch");
    std::vector<double> y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        const auto r = row(i);
        for (std::size_t j = 0; j < cols_; ++j) s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

DenseMatrix DenseMatrix::submatrix(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
    DenseMatrix s(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) s(i, j) = (*this)(rows[i], cols[j]);
    return s;
}

double DenseMatrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("DenseMatrix product: size mismatch");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("DenseMatrix difference: size mismatch");
    DenseMatrix c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
    return c;
}

DenseMatrix kronecker(const DenseMatrix& outer, const DenseMatrix& inner) {
    DenseMatrix k(outer.rows() * inner.rows(), outer.cols() * inner.cols());
    for (std::size_t i2 = 0; i2 < outer.rows(); ++i2)
        for (std::size_t j2 = 0; j2 < outer.cols(); ++j2) {
            const double o = outer(i2, j2);
            if (o == 0.0) continue;
            for (std::size_t i1 = 0; i1 < inner.rows(); ++i1)
                for (std::size_t j1 = 0; j1 < inner.cols(); ++j1)
                    k(i2 * inner.rows() + i1, j2 * inner.cols() + j1) = o * inner(i1, j1);
        }
    return k;
}

DenseMatrix cholesky(const DenseMatrix& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("cholesky: matrix not square");
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) throw NumericalError("cholesky: matrix not positive definite (pivot " + std::to_string(j) + ")");
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

std::vector<double> cholesky_solve(const DenseMatrix& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    std::vector<double> x(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x[k];
        x[i] = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
        x[i] = s / l(i, i);
    }
    return x;
}

DenseMatrix spd_inverse(const DenseMatrix& a) {
    const std::size_t n = a.rows();
    const auto l = cholesky(a);
    DenseMatrix inv(n, n);
    std::vector<double> e(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        const auto col = cholesky_solve(l, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    // symmetrize round-off
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) inv(i, j) = inv(j, i) = 0.5 * (inv(i, j) + inv(j, i));
    return inv;
}

DenseMatrix inverse(const DenseMatrix& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("inverse: matrix not square");
    DenseMatrix lu = a;
    DenseMatrix inv = DenseMatrix::identity(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
        if (lu(piv, k) == 0.0) throw NumericalError("inverse: singular matrix");
        if (piv != k)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(lu(k, j), lu(piv, j));
                std::swap(inv(k, j), inv(piv, j));
            }
        const double d = lu(k, k);
        for (std::size_t j = 0; j < n; ++j) {
            lu(k, j) /= d;
            inv(k, j) /= d;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == k) continue;
            const double f = lu(i, k);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                lu(i, j) -= f * lu(k, j);
                inv(i, j) -= f * inv(k, j);
            }
        }
    }
    return inv;
}

void write_matrix(std::ostream& os, const DenseMatrix& m) {
    const auto old = os.precision(17);
    os << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
        os << '\n';
    }
    os.precision(old);
}

DenseMatrix read_matrix(std::istream& is) {
    std::size_t r = 0, c = 0;
    if (!(is >> r >> c)) throw std::runtime_error("read_matrix: missing header");
    DenseMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            if (!(is >> m(i, j))) throw std::runtime_error("read_matrix: truncated data");
    return m;
}

BandedSymmetricMatrix::BandedSymmetricMatrix(std::size_t n, std::size_t half_bandwidth, bool periodic)
    : n_(n), beta_(half_bandwidth), periodic_(periodic), band_(n * (half_bandwidth + 1), 0.0) {
    if (periodic_ && n_ <= 2 * beta_)
        throw std::invalid_argument("BandedSymmetricMatrix: periodic pattern needs N > 2*beta");
}

long BandedSymmetricMatrix::offset(std::size_t i, std::size_t j) const {
    long d = static_cast<long>(j) - static_cast<long>(i);
    if (periodic_) {
        const long n = static_cast<long>(n_);
        d %= n;
        if (d < 0) d += n;
        if (d > n / 2) d -= n;
    }
    return d;
}

bool BandedSymmetricMatrix::in_band(std::size_t i, std::size_t j) const {
    return std::abs(offset(i, j)) <= static_cast<long>(beta_);
}

double BandedSymmetricMatrix::at(std::size_t i, std::size_t j) const {
    long d = offset(i, j);
    if (std::abs(d) > static_cast<long>(beta_)) return 0.0;
    if (d < 0) {
        std::swap(i, j);
        d = -d;
    }
    return band_[i * (beta_ + 1) + static_cast<std::size_t>(d)];
}

void BandedSymmetricMatrix::add(std::size_t i, std::size_t j, double v) {
    long d = offset(i, j);
    if (std::abs(d) > static_cast<long>(beta_)) throw std::out_of_range("BandedSymmetricMatrix::add outside band");
    if (d < 0) {
        std::swap(i, j);
        d = -d;
    }
    band_[i * (beta_ + 1) + static_cast<std::size_t>(d)] += v;
}

void BandedSymmetricMatrix::set(std::size_t i, std::size_t j, double v) {
    long d = offset(i, j);
    if (std::abs(d) > static_cast<long>(beta_)) throw std::out_of_range("BandedSymmetricMatrix::set outside band");
    if (d < 0) {
        std::swap(i, j);
        d = -d;
    }
    band_[i * (beta_ + 1) + static_cast<std::size_t>(d)] = v;
}

void BandedSymmetricMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != n_ || y.size() != n_) throw std::invalid_argument("BandedSymmetricMatrix::multiply: size mismatch");
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        const double* r = band_.data() + i * (beta_ + 1);
        y[i] += r[0] * x[i];
        for (std::size_t k = 1; k <= beta_; ++k) {
            std::size_t j = i + k;
            if (j >= n_) {
                if (!periodic_) break;
                j -= n_;
            }
            y[i] += r[k] * x[j];
            y[j] += r[k] * x[i];
        }
    }
}

std::vector<double> BandedSymmetricMatrix::multiply(std::span<const double> x) const {
    std::vector<double> y(n_);
    multiply(x, y);
    return y;
}

std::vector<double> BandedSymmetricMatrix::row_sums() const {
    std::vector<double> ones(n_, 1.0);
    return multiply(ones);
}

DenseMatrix BandedSymmetricMatrix::to_dense() const {
    DenseMatrix d(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t k = 0; k <= beta_; ++k) {
            std::size_t j = i + k;
            if (j >= n_) {
                if (!periodic_) break;
                j -= n_;
            }
            d(i, j) = d(j, i) = band_[i * (beta_ + 1) + k];
        }
    return d;
}

BandedSymmetricMatrix BandedSymmetricMatrix::principal(std::size_t lo, std::size_t hi) const {
    if (periodic_) throw std::invalid_argument("BandedSymmetricMatrix::principal: periodic pattern");
    if (lo > hi || hi > n_) throw std::out_of_range("BandedSymmetricMatrix::principal: bad range");
    BandedSymmetricMatrix s(hi - lo, beta_);
    for (std::size_t i = lo; i < hi; ++i)
        for (std::size_t k = 0; k <= beta_ && i + k < hi; ++k)
            s.band_[(i - lo) * (beta_ + 1) + k] = band_[i * (beta_ + 1) + k];
    return s;
}

SpdSolver::SpdSolver(const BandedSymmetricMatrix& a) : n_(a.dimension()), beta_(a.half_bandwidth()) {
    if (a.periodic()) {
        dense_ = true;
        dense_factor_ = cholesky(a.to_dense());
        return;
    }
    const std::size_t w = beta_ + 1;
    band_.assign(n_ * w, 0.0);
    // L(i, j) stored at band_[i*w + (j - i + beta)]
    auto L = [&](std::size_t i, std::size_t j) -> double& { return band_[i * w + (j + beta_ - i)]; };
    for (std::size_t j = 0; j < n_; ++j) {
        const std::size_t k0 = j > beta_ ? j - beta_ : 0;
        double d = a.at(j, j);
        for (std::size_t k = k0; k < j; ++k) d -= L(j, k) * L(j, k);
        if (!(d > 0.0))
            throw NumericalError("band Cholesky: matrix not positive definite (pivot " + std::to_string(j) + ")");
        const double ljj = std::sqrt(d);
        L(j, j) = ljj;
        const std::size_t iend = std::min(n_, j + beta_ + 1);
        for (std::size_t i = j + 1; i < iend; ++i) {
            const std::size_t kk0 = i > beta_ ? i - beta_ : 0;
            double s = a.at(i, j);
            for (std::size_t k = std::max(k0, kk0); k < j; ++k) s -= L(i, k) * L(j, k);
            L(i, j) = s / ljj;
        }
    }
}

void SpdSolver::solve_in_place(std::span<double> x) const {
    if (x.size() != n_) throw std::invalid_argument("SpdSolver::solve: size mismatch");
    if (dense_) {
        const auto y = cholesky_solve(dense_factor_, x);
        std::copy(y.begin(), y.end(), x.begin());
        return;
    }
    const std::size_t w = beta_ + 1;
    auto L = [&](std::size_t i, std::size_t j) { return band_[i * w + (j + beta_ - i)]; };
    for (std::size_t i = 0; i < n_; ++i) {
        double s = x[i];
        const std::size_t k0 = i > beta_ ? i - beta_ : 0;
        for (std::size_t k = k0; k < i; ++k) s -= L(i, k) * x[k];
        x[i] = s / L(i, i);
    }
    for (std::size_t i = n_; i-- > 0;) {
        double s = x[i];
        const std::size_t kend = std::min(n_, i + beta_ + 1);
        for (std::size_t k = i + 1; k < kend; ++k) s -= L(k, i) * x[k];
        x[i] = s / L(i, i);
    }
}

std::vector<double> SpdSolver::solve(std::span<const double> b) const {
    std::vector<double> x(b.begin(), b.end());
    solve_in_place(x);
    return x;
}

std::vector<double> jacobi_eigenvalues(DenseMatrix a, double off_tolerance, int max_sweeps) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("jacobi_eigenvalues: matrix not square");
    double total = 0.0;
    for (double v : a.data()) total += v * v;
    const double target = off_tolerance * std::sqrt(total);
    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };
    int sweep = 0;
    for (; sweep < max_sweeps && off_norm() > target; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p), aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
            }
    }
    if (off_norm() > target) throw NumericalError("jacobi_eigenvalues: no convergence in " + std::to_string(max_sweeps) + " sweeps");
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace iga
