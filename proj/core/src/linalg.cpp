#include "branchlab/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "branchlab/error.hpp"

namespace branchlab {

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::transpose() const {
    Mat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Mat& Mat::operator+=(const Mat& o) {
    assert(rows_ == o.rows_ && cols_ == o.cols_);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

Mat& Mat::operator-=(const Mat& o) {
    assert(rows_ == o.rows_ && cols_ == o.cols_);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

Mat& Mat::operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
}

Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) throw Error("dimension mismatch: matrix product");
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Vec operator*(const Mat& a, const Vec& x) {
    if (a.cols() != x.size()) throw Error("dimension mismatch: matrix-vector product");
    Vec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Vec left_mul(const Vec& x, const Mat& a) {
    if (a.rows() != x.size()) throw Error("dimension mismatch: vector-matrix product");
    Vec y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += xi * a(i, j);
    }
    return y;
}

double dot(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec operator+(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

Vec operator-(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

Vec operator*(double s, const Vec& a) {
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = s * a[i];
    return c;
}

Mat mat_pow(const Mat& a, unsigned k) {
    Mat r = Mat::identity(a.rows());
    for (unsigned i = 0; i < k; ++i) r = r * a;
    return r;
}

Mat outer(const Vec& x, const Vec& y) {
    Mat m(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) m(i, j) = x[i] * y[j];
    return m;
}

double max_abs(const Mat& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::fabs(v));
    return m;
}

double max_abs_diff(const Mat& a, const Mat& b) {
    assert(a.rows() == b.rows() && a.cols() == b.cols());
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
    return m;
}

double max_abs_diff(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

namespace {

// One power-iteration run on the PSD matrix g from a given start; returns the
// converged Rayleigh quotient (largest eigenvalue reached from this start).
double power_iter_psd(const Mat& g, Vec x) {
    const std::size_t n = g.rows();
    double nx = norm2(x);
    if (nx == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) x[i] /= nx;
    double lam = 0.0;
    for (int it = 0; it < 100000; ++it) {
        Vec y = g * x;
        const double ny = norm2(y);
        if (ny == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) y[i] /= ny;
        const double lam_new = dot(y, g * y);
        if (std::fabs(lam_new - lam) <= 1e-10 * std::max(1.0, std::fabs(lam_new))) return lam_new;
        lam = lam_new;
        x = std::move(y);
    }
    return lam;
}

}  // namespace

double spectral_norm(const Mat& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    const Mat g = a.transpose() * a;
    const std::size_t n = g.rows();
    if (max_abs(g) == 0.0) return 0.0;
    // Two fixed starts guard against a start vector orthogonal to the top
    // eigenspace; take the larger converged value.
    Vec ones(n, 1.0);
    Vec ramp(n);
    for (std::size_t i = 0; i < n; ++i) ramp[i] = 1.0 + 0.37 * static_cast<double>(i);
    const double lam = std::max(power_iter_psd(g, ones), power_iter_psd(g, ramp));
    return std::sqrt(std::max(0.0, lam));
}

void jacobi_eigh(const Mat& a, Mat& q, Vec& lam) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw Error("dimension mismatch: jacobi_eigh needs a square matrix");
    Mat s = a;
    q = Mat::identity(n);
    if (n <= 1) {
        lam.assign(n, n == 1 ? s(0, 0) : 0.0);
        return;
    }
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale += s(i, j) * s(i, j);
    scale = std::sqrt(scale);
    const double tol = (scale == 0.0) ? 0.0 : 1e-15 * scale;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * s(i, j) * s(i, j);
        if (std::sqrt(off) <= tol) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) {
                const double apq = s(p, r);
                if (std::fabs(apq) <= tol / (10.0 * static_cast<double>(n))) continue;
                const double app = s(p, p), aqq = s(r, r);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = ((theta >= 0.0) ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double skp = s(k, p), skr = s(k, r);
                    s(k, p) = c * skp - sn * skr;
                    s(k, r) = sn * skp + c * skr;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double spk = s(p, k), srk = s(r, k);
                    s(p, k) = c * spk - sn * srk;
                    s(r, k) = sn * spk + c * srk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, p), qkr = q(k, r);
                    q(k, p) = c * qkp - sn * qkr;
                    q(k, r) = sn * qkp + c * qkr;
                }
            }
        }
    }
    lam.resize(n);
    for (std::size_t i = 0; i < n; ++i) lam[i] = s(i, i);
}

}  // namespace branchlab
