#pragma once

#include <cstddef>
#include <vector>

namespace branchlab {

using Vec = std::vector<double>;

// Dense row-major matrix sized for this library's regime (p <= ~16).
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    static Mat identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

    Mat transpose() const;

    Mat& operator+=(const Mat& o);
    Mat& operator-=(const Mat& o);
    Mat& operator*=(double s);

    friend Mat operator+(Mat a, const Mat& b) { return a += b; }
    friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
    friend Mat operator*(Mat a, double s) { return a *= s; }
    friend Mat operator*(double s, Mat a) { return a *= s; }

    bool operator==(const Mat& o) const = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

Mat operator*(const Mat& a, const Mat& b);
Vec operator*(const Mat& a, const Vec& x);

// x^T A row-vector product, returned as a Vec of length A.cols().
Vec left_mul(const Vec& x, const Mat& a);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
Vec operator+(const Vec& a, const Vec& b);
Vec operator-(const Vec& a, const Vec& b);
Vec operator*(double s, const Vec& a);

// A^k by repeated multiplication; exponents here are small (<= a few hundred).
Mat mat_pow(const Mat& a, unsigned k);

// Outer product x y^T.
Mat outer(const Vec& x, const Vec& y);

double max_abs(const Mat& a);
double max_abs_diff(const Mat& a, const Mat& b);
double max_abs_diff(const Vec& a, const Vec& b);

// Spectral norm (largest singular value): power iteration on A^T A with two
// fixed deterministic starts, relative tolerance 1e-10 on the Rayleigh
// quotient, iteration cap 10^5.
double spectral_norm(const Mat& a);

// Symmetric eigendecomposition via cyclic Jacobi sweeps: A = Q diag(lam) Q^T.
// Requires a square symmetric input (caller's responsibility); deterministic.
void jacobi_eigh(const Mat& a, Mat& q, Vec& lam);

}  // namespace branchlab
