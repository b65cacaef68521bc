#include <doctest.h>

#include <cmath>

#include "branchlab/linalg.hpp"

using namespace branchlab;

TEST_SUITE("linalg") {

TEST_CASE("matrix product and transpose") {
    Mat a(2, 3);
    a(0, 0) = 1; a(0, 1) = 2; a(0, 2) = 3;
    a(1, 0) = 4; a(1, 1) = 5; a(1, 2) = 6;
    Mat b(3, 2);
    b(0, 0) = 7;  b(0, 1) = 8;
    b(1, 0) = 9;  b(1, 1) = 10;
    b(2, 0) = 11; b(2, 1) = 12;

    Mat c = a * b;
    REQUIRE(c.rows() == 2);
    REQUIRE(c.cols() == 2);
    CHECK(c(0, 0) == 58);
    CHECK(c(0, 1) == 64);
    CHECK(c(1, 0) == 139);
    CHECK(c(1, 1) == 154);

    Mat at = a.transpose();
    REQUIRE(at.rows() == 3);
    REQUIRE(at.cols() == 2);
    CHECK(at(2, 1) == 6);
    CHECK(at(0, 1) == 4);
}

TEST_CASE("matrix-vector products from both sides") {
    Mat a(2, 2);
    a(0, 0) = 0; a(0, 1) = 1;
    a(1, 0) = 1; a(1, 1) = 0;
    Vec x{2.0, 3.0};

    Vec y = a * x;
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 2.0);

    Vec z = left_mul(x, a);  // x^T a
    CHECK(z[0] == 3.0);
    CHECK(z[1] == 2.0);

    Mat g(2, 2);
    g(0, 0) = 1; g(0, 1) = 2;
    g(1, 0) = 3; g(1, 1) = 4;
    Vec w = left_mul(x, g);
    CHECK(w[0] == 2.0 * 1 + 3.0 * 3);
    CHECK(w[1] == 2.0 * 2 + 3.0 * 4);
}

TEST_CASE("identity and powers") {
    Mat m(2, 2);
    m(0, 0) = 0; m(0, 1) = 1;
    m(1, 0) = 1; m(1, 1) = 0;

    Mat i = Mat::identity(2);
    CHECK(max_abs_diff(mat_pow(m, 0), i) == 0.0);
    CHECK(max_abs_diff(mat_pow(m, 1), m) == 0.0);
    CHECK(max_abs_diff(mat_pow(m, 2), i) == 0.0);
    CHECK(max_abs_diff(mat_pow(m, 7), m) == 0.0);

    Mat f(2, 2);
    f(0, 0) = 1; f(0, 1) = 1;
    f(1, 0) = 1; f(1, 1) = 0;
    Mat f10 = mat_pow(f, 10);
    // Fibonacci: F_11 = 89, F_10 = 55, F_9 = 34.
    CHECK(f10(0, 0) == 89.0);
    CHECK(f10(0, 1) == 55.0);
    CHECK(f10(1, 0) == 55.0);
    CHECK(f10(1, 1) == 34.0);
}

TEST_CASE("dot, norm, outer") {
    Vec x{1.0, 2.0, 2.0};
    CHECK(dot(x, x) == 9.0);
    CHECK(norm2(x) == 3.0);

    Vec u{1.0, 2.0};
    Vec v{3.0, 4.0};
    Mat o = outer(u, v);
    CHECK(o(0, 0) == 3.0);
    CHECK(o(0, 1) == 4.0);
    CHECK(o(1, 0) == 6.0);
    CHECK(o(1, 1) == 8.0);
}

TEST_CASE("spectral norm matches known values") {
    Mat d(2, 2);
    d(0, 0) = 3; d(0, 1) = 0;
    d(1, 0) = 0; d(1, 1) = -5;
    CHECK(spectral_norm(d) == doctest::Approx(5.0).epsilon(1e-9));

    // Rank-one uv^T has spectral norm |u||v|.
    Vec u{1.0, 2.0};
    Vec v{2.0, 1.0, 2.0};
    CHECK(spectral_norm(outer(u, v)) == doctest::Approx(std::sqrt(5.0) * 3.0).epsilon(1e-9));

    Mat z(3, 3);
    CHECK(spectral_norm(z) == 0.0);
}

TEST_CASE("jacobi eigendecomposition on a symmetric matrix") {
    Mat a(2, 2);
    a(0, 0) = 2; a(0, 1) = 1;
    a(1, 0) = 1; a(1, 1) = 2;
    Mat q(2, 2);
    Vec lam;
    jacobi_eigh(a, q, lam);

    // Eigenvalues 1 and 3 in some order; Q lam Q^T reconstructs A.
    double lo = std::min(lam[0], lam[1]);
    double hi = std::max(lam[0], lam[1]);
    CHECK(lo == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hi == doctest::Approx(3.0).epsilon(1e-12));

    Mat rebuilt(2, 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k) rebuilt(i, j) += q(i, k) * lam[k] * q(j, k);
    CHECK(max_abs_diff(rebuilt, a) < 1e-12);

    // Orthogonality.
    Mat qtq = q.transpose() * q;
    CHECK(max_abs_diff(qtq, Mat::identity(2)) < 1e-12);
}

TEST_CASE("vector arithmetic") {
    Vec a{1.0, 2.0};
    Vec b{3.0, 5.0};
    Vec s = a + b;
    CHECK(s[0] == 4.0);
    CHECK(s[1] == 7.0);
    Vec d = b - a;
    CHECK(d[0] == 2.0);
    CHECK(d[1] == 3.0);
    Vec sc = 2.0 * a;
    CHECK(sc[0] == 2.0);
    CHECK(sc[1] == 4.0);
    CHECK(max_abs_diff(d, Vec{0.0, 0.0}) == 3.0);
}

}  // TEST_SUITE
