#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "branchlab/error.hpp"
#include "branchlab/moments.hpp"
#include "branchlab/simulator.hpp"
#include "support/model_zoo.hpp"

using namespace branchlab;

namespace {

// Independent oracle: Var X_k as the explicit double sum
//   sum_{j=1}^{k} m^{k-j} [V_eps + sum_c (E X_{j-1})_c V_c] (m^{k-j})^T,
// evaluated without the O(k) recursion used by the library.
Mat variance_by_double_sum(const BranchingModel& m, std::size_t k) {
    Mat total(m.p, m.p);
    for (std::size_t j = 1; j <= k; ++j) {
        Vec mean_prev = mean_vector(m, j - 1);
        Mat inner = m.V_eps + m.mixed_cov(mean_prev);
        Mat mp = mat_pow(m.m_xi, k - j);
        total += mp * inner * mp.transpose();
    }
    return total;
}

Vec to_vec(const std::vector<std::uint64_t>& x) {
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<double>(x[i]);
    return out;
}

}  // namespace

TEST_SUITE("moments") {

TEST_CASE("mean vector on worked examples") {
    // Single critical type with unit immigration: E X_k = k.
    auto p1 = zoo::p1_poisson();
    for (std::size_t k : {0, 1, 5, 30}) {
        Vec mu = mean_vector(p1, k);
        CHECK(mu[0] == doctest::Approx(static_cast<double>(k)).epsilon(1e-14));
    }

    // 2-cycle with unit immigration: E X_k = (k, k).
    auto two = zoo::two_cycle_poisson();
    Vec mu = mean_vector(two, 7);
    CHECK(mu[0] == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(mu[1] == doctest::Approx(7.0).epsilon(1e-14));

    CHECK(max_abs_diff(mean_vector(two, 0), Vec{0, 0}) == 0.0);
}

TEST_CASE("single-type variance closed form") {
    // For p = 1 critical: Var X_k = k V_eps + V_xi m_eps k(k-1)/2.
    auto p1 = zoo::p1_poisson();
    for (std::size_t k : {1, 5, 10, 30}) {
        double kk = static_cast<double>(k);
        double want = kk * 1.0 + 1.0 * 1.0 * kk * (kk - 1) / 2.0;
        CHECK(variance_matrix(p1, k)(0, 0) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("two-cycle variance closed form") {
    // Swap mean matrix and unit Poisson noise: Var X_k = k(k+1)/2 I.
    auto two = zoo::two_cycle_poisson();
    for (std::size_t k : {1, 2, 3, 10}) {
        double kk = static_cast<double>(k);
        Mat v = variance_matrix(two, k);
        CHECK(v(0, 0) == doctest::Approx(kk * (kk + 1) / 2).epsilon(1e-12));
        CHECK(v(1, 1) == doctest::Approx(kk * (kk + 1) / 2).epsilon(1e-12));
        CHECK(v(0, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("variance recursion agrees with the double-sum oracle") {
    for (const auto& m : zoo::suite()) {
        CAPTURE(m.name);
        for (std::size_t k : {1, 4, 9}) {
            Mat a = variance_matrix(m, k);
            Mat b = variance_by_double_sum(m, k);
            CHECK(max_abs_diff(a, b) < 1e-10 * std::max(1.0, max_abs(a)));
        }
    }
}

TEST_CASE("deterministic model has zero variance") {
    auto det = zoo::deterministic_pair();
    CHECK(max_abs(variance_matrix(det, 25)) == 0.0);
}

TEST_CASE("variance against Monte Carlo at several depths") {
    auto m = zoo::two_cycle_mixed();
    const std::size_t reps = 50000;
    for (std::size_t k : {3, 8}) {
        Vec mean_mc(m.p);
        Mat second(m.p, m.p);
        for (std::size_t rep = 0; rep < reps; ++rep) {
            auto t = simulate_trajectory(m, k, 101, rep);
            Vec x = to_vec(t.states[k]);
            for (std::size_t i = 0; i < m.p; ++i) {
                mean_mc[i] += x[i];
                for (std::size_t j = 0; j < m.p; ++j) second(i, j) += x[i] * x[j];
            }
        }
        mean_mc = (1.0 / reps) * mean_mc;
        Vec mean_exact = mean_vector(m, k);
        Mat var_exact = variance_matrix(m, k);
        for (std::size_t i = 0; i < m.p; ++i) {
            double se = std::sqrt(var_exact(i, i) / static_cast<double>(reps));
            CHECK(std::abs(mean_mc[i] - mean_exact[i]) < 5 * se);
            for (std::size_t j = 0; j < m.p; ++j) {
                double cov_mc = second(i, j) / reps - mean_mc[i] * mean_mc[j];
                double se_cov = std::sqrt((var_exact(i, i) * var_exact(j, j) +
                                           var_exact(i, j) * var_exact(i, j)) /
                                          static_cast<double>(reps));
                CHECK(std::abs(cov_mc - var_exact(i, j)) < 6 * se_cov + 1e-9);
            }
        }
    }
}

TEST_CASE("conditional martingale covariance on worked examples") {
    // r = 1 at the origin: only immigration noise remains.
    auto p1 = zoo::p1_poisson();
    Mat at0 = martingale_cov_conditional(p1, Vec{0.0});
    REQUIRE(at0.rows() == 1);
    CHECK(at0(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    // x = 5: 5 V_xi + V_eps = 6.
    CHECK(martingale_cov_conditional(p1, Vec{5.0})(0, 0) == doctest::Approx(6.0).epsilon(1e-15));

    // 2-cycle at x = (2,3): stacked 4x4 block diagonal,
    // block l=1 uses alpha = m x + m_eps = (4,3), block l=2 uses alpha = x.
    auto two = zoo::two_cycle_poisson();
    Mat c = martingale_cov_conditional(two, Vec{2.0, 3.0});
    REQUIRE(c.rows() == 4);
    CHECK(c(0, 0) == doctest::Approx(4.0).epsilon(1e-15));  // 3*1 + 1
    CHECK(c(1, 1) == doctest::Approx(5.0).epsilon(1e-15));  // 4*1 + 1
    CHECK(c(2, 2) == doctest::Approx(4.0).epsilon(1e-15));  // 3*1 + 1
    CHECK(c(3, 3) == doctest::Approx(3.0).epsilon(1e-15));  // 2*1 + 1
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (i != j) CHECK(c(i, j) == 0.0);
}

TEST_CASE("conditional martingale covariance vs restarted-chain Monte Carlo") {
    auto two = zoo::two_cycle_poisson();
    std::vector<std::uint64_t> x0{2, 3};
    Mat want = martingale_cov_conditional(two, to_vec(x0));
    const std::size_t reps = 200000;
    Vec sum(4);
    Mat sum_sq(4, 4);
    for (std::size_t rep = 0; rep < reps; ++rep) {
        auto t = simulate_trajectory(two, 2, 55, rep, SamplingMode::superposition, &x0);
        auto mb = martingale_blocks(t);
        Vec s = mb.stacked(1);
        for (std::size_t i = 0; i < 4; ++i) {
            sum[i] += s[i];
            for (std::size_t j = 0; j < 4; ++j) sum_sq(i, j) += s[i] * s[j];
        }
    }
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(sum[i] / reps) < 5 * std::sqrt(want(i, i) / static_cast<double>(reps)));
        for (std::size_t j = 0; j < 4; ++j) {
            double cov = sum_sq(i, j) / reps - (sum[i] / reps) * (sum[j] / reps);
            double se = std::sqrt((want(i, i) * want(j, j) + want(i, j) * want(i, j)) /
                                  static_cast<double>(reps));
            CHECK(std::abs(cov - want(i, j)) < 6 * se + 1e-9);
        }
    }
}

TEST_CASE("unconditional martingale covariance") {
    // First period starts at X_0 = 0.
    auto two = zoo::two_cycle_poisson();
    Mat k1 = martingale_cov(two, 1);
    CHECK(k1(0, 0) == doctest::Approx(2.0).epsilon(1e-15));  // mixture(m_eps) + V_eps
    CHECK(k1(1, 1) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(k1(2, 2) == doctest::Approx(1.0).epsilon(1e-15));  // V_eps only
    CHECK(k1(3, 3) == doctest::Approx(1.0).epsilon(1e-15));

    // Later periods use x = E X_{r(k-1)} = (2(k-1), 2(k-1)).
    Mat k3 = martingale_cov(two, 3);
    Mat want = martingale_cov_conditional(two, Vec{4.0, 4.0});
    CHECK(max_abs_diff(k3, want) == 0.0);
}

TEST_CASE("growth diagnostics on a stochastic critical model") {
    auto two = zoo::two_cycle_poisson();
    auto g = growth_diagnostics(two, 150, 4000, 7, 4);
    CHECK(g.k_max == 150);
    CHECK(g.replications == 4000);
    CHECK_FALSE(g.m_degenerate);
    // E||X_k|| ~ k: exact oracle, tight.
    CHECK(g.mean_norm.slope == doctest::Approx(1.0).epsilon(0.02));
    // E||X_k||^2 ~ k^2: Monte Carlo, loose.
    CHECK(g.x_norm_sq.slope == doctest::Approx(2.0).epsilon(0.06));
    // Martingale norm grows like sqrt(k).
    CHECK(g.m_norm.slope <= 0.6);
    CHECK(g.m_norm.slope >= 0.3);
    // Fourth moment of the block norm grows at most like k^2.
    CHECK(g.m_norm_4.slope <= 2.2);
}

TEST_CASE("growth diagnostics flags degenerate martingales") {
    auto det = zoo::deterministic_pair();
    auto g = growth_diagnostics(det, 60, 50, 3, 1);
    CHECK(g.m_degenerate);
    CHECK(g.mean_norm.slope == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("growth diagnostics requires criticality") {
    auto sub = zoo::subcritical_single();
    CHECK_THROWS_WITH_AS(growth_diagnostics(sub, 50, 10, 1, 1), doctest::Contains("not critical"),
                         Error);
}

TEST_CASE("growth diagnostics is thread-invariant") {
    auto m = zoo::hourglass();
    auto a = growth_diagnostics(m, 60, 500, 11, 1);
    auto b = growth_diagnostics(m, 60, 500, 11, 4);
    CHECK(a.mean_norm.slope == b.mean_norm.slope);
    CHECK(a.x_norm_sq.slope == b.x_norm_sq.slope);
    CHECK(a.m_norm.slope == b.m_norm.slope);
    CHECK(a.m_norm_4.slope == b.m_norm_4.slope);
}

}  // TEST_SUITE
