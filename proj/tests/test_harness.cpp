#include <doctest.h>

#include <cmath>
#include <vector>

#include "branchlab/error.hpp"
#include "branchlab/harness.hpp"
#include "support/model_zoo.hpp"

using namespace branchlab;

TEST_SUITE("harness") {

TEST_CASE("degenerate model: every family is exact") {
    // Fully deterministic dynamics: point-mass limit, zero martingales, zero
    // covariance gaps. The whole report must pass without statistics.
    auto m = zoo::deterministic_pair();
    ConvergenceOptions opts;
    opts.n_list = {10, 20, 30};
    opts.replications = 50;
    opts.cov_replications = 20;
    opts.seed = 5;
    auto rep = run_convergence(m, opts);

    CHECK_FALSE(rep.not_critical);
    CHECK(rep.marginal.pass);
    CHECK(rep.marginal.entries.empty());
    REQUIRE(rep.marginal.degenerate_entries.size() == 6);  // 2 classes x 3 n
    for (const auto& e : rep.marginal.degenerate_entries) {
        CAPTURE(e.n);
        CHECK(e.pass);
        CHECK(e.max_deviation <= e.threshold);
    }
    CHECK(rep.lindeberg_cov.pass);
    for (const auto* t : {&rep.lindeberg_cov.lindeberg_small, &rep.lindeberg_cov.lindeberg_unit,
                          &rep.lindeberg_cov.covariance_gap}) {
        for (double v : t->value) CHECK(v <= 1e-12);
        CHECK(t->pass);
    }
    CHECK(rep.algebra.pass);
    CHECK(rep.algebra.psi_gap_max <= 1e-8);
    CHECK(rep.pass);
}

TEST_CASE("stochastic 2-cycle: full report structure and verdicts") {
    auto m = zoo::two_cycle_poisson();
    ConvergenceOptions opts;
    opts.n_list = {20, 40, 80};
    opts.replications = 3000;
    opts.cov_replications = 150;
    opts.seed = 11;
    opts.keep_samples = true;
    auto rep = run_convergence(m, opts);

    CHECK(rep.model_name == "two_cycle_poisson");
    REQUIRE(rep.n_list == std::vector<std::size_t>{20, 40, 80});

    // Marginal family: 2 classes x 3 n, plus informational literal entries.
    REQUIRE(rep.marginal.entries.size() == 6);
    CHECK(rep.marginal.family_size == 6);
    CHECK(rep.marginal.literal_entries.size() == 6);
    CHECK(rep.marginal.degenerate_entries.empty());
    for (const auto& e : rep.marginal.entries) {
        CHECK(e.samples == 3000);
        CHECK(e.lattice_gap == doctest::Approx(1.0 / (2.0 * e.n)).epsilon(1e-12));
        CHECK(e.p_value >= 0.0);
        CHECK(e.p_value <= 1.0);
    }
    CHECK(rep.marginal.min_p >= rep.marginal.alpha / 6);  // the family verdict
    CHECK(rep.marginal.pass);

    // Singleton classes: no ray trends to evaluate, data-only pass.
    CHECK(rep.ray.classes.empty());
    CHECK(rep.ray.pass);

    // Independence judged at the largest n.
    CHECK(rep.independence.gate_n == 80);
    REQUIRE(rep.independence.entries.size() == 3);  // one pair per n
    for (const auto& e : rep.independence.entries) {
        CHECK(e.class_i == 1);
        CHECK(e.class_j == 2);
        CHECK(e.threshold == doctest::Approx(3.0 / std::sqrt(3000.0)).epsilon(1e-12));
    }
    CHECK(rep.independence.pass);

    // Lindeberg and covariance-gap trends evaluable on 3 points.
    CHECK(rep.lindeberg_cov.replications == 150);
    CHECK(rep.lindeberg_cov.lindeberg_small.evaluable);
    CHECK(rep.lindeberg_cov.lindeberg_small.value.size() == 3);
    CHECK(rep.lindeberg_cov.pass);

    // Exact identities rerun on the simulated data.
    CHECK(rep.algebra.pass);
    CHECK(rep.algebra.psi_gap_max <= 1e-8);
    CHECK(rep.algebra.pi_idempotent_gap <= 1e-9);
    CHECK(rep.algebra.class_biorthogonality_gap <= 1e-9);

    // Samples kept: one dump per (class, n) with one value per replicate.
    REQUIRE(rep.samples.size() == 6);
    for (const auto& s : rep.samples) CHECK(s.z.size() == 3000);

    CHECK(rep.pass);
    CHECK_FALSE(rep.notes.empty());
}

TEST_CASE("ray concentration trends exist for multi-type classes") {
    // Hourglass class 1 has two types; the angle trend is defined for it.
    auto m = zoo::hourglass();
    ConvergenceOptions opts;
    opts.n_list = {10, 20, 40};
    opts.replications = 1200;
    opts.cov_replications = 60;
    opts.seed = 3;
    auto rep = run_convergence(m, opts);

    REQUIRE(rep.ray.classes.size() == 1);
    const auto& trend = rep.ray.classes[0];
    CHECK(trend.class_index == 1);
    REQUIRE(trend.median_angle.size() == 3);
    // Angles are positive and the trend is expected downward at these sizes.
    for (double a : trend.median_angle) CHECK(a >= 0.0);
    CHECK(trend.spearman < 0);
    CHECK(trend.pass);
    CHECK(rep.ray.pass);
}

TEST_CASE("single-n wrappers return partial views") {
    auto m = zoo::two_cycle_poisson();

    auto marg = marginal_convergence_test(m, 40, 1.0, 1500, 7);
    CHECK_FALSE(marg.skipped);
    REQUIRE(marg.entries.size() == 2);
    CHECK(marg.family_size == 2);
    for (const auto& e : marg.entries) CHECK(e.n == 40);

    // Singleton classes: the angle is identically zero, reported as skipped.
    auto ray = ray_concentration_test(m, 40, 1.0, 500, 7);
    CHECK(ray.skipped);
    CHECK(ray.pass);

    // A class with two types produces a real single-point view.
    auto hray = ray_concentration_test(zoo::hourglass(), 20, 1.0, 400, 7);
    CHECK_FALSE(hray.skipped);
    CHECK(hray.n_list == std::vector<std::size_t>{20});
    REQUIRE(hray.classes.size() == 1);
    CHECK(hray.classes[0].median_angle.size() == 1);
    CHECK(hray.pass);  // no evaluable trend on one point, data-only

    auto indep = class_independence_test(m, 40, 1.0, 1500, 7);
    CHECK(indep.gate_n == 40);
    REQUIRE(indep.entries.size() == 1);
    CHECK(indep.entries[0].pass == (std::abs(indep.entries[0].corr) < indep.entries[0].threshold));

    auto lind = lindeberg_and_covariance_check(m, 40, 1.0, 100, 7);
    CHECK(lind.n_list == std::vector<std::size_t>{40});
    CHECK_FALSE(lind.lindeberg_small.evaluable);
    CHECK(lind.pass);  // data-only on a single n
}

TEST_CASE("independence is skipped for a single class") {
    auto m = zoo::p1_poisson();
    auto indep = class_independence_test(m, 30, 1.0, 500, 1);
    CHECK(indep.skipped);
    CHECK(indep.entries.empty());
    CHECK(indep.pass);
    CHECK(indep.notice.find("r = 1") != std::string::npos);
}

TEST_CASE("non-critical models short-circuit") {
    auto sub = zoo::subcritical_single();
    ConvergenceOptions opts;
    opts.n_list = {10, 20, 30};
    opts.replications = 10;
    opts.cov_replications = 5;
    auto rep = run_convergence(sub, opts);
    CHECK(rep.not_critical);
    CHECK(rep.marginal.skipped);
    CHECK(rep.ray.skipped);
    CHECK(rep.independence.skipped);
    CHECK_FALSE(rep.pass);

    CHECK(marginal_convergence_test(sub, 10, 1.0, 10).skipped);
    CHECK(ray_concentration_test(sub, 10, 1.0, 10).skipped);
    CHECK(class_independence_test(sub, 10, 1.0, 10).skipped);
    CHECK_THROWS_WITH_AS(lindeberg_and_covariance_check(sub, 10, 1.0, 10),
                         doctest::Contains("not critical"), Error);
}

TEST_CASE("reports are deterministic and thread-invariant") {
    auto m = zoo::two_cycle_mixed();
    ConvergenceOptions opts;
    opts.n_list = {10, 20, 30};
    opts.replications = 400;
    opts.cov_replications = 50;
    opts.seed = 19;

    auto a = run_convergence(m, opts);
    auto b = run_convergence(m, opts);
    opts.threads = 4;
    auto c = run_convergence(m, opts);

    REQUIRE(a.marginal.entries.size() == b.marginal.entries.size());
    for (std::size_t i = 0; i < a.marginal.entries.size(); ++i) {
        CHECK(a.marginal.entries[i].distance == b.marginal.entries[i].distance);
        CHECK(a.marginal.entries[i].distance == c.marginal.entries[i].distance);
        CHECK(a.marginal.entries[i].p_value == c.marginal.entries[i].p_value);
    }
    for (std::size_t i = 0; i < a.independence.entries.size(); ++i)
        CHECK(a.independence.entries[i].corr == c.independence.entries[i].corr);
    for (std::size_t i = 0; i < a.lindeberg_cov.covariance_gap.value.size(); ++i) {
        CHECK(a.lindeberg_cov.covariance_gap.value[i] == c.lindeberg_cov.covariance_gap.value[i]);
        CHECK(a.lindeberg_cov.lindeberg_small.value[i] == c.lindeberg_cov.lindeberg_small.value[i]);
    }
    CHECK(a.algebra.psi_gap_max == c.algebra.psi_gap_max);
}

TEST_CASE("changing the seed changes the data") {
    auto m = zoo::two_cycle_poisson();
    ConvergenceOptions opts;
    opts.n_list = {10, 20, 30};
    opts.replications = 200;
    opts.cov_replications = 30;
    opts.seed = 1;
    auto a = run_convergence(m, opts);
    opts.seed = 2;
    auto b = run_convergence(m, opts);
    CHECK(a.marginal.entries[0].distance != b.marginal.entries[0].distance);
}

}  // TEST_SUITE
