#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "branchlab/limit_sde.hpp"
#include "branchlab/model.hpp"

namespace branchlab {

// One Kolmogorov-Smirnov comparison of an empirical sample against a
// reference law. Scaled data live on a lattice of gap 1/(n r); the gap is
// reported alongside so permissive thresholds are interpretable.
struct KsEntry {
    std::size_t n = 0;
    std::size_t class_index = 0;  // 1-based
    double distance = 0.0;
    double p_value = 0.0;
    std::size_t samples = 0;
    double lattice_gap = 0.0;
};

// Degenerate-limit branch: the limit marginal is a point mass, so the entry
// reports the worst deviation instead of a KS statistic.
struct DeviationEntry {
    std::size_t n = 0;
    std::size_t class_index = 0;
    double max_deviation = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct MarginalTestResult {
    bool skipped = false;
    std::string notice;
    std::vector<KsEntry> entries;          // gating family
    std::vector<KsEntry> literal_entries;  // per-class law without the cycle
                                           // factor; informational when r > 1
    std::vector<DeviationEntry> degenerate_entries;
    double alpha = 0.01;
    std::size_t family_size = 0;
    double min_p = 1.0;
    bool pass = false;
};

struct RayClassTrend {
    std::size_t class_index = 0;
    std::vector<double> median_angle;  // aligned with n_list
    double spearman = 0.0;
    bool pass = false;
};

struct RayTestResult {
    bool skipped = false;
    std::string notice;
    std::vector<std::size_t> n_list;
    std::vector<RayClassTrend> classes;  // classes with at least two types
    bool pass = false;
};

struct CorrelationEntry {
    std::size_t n = 0;
    std::size_t class_i = 0;  // 1-based, class_i < class_j
    std::size_t class_j = 0;
    double corr = 0.0;
    double threshold = 0.0;  // 3/sqrt(reps)
    bool pass = false;
};

struct IndependenceResult {
    bool skipped = false;
    std::string notice;
    std::vector<CorrelationEntry> entries;
    std::size_t gate_n = 0;  // verdict is judged at the largest n
    bool pass = false;
};

// A statistic tracked across the n grid; the verdict is a monotone-trend
// check: Spearman rank correlation of (n, value) negative, or every value
// already at the zero floor.
struct TrendSeries {
    std::string name;
    std::vector<double> value;  // aligned with n_list, averaged over replicates
    double spearman = 0.0;
    bool evaluable = false;  // trend checks need >= 3 values of n
    bool pass = false;
};

struct LindebergCovResult {
    std::vector<std::size_t> n_list;
    TrendSeries lindeberg_small;  // truncation threshold 0.1
    TrendSeries lindeberg_unit;   // truncation threshold 1.0
    TrendSeries covariance_gap;
    std::size_t replications = 0;
    bool pass = false;
};

// Exact algebraic identities rerun on the simulated datasets themselves.
struct AlgebraicChecks {
    double psi_gap_max = 0.0;                // reconstruction identity, relative
    double pi_idempotent_gap = 0.0;          // max |(Pi^2 - Pi)_{ab}|
    double class_biorthogonality_gap = 0.0;  // max_i |v_i^T u_i - 1/r|
    double tol = 1e-8;
    bool pass = false;
};

struct ConvergenceOptions {
    std::vector<std::size_t> n_list{50, 100, 200};
    double T = 1.0;
    std::size_t replications = 10000;
    std::size_t cov_replications = 400;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    double alpha = 0.01;
    bool keep_samples = false;  // retain per-replicate class functionals
};

// Raw per-replicate class functionals, retained for external plotting.
struct SampleDump {
    std::size_t class_index = 0;  // 1-based
    std::size_t n = 0;
    Vec z;  // one value per replicate
};

struct ConvergenceReport {
    std::string model_name;
    std::vector<std::size_t> n_list;
    double T = 1.0;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    bool not_critical = false;  // statistical families skipped when set
    MarginalTestResult marginal;
    RayTestResult ray;
    IndependenceResult independence;
    LindebergCovResult lindeberg_cov;
    AlgebraicChecks algebra;
    std::vector<SampleDump> samples;  // filled when keep_samples is set
    std::vector<std::string> notes;
    bool pass = false;
};

// Full verification run. All n values are evaluated on common random numbers:
// each replicate simulates one trajectory long enough for the largest n and
// the per-n statistics read prefixes of it. Single p-values below threshold
// never fail a family on their own; families gate on Bonferroni-corrected
// minima or on monotone trends, as declared per sub-result.
ConvergenceReport run_convergence(const BranchingModel& m, const ConvergenceOptions& opts);

// Single-n entry points; each runs its own simulation batch and returns the
// corresponding sub-report (trend fields unevaluated where a trend needs a
// grid of n values).
MarginalTestResult marginal_convergence_test(const BranchingModel& m, std::size_t n, double T,
                                             std::size_t reps, std::uint64_t seed = 1,
                                             unsigned threads = 1);
RayTestResult ray_concentration_test(const BranchingModel& m, std::size_t n, double T,
                                     std::size_t reps, std::uint64_t seed = 1,
                                     unsigned threads = 1);
IndependenceResult class_independence_test(const BranchingModel& m, std::size_t n, double T,
                                           std::size_t reps, std::uint64_t seed = 1,
                                           unsigned threads = 1);
LindebergCovResult lindeberg_and_covariance_check(const BranchingModel& m, std::size_t n, double T,
                                                  std::size_t reps, std::uint64_t seed = 1,
                                                  unsigned threads = 1);

}  // namespace branchlab
