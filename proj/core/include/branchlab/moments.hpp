#pragma once

#include <cstdint>

#include "branchlab/model.hpp"
#include "branchlab/stats.hpp"

namespace branchlab {

// E X_k = sum_{j<k} m_xi^j m_eps via the one-step recursion.
Vec mean_vector(const BranchingModel& m, std::size_t k);

// Var X_k through the recursion S_k = m S_{k-1} m^T + V_eps + (E X_{k-1}) (.) V_xi,
// equivalent to the closed double sum; O(k p^3).
Mat variance_matrix(const BranchingModel& m, std::size_t k);

// Conditional covariance of the stacked martingale block given the state x
// at the start of the period: block-diagonal with blocks
// [m^{r-l} x + sum_{j=1}^{r-l} m^{j-1} m_eps] (.) V_xi + V_eps.
Mat martingale_cov_conditional(const BranchingModel& m, const Vec& x);

// Unconditional version: the conditional formula at x = E X_{rk-r}.
Mat martingale_cov(const BranchingModel& m, std::size_t k);

struct GrowthDiagnostics {
    // log-log slopes over the tail half of k <= k_max
    SlopeFit mean_norm;   // ||E X_k|| (exact oracle); expect 1
    SlopeFit x_norm_sq;   // E ||X_k||^2 (Monte Carlo); expect 2
    SlopeFit m_norm;      // E ||M_k|| (Monte Carlo); expect <= 1/2
    SlopeFit m_norm_4;    // E ||M_k||^4 (Monte Carlo); expect <= 2
    bool m_degenerate = false;  // martingale parts identically zero
    std::size_t k_max = 0;
    std::size_t replications = 0;
};

GrowthDiagnostics growth_diagnostics(const BranchingModel& m, std::size_t k_max,
                                     std::size_t replications, std::uint64_t seed,
                                     unsigned threads = 1);  // throws "not critical"

}  // namespace branchlab
