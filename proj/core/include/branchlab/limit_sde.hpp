#pragma once

#include <cstdint>
#include <vector>

#include "branchlab/model.hpp"
#include "branchlab/rng.hpp"

namespace branchlab {

// Per-class drift/diffusion data of the limit process. a and b are the
// canonical per-class scalars; derived parametrizations below.
struct SdeCoefficients {
    unsigned r = 1;
    std::vector<Vec> m_xieps;  // per class i: length |D_i|
    std::vector<Mat> V_xieps;  // per class i: |D_i| x |D_i|, symmetric PSD
    Vec a;                     // a_i = v_i^T m_xieps_i
    Vec b;                     // b_i = v_i^T V_xieps_i v_i
};

SdeCoefficients sde_coefficients(const BranchingModel& m);  // throws "class data missing"

struct MarginalLaw {
    enum class Kind { gamma, point_mass };
    Kind kind = Kind::point_mass;
    double shape = 0.0, scale = 0.0;  // gamma
    double point = 0.0;               // point_mass

    double mean() const;
    double variance() const;
    double cdf(double x) const;
    bool degenerate() const { return kind == Kind::point_mass; }
};

// Time-t law of dZ = a dt + sqrt(b Z+) dW, Z_0 = 0:
// Gamma(shape 2a/b, scale b t/2); point mass a*t when b = 0, point mass 0
// when a = 0 (the descriptor carries the "degenerate" cases).
MarginalLaw exact_Z_marginal(double a, double b, double t);

// Law of the scalar class functional v_i^T (limit block of class i). Its
// quadratic variation picks up one factor r relative to b_i:
// dz = a_i dt + sqrt(r b_i z+) dW. (1-based class index.)
MarginalLaw class_functional_marginal(const SdeCoefficients& c, std::size_t class_index, double t);

// Law of Z_{t,i} in the Y_{t,i} = Z_{t,i} u_i parametrization, where
// v_i^T Y_{t,i} = Z_{t,i}/r: drift r a_i, squared diffusion r^2 b_i.
MarginalLaw z_marginal(const SdeCoefficients& c, std::size_t class_index, double t);

struct ScalarPath {
    Vec t;
    Vec z;
};

// Euler-Maruyama with full truncation (positive part inside the root, state
// kept signed); Z_0 = 0.
ScalarPath simulate_Z(double a, double b, double T, double dt, std::uint64_t seed,
                      std::uint64_t stream = 0);  // throws "invalid step"

// Endpoint-only variant for Monte Carlo marginals.
double simulate_Z_endpoint(double a, double b, double T, double dt, Rng& rng);

struct LimitPath {
    unsigned r = 1;
    std::size_t p = 0;
    Vec grid;
    std::vector<Vec> Z;        // Z[i] = class-(i+1) scalar path on the grid
    std::vector<Vec> Y;        // per grid point, length p
    std::vector<Vec> X;        // per grid point, stacked r*p (block i = m^{r-i+1} Y)
};

// Assembles Y_t (class i coordinates = Z_{t,i} u_i) and the stacked limit
// blocks; verifies m_xi^r Y = Y to 1e-10 per grid point.
LimitPath assemble_limit(const std::vector<ScalarPath>& z_per_class,
                         const BranchingModel& m);  // throws "grid mismatch"

// Symmetric PSD square root by eigendecomposition with small negative
// eigenvalues clamped to zero.
Mat psd_sqrt(const Mat& a);  // throws "not PSD" beyond -1e-8 * trace

struct MNPaths {
    Vec grid;
    // M[g][i] = class-i martingale limit component at grid point g (length p)
    std::vector<std::vector<Vec>> M;
    std::vector<Vec> N_direct;  // N integrated from its own equation
    std::vector<Vec> N_alg;     // N rebuilt as sum_j m^{j-1} M_j
    double max_consistency_gap = 0.0;
};

// Joint Euler-Maruyama of the coupled martingale-limit system driven by r
// independent p-dimensional Wiener processes; N is tracked both directly and
// through the algebraic identity as a cross-check.
MNPaths simulate_MN_system(const BranchingModel& m, double T, double dt, std::uint64_t seed,
                           std::size_t grid_points = 101);  // throws "psd failure"

}  // namespace branchlab
