#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "branchlab/linalg.hpp"
#include "branchlab/matrix_analysis.hpp"

namespace branchlab {

enum class LawKind { finite_support, poisson_product, bernoulli_product };

// A law on Z_+^p from one of three families:
//  - finite_support: atoms with probabilities (exact arbitrary support);
//  - poisson_product: independent Poisson coordinates (params = means);
//  - bernoulli_product: independent Bernoulli coordinates (params = probs).
// All three have finite moments of every order.
struct Law {
    LawKind kind = LawKind::finite_support;
    Vec params;
    std::vector<std::vector<std::uint64_t>> atoms;
    Vec atom_probs;

    std::size_t dim() const;
    Vec mean() const;
    // Covariance; structural zeros are exact (centered accumulation).
    Mat cov() const;
    bool deterministic() const;
};

Law poisson_law(Vec means);
Law bernoulli_law(Vec probs);
Law finite_law(std::vector<std::vector<std::uint64_t>> atoms, Vec probs);
Law zero_law(std::size_t p);  // point mass at the origin

// Nonnegative mixture of variance matrices: sum_j alpha_j V_j.
Mat mixture(const Vec& alpha, const std::vector<Mat>& V);  // throws "dimension mismatch"

struct BranchingModel {
    std::size_t p = 0;
    std::vector<Law> offspring;  // offspring[i]: children of one type-(i+1) parent
    Law immigration;
    Mat m_xi;                 // column i = offspring[i].mean()
    std::vector<Mat> V_xi;    // V_xi[i] = offspring[i].cov()
    Vec m_eps;
    Mat V_eps;
    bool irreducible = false;
    bool critical = false;
    std::optional<CyclicStructure> structure;  // present iff irreducible
    std::string name;

    unsigned r() const { return structure ? structure->r : 1; }
    // Mixture of offspring covariances weighted by alpha (length p).
    Mat mixed_cov(const Vec& alpha) const { return mixture(alpha, V_xi); }
};

// Populates every moment field analytically and runs the structural analysis.
// Reducibility is a flag, not an error.
BranchingModel build_model(std::vector<Law> offspring, Law immigration,
                           std::string name = "");  // throws "moment mismatch"

struct ValidationReport {
    bool irreducible = false;
    double criticality_gap = 0.0;  // |rho - 1|, NaN when reducible
    bool critical = false;
    // Worst offspring-covariance entry outside the predecessor-class block.
    double cov_pattern_violation = 0.0;
    bool cov_pattern_ok = false;
    bool fourth_moments_finite = true;  // automatic for the supported families
    bool immigration_degenerate = false;  // epsilon = 0 a.s.
    bool pass = false;
};

ValidationReport validate_critical_indecomposable(const BranchingModel& m,
                                                  double tol = kCriticalityTol);

}  // namespace branchlab
