#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "branchlab/linalg.hpp"

namespace branchlab {

// Square matrix with nonnegative entries; validated at analysis entry points.
using NonnegMatrix = Mat;

// |rho - 1| <= kCriticalityTol declares a matrix critical.
inline constexpr double kCriticalityTol = 1e-8;

struct RateFit {
    double c = 0.0;
    double kappa = 0.0;
    // True when every tested power already equals the projector to rounding
    // (permutation-like dynamics); c and kappa are 0 sentinels then.
    bool exact = false;
};

// Cyclic structure of an irreducible nonnegative matrix.
//
// Class indices are 1-based in the API (class i lives at classes[i-1]);
// matrix indices inside `classes` and `permutation` are 0-based. Classes are
// the BFS-level residues mod r anchored so class 1 contains index 0, each
// sorted ascending; `permutation` concatenates them. In that order the matrix
// is block-cyclic: entry (a,b) is zero unless a's class precedes b's class
// cyclically.
struct CyclicStructure {
    unsigned r = 1;
    std::vector<std::vector<std::size_t>> classes;
    std::vector<std::size_t> permutation;
    double rho = 0.0;
    Vec u;  // right Perron vector, sum(u) = 1, original coordinates
    Vec v;  // left Perron vector, dot(u, v) = 1
    std::vector<Mat> pi_blocks;  // per class: r * u_i v_i^T
    std::optional<RateFit> rate;

    std::size_t dim() const { return permutation.size(); }
    std::size_t class_of(std::size_t index) const;  // 1-based class id
    Vec class_sub(const Vec& x, std::size_t class_index) const;
};

bool check_irreducible(const NonnegMatrix& m);

// Period of the positivity digraph (gcd of directed-cycle lengths).
unsigned cyclicity_index(const NonnegMatrix& m);  // throws "reducible matrix"

// r, classes and permutation only; Perron fields left empty.
CyclicStructure cyclic_partition(const NonnegMatrix& m);  // throws "reducible matrix"

struct PerronData {
    double rho = 0.0;
    Vec u, v;
};

// Power iteration on one class block of m^r (primitive), propagated through
// the cyclic blocks; all-ones start, iteration cap 1e5, residual tolerance
// 1e-10 * rho on both eigenvector equations.
PerronData perron_data(const NonnegMatrix& m);  // throws "no convergence"

// Product of consecutive superdiagonal blocks from class i to class j
// (1-based, i <= j, j may exceed r and wraps); the empty product i == j is
// the identity.
Mat block_product(const NonnegMatrix& m, const CyclicStructure& s, std::size_t i,
                  std::size_t j);  // throws "index out of range"

// Full p x p limit projector in original coordinates: entry (a,b) equals
// r * u_a * v_b when a and b share a class, 0 otherwise.
Mat limit_projector(const CyclicStructure& s);

// Geometric-rate fit for a critical matrix: e_n = ||m^{nr} - pi||_2 for
// n = 1..n_max; kappa from the least-squares slope of log e_n over the tail
// half of the points above the rounding floor (1e-13); c = max_n e_n/kappa^n.
RateFit fit_rate(const NonnegMatrix& m, const Mat& pi, unsigned n_max = 30);  // throws "not critical"

// Convenience: full structural analysis (partition + Perron + projector
// blocks + rate fit when critical).
CyclicStructure analyze_matrix(const NonnegMatrix& m);

// Exact zero-pattern check: true iff every nonzero entry (a,b) has
// class(b) = class(a) + 1 cyclically.
bool partition_pattern_exact(const NonnegMatrix& m, const CyclicStructure& s);

// Submatrix helper used for class blocks.
Mat submatrix(const Mat& m, const std::vector<std::size_t>& rows,
              const std::vector<std::size_t>& cols);

}  // namespace branchlab
