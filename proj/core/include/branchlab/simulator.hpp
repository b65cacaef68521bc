#pragma once

#include <cstdint>
#include <vector>

#include "branchlab/model.hpp"
#include "branchlab/rng.hpp"

namespace branchlab {

enum class SamplingMode {
    // Coordinatewise law of the iid sum (Poisson/binomial/multinomial):
    // distribution-exact for all three families, O(1) per type.
    superposition,
    // One law draw per parent individual.
    per_individual,
};

struct Trajectory {
    const BranchingModel* model = nullptr;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::size_t steps = 0;  // K
    std::vector<std::vector<std::uint64_t>> states;  // X_0..X_K
};

// X_k = sum over types i of the offspring of the X_{k-1,i} parents, plus one
// immigration draw. Deterministic given (model, K, seed, stream, mode).
// `start` overrides the zero initial state (used by restarted-chain checks).
Trajectory simulate_trajectory(const BranchingModel& m, std::size_t K, std::uint64_t seed,
                               std::uint64_t stream = 0,
                               SamplingMode mode = SamplingMode::superposition,
                               const std::vector<std::uint64_t>* start = nullptr);
// throws "overflow at step k, coordinate l" on 64-bit wraparound

struct MartingaleBlocks {
    std::size_t r = 1, p = 0;
    // blocks[k-1][l-1] = M_{k,l} = X_{rk-l+1} - m_xi X_{rk-l} - m_eps,
    // for k = 1..floor(K/r), l = 1..r.
    std::vector<std::vector<Vec>> blocks;

    std::size_t count() const { return blocks.size(); }
    Vec stacked(std::size_t k) const;  // (M_{k,1}, ..., M_{k,r}), 1-based k
};

MartingaleBlocks martingale_blocks(const Trajectory& t);  // throws "trajectory too short"

struct ScaledPath {
    enum class Kind { X_scaled, M_scaled, sde };
    Kind kind = Kind::X_scaled;
    Vec grid;                 // 0 = t_0 < ... < t_G = T
    std::vector<Vec> values;  // one stacked r*p vector per grid time
};

Vec uniform_grid(double T, std::size_t G = 100);

// Value at t: (nr)^{-1} (X_{r floor(nt)}, X_{r floor(nt)-1}, ..., X_{r floor(nt)-r+1});
// indices below zero read as the zero initial state.
ScaledPath scaled_step_X(const Trajectory& t, std::size_t n, const Vec& grid);
// throws "insufficient steps" unless K >= r*floor(n*T) + r

// Scaled martingale sum (nr)^{-1} sum_{k <= floor(nt)} M_k on the grid.
ScaledPath scaled_step_M(const MartingaleBlocks& mb, const BranchingModel& m, std::size_t n,
                         const Vec& grid);

// Reconstructs X^(n) from the scaled martingale increments through the exact
// pathwise recursion (partial sums propagated by m_xi^r); must agree with
// scaled_step_X to accumulated rounding. The core anti-bug oracle.
ScaledPath reconstruct_via_psi(const MartingaleBlocks& mb, const BranchingModel& m, std::size_t n,
                               const Vec& grid);

// Largest relative deviation between the reconstruction and the direct scaled
// path over a grid (used by tests and the harness defense-in-depth check).
double psi_identity_gap(const Trajectory& t, std::size_t n, const Vec& grid);

}  // namespace branchlab
