#include "branchlab/simulator.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "branchlab/error.hpp"

namespace branchlab {

namespace {

[[noreturn]] void overflow_error(std::size_t k, std::size_t coord) {
    throw Error("overflow at step " + std::to_string(k) + ", coordinate " +
                std::to_string(coord + 1));
}

void add_checked(std::uint64_t& acc, std::uint64_t add, std::size_t k, std::size_t coord) {
    const std::uint64_t s = acc + add;
    if (s < acc) overflow_error(k, coord);
    acc = s;
}

void add_scaled_checked(std::uint64_t& acc, std::uint64_t count, std::uint64_t unit,
                        std::size_t k, std::size_t coord) {
    if (unit == 0 || count == 0) return;
    if (count > std::numeric_limits<std::uint64_t>::max() / unit) overflow_error(k, coord);
    add_checked(acc, count * unit, k, coord);
}

// One draw from a law, added to out.
void sample_once(const Law& law, Rng& rng, std::vector<std::uint64_t>& out, std::size_t k) {
    switch (law.kind) {
        case LawKind::poisson_product:
            for (std::size_t l = 0; l < law.params.size(); ++l)
                if (law.params[l] > 0.0) add_checked(out[l], rng.poisson(law.params[l]), k, l);
            return;
        case LawKind::bernoulli_product:
            for (std::size_t l = 0; l < law.params.size(); ++l) {
                if (law.params[l] <= 0.0) continue;
                if (law.params[l] >= 1.0 || rng.uniform() < law.params[l])
                    add_checked(out[l], 1, k, l);
            }
            return;
        case LawKind::finite_support: {
            const double u = rng.uniform();
            double cum = 0.0;
            std::size_t pick = law.atoms.size() - 1;
            for (std::size_t a = 0; a < law.atoms.size(); ++a) {
                cum += law.atom_probs[a];
                if (u < cum) {
                    pick = a;
                    break;
                }
            }
            for (std::size_t l = 0; l < law.atoms[pick].size(); ++l)
                add_checked(out[l], law.atoms[pick][l], k, l);
            return;
        }
    }
}

// Law of the sum of `count` iid draws, sampled directly: coordinatewise
// Poisson / binomial, or multinomial thinning over finite atoms. Exact in
// distribution for all three families.
void sample_superposition(const Law& law, std::uint64_t count, Rng& rng,
                          std::vector<std::uint64_t>& out, std::size_t k) {
    if (count == 0) return;
    switch (law.kind) {
        case LawKind::poisson_product:
            for (std::size_t l = 0; l < law.params.size(); ++l)
                if (law.params[l] > 0.0)
                    add_checked(out[l], rng.poisson(static_cast<double>(count) * law.params[l]), k, l);
            return;
        case LawKind::bernoulli_product:
            for (std::size_t l = 0; l < law.params.size(); ++l)
                if (law.params[l] > 0.0) add_checked(out[l], rng.binomial(count, law.params[l]), k, l);
            return;
        case LawKind::finite_support: {
            std::uint64_t remaining = count;
            double tail = 1.0;
            for (std::size_t a = 0; a + 1 < law.atoms.size() && remaining > 0; ++a) {
                const double q = (tail > 0.0) ? std::min(1.0, law.atom_probs[a] / tail) : 1.0;
                const std::uint64_t c = rng.binomial(remaining, q);
                for (std::size_t l = 0; l < law.atoms[a].size(); ++l)
                    add_scaled_checked(out[l], c, law.atoms[a][l], k, l);
                remaining -= c;
                tail -= law.atom_probs[a];
            }
            const auto& last = law.atoms.back();
            for (std::size_t l = 0; l < last.size(); ++l)
                add_scaled_checked(out[l], remaining, last[l], k, l);
            return;
        }
    }
}

}  // namespace

Trajectory simulate_trajectory(const BranchingModel& m, std::size_t K, std::uint64_t seed,
                               std::uint64_t stream, SamplingMode mode,
                               const std::vector<std::uint64_t>* start) {
    Trajectory t;
    t.model = &m;
    t.seed = seed;
    t.stream = stream;
    t.steps = K;
    t.states.reserve(K + 1);
    t.states.push_back(start ? *start : std::vector<std::uint64_t>(m.p, 0));
    if (start && start->size() != m.p) throw Error("dimension mismatch: start state");

    Rng rng(seed, stream);
    for (std::size_t k = 1; k <= K; ++k) {
        const auto& prev = t.states.back();
        std::vector<std::uint64_t> next(m.p, 0);
        // Fixed draw order: parents by type, then immigration.
        for (std::size_t i = 0; i < m.p; ++i) {
            const std::uint64_t parents = prev[i];
            if (parents == 0) continue;
            if (mode == SamplingMode::superposition) {
                sample_superposition(m.offspring[i], parents, rng, next, k);
            } else {
                for (std::uint64_t j = 0; j < parents; ++j) sample_once(m.offspring[i], rng, next, k);
            }
        }
        sample_once(m.immigration, rng, next, k);
        t.states.push_back(std::move(next));
    }
    return t;
}

Vec MartingaleBlocks::stacked(std::size_t k) const {
    const auto& blk = blocks[k - 1];
    Vec out;
    out.reserve(r * p);
    for (const Vec& b : blk) out.insert(out.end(), b.begin(), b.end());
    return out;
}

MartingaleBlocks martingale_blocks(const Trajectory& t) {
    const BranchingModel& m = *t.model;
    const std::size_t r = m.r();
    if (t.steps < r) throw Error("trajectory too short");
    MartingaleBlocks mb;
    mb.r = r;
    mb.p = m.p;
    const std::size_t count = t.steps / r;
    mb.blocks.reserve(count);
    for (std::size_t k = 1; k <= count; ++k) {
        std::vector<Vec> blk;
        blk.reserve(r);
        for (std::size_t l = 1; l <= r; ++l) {
            const auto& xa = t.states[r * k - l + 1];
            const auto& xb = t.states[r * k - l];
            Vec d(m.p);
            for (std::size_t c = 0; c < m.p; ++c) {
                double s = static_cast<double>(xa[c]) - m.m_eps[c];
                for (std::size_t e = 0; e < m.p; ++e)
                    s -= m.m_xi(c, e) * static_cast<double>(xb[e]);
                d[c] = s;
            }
            blk.push_back(std::move(d));
        }
        mb.blocks.push_back(std::move(blk));
    }
    return mb;
}

Vec uniform_grid(double T, std::size_t G) {
    Vec g(G + 1);
    for (std::size_t i = 0; i <= G; ++i) g[i] = T * static_cast<double>(i) / static_cast<double>(G);
    return g;
}

namespace {

// floor(n*t) with a deterministic slack absorbing grid-arithmetic rounding.
std::size_t step_index(std::size_t n, double t) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * t + 1e-9));
}

}  // namespace

ScaledPath scaled_step_X(const Trajectory& t, std::size_t n, const Vec& grid) {
    const BranchingModel& m = *t.model;
    const std::size_t r = m.r();
    const double T = grid.back();
    const std::size_t q_max = step_index(n, T);
    if (t.steps < r * q_max + r) throw Error("insufficient steps");
    ScaledPath path;
    path.kind = ScaledPath::Kind::X_scaled;
    path.grid = grid;
    const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(r));
    for (double tg : grid) {
        const std::size_t q = step_index(n, tg);
        Vec val(r * m.p, 0.0);
        for (std::size_t l = 0; l < r; ++l) {
            const long idx = static_cast<long>(r * q) - static_cast<long>(l);
            if (idx <= 0) continue;  // states below X_0 read as zero
            const auto& x = t.states[static_cast<std::size_t>(idx)];
            for (std::size_t c = 0; c < m.p; ++c)
                val[l * m.p + c] = scale * static_cast<double>(x[c]);
        }
        path.values.push_back(std::move(val));
    }
    return path;
}

ScaledPath scaled_step_M(const MartingaleBlocks& mb, const BranchingModel& m, std::size_t n,
                         const Vec& grid) {
    const std::size_t r = mb.r, p = mb.p;
    const std::size_t q_max = step_index(n, grid.back());
    if (mb.count() < q_max) throw Error("insufficient steps");
    ScaledPath path;
    path.kind = ScaledPath::Kind::M_scaled;
    path.grid = grid;
    const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(r));
    Vec running(r * p, 0.0);
    std::size_t q_done = 0;
    for (double tg : grid) {
        const std::size_t q = step_index(n, tg);
        for (; q_done < q; ++q_done) {
            const Vec inc = mb.stacked(q_done + 1);
            for (std::size_t e = 0; e < running.size(); ++e) running[e] += inc[e];
        }
        Vec val(r * p);
        for (std::size_t e = 0; e < val.size(); ++e) val[e] = scale * running[e];
        path.values.push_back(std::move(val));
    }
    (void)m;
    return path;
}

ScaledPath reconstruct_via_psi(const MartingaleBlocks& mb, const BranchingModel& m, std::size_t n,
                               const Vec& grid) {
    const std::size_t r = mb.r, p = mb.p;
    const std::size_t q_max = step_index(n, grid.back());
    if (mb.count() < q_max) throw Error("insufficient steps");

    std::vector<Mat> mpow;  // m_xi^0 .. m_xi^r
    mpow.reserve(r + 1);
    mpow.push_back(Mat::identity(p));
    for (std::size_t e = 1; e <= r; ++e) mpow.push_back(mpow.back() * m.m_xi);

    const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(r));

    ScaledPath path;
    path.kind = ScaledPath::Kind::X_scaled;
    path.grid = grid;

    // Running partial sums P_i(q) = m^r P_i(q-1) + g_{i,q}, stacked per block;
    // g collects the increment-plus-drift terms of the pathwise recursion.
    std::vector<Vec> partial(r, Vec(p, 0.0));
    std::size_t q_done = 0;
    auto emit = [&](std::size_t q) {
        while (q_done < q) {
            ++q_done;
            std::vector<Vec> next(r, Vec(p, 0.0));
            for (std::size_t i = 1; i <= r; ++i) {
                Vec g(p, 0.0);
                for (std::size_t l = i; l <= r; ++l) {
                    Vec term = mb.blocks[q_done - 1][l - 1];
                    for (std::size_t c = 0; c < p; ++c) term[c] = scale * (term[c] + m.m_eps[c]);
                    const Vec piece = mpow[l - i] * term;
                    for (std::size_t c = 0; c < p; ++c) g[c] += piece[c];
                }
                // Spill-over from the previous period; absent entirely at
                // q_done = 1 where the zero initial state ends the unroll.
                for (std::size_t l = 1; q_done >= 2 && l < i; ++l) {
                    Vec term = mb.blocks[q_done - 2][l - 1];
                    for (std::size_t c = 0; c < p; ++c) term[c] = scale * (term[c] + m.m_eps[c]);
                    const Vec piece = mpow[l - i + r] * term;
                    for (std::size_t c = 0; c < p; ++c) g[c] += piece[c];
                }
                Vec prop = mpow[r] * partial[i - 1];
                for (std::size_t c = 0; c < p; ++c) prop[c] += g[c];
                next[i - 1] = std::move(prop);
            }
            partial = std::move(next);
        }
        Vec val;
        val.reserve(r * p);
        for (std::size_t i = 0; i < r; ++i) val.insert(val.end(), partial[i].begin(), partial[i].end());
        return val;
    };

    for (double tg : grid) path.values.push_back(emit(step_index(n, tg)));
    return path;
}

double psi_identity_gap(const Trajectory& t, std::size_t n, const Vec& grid) {
    const MartingaleBlocks mb = martingale_blocks(t);
    const ScaledPath direct = scaled_step_X(t, n, grid);
    const ScaledPath rec = reconstruct_via_psi(mb, *t.model, n, grid);
    double worst = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double num = 0.0, den = 1.0;
        for (std::size_t e = 0; e < direct.values[g].size(); ++e) {
            num = std::max(num, std::fabs(direct.values[g][e] - rec.values[g][e]));
            den = std::max(den, std::fabs(direct.values[g][e]));
        }
        worst = std::max(worst, num / den);
    }
    return worst;
}

}  // namespace branchlab
