#include "branchlab/moments.hpp"

#include <cmath>

#include "branchlab/error.hpp"
#include "branchlab/simulator.hpp"
#include "branchlab/threading.hpp"

namespace branchlab {

Vec mean_vector(const BranchingModel& m, std::size_t k) {
    Vec e(m.p, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        Vec next = m.m_xi * e;
        for (std::size_t c = 0; c < m.p; ++c) next[c] += m.m_eps[c];
        e = std::move(next);
    }
    return e;
}

Mat variance_matrix(const BranchingModel& m, std::size_t k) {
    Mat s(m.p, m.p);
    Vec e(m.p, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        Mat next = m.m_xi * s * m.m_xi.transpose();
        next += m.V_eps;
        next += m.mixed_cov(e);
        s = std::move(next);
        Vec en = m.m_xi * e;
        for (std::size_t c = 0; c < m.p; ++c) en[c] += m.m_eps[c];
        e = std::move(en);
    }
    // Symmetrize away the last bits of rounding from the sandwich products.
    for (std::size_t i = 0; i < m.p; ++i)
        for (std::size_t j = i + 1; j < m.p; ++j) {
            const double avg = 0.5 * (s(i, j) + s(j, i));
            s(i, j) = avg;
            s(j, i) = avg;
        }
    return s;
}

Mat martingale_cov_conditional(const BranchingModel& m, const Vec& x) {
    if (x.size() != m.p) throw Error("dimension mismatch: conditional state");
    const std::size_t r = m.r();
    Mat out(r * m.p, r * m.p);
    for (std::size_t l = 1; l <= r; ++l) {
        Vec alpha = mat_pow(m.m_xi, static_cast<unsigned>(r - l)) * x;
        Vec drift(m.p, 0.0);
        for (std::size_t j = 1; j <= r - l; ++j) {
            const Vec term = mat_pow(m.m_xi, static_cast<unsigned>(j - 1)) * m.m_eps;
            for (std::size_t c = 0; c < m.p; ++c) drift[c] += term[c];
        }
        for (std::size_t c = 0; c < m.p; ++c) alpha[c] += drift[c];
        Mat blk = m.mixed_cov(alpha);
        blk += m.V_eps;
        const std::size_t off = (l - 1) * m.p;
        for (std::size_t a = 0; a < m.p; ++a)
            for (std::size_t b = 0; b < m.p; ++b) out(off + a, off + b) = blk(a, b);
    }
    return out;
}

Mat martingale_cov(const BranchingModel& m, std::size_t k) {
    if (k < 1) throw Error("invalid argument: block index");
    const std::size_t r = m.r();
    return martingale_cov_conditional(m, mean_vector(m, r * k - r));
}

GrowthDiagnostics growth_diagnostics(const BranchingModel& m, std::size_t k_max,
                                     std::size_t replications, std::uint64_t seed,
                                     unsigned threads) {
    if (!m.critical) throw Error("not critical");
    if (k_max < 8) throw Error("invalid argument: k_max too small");
    const std::size_t r = m.r();
    const std::size_t blocks = k_max / r;

    GrowthDiagnostics g;
    g.k_max = k_max;
    g.replications = replications;

    // Oracle route: ||E X_k|| for every k, slope over the tail half.
    {
        std::vector<double> lx, ly;
        Vec e(m.p, 0.0);
        for (std::size_t k = 1; k <= k_max; ++k) {
            Vec next = m.m_xi * e;
            for (std::size_t c = 0; c < m.p; ++c) next[c] += m.m_eps[c];
            e = std::move(next);
            if (k >= (k_max + 1) / 2 && norm2(e) > 0.0) {
                lx.push_back(std::log(static_cast<double>(k)));
                ly.push_back(std::log(norm2(e)));
            }
        }
        if (lx.size() >= 3) g.mean_norm = fit_line(lx, ly);
    }

    // Monte Carlo route with chunked accumulation (thread-count invariant).
    const std::size_t nchunks = std::min(kChunkCount, std::max<std::size_t>(replications, 1));
    std::vector<std::vector<double>> x2(nchunks, std::vector<double>(k_max + 1, 0.0));
    std::vector<std::vector<double>> m1(nchunks, std::vector<double>(blocks + 1, 0.0));
    std::vector<std::vector<double>> m4(nchunks, std::vector<double>(blocks + 1, 0.0));
    parallel_chunks(replications, threads, [&](std::size_t lo, std::size_t hi, std::size_t c) {
        for (std::size_t rep = lo; rep < hi; ++rep) {
            const Trajectory t = simulate_trajectory(m, k_max, seed, rep);
            for (std::size_t k = 1; k <= k_max; ++k) {
                double s = 0.0;
                for (std::size_t l = 0; l < m.p; ++l) {
                    const double xv = static_cast<double>(t.states[k][l]);
                    s += xv * xv;
                }
                x2[c][k] += s;
            }
            const MartingaleBlocks mb = martingale_blocks(t);
            for (std::size_t k = 1; k <= blocks; ++k) {
                const Vec stk = mb.stacked(k);
                const double n2 = dot(stk, stk);
                m1[c][k] += std::sqrt(n2);
                m4[c][k] += n2 * n2;
            }
        }
    });
    for (std::size_t c = 1; c < nchunks; ++c) {
        for (std::size_t k = 0; k <= k_max; ++k) x2[0][k] += x2[c][k];
        for (std::size_t k = 0; k <= blocks; ++k) {
            m1[0][k] += m1[c][k];
            m4[0][k] += m4[c][k];
        }
    }

    const double invr = 1.0 / static_cast<double>(replications);
    {
        std::vector<double> lx, ly;
        for (std::size_t k = (k_max + 1) / 2; k <= k_max; ++k)
            if (x2[0][k] > 0.0) {
                lx.push_back(std::log(static_cast<double>(k)));
                ly.push_back(std::log(x2[0][k] * invr));
            }
        if (lx.size() >= 3) g.x_norm_sq = fit_line(lx, ly);
    }
    {
        std::vector<double> lx1, ly1, lx4, ly4;
        for (std::size_t k = (blocks + 1) / 2; k <= blocks; ++k) {
            if (m1[0][k] > 0.0) {
                lx1.push_back(std::log(static_cast<double>(r * k)));
                ly1.push_back(std::log(m1[0][k] * invr));
            }
            if (m4[0][k] > 0.0) {
                lx4.push_back(std::log(static_cast<double>(r * k)));
                ly4.push_back(std::log(m4[0][k] * invr));
            }
        }
        if (lx1.size() >= 3) {
            g.m_norm = fit_line(lx1, ly1);
            g.m_norm_4 = fit_line(lx4, ly4);
        } else {
            g.m_degenerate = true;
        }
    }
    return g;
}

}  // namespace branchlab
