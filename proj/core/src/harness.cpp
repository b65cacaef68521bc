#include "branchlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "branchlab/error.hpp"
#include "branchlab/simulator.hpp"
#include "branchlab/stats.hpp"
#include "branchlab/threading.hpp"

namespace branchlab {
namespace {

constexpr double kZeroFloor = 1e-12;
// Streams of the Lindeberg/covariance batch are disjoint from the marginal
// batch (which uses streams 0..reps-1).
constexpr std::uint64_t kCovStreamOffset = std::uint64_t{1} << 40;

std::size_t block_index(std::size_t n, double t) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * t + 1e-9));
}

double median_ignoring_nan(Vec x) {
    x.erase(std::remove_if(x.begin(), x.end(), [](double v) { return std::isnan(v); }), x.end());
    if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(x.begin(), x.end());
    const std::size_t h = x.size() / 2;
    return x.size() % 2 ? x[h] : 0.5 * (x[h - 1] + x[h]);
}

struct MarginalBatch {
    std::vector<std::size_t> q;  // block count per n
    // z[class-1][n_idx][rep]: class functional of the top block, scaled.
    std::vector<std::vector<Vec>> z;
    // angle[class-1][n_idx][rep]: angle to the Perron direction; NaN when the
    // class sub-vector is zero (no direction) or the class has one type.
    std::vector<std::vector<Vec>> angle;
    double psi_gap_max = 0.0;
};

MarginalBatch run_marginal_batch(const BranchingModel& m, const std::vector<std::size_t>& n_list,
                                 double T, std::size_t reps, std::uint64_t seed, unsigned threads) {
    if (reps == 0) throw Error("invalid argument: replications");
    const CyclicStructure& s = *m.structure;
    const std::size_t r = s.r;
    MarginalBatch b;
    std::size_t q_top = 0;
    for (std::size_t n : n_list) {
        b.q.push_back(block_index(n, T));
        q_top = std::max(q_top, b.q.back());
    }
    const std::size_t n_max = *std::max_element(n_list.begin(), n_list.end());
    const std::size_t K = r * q_top + r;  // head room for the reconstruction identity

    b.z.assign(r, std::vector<Vec>(n_list.size(), Vec(reps, 0.0)));
    b.angle.assign(r, std::vector<Vec>(
                          n_list.size(), Vec(reps, std::numeric_limits<double>::quiet_NaN())));

    std::vector<Vec> u_class(r), v_class(r);
    Vec u_norm(r, 0.0);
    for (std::size_t i = 1; i <= r; ++i) {
        u_class[i - 1] = s.class_sub(s.u, i);
        v_class[i - 1] = s.class_sub(s.v, i);
        u_norm[i - 1] = norm2(u_class[i - 1]);
    }

    const Vec psi_grid = uniform_grid(T, 8);
    std::vector<double> chunk_psi(kChunkCount, 0.0);

    parallel_chunks(reps, threads, [&](std::size_t lo, std::size_t hi, std::size_t chunk) {
        for (std::size_t rep = lo; rep < hi; ++rep) {
            const Trajectory traj = simulate_trajectory(m, K, seed, rep);
            chunk_psi[chunk] = std::max(chunk_psi[chunk], psi_identity_gap(traj, n_max, psi_grid));
            for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
                const double scale =
                    1.0 / (static_cast<double>(n_list[ni]) * static_cast<double>(r));
                const auto& x = traj.states[r * b.q[ni]];
                for (std::size_t i = 0; i < r; ++i) {
                    const auto& cls = s.classes[i];
                    double zv = 0.0, du = 0.0, nrm2 = 0.0;
                    for (std::size_t jj = 0; jj < cls.size(); ++jj) {
                        const double xv = static_cast<double>(x[cls[jj]]);
                        zv += v_class[i][jj] * xv;
                        du += u_class[i][jj] * xv;
                        nrm2 += xv * xv;
                    }
                    b.z[i][ni][rep] = scale * zv;
                    if (cls.size() >= 2 && nrm2 > 0.0) {
                        const double c =
                            std::clamp(du / (std::sqrt(nrm2) * u_norm[i]), -1.0, 1.0);
                        b.angle[i][ni][rep] = std::acos(c);
                    }
                }
            }
        }
    });
    for (double g : chunk_psi) b.psi_gap_max = std::max(b.psi_gap_max, g);
    return b;
}

MarginalTestResult marginal_from_samples(const SdeCoefficients& c, const MarginalBatch& b,
                                         const std::vector<std::size_t>& n_list, double T,
                                         double alpha) {
    MarginalTestResult res;
    res.alpha = alpha;
    const std::size_t r = c.r;
    for (std::size_t i = 1; i <= r; ++i) {
        const MarginalLaw law = class_functional_marginal(c, i, T);
        for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
            const Vec& sample = b.z[i - 1][ni];
            if (law.degenerate()) {
                DeviationEntry d;
                d.n = n_list[ni];
                d.class_index = i;
                for (double v : sample)
                    d.max_deviation = std::max(d.max_deviation, std::fabs(v - law.point));
                d.threshold =
                    10.0 * std::max(1.0, std::fabs(law.point)) / static_cast<double>(n_list[ni]);
                d.pass = d.max_deviation <= d.threshold;
                res.degenerate_entries.push_back(d);
                continue;
            }
            KsEntry e;
            e.n = n_list[ni];
            e.class_index = i;
            e.samples = sample.size();
            e.lattice_gap = 1.0 / (static_cast<double>(n_list[ni]) * static_cast<double>(r));
            const KsResult ks = ks_one_sample(sample, [&law](double x) { return law.cdf(x); });
            e.distance = ks.distance;
            e.p_value = ks.p_value;
            res.entries.push_back(e);
            if (r > 1) {
                // Same samples against the per-class law with the cycle factor
                // dropped from the diffusion; retained for reference.
                const MarginalLaw lit = exact_Z_marginal(c.a[i - 1], c.b[i - 1], T);
                KsEntry le = e;
                const KsResult lks =
                    ks_one_sample(sample, [&lit](double x) { return lit.cdf(x); });
                le.distance = lks.distance;
                le.p_value = lks.p_value;
                res.literal_entries.push_back(le);
            }
        }
    }
    res.family_size = res.entries.size();
    for (const auto& e : res.entries) res.min_p = std::min(res.min_p, e.p_value);
    bool deg_ok = true;
    for (const auto& d : res.degenerate_entries) deg_ok = deg_ok && d.pass;
    const bool ks_ok = res.entries.empty() ||
                       res.min_p >= alpha / static_cast<double>(res.family_size);
    res.pass = ks_ok && deg_ok;
    return res;
}

RayTestResult ray_from_batch(const BranchingModel& m, const MarginalBatch& b,
                             const std::vector<std::size_t>& n_list) {
    const CyclicStructure& s = *m.structure;
    RayTestResult res;
    res.n_list = n_list;
    for (std::size_t i = 1; i <= s.r; ++i) {
        if (s.classes[i - 1].size() < 2) continue;  // angle trivially 0
        RayClassTrend t;
        t.class_index = i;
        bool finite = true;
        for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
            t.median_angle.push_back(median_ignoring_nan(b.angle[i - 1][ni]));
            finite = finite && std::isfinite(t.median_angle.back());
        }
        if (n_list.size() >= 3 && finite) {
            Vec nv;
            for (std::size_t n : n_list) nv.push_back(static_cast<double>(n));
            t.spearman = spearman_rho(nv, t.median_angle);
            bool at_floor = true;
            for (double v : t.median_angle) at_floor = at_floor && v <= kZeroFloor;
            t.pass = at_floor || t.spearman < 0.0;
        } else {
            t.pass = finite;  // data-only; a trend needs >= 3 values of n
        }
        res.classes.push_back(std::move(t));
    }
    if (res.classes.empty()) {
        res.skipped = true;
        res.notice = "all classes have a single type; angle identically 0";
        res.pass = true;
        return res;
    }
    res.pass = true;
    for (const auto& t : res.classes) res.pass = res.pass && t.pass;
    return res;
}

IndependenceResult indep_from_batch(const BranchingModel& m, const MarginalBatch& b,
                                    const std::vector<std::size_t>& n_list, std::size_t reps) {
    IndependenceResult res;
    const std::size_t r = m.r();
    if (r < 2) {
        res.skipped = true;
        res.notice = "r = 1";
        res.pass = true;
        return res;
    }
    const double threshold = 3.0 / std::sqrt(static_cast<double>(reps));
    res.gate_n = *std::max_element(n_list.begin(), n_list.end());
    res.pass = true;
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        for (std::size_t i = 1; i <= r; ++i) {
            for (std::size_t j = i + 1; j <= r; ++j) {
                CorrelationEntry e;
                e.n = n_list[ni];
                e.class_i = i;
                e.class_j = j;
                e.threshold = threshold;
                e.corr = correlation(b.z[i - 1][ni], b.z[j - 1][ni]);
                e.pass = std::fabs(e.corr) < threshold;
                if (e.n == res.gate_n) res.pass = res.pass && e.pass;
                res.entries.push_back(e);
            }
        }
    }
    return res;
}

// Model-level constants of the covariance-gap closed forms.
struct CovCache {
    std::vector<Mat> mpow;  // m_xi^0 .. m_xi^r
    Mat pi;
    Vec pi_drift;                  // Pi sum_{j=1}^r m^{j-1} m_eps
    std::vector<Vec> imm_partial;  // per class l: sum_{j=1}^{r-l} m^{j-1} m_eps
};

CovCache make_cov_cache(const BranchingModel& m) {
    const std::size_t r = m.r();
    CovCache cc;
    cc.mpow.push_back(Mat::identity(m.p));
    for (std::size_t e = 1; e <= r; ++e) cc.mpow.push_back(cc.mpow.back() * m.m_xi);
    cc.pi = limit_projector(*m.structure);
    Vec drift(m.p, 0.0);
    for (std::size_t j = 1; j <= r; ++j) {
        const Vec t = cc.mpow[j - 1] * m.m_eps;
        for (std::size_t c = 0; c < m.p; ++c) drift[c] += t[c];
    }
    cc.pi_drift = cc.pi * drift;
    for (std::size_t l = 1; l <= r; ++l) {
        Vec acc(m.p, 0.0);
        for (std::size_t j = 1; j + l <= r; ++j) {  // j = 1 .. r-l
            const Vec t = cc.mpow[j - 1] * m.m_eps;
            for (std::size_t c = 0; c < m.p; ++c) acc[c] += t[c];
        }
        cc.imm_partial.push_back(std::move(acc));
    }
    return cc;
}

// sup_{t <= T} of the blockwise gap between the summed conditional
// covariances and the integrated limit covariance density, both in closed
// form. The difference is block-diagonal, so the operator norm is the max of
// the per-class block norms; candidate times are scanned at the kinks of the
// floor function (fractional parts 0, 1/2, 1 within each block interval),
// the argmax located by Frobenius norm, and the reported value is the
// spectral norm at the argmax.
double cov_gap_sup(const BranchingModel& m, const CovCache& cc, const Trajectory& traj,
                   std::size_t n, double T) {
    const std::size_t r = m.r(), p = m.p;
    const std::size_t q_max = block_index(n, T);
    const double nr = static_cast<double>(n) * static_cast<double>(r);
    const double s2 = 1.0 / (nr * nr);
    const double nt = static_cast<double>(n) * T;

    const auto alpha_at = [&](const Vec& S, const Vec& piS, const Vec& pix, std::size_t q,
                              double frac, std::size_t l) {
        Vec w(p);
        for (std::size_t c = 0; c < p; ++c) w[c] = S[c] - piS[c] - frac * pix[c];
        Vec alpha = cc.mpow[r - l] * w;
        const double qd = static_cast<double>(q);
        for (std::size_t c = 0; c < p; ++c)
            alpha[c] = s2 * (alpha[c] + qd * cc.imm_partial[l - 1][c] -
                             0.5 * (qd + frac * frac) * cc.pi_drift[c]);
        return alpha;
    };
    const auto delta_entry = [&](const Vec& alpha, std::size_t q, std::size_t i, std::size_t j) {
        double e = static_cast<double>(q) * s2 * m.V_eps(i, j);
        for (std::size_t c = 0; c < p; ++c) e += alpha[c] * m.V_xi[c](i, j);
        return e;
    };

    double best = -1.0;
    std::size_t best_q = 0, best_l = 1;
    double best_frac = 0.0;

    Vec S(p, 0.0);
    for (std::size_t q = 0; q <= q_max; ++q) {
        if (q > 0) {
            const auto& x_prev = traj.states[r * (q - 1)];
            for (std::size_t c = 0; c < p; ++c) S[c] += static_cast<double>(x_prev[c]);
        }
        const Vec piS = cc.pi * S;
        Vec x(p);
        for (std::size_t c = 0; c < p; ++c)
            x[c] = static_cast<double>(traj.states[r * q][c]);
        const Vec pix = cc.pi * x;
        for (double frac : {0.0, 0.5, 1.0}) {
            if (static_cast<double>(q) + frac > nt + 1e-9) break;
            for (std::size_t l = 1; l <= r; ++l) {
                const Vec alpha = alpha_at(S, piS, pix, q, frac, l);
                double fro2 = 0.0;
                for (std::size_t i = 0; i < p; ++i)
                    for (std::size_t j = 0; j < p; ++j) {
                        const double e = delta_entry(alpha, q, i, j);
                        fro2 += e * e;
                    }
                if (fro2 > best) {
                    best = fro2;
                    best_q = q;
                    best_frac = frac;
                    best_l = l;
                }
            }
        }
    }

    // Rebuild the argmax block and report its spectral norm.
    Vec Sb(p, 0.0);
    for (std::size_t q = 1; q <= best_q; ++q) {
        const auto& x_prev = traj.states[r * (q - 1)];
        for (std::size_t c = 0; c < p; ++c) Sb[c] += static_cast<double>(x_prev[c]);
    }
    const Vec piSb = cc.pi * Sb;
    Vec xb(p);
    for (std::size_t c = 0; c < p; ++c)
        xb[c] = static_cast<double>(traj.states[r * best_q][c]);
    const Vec pixb = cc.pi * xb;
    const Vec alpha = alpha_at(Sb, piSb, pixb, best_q, best_frac, best_l);
    Mat delta(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) delta(i, j) = delta_entry(alpha, best_q, i, j);
    return spectral_norm(delta);
}

struct CovBatch {
    // [n_idx][rep]
    std::vector<Vec> lind_small, lind_unit, covgap;
    double psi_gap_max = 0.0;
};

CovBatch run_cov_batch(const BranchingModel& m, const std::vector<std::size_t>& n_list, double T,
                       std::size_t reps, std::uint64_t seed, unsigned threads) {
    if (reps == 0) throw Error("invalid argument: replications");
    const std::size_t r = m.r();
    std::size_t q_top = 0;
    for (std::size_t n : n_list) q_top = std::max(q_top, block_index(n, T));
    const std::size_t n_max = *std::max_element(n_list.begin(), n_list.end());
    const std::size_t K = r * q_top + r;
    const CovCache cc = make_cov_cache(m);

    CovBatch b;
    b.lind_small.assign(n_list.size(), Vec(reps, 0.0));
    b.lind_unit.assign(n_list.size(), Vec(reps, 0.0));
    b.covgap.assign(n_list.size(), Vec(reps, 0.0));

    const Vec psi_grid = uniform_grid(T, 8);
    std::vector<double> chunk_psi(kChunkCount, 0.0);

    parallel_chunks(reps, threads, [&](std::size_t lo, std::size_t hi, std::size_t chunk) {
        for (std::size_t rep = lo; rep < hi; ++rep) {
            const Trajectory traj = simulate_trajectory(m, K, seed, kCovStreamOffset + rep);
            chunk_psi[chunk] = std::max(chunk_psi[chunk], psi_identity_gap(traj, n_max, psi_grid));
            const MartingaleBlocks mb = martingale_blocks(traj);
            Vec mn2(q_top + 1, 0.0);
            for (std::size_t k = 1; k <= q_top; ++k) {
                const Vec st = mb.stacked(k);
                double acc = 0.0;
                for (double v : st) acc += v * v;
                mn2[k] = acc;
            }
            for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
                const std::size_t n = n_list[ni];
                const std::size_t qn = block_index(n, T);
                const double nr = static_cast<double>(n) * static_cast<double>(r);
                const double s2 = 1.0 / (nr * nr);
                double small_sum = 0.0, unit_sum = 0.0;
                for (std::size_t k = 1; k <= qn; ++k) {
                    const double nrm = std::sqrt(mn2[k]);
                    if (nrm > 0.1 * static_cast<double>(n)) small_sum += mn2[k];
                    if (nrm > 1.0 * static_cast<double>(n)) unit_sum += mn2[k];
                }
                b.lind_small[ni][rep] = s2 * small_sum;
                b.lind_unit[ni][rep] = s2 * unit_sum;
                b.covgap[ni][rep] = cov_gap_sup(m, cc, traj, n, T);
            }
        }
    });
    for (double g : chunk_psi) b.psi_gap_max = std::max(b.psi_gap_max, g);
    return b;
}

TrendSeries make_trend(std::string name, const std::vector<Vec>& per_n,
                       const std::vector<std::size_t>& n_list) {
    TrendSeries t;
    t.name = std::move(name);
    for (const Vec& v : per_n) t.value.push_back(mean_of(v));
    t.evaluable = n_list.size() >= 3;
    if (!t.evaluable) {
        t.pass = true;  // data-only; a trend needs >= 3 values of n
        return t;
    }
    Vec nv;
    for (std::size_t n : n_list) nv.push_back(static_cast<double>(n));
    t.spearman = spearman_rho(nv, t.value);
    bool at_floor = true;
    for (double v : t.value) at_floor = at_floor && v <= kZeroFloor;
    t.pass = at_floor || t.spearman < 0.0;
    return t;
}

LindebergCovResult lind_from_batch(const CovBatch& b, const std::vector<std::size_t>& n_list,
                                   std::size_t reps) {
    LindebergCovResult res;
    res.n_list = n_list;
    res.replications = reps;
    res.lindeberg_small = make_trend("lindeberg sum, threshold 0.1", b.lind_small, n_list);
    res.lindeberg_unit = make_trend("lindeberg sum, threshold 1.0", b.lind_unit, n_list);
    res.covariance_gap = make_trend("covariance gap", b.covgap, n_list);
    res.pass =
        res.lindeberg_small.pass && res.lindeberg_unit.pass && res.covariance_gap.pass;
    return res;
}

AlgebraicChecks algebra_checks(const BranchingModel& m, double psi_gap_max) {
    const CyclicStructure& s = *m.structure;
    AlgebraicChecks a;
    a.psi_gap_max = psi_gap_max;
    const Mat pi = limit_projector(s);
    a.pi_idempotent_gap = max_abs_diff(pi * pi, pi);
    for (std::size_t i = 1; i <= s.r; ++i) {
        const double gap =
            std::fabs(dot(s.class_sub(s.v, i), s.class_sub(s.u, i)) - 1.0 / s.r);
        a.class_biorthogonality_gap = std::max(a.class_biorthogonality_gap, gap);
    }
    // The projector identities are exact algebra; 1e-9 absolute covers the
    // floating-point in forming them.
    a.pass = a.psi_gap_max <= a.tol && a.pi_idempotent_gap <= 1e-9 &&
             a.class_biorthogonality_gap <= 1e-9;
    return a;
}

bool usable_model(const BranchingModel& m) {
    return m.irreducible && m.critical && m.structure.has_value();
}

}  // namespace

ConvergenceReport run_convergence(const BranchingModel& m, const ConvergenceOptions& opts) {
    if (opts.n_list.empty()) throw Error("invalid argument: empty n list");
    if (!(opts.T > 0.0)) throw Error("invalid argument: horizon must be positive");
    ConvergenceReport rep;
    rep.model_name = m.name;
    rep.n_list = opts.n_list;
    rep.T = opts.T;
    rep.replications = opts.replications;
    rep.seed = opts.seed;
    if (!usable_model(m)) {
        rep.not_critical = true;
        rep.marginal.skipped = true;
        rep.marginal.notice = "not critical";
        rep.ray.skipped = true;
        rep.ray.notice = "not critical";
        rep.independence.skipped = true;
        rep.independence.notice = "not critical";
        rep.notes.push_back("model is not critical indecomposable; statistical families skipped");
        rep.pass = false;
        return rep;
    }
    const unsigned threads = resolve_threads(opts.threads);
    const SdeCoefficients c = sde_coefficients(m);

    const MarginalBatch mb =
        run_marginal_batch(m, opts.n_list, opts.T, opts.replications, opts.seed, threads);
    rep.marginal = marginal_from_samples(c, mb, opts.n_list, opts.T, opts.alpha);
    rep.ray = ray_from_batch(m, mb, opts.n_list);
    rep.independence = indep_from_batch(m, mb, opts.n_list, opts.replications);
    if (opts.keep_samples) {
        for (std::size_t i = 1; i <= m.r(); ++i)
            for (std::size_t ni = 0; ni < opts.n_list.size(); ++ni)
                rep.samples.push_back(SampleDump{i, opts.n_list[ni], mb.z[i - 1][ni]});
    }

    double psi_max = mb.psi_gap_max;
    if (opts.cov_replications > 0) {
        const CovBatch cb =
            run_cov_batch(m, opts.n_list, opts.T, opts.cov_replications, opts.seed, threads);
        rep.lindeberg_cov = lind_from_batch(cb, opts.n_list, opts.cov_replications);
        psi_max = std::max(psi_max, cb.psi_gap_max);
    } else {
        rep.lindeberg_cov.n_list = opts.n_list;
        rep.lindeberg_cov.pass = true;
        rep.notes.push_back("lindeberg/covariance batch disabled (0 replications)");
    }
    rep.algebra = algebra_checks(m, psi_max);

    rep.notes.push_back(
        "fixed-time marginals and functionals are verified; path-space weak convergence is "
        "implied by the theory, not tested directly");
    rep.notes.push_back(
        "scaled samples live on a lattice of gap 1/(n r); KS thresholds are set permissively");
    rep.pass = rep.marginal.pass && (rep.ray.skipped || rep.ray.pass) &&
               (rep.independence.skipped || rep.independence.pass) && rep.lindeberg_cov.pass &&
               rep.algebra.pass;
    return rep;
}

MarginalTestResult marginal_convergence_test(const BranchingModel& m, std::size_t n, double T,
                                             std::size_t reps, std::uint64_t seed,
                                             unsigned threads) {
    if (!usable_model(m)) {
        MarginalTestResult res;
        res.skipped = true;
        res.notice = "not critical";
        return res;
    }
    const SdeCoefficients c = sde_coefficients(m);
    const std::vector<std::size_t> n_list{n};
    const MarginalBatch b = run_marginal_batch(m, n_list, T, reps, seed, resolve_threads(threads));
    return marginal_from_samples(c, b, n_list, T, 0.01);
}

RayTestResult ray_concentration_test(const BranchingModel& m, std::size_t n, double T,
                                     std::size_t reps, std::uint64_t seed, unsigned threads) {
    if (!usable_model(m)) {
        RayTestResult res;
        res.skipped = true;
        res.notice = "not critical";
        return res;
    }
    const std::vector<std::size_t> n_list{n};
    const MarginalBatch b = run_marginal_batch(m, n_list, T, reps, seed, resolve_threads(threads));
    return ray_from_batch(m, b, n_list);
}

IndependenceResult class_independence_test(const BranchingModel& m, std::size_t n, double T,
                                           std::size_t reps, std::uint64_t seed,
                                           unsigned threads) {
    if (!usable_model(m)) {
        IndependenceResult res;
        res.skipped = true;
        res.notice = "not critical";
        return res;
    }
    if (m.r() < 2) {
        IndependenceResult res;
        res.skipped = true;
        res.notice = "r = 1";
        res.pass = true;
        return res;
    }
    const std::vector<std::size_t> n_list{n};
    const MarginalBatch b = run_marginal_batch(m, n_list, T, reps, seed, resolve_threads(threads));
    return indep_from_batch(m, b, n_list, reps);
}

LindebergCovResult lindeberg_and_covariance_check(const BranchingModel& m, std::size_t n, double T,
                                                  std::size_t reps, std::uint64_t seed,
                                                  unsigned threads) {
    if (!usable_model(m)) throw Error("not critical");
    const std::vector<std::size_t> n_list{n};
    const CovBatch b = run_cov_batch(m, n_list, T, reps, seed, resolve_threads(threads));
    return lind_from_batch(b, n_list, reps);
}

}  // namespace branchlab
