#include "branchlab/limit_sde.hpp"

#include <cmath>

#include "branchlab/error.hpp"
#include "branchlab/stats.hpp"

namespace branchlab {

SdeCoefficients sde_coefficients(const BranchingModel& m) {
    if (!m.structure) throw Error("class data missing");
    const CyclicStructure& s = *m.structure;
    const unsigned r = s.r;
    SdeCoefficients c;
    c.r = r;

    auto class_id = [&](std::size_t l) { return (l - 1) % r + 1; };  // 1-based, wraps

    for (std::size_t i = 1; i <= r; ++i) {
        const Vec u_i = s.class_sub(s.u, i);
        const Vec v_i = s.class_sub(s.v, i);
        const std::size_t di = u_i.size();

        Vec mv(di, 0.0);
        Mat vv(di, di);
        for (std::size_t l = i; l <= i + r - 1; ++l) {
            const Mat tilde = block_product(m.m_xi, s, i, l);  // |D_i| x |D_c(l)|
            const Vec eps_l = s.class_sub(m.m_eps, class_id(l));
            const Vec add = tilde * eps_l;
            for (std::size_t e = 0; e < di; ++e) mv[e] += add[e];

            // Weight vector over class l+1: the cycle product back to class
            // i+r applied to u_i (equals u_{l+1} at criticality; computed
            // through the blocks so the identity stays a cross-check).
            const std::size_t start = class_id(l + 1);
            const std::size_t len = (i + r) - (l + 1);
            const Vec w = block_product(m.m_xi, s, start, start + len) * u_i;

            // Mixture of the offspring covariances of class l+1, restricted
            // to their supporting block (class l coordinates).
            const auto& rows = s.classes[class_id(l) - 1];
            const auto& types = s.classes[start - 1];
            Mat w_mix(rows.size(), rows.size());
            for (std::size_t jj = 0; jj < types.size(); ++jj) {
                if (w[jj] == 0.0) continue;
                const Mat sub = submatrix(m.V_xi[types[jj]], rows, rows);
                for (std::size_t e = 0; e < w_mix.data().size(); ++e)
                    w_mix.data()[e] += w[jj] * sub.data()[e];
            }
            const Mat piece = tilde * w_mix * tilde.transpose();
            vv += piece;
        }
        const double inv_r = 1.0 / static_cast<double>(r);
        for (double& e : mv) e *= inv_r;
        vv *= inv_r;
        c.m_xieps.push_back(mv);
        c.V_xieps.push_back(vv);
        c.a.push_back(dot(v_i, mv));
        // b is a variance of the projected offspring law; rounding in the
        // quadratic form may leave an epsilon-scale negative for one-child
        // models where it vanishes exactly.
        double b = dot(v_i, vv * v_i);
        if (b < 0.0 && b > -1e-12) b = 0.0;
        c.b.push_back(b);
    }
    return c;
}

double MarginalLaw::mean() const {
    return kind == Kind::gamma ? shape * scale : point;
}

double MarginalLaw::variance() const {
    return kind == Kind::gamma ? shape * scale * scale : 0.0;
}

double MarginalLaw::cdf(double x) const {
    if (kind == Kind::point_mass) return x >= point ? 1.0 : 0.0;
    return gamma_cdf(shape, scale, x);
}

MarginalLaw exact_Z_marginal(double a, double b, double t) {
    if (a < 0.0 || b < 0.0 || !(t > 0.0)) throw Error("invalid argument: marginal parameters");
    MarginalLaw law;
    if (a == 0.0) {
        law.kind = MarginalLaw::Kind::point_mass;
        law.point = 0.0;
        return law;
    }
    if (b == 0.0) {
        law.kind = MarginalLaw::Kind::point_mass;
        law.point = a * t;
        return law;
    }
    law.kind = MarginalLaw::Kind::gamma;
    law.shape = 2.0 * a / b;
    law.scale = b * t / 2.0;
    return law;
}

MarginalLaw class_functional_marginal(const SdeCoefficients& c, std::size_t class_index, double t) {
    if (class_index < 1 || class_index > c.a.size()) throw Error("index out of range: class");
    const double rr = static_cast<double>(c.r);
    return exact_Z_marginal(c.a[class_index - 1], rr * c.b[class_index - 1], t);
}

MarginalLaw z_marginal(const SdeCoefficients& c, std::size_t class_index, double t) {
    if (class_index < 1 || class_index > c.a.size()) throw Error("index out of range: class");
    const double rr = static_cast<double>(c.r);
    return exact_Z_marginal(rr * c.a[class_index - 1], rr * rr * c.b[class_index - 1], t);
}

namespace {

std::size_t step_count(double T, double dt) {
    if (!(dt > 0.0) || !(T > 0.0)) throw Error("invalid step");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(T / dt - 1e-9)));
}

}  // namespace

ScalarPath simulate_Z(double a, double b, double T, double dt, std::uint64_t seed,
                      std::uint64_t stream) {
    if (a < 0.0 || b < 0.0) throw Error("invalid argument: drift or diffusion negative");
    const std::size_t n = step_count(T, dt);
    const double h = T / static_cast<double>(n);
    const double sqh = std::sqrt(h);
    Rng rng(seed, stream);
    ScalarPath path;
    path.t.resize(n + 1);
    path.z.resize(n + 1);
    path.t[0] = 0.0;
    path.z[0] = 0.0;
    double z = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
        z += a * h + std::sqrt(b * std::max(z, 0.0)) * sqh * rng.normal();
        path.t[j] = h * static_cast<double>(j);
        path.z[j] = z;
    }
    return path;
}

double simulate_Z_endpoint(double a, double b, double T, double dt, Rng& rng) {
    if (a < 0.0 || b < 0.0) throw Error("invalid argument: drift or diffusion negative");
    const std::size_t n = step_count(T, dt);
    const double h = T / static_cast<double>(n);
    const double sqh = std::sqrt(h);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        z += a * h + std::sqrt(b * std::max(z, 0.0)) * sqh * rng.normal();
    return z;
}

LimitPath assemble_limit(const std::vector<ScalarPath>& z_per_class, const BranchingModel& m) {
    if (!m.structure) throw Error("class data missing");
    if (!m.critical) throw Error("not critical");
    const CyclicStructure& s = *m.structure;
    const unsigned r = s.r;
    if (z_per_class.size() != r) throw Error("grid mismatch: need one path per class");
    const Vec& grid = z_per_class[0].t;
    for (const auto& zp : z_per_class) {
        if (zp.t.size() != grid.size() || zp.z.size() != grid.size())
            throw Error("grid mismatch");
        for (std::size_t g = 0; g < grid.size(); ++g)
            if (std::fabs(zp.t[g] - grid[g]) > 1e-12) throw Error("grid mismatch");
    }

    std::vector<Mat> mpow;
    mpow.push_back(Mat::identity(m.p));
    for (unsigned e = 1; e <= r; ++e) mpow.push_back(mpow.back() * m.m_xi);

    LimitPath lp;
    lp.r = r;
    lp.p = m.p;
    lp.grid = grid;
    lp.Z.assign(r, Vec(grid.size(), 0.0));
    for (unsigned i = 0; i < r; ++i) lp.Z[i] = z_per_class[i].z;

    for (std::size_t g = 0; g < grid.size(); ++g) {
        Vec y(m.p, 0.0);
        for (unsigned i = 1; i <= r; ++i)
            for (std::size_t a : s.classes[i - 1]) y[a] = lp.Z[i - 1][g] * s.u[a];
        const Vec y_cycle = mpow[r] * y;
        double dev = 0.0, scale = 1.0;
        for (std::size_t c = 0; c < m.p; ++c) {
            dev = std::max(dev, std::fabs(y_cycle[c] - y[c]));
            scale = std::max(scale, std::fabs(y[c]));
        }
        if (dev > 1e-10 * scale) throw Error("invalid argument: cycle-invariance of the limit violated");
        Vec stacked;
        stacked.reserve(r * m.p);
        for (unsigned i = 1; i <= r; ++i) {
            const Vec blk = mpow[r - i + 1] * y;
            stacked.insert(stacked.end(), blk.begin(), blk.end());
        }
        lp.Y.push_back(std::move(y));
        lp.X.push_back(std::move(stacked));
    }
    return lp;
}

Mat psd_sqrt(const Mat& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw Error("not PSD: non-square input");
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            asym = std::max(asym, std::fabs(a(i, j) - a(j, i)));
    if (asym > 1e-10 * std::max(1.0, max_abs(a))) throw Error("not PSD: asymmetric input");

    Mat q;
    Vec lam;
    jacobi_eigh(a, q, lam);
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
    const double floor_neg = -(1e-8 * std::max(trace, 0.0) + 1e-30);
    Mat b(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        if (lam[k] < floor_neg) throw Error("not PSD: eigenvalue below tolerance");
        const double sl = std::sqrt(std::max(lam[k], 0.0));
        if (sl == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) b(i, j) += sl * q(i, k) * q(j, k);
    }
    return b;
}

MNPaths simulate_MN_system(const BranchingModel& m, double T, double dt, std::uint64_t seed,
                           std::size_t grid_points) {
    if (!m.structure) throw Error("class data missing");
    if (!m.critical) throw Error("not critical");
    const CyclicStructure& s = *m.structure;
    const unsigned r = s.r;
    const std::size_t p = m.p;
    const std::size_t nsteps = step_count(T, dt);
    const double h = T / static_cast<double>(nsteps);
    const double sqh = std::sqrt(h);
    const double inv_r = 1.0 / static_cast<double>(r);

    std::vector<Mat> mpow;
    mpow.push_back(Mat::identity(p));
    for (unsigned e = 1; e <= r; ++e) mpow.push_back(mpow.back() * m.m_xi);
    const Mat pi = limit_projector(s);
    Vec drift(p, 0.0);  // sum_l m^{l-1} m_eps
    for (unsigned l = 1; l <= r; ++l) {
        const Vec t = mpow[l - 1] * m.m_eps;
        for (std::size_t c = 0; c < p; ++c) drift[c] += t[c];
    }

    std::vector<Vec> M(r, Vec(p, 0.0));
    Vec n_direct(p, 0.0);
    Rng rng(seed, 0);

    MNPaths out;
    out.grid = Vec(grid_points, 0.0);
    const auto record_every = std::max<std::size_t>(1, nsteps / std::max<std::size_t>(1, grid_points - 1));

    auto diffusion = [&](const Vec& base, unsigned i) {
        Vec w = mpow[r - i] * base;
        for (double& x : w) x = std::max(x, 0.0);
        Mat g = m.mixed_cov(w);
        try {
            return psd_sqrt(g);
        } catch (const Error& e) {
            throw Error(std::string("psd failure: ") + e.what());
        }
    };

    auto record = [&](double t) {
        out.grid[out.M.size()] = t;
        out.M.push_back(M);
        out.N_direct.push_back(n_direct);
        Vec alg(p, 0.0);
        for (unsigned j = 1; j <= r; ++j) {
            const Vec t2 = mpow[j - 1] * M[j - 1];
            for (std::size_t c = 0; c < p; ++c) alg[c] += t2[c];
        }
        for (std::size_t c = 0; c < p; ++c)
            out.max_consistency_gap =
                std::max(out.max_consistency_gap, std::fabs(alg[c] - n_direct[c]));
        out.N_alg.push_back(std::move(alg));
    };

    record(0.0);
    double t = 0.0;
    for (std::size_t step = 1; step <= nsteps; ++step) {
        // Shared diffusion argument: both equations read the same projected
        // affine functional of the current state.
        Vec alg(p, 0.0);
        for (unsigned j = 1; j <= r; ++j) {
            const Vec tj = mpow[j - 1] * M[j - 1];
            for (std::size_t c = 0; c < p; ++c) alg[c] += tj[c];
        }
        Vec arg_m(p), arg_n(p);
        for (std::size_t c = 0; c < p; ++c) {
            arg_m[c] = static_cast<double>(r) * alg[c] + t * drift[c];
            arg_n[c] = static_cast<double>(r) * n_direct[c] + t * drift[c];
        }
        const Vec base_m = pi * arg_m;
        const Vec base_n = pi * arg_n;

        std::vector<Vec> noise(r, Vec(p, 0.0));
        for (unsigned i = 0; i < r; ++i)
            for (std::size_t c = 0; c < p; ++c) noise[i][c] = sqh * rng.normal();

        Vec dn(p, 0.0);
        for (unsigned i = 1; i <= r; ++i) {
            const Mat bm = diffusion(base_m, i);
            Vec dm = bm * noise[i - 1];
            for (std::size_t c = 0; c < p; ++c) M[i - 1][c] += inv_r * dm[c];

            const Mat bn = diffusion(base_n, i);
            const Vec dnj = mpow[i - 1] * (bn * noise[i - 1]);
            for (std::size_t c = 0; c < p; ++c) dn[c] += inv_r * dnj[c];
        }
        for (std::size_t c = 0; c < p; ++c) n_direct[c] += dn[c];
        t = h * static_cast<double>(step);
        if (step % record_every == 0 || step == nsteps) {
            if (out.M.size() < grid_points) record(t);
        }
    }
    out.grid.resize(out.M.size());
    return out;
}

}  // namespace branchlab
