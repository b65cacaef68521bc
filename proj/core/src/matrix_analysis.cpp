#include "branchlab/matrix_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "branchlab/error.hpp"

namespace branchlab {

namespace {

void check_nonneg_square(const NonnegMatrix& m) {
    if (m.rows() == 0 || m.rows() != m.cols()) throw Error("dimension mismatch: square matrix required");
    for (double x : m.data())
        if (!(x >= 0.0) || !std::isfinite(x)) throw Error("invalid argument: negative or non-finite entry");
}

// BFS distances in the digraph with an edge a->b whenever m(a,b) > 0.
std::vector<long> bfs_levels(const NonnegMatrix& m, std::size_t root, bool reverse) {
    const std::size_t p = m.rows();
    std::vector<long> lev(p, -1);
    std::queue<std::size_t> q;
    lev[root] = 0;
    q.push(root);
    while (!q.empty()) {
        const std::size_t a = q.front();
        q.pop();
        for (std::size_t b = 0; b < p; ++b) {
            const double w = reverse ? m(b, a) : m(a, b);
            if (w > 0.0 && lev[b] < 0) {
                lev[b] = lev[a] + 1;
                q.push(b);
            }
        }
    }
    return lev;
}

// Right Perron pair of a primitive nonnegative block via l1-normalized power
// iteration from the all-ones vector.
std::pair<double, Vec> primitive_perron(const Mat& b) {
    const std::size_t n = b.rows();
    Vec x(n, 1.0 / static_cast<double>(n));
    double lam = 0.0;
    for (int it = 0; it < 100000; ++it) {
        Vec y = b * x;
        double s = 0.0;
        for (double yi : y) s += yi;
        if (!(s > 0.0)) throw Error("no convergence: zero iterate in power iteration");
        for (double& yi : y) yi /= s;
        const double delta = max_abs_diff(x, y);
        lam = s;
        x = std::move(y);
        if (delta <= 1e-15) return {lam, x};
    }
    throw Error("no convergence: power iteration cap reached");
}

}  // namespace

std::size_t CyclicStructure::class_of(std::size_t index) const {
    for (std::size_t i = 0; i < classes.size(); ++i)
        for (std::size_t a : classes[i])
            if (a == index) return i + 1;
    throw Error("index out of range: class_of");
}

Vec CyclicStructure::class_sub(const Vec& x, std::size_t class_index) const {
    if (class_index < 1 || class_index > classes.size()) throw Error("index out of range: class_sub");
    const auto& cls = classes[class_index - 1];
    Vec y(cls.size());
    for (std::size_t i = 0; i < cls.size(); ++i) y[i] = x[cls[i]];
    return y;
}

bool check_irreducible(const NonnegMatrix& m) {
    check_nonneg_square(m);
    const std::size_t p = m.rows();
    if (p == 1) return m(0, 0) > 0.0;
    const auto fwd = bfs_levels(m, 0, false);
    const auto bwd = bfs_levels(m, 0, true);
    for (std::size_t i = 0; i < p; ++i)
        if (fwd[i] < 0 || bwd[i] < 0) return false;
    return true;
}

unsigned cyclicity_index(const NonnegMatrix& m) {
    if (!check_irreducible(m)) throw Error("reducible matrix");
    const std::size_t p = m.rows();
    const auto lev = bfs_levels(m, 0, false);
    long g = 0;
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b)
            if (m(a, b) > 0.0) g = std::gcd(g, std::labs(lev[a] + 1 - lev[b]));
    // Strong connectivity guarantees some edge closes a cycle, so g >= 1.
    return static_cast<unsigned>(g);
}

CyclicStructure cyclic_partition(const NonnegMatrix& m) {
    const unsigned r = cyclicity_index(m);
    const std::size_t p = m.rows();
    const auto lev = bfs_levels(m, 0, false);
    CyclicStructure s;
    s.r = r;
    s.classes.assign(r, {});
    for (std::size_t a = 0; a < p; ++a)
        s.classes[static_cast<std::size_t>(lev[a]) % r].push_back(a);
    for (auto& cls : s.classes) std::sort(cls.begin(), cls.end());
    for (const auto& cls : s.classes)
        s.permutation.insert(s.permutation.end(), cls.begin(), cls.end());
    return s;
}

Mat submatrix(const Mat& m, const std::vector<std::size_t>& rows,
              const std::vector<std::size_t>& cols) {
    Mat b(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) b(i, j) = m(rows[i], cols[j]);
    return b;
}

PerronData perron_data(const NonnegMatrix& m) {
    CyclicStructure s = cyclic_partition(m);
    const unsigned r = s.r;
    const std::size_t p = m.rows();

    // One full cycle of superdiagonal blocks starting at class 1 gives the
    // primitive block of m^r restricted to class 1.
    Mat b1 = Mat::identity(s.classes[0].size());
    for (unsigned l = 0; l < r; ++l) {
        const auto& from = s.classes[l];
        const auto& to = s.classes[(l + 1) % r];
        b1 = b1 * submatrix(m, from, to);
    }
    const auto [lam_r, u1] = primitive_perron(b1);
    const auto [lam_r_left, v1] = primitive_perron(b1.transpose());
    const double rho = std::pow(lam_r, 1.0 / static_cast<double>(r));
    (void)lam_r_left;

    // Propagate through the cycle: u_i = (1/rho) m_{i,i+1} u_{i+1} backward,
    // v_{i+1} = (1/rho) m_{i,i+1}^T v_i forward.
    std::vector<Vec> u_cls(r), v_cls(r);
    u_cls[0] = u1;
    v_cls[0] = v1;
    for (unsigned i = r; i >= 2; --i) {
        const auto& from = s.classes[i - 1];
        const auto& to = s.classes[i % r];
        const Vec& next = (i == r) ? u_cls[0] : u_cls[i];
        Vec ui = submatrix(m, from, to) * next;
        for (double& x : ui) x /= rho;
        u_cls[i - 1] = std::move(ui);
    }
    for (unsigned i = 1; i < r; ++i) {
        const auto& from = s.classes[i - 1];
        const auto& to = s.classes[i];
        Vec vi = left_mul(v_cls[i - 1], submatrix(m, from, to));
        for (double& x : vi) x /= rho;
        v_cls[i] = std::move(vi);
    }

    PerronData d;
    d.rho = rho;
    d.u.assign(p, 0.0);
    d.v.assign(p, 0.0);
    for (unsigned i = 0; i < r; ++i)
        for (std::size_t j = 0; j < s.classes[i].size(); ++j) {
            d.u[s.classes[i][j]] = u_cls[i][j];
            d.v[s.classes[i][j]] = v_cls[i][j];
        }
    double su = 0.0;
    for (double x : d.u) su += x;
    for (double& x : d.u) x /= su;
    const double uv = dot(d.u, d.v);
    if (!(uv > 0.0)) throw Error("no convergence: degenerate Perron normalization");
    for (double& x : d.v) x /= uv;

    Vec ru = m * d.u;
    Vec lv = left_mul(d.v, m);
    double res = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        res = std::max(res, std::fabs(ru[i] - rho * d.u[i]));
        res = std::max(res, std::fabs(lv[i] - rho * d.v[i]));
    }
    if (res > 1e-10 * rho) throw Error("no convergence: Perron residual above tolerance");
    return d;
}

Mat block_product(const NonnegMatrix& m, const CyclicStructure& s, std::size_t i, std::size_t j) {
    const std::size_t r = s.classes.size();
    if (i < 1 || i > r || j < i) throw Error("index out of range: block_product");
    Mat prod = Mat::identity(s.classes[i - 1].size());
    for (std::size_t l = i; l < j; ++l) {
        const auto& from = s.classes[(l - 1) % r];
        const auto& to = s.classes[l % r];
        prod = prod * submatrix(m, from, to);
    }
    return prod;
}

Mat limit_projector(const CyclicStructure& s) {
    const std::size_t p = s.dim();
    if (s.u.size() != p || s.v.size() != p) throw Error("class data missing: Perron data required");
    Mat pi(p, p);
    const double r = static_cast<double>(s.r);
    for (const auto& cls : s.classes)
        for (std::size_t a : cls)
            for (std::size_t b : cls) pi(a, b) = r * s.u[a] * s.v[b];
    return pi;
}

RateFit fit_rate(const NonnegMatrix& m, const Mat& pi, unsigned n_max) {
    const PerronData d = perron_data(m);
    if (std::fabs(d.rho - 1.0) > kCriticalityTol) throw Error("not critical");
    const unsigned r = cyclicity_index(m);
    const Mat mr = mat_pow(m, r);

    std::vector<double> e(n_max);
    Mat power = Mat::identity(m.rows());
    double e_max = 0.0;
    for (unsigned n = 1; n <= n_max; ++n) {
        power = power * mr;
        e[n - 1] = spectral_norm(power - pi);
        e_max = std::max(e_max, e[n - 1]);
    }

    RateFit fit;
    if (e_max <= 1e-12) {
        fit.exact = true;
        return fit;
    }
    std::vector<std::pair<double, double>> kept;  // (n, log e_n)
    for (unsigned n = 1; n <= n_max; ++n)
        if (e[n - 1] > 1e-13) kept.emplace_back(static_cast<double>(n), std::log(e[n - 1]));
    if (kept.empty()) {
        fit.exact = true;
        return fit;
    }
    const std::size_t start = kept.size() / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double cnt = 0;
    for (std::size_t i = start; i < kept.size(); ++i) {
        sx += kept[i].first;
        sy += kept[i].second;
        sxx += kept[i].first * kept[i].first;
        sxy += kept[i].first * kept[i].second;
        cnt += 1.0;
    }
    double slope;
    if (cnt >= 2.0 && sxx * cnt - sx * sx > 0.0) {
        slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    } else {
        // Single usable point: rate unidentifiable, fall back to the first
        // ratio available or a flat fit.
        slope = (kept.size() >= 2)
                    ? (kept.back().second - kept.front().second) /
                          (kept.back().first - kept.front().first)
                    : 0.0;
    }
    fit.kappa = std::exp(slope);
    fit.c = 0.0;
    for (const auto& [n, loge] : kept)
        fit.c = std::max(fit.c, std::exp(loge - n * std::log(fit.kappa)));
    return fit;
}

CyclicStructure analyze_matrix(const NonnegMatrix& m) {
    CyclicStructure s = cyclic_partition(m);
    const PerronData d = perron_data(m);
    s.rho = d.rho;
    s.u = d.u;
    s.v = d.v;
    s.pi_blocks.clear();
    for (const auto& cls : s.classes) {
        Mat blk(cls.size(), cls.size());
        for (std::size_t a = 0; a < cls.size(); ++a)
            for (std::size_t b = 0; b < cls.size(); ++b)
                blk(a, b) = static_cast<double>(s.r) * d.u[cls[a]] * d.v[cls[b]];
        s.pi_blocks.push_back(std::move(blk));
    }
    if (std::fabs(d.rho - 1.0) <= kCriticalityTol) s.rate = fit_rate(m, limit_projector(s));
    return s;
}

bool partition_pattern_exact(const NonnegMatrix& m, const CyclicStructure& s) {
    const std::size_t p = m.rows();
    std::vector<std::size_t> cls_of(p, 0);
    for (std::size_t i = 0; i < s.classes.size(); ++i)
        for (std::size_t a : s.classes[i]) cls_of[a] = i;
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b)
            if (m(a, b) != 0.0 && cls_of[b] != (cls_of[a] + 1) % s.r) return false;
    return true;
}

}  // namespace branchlab
