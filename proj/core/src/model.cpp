#include "branchlab/model.hpp"

#include <cmath>
#include <limits>

#include "branchlab/error.hpp"

namespace branchlab {

std::size_t Law::dim() const {
    if (kind == LawKind::finite_support) return atoms.empty() ? 0 : atoms[0].size();
    return params.size();
}

Vec Law::mean() const {
    const std::size_t p = dim();
    Vec m(p, 0.0);
    switch (kind) {
        case LawKind::poisson_product:
        case LawKind::bernoulli_product:
            return params;
        case LawKind::finite_support:
            for (std::size_t a = 0; a < atoms.size(); ++a)
                for (std::size_t l = 0; l < p; ++l)
                    m[l] += atom_probs[a] * static_cast<double>(atoms[a][l]);
            return m;
    }
    return m;
}

Mat Law::cov() const {
    const std::size_t p = dim();
    Mat c(p, p);
    switch (kind) {
        case LawKind::poisson_product:
            for (std::size_t l = 0; l < p; ++l) c(l, l) = params[l];
            return c;
        case LawKind::bernoulli_product:
            for (std::size_t l = 0; l < p; ++l) c(l, l) = params[l] * (1.0 - params[l]);
            return c;
        case LawKind::finite_support: {
            const Vec m = mean();
            for (std::size_t a = 0; a < atoms.size(); ++a)
                for (std::size_t i = 0; i < p; ++i) {
                    const double di = static_cast<double>(atoms[a][i]) - m[i];
                    if (di == 0.0) continue;
                    for (std::size_t j = 0; j < p; ++j)
                        c(i, j) += atom_probs[a] * di * (static_cast<double>(atoms[a][j]) - m[j]);
                }
            return c;
        }
    }
    return c;
}

bool Law::deterministic() const {
    switch (kind) {
        case LawKind::poisson_product:
            for (double l : params)
                if (l > 0.0) return false;
            return true;
        case LawKind::bernoulli_product:
            for (double q : params)
                if (q > 0.0 && q < 1.0) return false;
            return true;
        case LawKind::finite_support:
            return atoms.size() <= 1;
    }
    return false;
}

Law poisson_law(Vec means) {
    for (double l : means)
        if (!(l >= 0.0) || !std::isfinite(l)) throw Error("moment mismatch: poisson mean invalid");
    Law law;
    law.kind = LawKind::poisson_product;
    law.params = std::move(means);
    return law;
}

Law bernoulli_law(Vec probs) {
    for (double q : probs)
        if (!(q >= 0.0 && q <= 1.0)) throw Error("moment mismatch: bernoulli probability invalid");
    Law law;
    law.kind = LawKind::bernoulli_product;
    law.params = std::move(probs);
    return law;
}

Law finite_law(std::vector<std::vector<std::uint64_t>> atoms, Vec probs) {
    if (atoms.empty() || atoms.size() != probs.size())
        throw Error("moment mismatch: finite_support needs matching atoms and probabilities");
    const std::size_t p = atoms[0].size();
    double sum = 0.0;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        if (atoms[a].size() != p) throw Error("dimension mismatch: finite_support atom size");
        if (!(probs[a] >= 0.0)) throw Error("moment mismatch: negative probability");
        sum += probs[a];
    }
    if (std::fabs(sum - 1.0) > 1e-12) throw Error("moment mismatch: probabilities sum to " + std::to_string(sum));
    Law law;
    law.kind = LawKind::finite_support;
    law.atoms = std::move(atoms);
    law.atom_probs = std::move(probs);
    return law;
}

Law zero_law(std::size_t p) {
    return finite_law({std::vector<std::uint64_t>(p, 0)}, {1.0});
}

Mat mixture(const Vec& alpha, const std::vector<Mat>& V) {
    if (alpha.size() != V.size()) throw Error("dimension mismatch: mixture weights vs matrices");
    if (V.empty()) throw Error("dimension mismatch: empty mixture");
    Mat out(V[0].rows(), V[0].cols());
    for (std::size_t j = 0; j < V.size(); ++j) {
        if (V[j].rows() != out.rows() || V[j].cols() != out.cols())
            throw Error("dimension mismatch: mixture matrix shapes");
        if (alpha[j] == 0.0) continue;
        for (std::size_t e = 0; e < out.data().size(); ++e)
            out.data()[e] += alpha[j] * V[j].data()[e];
    }
    return out;
}

BranchingModel build_model(std::vector<Law> offspring, Law immigration, std::string name) {
    if (offspring.empty()) throw Error("dimension mismatch: no offspring laws");
    const std::size_t p = offspring[0].dim();
    for (const Law& law : offspring)
        if (law.dim() != p) throw Error("dimension mismatch: offspring law dimensions");
    if (offspring.size() != p) throw Error("dimension mismatch: need one offspring law per type");
    if (immigration.dim() != p) throw Error("dimension mismatch: immigration law dimension");

    BranchingModel m;
    m.p = p;
    m.offspring = std::move(offspring);
    m.immigration = std::move(immigration);
    m.m_xi = Mat(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        const Vec mi = m.offspring[i].mean();
        for (std::size_t l = 0; l < p; ++l) m.m_xi(l, i) = mi[l];
        m.V_xi.push_back(m.offspring[i].cov());
    }
    m.m_eps = m.immigration.mean();
    m.V_eps = m.immigration.cov();
    m.name = std::move(name);

    m.irreducible = check_irreducible(m.m_xi);
    if (m.irreducible) {
        m.structure = analyze_matrix(m.m_xi);
        m.critical = std::fabs(m.structure->rho - 1.0) <= kCriticalityTol;
    }
    return m;
}

ValidationReport validate_critical_indecomposable(const BranchingModel& m, double tol) {
    ValidationReport rep;
    rep.irreducible = m.irreducible;
    rep.criticality_gap = m.structure ? std::fabs(m.structure->rho - 1.0)
                                      : std::numeric_limits<double>::quiet_NaN();
    rep.critical = m.structure && rep.criticality_gap <= tol;
    rep.fourth_moments_finite = true;  // finite_support / Poisson / Bernoulli
    rep.immigration_degenerate = m.immigration.deterministic() &&
                                 norm2(m.m_eps) == 0.0;

    if (m.structure) {
        const CyclicStructure& s = *m.structure;
        std::vector<std::size_t> cls_of(m.p, 0);
        for (std::size_t i = 0; i < s.classes.size(); ++i)
            for (std::size_t a : s.classes[i]) cls_of[a] = i;
        double worst = 0.0;
        for (std::size_t j = 0; j < m.p; ++j) {
            // Offspring of a class-l type live in class l-1 (cyclically), so
            // the covariance must vanish outside that diagonal block.
            const std::size_t pred = (cls_of[j] + s.r - 1) % s.r;
            for (std::size_t a = 0; a < m.p; ++a)
                for (std::size_t b = 0; b < m.p; ++b)
                    if (cls_of[a] != pred || cls_of[b] != pred)
                        worst = std::max(worst, std::fabs(m.V_xi[j](a, b)));
        }
        rep.cov_pattern_violation = worst;
        rep.cov_pattern_ok = (worst == 0.0);
    }
    rep.pass = rep.irreducible && rep.critical && rep.cov_pattern_ok && rep.fourth_moments_finite;
    return rep;
}

}  // namespace branchlab
