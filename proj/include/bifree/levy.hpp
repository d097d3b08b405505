#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "bifree/cauchy.hpp"
#include "bifree/measure.hpp"
#include "bifree/partial_r.hpp"
#include "bifree/rtransform.hpp"

namespace bifree {

// ---------------------------------------------------------------------------
// Gaussian family
// ---------------------------------------------------------------------------

/// Mean vector and covariance data of a planar Gaussian-type law.
struct GaussianParams {
    double gamma1 = 0, gamma2 = 0;
    double a = 1, b = 1, c = 0;

    void validate() const {
        if (a < 0 || b < 0)
            throw invalid_measure("GaussianParams: variances must be nonnegative");
        if (c * c > a * b + 1e-15)
            throw invalid_measure("GaussianParams: |c| must not exceed sqrt(ab)");
    }
};

inline complex gaussian_r(const GaussianParams& p, complex z, complex w) {
    return p.gamma1 * z + p.gamma2 * w + p.a * z * z + p.b * w * w + p.c * z * w;
}

/// Density of the standardized law (zero mean, unit variances, |c| < 1)
/// on the square [-2,2]^2; zero outside.
inline double gaussian_density_std(double c, double s, double t) {
    if (std::abs(c) >= 1.0)
        throw numeric_error("gaussian_density_std: singular law at |c| = 1");
    if (std::abs(s) > 2.0 || std::abs(t) > 2.0) return 0.0;
    double c2 = c * c;
    double num = (1.0 - c2) * std::sqrt(4.0 - s * s) * std::sqrt(4.0 - t * t);
    double den = 2.0 * (1.0 - c2) * (1.0 - c2) - 2.0 * c * (1.0 + c2) * s * t +
                 2.0 * c2 * (s * s + t * t);
    return num / (2.0 * M_PI * M_PI * den);
}

/// General parameters via rescaling of the standardized density.
inline double gaussian_density(const GaussianParams& p, double s, double t) {
    p.validate();
    if (p.a == 0 || p.b == 0)
        throw numeric_error("gaussian_density: degenerate variance");
    double sa = std::sqrt(p.a), sb = std::sqrt(p.b);
    double corr = p.c / (sa * sb);
    return gaussian_density_std(corr, (s - p.gamma1) / sa, (t - p.gamma2) / sb) /
           (sa * sb);
}

// ---------------------------------------------------------------------------
// Compound Poisson family
// ---------------------------------------------------------------------------

/// R-transform of the compound Poisson law with rate lambda and jump law mu:
/// -lambda + lambda * sum w_i / ((1 - z s_i)(1 - w t_i)).
inline complex compound_poisson_r(double lambda, const Measure2D& jump, complex z,
                                  complex w) {
    if (lambda <= 0)
        throw invalid_measure("compound_poisson_r: rate must be positive");
    complex acc = 0;
    for (const Atom2D& a : jump.atoms) {
        complex d1 = 1.0 - z * a.s;
        complex d2 = 1.0 - w * a.t;
        if (std::abs(d1) < 1e-14 || std::abs(d2) < 1e-14)
            throw numeric_error("compound_poisson_r: pole at jump atom (" +
                                std::to_string(a.s) + ", " + std::to_string(a.t) + ")");
        acc += a.w / (d1 * d2);
    }
    return lambda * (acc - 1.0);
}

// ---------------------------------------------------------------------------
// Levy-Khintchine parameter objects
// ---------------------------------------------------------------------------

/// General-form parameters (gamma1, gamma2, rho1, rho2, rho).
struct LKQuintupleGeneral {
    double gamma1 = 0, gamma2 = 0;
    Measure2D rho1, rho2;
    SignedMeasure2D rho;
};

/// Compact-form parameters (kappa10, kappa01, rho1', rho2', rho').
struct LKTripleCompact {
    double kappa10 = 0, kappa01 = 0;
    Measure2D rho1, rho2;
    SignedMeasure2D rho;
};

struct ValidationIssue {
    std::string check;
    double s = 0, t = 0;
    double residual = 0;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool valid() const { return issues.empty(); }
};

namespace detail {

template <class M>
inline double atom_weight(const M& mu, double s, double t) {
    for (const Atom2D& a : mu.atoms)
        if (a.s == s && a.t == t) return a.w;
    return 0.0;
}

template <class M>
inline void collect_locations(const M& mu,
                              std::vector<std::pair<double, double>>& locs) {
    for (const Atom2D& a : mu.atoms) {
        std::pair<double, double> p{a.s, a.t};
        bool seen = false;
        for (const auto& q : locs)
            if (q == p) { seen = true; break; }
        if (!seen) locs.push_back(p);
    }
}

}  // namespace detail

/// Atomwise check of the general-form compatibility system.
inline ValidationReport lk_validate(const LKQuintupleGeneral& q, double tol = 1e-9) {
    ValidationReport report;
    std::vector<std::pair<double, double>> locs;
    detail::collect_locations(q.rho1, locs);
    detail::collect_locations(q.rho2, locs);
    detail::collect_locations(q.rho, locs);
    for (const auto& [s, t] : locs) {
        if (s == 0 && t == 0) continue;  // origin handled by the quadratic bound
        double w1 = detail::atom_weight(q.rho1, s, t);
        double w2 = detail::atom_weight(q.rho2, s, t);
        double wr = detail::atom_weight(q.rho, s, t);
        double ks = s / std::sqrt(1 + s * s);
        double kt = t / std::sqrt(1 + t * t);
        double r1 = std::abs(kt * w1 - ks * wr);
        if (r1 > tol) report.issues.push_back({"t-kernel rho1 vs rho", s, t, r1});
        double r2 = std::abs(ks * w2 - kt * wr);
        if (r2 > tol) report.issues.push_back({"s-kernel rho2 vs rho", s, t, r2});
        if (s == 0 && std::abs(w1) > tol)
            report.issues.push_back({"rho1 must not charge the punctured t-axis", s, t, std::abs(w1)});
        if (t == 0 && std::abs(w2) > tol)
            report.issues.push_back({"rho2 must not charge the punctured s-axis", s, t, std::abs(w2)});
        if ((s == 0 || t == 0) && std::abs(wr) > tol)
            report.issues.push_back({"rho restricted to the axes", s, t, std::abs(wr)});
    }
    double o1 = detail::atom_weight(q.rho1, 0, 0);
    double o2 = detail::atom_weight(q.rho2, 0, 0);
    double orr = detail::atom_weight(q.rho, 0, 0);
    if (orr * orr > o1 * o2 + tol)
        report.issues.push_back({"origin Cauchy-Schwarz bound", 0, 0, orr * orr - o1 * o2});
    return report;
}

inline ValidationReport lk_validate(const LKTripleCompact& c, double tol = 1e-9) {
    ValidationReport report;
    std::vector<std::pair<double, double>> locs;
    detail::collect_locations(c.rho1, locs);
    detail::collect_locations(c.rho2, locs);
    detail::collect_locations(c.rho, locs);
    for (const auto& [s, t] : locs) {
        if (s == 0 && t == 0) continue;
        double w1 = detail::atom_weight(c.rho1, s, t);
        double w2 = detail::atom_weight(c.rho2, s, t);
        double wr = detail::atom_weight(c.rho, s, t);
        double r1 = std::abs(t * w1 - s * wr);
        if (r1 > tol) report.issues.push_back({"t rho1' vs s rho'", s, t, r1});
        double r2 = std::abs(s * w2 - t * wr);
        if (r2 > tol) report.issues.push_back({"s rho2' vs t rho'", s, t, r2});
    }
    double o1 = detail::atom_weight(c.rho1, 0, 0);
    double o2 = detail::atom_weight(c.rho2, 0, 0);
    double orr = detail::atom_weight(c.rho, 0, 0);
    if (orr * orr > o1 * o2 + tol)
        report.issues.push_back({"origin Cauchy-Schwarz bound", 0, 0, orr * orr - o1 * o2});
    return report;
}

/// R-transform in the general Levy-Khintchine integral form.
inline complex lk_r_general(const LKQuintupleGeneral& q, complex z, complex w) {
    complex acc = q.gamma1 * z + q.gamma2 * w;
    for (const Atom2D& a : q.rho1.atoms) {
        complex d = 1.0 - z * a.s;
        if (std::abs(d) < 1e-14)
            throw numeric_error("lk_r_general: pole in rho1 at s=" + std::to_string(a.s));
        acc += a.w * (z * z + z * a.s) / d;
    }
    for (const Atom2D& a : q.rho2.atoms) {
        complex d = 1.0 - w * a.t;
        if (std::abs(d) < 1e-14)
            throw numeric_error("lk_r_general: pole in rho2 at t=" + std::to_string(a.t));
        acc += a.w * (w * w + w * a.t) / d;
    }
    for (const Atom2D& a : q.rho.atoms) {
        complex d1 = 1.0 - z * a.s;
        complex d2 = 1.0 - w * a.t;
        if (std::abs(d1) < 1e-14 || std::abs(d2) < 1e-14)
            throw numeric_error("lk_r_general: pole in rho at (" + std::to_string(a.s) +
                                ", " + std::to_string(a.t) + ")");
        acc += a.w * z * w * std::sqrt(1 + a.s * a.s) * std::sqrt(1 + a.t * a.t) /
               (d1 * d2);
    }
    return acc;
}

/// R-transform in the compact integral form.
inline complex lk_r_compact(const LKTripleCompact& c, complex z, complex w) {
    complex acc = c.kappa10 * z + c.kappa01 * w;
    for (const Atom2D& a : c.rho1.atoms) acc += a.w * z * z / (1.0 - z * a.s);
    for (const Atom2D& a : c.rho2.atoms) acc += a.w * w * w / (1.0 - w * a.t);
    for (const Atom2D& a : c.rho.atoms)
        acc += a.w * z * w / ((1.0 - z * a.s) * (1.0 - w * a.t));
    return acc;
}

/// One-dimensional R-transform of the marginal attached to a quintuple.
inline complex lk_marginal_r(const LKQuintupleGeneral& q, int axis, complex z) {
    double gamma = axis == 1 ? q.gamma1 : q.gamma2;
    const Measure2D& rho = axis == 1 ? q.rho1 : q.rho2;
    complex acc = gamma;
    for (const Atom2D& a : rho.atoms) {
        double x = axis == 1 ? a.s : a.t;
        complex d = 1.0 - z * x;
        if (std::abs(d) < 1e-14)
            throw numeric_error("lk_marginal_r: pole at x=" + std::to_string(x));
        acc += a.w * (z + x) / d;
    }
    return acc;
}

/// Componentwise nonnegative combination t1*q1 + t2*q2 of quintuples.
inline LKQuintupleGeneral lambda_combine(const LKQuintupleGeneral& q1,
                                         const LKQuintupleGeneral& q2, double t1,
                                         double t2) {
    if (t1 < 0 || t2 < 0)
        throw invalid_measure("lambda_combine: scaling factors must be nonnegative");
    LKQuintupleGeneral out;
    out.gamma1 = t1 * q1.gamma1 + t2 * q2.gamma1;
    out.gamma2 = t1 * q1.gamma2 + t2 * q2.gamma2;
    auto combine2 = [&](const Measure2D& a, const Measure2D& b) {
        std::vector<Atom2D> atoms;
        for (const Atom2D& x : a.atoms) atoms.push_back({x.s, x.t, t1 * x.w});
        for (const Atom2D& x : b.atoms) atoms.push_back({x.s, x.t, t2 * x.w});
        return Measure2D{detail::dedup(std::move(atoms))};
    };
    auto combineS = [&](const SignedMeasure2D& a, const SignedMeasure2D& b) {
        std::vector<Atom2D> atoms;
        for (const Atom2D& x : a.atoms) atoms.push_back({x.s, x.t, t1 * x.w});
        for (const Atom2D& x : b.atoms) atoms.push_back({x.s, x.t, t2 * x.w});
        return SignedMeasure2D{detail::dedup(std::move(atoms))};
    };
    out.rho1 = combine2(q1.rho1, q2.rho1);
    out.rho2 = combine2(q1.rho2, q2.rho2);
    out.rho = combineS(q1.rho, q2.rho);
    ValidationReport rep = lk_validate(out);
    if (!rep.valid())
        throw numeric_error("lambda_combine: combined quintuple violates constraints");
    return out;
}

inline LKQuintupleGeneral lk_scale(const LKQuintupleGeneral& q, double t) {
    return lambda_combine(q, LKQuintupleGeneral{}, t, 0.0);
}

// ---------------------------------------------------------------------------
// Quintuple constructors for the named families
// ---------------------------------------------------------------------------

inline LKQuintupleGeneral gaussian_quintuple(const GaussianParams& p) {
    p.validate();
    LKQuintupleGeneral q;
    q.gamma1 = p.gamma1;
    q.gamma2 = p.gamma2;
    if (p.a != 0) q.rho1.atoms.push_back({0, 0, p.a});
    if (p.b != 0) q.rho2.atoms.push_back({0, 0, p.b});
    if (p.c != 0) q.rho.atoms.push_back({0, 0, p.c});
    return q;
}

inline LKQuintupleGeneral compound_poisson_quintuple(double lambda,
                                                     const Measure2D& jump) {
    if (lambda <= 0)
        throw invalid_measure("compound_poisson_quintuple: rate must be positive");
    if (!jump.is_probability())
        throw invalid_measure("compound_poisson_quintuple: jump must be a probability");
    LKQuintupleGeneral q;
    q.gamma1 = gamma_functional(jump, 1, lambda);
    q.gamma2 = gamma_functional(jump, 2, lambda);
    q.rho1 = sigma_weighted(jump, 1, lambda);
    q.rho2 = sigma_weighted(jump, 2, lambda);
    q.rho = rho_weighted(jump, lambda);
    return q;
}

/// Product of two freely infinitely divisible marginals: sigma1 lives on the
/// s-axis in rho1, sigma2 on the t-axis in rho2, no cross part.
inline LKQuintupleGeneral product_quintuple(const FreeLKPair& p1,
                                            const FreeLKPair& p2) {
    LKQuintupleGeneral q;
    q.gamma1 = p1.gamma;
    q.gamma2 = p2.gamma;
    for (const Atom1D& a : p1.sigma.atoms) q.rho1.atoms.push_back({a.x, 0, a.w});
    for (const Atom1D& a : p2.sigma.atoms) q.rho2.atoms.push_back({0, a.x, a.w});
    return q;
}

// ---------------------------------------------------------------------------
// Compact <-> general conversion
// ---------------------------------------------------------------------------

inline LKQuintupleGeneral lk_convert(const LKTripleCompact& c) {
    LKQuintupleGeneral q;
    for (const Atom2D& a : c.rho1.atoms)
        q.rho1.atoms.push_back({a.s, a.t, a.w / (1 + a.s * a.s)});
    for (const Atom2D& a : c.rho2.atoms)
        q.rho2.atoms.push_back({a.s, a.t, a.w / (1 + a.t * a.t)});
    for (const Atom2D& a : c.rho.atoms)
        q.rho.atoms.push_back(
            {a.s, a.t, a.w / (std::sqrt(1 + a.s * a.s) * std::sqrt(1 + a.t * a.t))});
    double m1 = 0, m2 = 0;
    for (const Atom2D& a : q.rho1.atoms) m1 += a.w * a.s;
    for (const Atom2D& a : q.rho2.atoms) m2 += a.w * a.t;
    q.gamma1 = c.kappa10 - m1;
    q.gamma2 = c.kappa01 - m2;
    return q;
}

inline LKTripleCompact lk_convert(const LKQuintupleGeneral& q) {
    LKTripleCompact c;
    for (const Atom2D& a : q.rho1.atoms)
        c.rho1.atoms.push_back({a.s, a.t, a.w * (1 + a.s * a.s)});
    for (const Atom2D& a : q.rho2.atoms)
        c.rho2.atoms.push_back({a.s, a.t, a.w * (1 + a.t * a.t)});
    for (const Atom2D& a : q.rho.atoms)
        c.rho.atoms.push_back(
            {a.s, a.t, a.w * std::sqrt(1 + a.s * a.s) * std::sqrt(1 + a.t * a.t)});
    double m1 = 0, m2 = 0;
    for (const Atom2D& a : q.rho1.atoms) m1 += a.w * a.s;
    for (const Atom2D& a : q.rho2.atoms) m2 += a.w * a.t;
    c.kappa10 = q.gamma1 + m1;
    c.kappa01 = q.gamma2 + m2;
    return c;
}

// ---------------------------------------------------------------------------
// Decomposition into Gaussian / product / Poisson-limit parts
// ---------------------------------------------------------------------------

struct LKDecomposition {
    double gauss_a = 0, gauss_b = 0, gauss_c = 0;
    FreeLKPair product1, product2;
    double poisson_rate = 0;
    Measure2D poisson_jump;
    double shift_s = 0, shift_t = 0;

    complex gaussian_part(complex z, complex w) const {
        return gauss_a * z * z + gauss_b * w * w + gauss_c * z * w;
    }
    complex product_part(complex z, complex w) const {
        return z * free_lk_r(product1, z) + w * free_lk_r(product2, w);
    }
    complex poisson_part(complex z, complex w) const {
        complex acc = shift_s * z + shift_t * w;
        if (poisson_rate > 0)
            acc += compound_poisson_r(poisson_rate, poisson_jump, z, w);
        return acc;
    }
    complex r(complex z, complex w) const {
        return gaussian_part(z, w) + product_part(z, w) + poisson_part(z, w);
    }
};

inline LKDecomposition lk_decompose(const LKQuintupleGeneral& q,
                                    double tol = 1e-9) {
    ValidationReport rep = lk_validate(q, tol);
    if (!rep.valid())
        throw invalid_measure("lk_decompose: quintuple violates the constraint system");
    LKDecomposition d;
    d.gauss_a = detail::atom_weight(q.rho1, 0, 0);
    d.gauss_b = detail::atom_weight(q.rho2, 0, 0);
    d.gauss_c = detail::atom_weight(q.rho, 0, 0);
    d.product1.gamma = q.gamma1;
    d.product2.gamma = q.gamma2;
    for (const Atom2D& a : q.rho1.atoms)
        if (a.t == 0 && a.s != 0) d.product1.sigma.atoms.push_back({a.s, a.w});
    for (const Atom2D& a : q.rho2.atoms)
        if (a.s == 0 && a.t != 0) d.product2.sigma.atoms.push_back({a.t, a.w});

    // off-axes part: the compensated Poisson limit with intensity measure tau
    std::vector<Atom2D> tau;
    for (const Atom2D& a : q.rho1.atoms) {
        if (a.s == 0 || a.t == 0) continue;
        double u = a.w * (1 + a.s * a.s) / (a.s * a.s);
        double w2 = detail::atom_weight(q.rho2, a.s, a.t);
        double u2 = w2 * (1 + a.t * a.t) / (a.t * a.t);
        if (std::abs(u - u2) > tol)
            throw numeric_error("lk_decompose: inconsistent intensity from rho1 vs rho2 at (" +
                                std::to_string(a.s) + ", " + std::to_string(a.t) + ")");
        tau.push_back({a.s, a.t, u});
    }
    double lambda = 0;
    for (const Atom2D& a : tau) lambda += a.w;
    d.poisson_rate = lambda;
    if (lambda > 0) {
        for (const Atom2D& a : tau)
            d.poisson_jump.atoms.push_back({a.s, a.t, a.w / lambda});
        d.shift_s = -lambda * gamma_functional(d.poisson_jump, 1, 1.0);
        d.shift_t = -lambda * gamma_functional(d.poisson_jump, 2, 1.0);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Law handles and bi-free convolution
// ---------------------------------------------------------------------------

/// Transform bundle for a planar law: marginal R-transforms, the joint
/// two-variable R-transform, and a Cauchy transform (native when the law is
/// atomic, otherwise reconstructed through the K-inverse).
struct LawTransforms {
    std::function<complex(complex)> R1, R2;
    std::function<complex(complex, complex)> R;
    GEvaluator2D g;
    double scale = 1.0;  // support-radius scale used by continuation
};

inline LawTransforms law_from_measure(Measure2D mu) {
    auto shared = std::make_shared<PartialR>(std::move(mu));
    LawTransforms law;
    law.R1 = [shared](complex z) { return shared->r1(z); };
    law.R2 = [shared](complex w) { return shared->r2(w); };
    law.R = [shared](complex z, complex w) { return (*shared)(z, w); };
    law.g = {[shared](complex z, complex w) { return g2(shared->measure(), z, w); },
             Provenance::FromMeasure};
    law.scale = shared->measure().support_radius();
    return law;
}

inline LawTransforms law_from_gaussian(const GaussianParams& p) {
    p.validate();
    LawTransforms law;
    law.R1 = [p](complex z) { return p.gamma1 + p.a * z; };
    law.R2 = [p](complex w) { return p.gamma2 + p.b * w; };
    law.R = [p](complex z, complex w) { return gaussian_r(p, z, w); };
    law.scale = 2.0 * std::sqrt(std::max(p.a, p.b)) +
                std::max(std::abs(p.gamma1), std::abs(p.gamma2));
    law.g = reconstructed_g_evaluator(law.R1, law.R2, law.R, law.scale);
    return law;
}

inline LawTransforms law_from_compound_poisson(double lambda, Measure2D jump) {
    LKQuintupleGeneral q = compound_poisson_quintuple(lambda, jump);
    LawTransforms law;
    law.R1 = [q](complex z) { return lk_marginal_r(q, 1, z); };
    law.R2 = [q](complex w) { return lk_marginal_r(q, 2, w); };
    law.R = [lambda, jump = std::move(jump)](complex z, complex w) {
        return compound_poisson_r(lambda, jump, z, w);
    };
    law.scale = (1.0 + lambda) * (q.rho1.support_radius() + 1.0);
    law.g = reconstructed_g_evaluator(law.R1, law.R2, law.R, law.scale);
    return law;
}

inline LawTransforms law_from_quintuple(const LKQuintupleGeneral& q) {
    LawTransforms law;
    law.R1 = [q](complex z) { return lk_marginal_r(q, 1, z); };
    law.R2 = [q](complex w) { return lk_marginal_r(q, 2, w); };
    law.R = [q](complex z, complex w) { return lk_r_general(q, z, w); };
    double mass = q.rho1.mass() + q.rho2.mass() + q.rho.total_variation();
    law.scale = q.rho1.support_radius() + q.rho2.support_radius() + 2.0 * mass +
                std::abs(q.gamma1) + std::abs(q.gamma2) + 1.0;
    law.g = reconstructed_g_evaluator(law.R1, law.R2, law.R, law.scale);
    return law;
}

///// Sum law: R-transforms add.
inline LawTransforms law_sum(const LawTransforms& A, const LawTransforms& B) {
    LawTransforms law;
    law.R1 = [a = A.R1, b = B.R1](complex z) { return a(z) + b(z); };
    law.R2 = [a = A.R2, b = B.R2](complex w) { return a(w) + b(w); };
    law.R = [a = A.R, b = B.R](complex z, complex w) { return a(z, w) + b(z, w); };
    law.scale = A.scale + B.scale;
    law.g = reconstructed_g_evaluator(law.R1, law.R2, law.R, law.scale);
    return law;
}

struct GridSpec2D {
    double x_min, x_max, u_min, u_max;
    std::size_t n_x, n_u;
    double y;
};

inline GridSpec2D default_grid(double support_radius, double y = 0.05,
                               std::size_t n = 101) {
    double L = support_radius + 3.0 * y;
    return {-L, L, -L, L, n, n, y};
}

struct ConvolutionResult {
    GridDensity2D density;
    CumulantTable cumulants;
    LawTransforms law;
};

/// Bi-free convolution of two compactly supported laws: add R-transforms,
/// reconstruct the joint Cauchy transform, invert to a density grid, and
/// extract cumulants of the result (checked against additivity internally).
namespace detail {

inline ConvolutionResult bifree_convolve_impl(const LawTransforms& A,
                                              const LawTransforms& B,
                                              LawTransforms sum,
                                              const GridSpec2D& spec, int maxdeg) {
    ConvolutionResult out;
    out.law = std::move(sum);
    double r = 1.0 / (8.0 * out.law.scale + 8.0);
    CumulantTable ka, kb;
    try {
        ka = extract_cumulants(A.R, maxdeg, r);
        kb = extract_cumulants(B.R, maxdeg, r);
        out.cumulants = extract_cumulants(out.law.R, maxdeg, r);
    } catch (const numeric_error& e) {
        throw numeric_error(std::string("bifree_convolve[cumulants]: ") + e.what());
    }
    for (int m = 0; m <= maxdeg; ++m)
        for (int n = 0; n <= maxdeg && m + n <= maxdeg; ++n)
            if (std::abs(out.cumulants.at(m, n) - ka.at(m, n) - kb.at(m, n)) > 1e-6)
                throw numeric_error("bifree_convolve[additivity]: cumulant (" +
                                    std::to_string(m) + "," + std::to_string(n) +
                                    ") does not add");
    try {
        out.density = invert2d(out.law.g, spec.x_min, spec.x_max, spec.u_min,
                               spec.u_max, spec.n_x, spec.n_u, spec.y);
    } catch (const numeric_error& e) {
        throw numeric_error(std::string("bifree_convolve[inversion]: ") + e.what());
    }
    return out;
}

}  // namespace detail

inline ConvolutionResult bifree_convolve(const LawTransforms& A,
                                         const LawTransforms& B,
                                         const GridSpec2D& spec, int maxdeg = 4) {
    return detail::bifree_convolve_impl(A, B, law_sum(A, B), spec, maxdeg);
}

/// Sum of two atomic laws with a subordination-based Cauchy evaluator: each
/// coordinate of the joint transform is pulled back through the free
/// convolution of the marginals, which avoids inverting K on a numerically
/// continued R.
inline LawTransforms law_sum_measures(const Measure2D& mu1, const Measure2D& mu2) {
    auto A = std::make_shared<PartialR>(mu1);
    auto B = std::make_shared<PartialR>(mu2);
    LawTransforms law;
    law.R1 = [A, B](complex z) { return A->r1(z) + B->r1(z); };
    law.R2 = [A, B](complex w) { return A->r2(w) + B->r2(w); };
    law.R = [A, B](complex z, complex w) { return (*A)(z, w) + (*B)(z, w); };
    law.scale = mu1.support_radius() + mu2.support_radius();
    law.g = {[A, B](complex Z, complex W) {
                 complex zs = g_free_sum(A->marginal1(), B->marginal1(), Z);
                 complex ws = g_free_sum(A->marginal2(), B->marginal2(), W);
                 // K_sum(zs) = Z, so zs*R1(zs) = zs*Z - 1, likewise in w.
                 complex den = zs * Z + ws * W - 1.0 - (*A)(zs, ws) - (*B)(zs, ws);
                 if (std::abs(den) < 1e-12)
                     throw degenerate_domain("law_sum_measures: vanishing denominator");
                 return zs * ws / den;
             },
             Provenance::FromRReconstruction};
    return law;
}

inline ConvolutionResult bifree_convolve(const Measure2D& mu1, const Measure2D& mu2,
                                         const GridSpec2D& spec, int maxdeg = 4) {
    if (!mu1.is_probability() || !mu2.is_probability())
        throw invalid_measure("bifree_convolve: inputs must be probabilities");
    return detail::bifree_convolve_impl(law_from_measure(mu1), law_from_measure(mu2),
                                        law_sum_measures(mu1, mu2), spec, maxdeg);
}

}  // namespace bifree
