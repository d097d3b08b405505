#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bifree/cauchy.hpp"
#include "bifree/levy.hpp"
#include "bifree/measure.hpp"
#include "bifree/partial_r.hpp"
#include "bifree/rtransform.hpp"

namespace bifree {

/// D(z,w) = k * sum w_i z w s_i t_i / ((1 - z s_i)(1 - w t_i)).
inline complex d_functional(const Measure2D& mu, double k, complex z, complex w) {
    if (k <= 0) throw invalid_measure("d_functional: k must be positive");
    complex acc = 0;
    for (const Atom2D& a : mu.atoms) {
        complex d1 = 1.0 - z * a.s;
        complex d2 = 1.0 - w * a.t;
        if (std::abs(d1) < 1e-14 || std::abs(d2) < 1e-14)
            throw numeric_error("d_functional: pole at atom (" + std::to_string(a.s) +
                                ", " + std::to_string(a.t) + ")");
        acc += a.w * z * w * a.s * a.t / (d1 * d2);
    }
    return k * acc;
}

/// Four-atom law of (p Z1 - q Z2, p Z1 + q Z2) with Z1, Z2 independent signs,
/// p = sqrt((1+c)/2n), q = sqrt((1-c)/2n).
inline Measure2D clt_sequence(double c, int n) {
    if (std::abs(c) > 1.0) throw invalid_measure("clt_sequence: |c| must be <= 1");
    if (n < 1) throw invalid_measure("clt_sequence: n must be >= 1");
    double p = std::sqrt((1.0 + c) / (2.0 * n));
    double q = std::sqrt((1.0 - c) / (2.0 * n));
    std::vector<Atom2D> atoms = {{p - q, p + q, 0.25},
                                 {p + q, p - q, 0.25},
                                 {-p - q, -p + q, 0.25},
                                 {-p + q, -p - q, 0.25}};
    return Measure2D{detail::dedup(std::move(atoms))};
}

/// (1 - lambda/n) delta_(0,0) + (lambda/n) jump.
inline Measure2D poisson_sequence(double lambda, const Measure2D& jump, int n) {
    if (lambda <= 0) throw invalid_measure("poisson_sequence: lambda must be positive");
    if (!jump.is_probability())
        throw invalid_measure("poisson_sequence: jump must be a probability");
    if (double(n) <= lambda) throw invalid_measure("poisson_sequence: need n > lambda");
    std::vector<Atom2D> atoms = {{0, 0, 1.0 - lambda / n}};
    for (const Atom2D& a : jump.atoms) atoms.push_back({a.s, a.t, lambda / n * a.w});
    return Measure2D{detail::dedup(std::move(atoms))};
}

/// Triangular array: law generator mu_n and scaling k_n.
struct ArraySpec {
    std::function<Measure2D(int)> measure;
    std::function<double(int)> scale;
};

inline ArraySpec clt_array(double c) {
    return {[c](int n) { return clt_sequence(c, n); },
            [](int n) { return double(n); }};
}

inline ArraySpec poisson_array(double lambda, Measure2D jump) {
    return {[lambda, jump = std::move(jump)](int n) {
                return poisson_sequence(lambda, jump, n);
            },
            [](int n) { return double(n); }};
}

/// Standard 9-point probe grid {-0.1i, -0.05i, 0.05-0.05i}^2.
inline std::vector<std::pair<complex, complex>> default_probe_grid() {
    std::vector<complex> pts = {complex(0, -0.1), complex(0, -0.05),
                                complex(0.05, -0.05)};
    std::vector<std::pair<complex, complex>> grid;
    for (complex z : pts)
        for (complex w : pts) grid.emplace_back(z, w);
    return grid;
}

namespace detail {

// Extrapolated limit, last Cauchy residual, and decay order from a sequence
// of values at increasing n (geometric n-list assumed for the order).
struct Extrapolation {
    complex limit = 0;
    double residual = 0;  // |f_last - f_prev|
    double order = 0;     // measured decay exponent in n
    bool converged = false;
};

inline Extrapolation extrapolate(const std::vector<complex>& f,
                                 const std::vector<int>& ns) {
    Extrapolation e;
    std::size_t m = f.size();
    if (m == 0) return e;
    e.limit = f.back();
    if (m == 1) { e.converged = true; return e; }
    double d_last = std::abs(f[m - 1] - f[m - 2]);
    e.residual = d_last;
    if (m >= 3) {
        double d_prev = std::abs(f[m - 2] - f[m - 3]);
        double ratio = double(ns[m - 1]) / double(ns[m - 2]);
        if (d_last > 0 && d_prev > 0 && ratio > 1) {
            e.order = std::log(d_prev / d_last) / std::log(ratio);
            double rp = std::pow(ratio, e.order);
            if (rp > 1.0001)
                e.limit = f[m - 1] + (f[m - 1] - f[m - 2]) / (rp - 1.0);
        }
        e.converged = d_last <= 0.5 * d_prev + 1e-12;
    } else {
        e.converged = d_last < 1e-6;
    }
    return e;
}

}  // namespace detail

struct ProbeTrack {
    complex z, w;
    bool in_omega = true;          // membership in the auto-sized product domain
    std::vector<complex> scaled_r;  // k_n * R_{mu_n}(z,w)
    std::vector<complex> d_values;  // D-functional at (z,w)
    std::vector<complex> accomp;    // compound Poisson accompaniment values
    detail::Extrapolation r_ext, d_ext;
    double cross_residual = 0;      // |R-limit cross part vs D-limit|
    bool equivalent = false;        // co-convergence of (a) and (b)
    bool failed = false;
    std::string error;
};

struct MomentTrack {
    int m = 0, n = 0;
    std::vector<double> values;     // rho_n moments per n
    detail::Extrapolation ext;
};

struct LimitReport {
    std::vector<int> ns;
    std::vector<ProbeTrack> probes;
    std::vector<MomentTrack> rho_moments;  // all (m,n) with m+n <= 2
    std::vector<double> gamma1, gamma2;    // per n
    std::vector<double> sigma1_mass, sigma2_mass;
    std::vector<double> tail;              // tail_mass(mu_n, 0.5) per n
    bool equivalence_ok = true;            // Thm-style co-convergence indicator
};

/// Finite-n convergence diagnostics for a triangular array: scaled partial
/// R-transforms, the D-functional, the reweighted cross measure, and the
/// marginal scalars, with Cauchy residuals and Richardson extrapolation.
inline LimitReport check_limit_theorem(
    const ArraySpec& array, const std::vector<std::pair<complex, complex>>& grid,
    const std::vector<int>& ns) {
    if (ns.empty()) throw invalid_measure("check_limit_theorem: empty n-list");
    LimitReport rep;
    rep.ns = ns;

    std::vector<Measure2D> mus;
    std::vector<double> ks;
    for (int n : ns) {
        mus.push_back(array.measure(n));
        ks.push_back(array.scale(n));
        rep.gamma1.push_back(gamma_functional(mus.back(), 1, ks.back()));
        rep.gamma2.push_back(gamma_functional(mus.back(), 2, ks.back()));
        rep.sigma1_mass.push_back(sigma_weighted(mus.back(), 1, ks.back()).mass());
        rep.sigma2_mass.push_back(sigma_weighted(mus.back(), 2, ks.back()).mass());
        rep.tail.push_back(tail_mass(mus.back(), 0.5));
    }

    const std::vector<std::pair<int, int>> orders = {
        {0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    for (auto [m, n] : orders) {
        MomentTrack track;
        track.m = m;
        track.n = n;
        std::vector<complex> vals;
        for (std::size_t i = 0; i < ns.size(); ++i) {
            double v = moment(rho_weighted(mus[i], ks[i]), m, n);
            track.values.push_back(v);
            vals.push_back(v);
        }
        track.ext = detail::extrapolate(vals, ns);
        rep.rho_moments.push_back(std::move(track));
    }

    rep.probes.assign(grid.size(), {});
    OmegaDomain omega_last = OmegaDomain::for_support(mus.back().support_radius());
    parallel_for(grid.size(), [&](std::size_t p) {
        ProbeTrack& track = rep.probes[p];
        track.z = grid[p].first;
        track.w = grid[p].second;
        track.in_omega = omega_last.contains(track.z, track.w);
        try {
            for (std::size_t i = 0; i < ns.size(); ++i) {
                PartialR r(mus[i]);
                track.scaled_r.push_back(ks[i] * r(track.z, track.w));
                track.d_values.push_back(
                    d_functional(mus[i], ks[i], track.z, track.w));
                track.accomp.push_back(
                    compound_poisson_r(ks[i], mus[i], track.z, track.w));
            }
            track.r_ext = detail::extrapolate(track.scaled_r, ns);
            track.d_ext = detail::extrapolate(track.d_values, ns);
            track.equivalent = track.r_ext.converged == track.d_ext.converged;
        } catch (const std::exception& e) {
            track.failed = true;
            track.error = e.what();
        }
    });
    for (const ProbeTrack& t : rep.probes)
        if (t.failed || !t.equivalent) rep.equivalence_ok = false;
    for (const MomentTrack& t : rep.rho_moments)
        if (!t.ext.converged) rep.equivalence_ok = false;
    return rep;
}

// ---------------------------------------------------------------------------
// Functional equation check
// ---------------------------------------------------------------------------

/// Cauchy transform of the kernel-weighted cross measure
/// sqrt(1+s^2) sqrt(1+t^2) d rho, evaluated at (Z, W).
inline complex kernel_weighted_g(const SignedMeasure2D& rho, complex Z, complex W) {
    complex acc = 0;
    for (const Atom2D& a : rho.atoms)
        acc += a.w * std::sqrt(1 + a.s * a.s) * std::sqrt(1 + a.t * a.t) /
               ((Z - a.s) * (W - a.t));
    return acc;
}

struct FunctionalEqPoint {
    complex z, w;
    double residual = 0;
    bool skipped = false;
    std::string note;
};

struct FunctionalEqReport {
    std::vector<FunctionalEqPoint> points;
    double max_residual = 0;
};

/// Residual of the joint/marginal functional equation
/// G(z,w) [1 - G_kernel(1/G1(z), 1/G2(w))] = G1(z) G2(w) at each probe.
inline FunctionalEqReport verify_functional_eq(
    const std::function<complex(complex, complex)>& G,
    const std::function<complex(complex)>& G1,
    const std::function<complex(complex)>& G2, const SignedMeasure2D& rho,
    const std::vector<std::pair<complex, complex>>& points) {
    FunctionalEqReport rep;
    for (const auto& [z, w] : points) {
        FunctionalEqPoint pt;
        pt.z = z;
        pt.w = w;
        if (z.imag() == 0 || w.imag() == 0)
            throw invalid_measure("verify_functional_eq: probe on the real axis");
        try {
            complex g1 = G1(z), g2 = G2(w);
            if (std::abs(g1) < 1e-12 || std::abs(g2) < 1e-12) {
                pt.skipped = true;
                pt.note = "marginal Cauchy transform vanishes at probe";
            } else {
                complex corr = kernel_weighted_g(rho, 1.0 / g1, 1.0 / g2);
                pt.residual = std::abs(G(z, w) * (1.0 - corr) - g1 * g2);
            }
        } catch (const std::exception& e) {
            pt.skipped = true;
            pt.note = e.what();
        }
        if (!pt.skipped) rep.max_residual = std::max(rep.max_residual, pt.residual);
        rep.points.push_back(std::move(pt));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Infinitesimal derivative probe
// ---------------------------------------------------------------------------

struct DerivativeProbeRow {
    double eps = 0;
    complex quotient = 0;      // [G_eps(1/z, 1/w) - zw] / eps
    double deviation = 0;      // |quotient - zw R(z,w)|
    double s2_mass = 0, t2_mass = 0, st_mass = 0;  // rescaled grid masses
    double s2_err = 0, t2_err = 0, st_err = 0;     // vs compact-form masses
    bool flagged = false;
    std::string note;
};

struct DerivativeProbeReport {
    std::vector<DerivativeProbeRow> rows;
    complex target = 0;        // zw R(z,w)
    double order = 0;          // measured decay order of the deviation in eps
};

/// Difference-quotient probe of the semigroup derivative at t = 0: scale the
/// transforms by eps, reconstruct the law nu_eps, and compare
/// [G_{nu_eps}(1/z, 1/w) - zw]/eps against zw R(z,w).  Also rescales the
/// second moments of the inverted grid against the compact-form masses.
inline DerivativeProbeReport derivative_probe(const LKQuintupleGeneral& q,
                                              const std::vector<double>& eps_list,
                                              complex z, complex w,
                                              std::size_t grid_n = 241) {
    if (z.imag() == 0 || w.imag() == 0)
        throw invalid_measure("derivative_probe: probe on the real axis");
    DerivativeProbeReport rep;
    rep.target = z * w * lk_r_general(q, z, w);
    LKTripleCompact compact = lk_convert(q);
    double m1 = compact.rho1.mass();
    double m2 = compact.rho2.mass();
    double mr = compact.rho.mass();
    double base_scale = law_from_quintuple(q).scale;

    for (double eps : eps_list) {
        DerivativeProbeRow row;
        row.eps = eps;
        if (eps <= 0) {
            row.flagged = true;
            row.note = "eps must be positive";
            rep.rows.push_back(std::move(row));
            continue;
        }
        auto R1e = [&q, eps](complex x) { return eps * lk_marginal_r(q, 1, x); };
        auto R2e = [&q, eps](complex x) { return eps * lk_marginal_r(q, 2, x); };
        auto Re = [&q, eps](complex x, complex y) {
            return eps * lk_r_general(q, x, y);
        };
        try {
            GEvaluator2D Ge = reconstructed_g_evaluator(R1e, R2e, Re, base_scale);
            row.quotient = (Ge(1.0 / z, 1.0 / w) - z * w) / eps;
            row.deviation = std::abs(row.quotient - rep.target);

            double radius = 2.0 * std::sqrt(eps * std::max({m1, m2, 1e-12})) +
                            eps * (std::abs(q.gamma1) + std::abs(q.gamma2)) +
                            eps * base_scale;
            double L = 4.0 * radius;
            double y_smooth = 2.0 * L / double(grid_n - 1);
            GridDensity2D grid =
                invert2d(Ge, -L, L, -L, L, grid_n, grid_n, y_smooth);
            row.s2_mass = grid.grid_moment(2, 0) / eps;
            row.t2_mass = grid.grid_moment(0, 2) / eps;
            row.st_mass = grid.grid_moment(1, 1) / eps;
            row.s2_err = std::abs(row.s2_mass - m1);
            row.t2_err = std::abs(row.t2_mass - m2);
            row.st_err = std::abs(row.st_mass - mr);
        } catch (const std::exception& e) {
            row.flagged = true;
            row.note = e.what();
        }
        rep.rows.push_back(std::move(row));
    }

    // decay order of the quotient deviation across consecutive usable rows
    double num = 0;
    int cnt = 0;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        const auto& a = rep.rows[i - 1];
        const auto& b = rep.rows[i];
        if (a.flagged || b.flagged || a.deviation <= 0 || b.deviation <= 0) continue;
        double ratio = a.eps / b.eps;
        if (ratio <= 1) continue;
        num += std::log(a.deviation / b.deviation) / std::log(ratio);
        ++cnt;
    }
    if (cnt > 0) rep.order = num / cnt;
    return rep;
}

}  // namespace bifree
