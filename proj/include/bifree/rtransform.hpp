#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bifree/cauchy.hpp"
#include "bifree/measure.hpp"

namespace bifree {

/// Truncated Stolz angle at zero in the lower half-plane,
/// together with its reflection across the real axis.
struct StolzAngle {
    double alpha = 1.0;
    double beta = 0.25;

    // membership in the angle union its reflection
    bool contains(complex z) const {
        double x = z.real(), y = z.imag();
        if (y == 0) return false;
        return std::abs(x) < alpha * std::abs(y) && std::abs(y) < beta;
    }

    // Auto-sizing rule tied to the support radius; denom = 4 for the
    // one-variable angle, 8 for the product domain.
    static StolzAngle for_support(double support_radius, double denom = 4.0) {
        return {1.0, 1.0 / (denom * support_radius + denom)};
    }
};

struct newton_failure : numeric_error {
    using numeric_error::numeric_error;
};

namespace detail {

inline bool half_plane_ok(complex z, complex K) {
    if (z.imag() == 0.0) return true;  // real-axis continuation: no constraint
    return z.imag() * K.imag() < 0 || K.imag() == 0.0;
}

}  // namespace detail

namespace detail {

inline bool invert_g1_newton(const Measure1D& sigma, complex z, complex& K) {
    const double tol = 1e-13 * std::max(1.0, std::abs(z));
    double res = std::abs(detail::g1_raw(sigma, K) - z);
    for (int iter = 0; iter < 100; ++iter) {
        complex F = detail::g1_raw(sigma, K) - z;
        res = std::abs(F);
        if (res <= tol) return true;
        complex dF = 0;
        for (const Atom1D& a : sigma.atoms) {
            complex d = K - a.x;
            dF -= a.w / (d * d);
        }
        if (dF == 0.0) return false;
        complex step = -F / dF;
        // Damp steps that leave the admissible half-plane or worsen the residual.
        complex K2 = K + step;
        int halvings = 0;
        while (halvings < 60 &&
               (!detail::half_plane_ok(z, K2) ||
                std::abs(detail::g1_raw(sigma, K2) - z) > res)) {
            step *= 0.5;
            K2 = K + step;
            ++halvings;
        }
        if (halvings == 60) return false;
        K = K2;
    }
    return false;
}

// All roots of g1(sigma, K) = z as a polynomial in K, by Durand-Kerner.
// Robust near branch points of the inverse, where Newton degenerates.
inline std::vector<complex> invert_g1_all_roots(const Measure1D& sigma, complex z) {
    const std::size_t n = sigma.atoms.size();
    // full = prod_j (K - x_j); partial[i] = prod_{j != i} (K - x_j)
    std::vector<complex> full = {1.0};
    for (const Atom1D& a : sigma.atoms) {
        std::vector<complex> next(full.size() + 1, 0.0);
        for (std::size_t k = 0; k < full.size(); ++k) {
            next[k + 1] += full[k];
            next[k] -= a.x * full[k];
        }
        full = std::move(next);
    }
    std::vector<complex> poly(n + 1, 0.0);
    for (std::size_t k = 0; k <= n; ++k) poly[k] = -z * full[k];
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<complex> part = {1.0};
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            std::vector<complex> next(part.size() + 1, 0.0);
            for (std::size_t k = 0; k < part.size(); ++k) {
                next[k + 1] += part[k];
                next[k] -= sigma.atoms[j].x * part[k];
            }
            part = std::move(next);
        }
        for (std::size_t k = 0; k < part.size(); ++k)
            poly[k] += sigma.atoms[i].w * part[k];
    }
    for (std::size_t k = 0; k < n; ++k) poly[k] /= poly[n];
    poly[n] = 1.0;

    auto eval = [&](complex K) {
        complex acc = 0;
        for (std::size_t k = n + 1; k-- > 0;) acc = acc * K + poly[k];
        return acc;
    };
    std::vector<complex> roots(n);
    complex seed(0.4, 0.9);
    complex p = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        p *= seed;
        roots[k] = p;
    }
    for (int iter = 0; iter < 400; ++iter) {
        double moved = 0;
        for (std::size_t k = 0; k < n; ++k) {
            complex den = 1.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != k) den *= roots[k] - roots[j];
            if (den == 0.0) continue;
            complex step = eval(roots[k]) / den;
            roots[k] -= step;
            moved = std::max(moved, std::abs(step));
        }
        if (moved < 1e-14) break;
    }
    return roots;
}

}  // namespace detail

/// Solve g1(sigma, K) = z for K by damped Newton; K is the value of the
/// inverse Cauchy transform at z.  Seeded at 1/z + m1 unless given; on a
/// stall, retries from the near-atom inverse branches K ~ x_j + w_j / z and
/// finally falls back to solving the defining polynomial outright.
inline complex invert_g1(const Measure1D& sigma, complex z,
                         const complex* seed = nullptr) {
    std::vector<complex> seeds;
    if (seed) seeds.push_back(*seed);
    complex physical = 1.0 / z + sigma.moment(1) / sigma.mass();
    seeds.push_back(physical);
    for (const Atom1D& a : sigma.atoms) seeds.push_back(a.x + a.w / z);
    for (complex K : seeds)
        if (detail::invert_g1_newton(sigma, z, K)) return K;

    // direct polynomial solve; keep the admissible-half-plane roots and pick
    // the one continuing the principal branch K ~ 1/z + m1
    const double tol = 1e-9 * std::max(1.0, std::abs(z));
    complex best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    double best_res = std::numeric_limits<double>::infinity();
    for (complex K : detail::invert_g1_all_roots(sigma, z)) {
        double res = std::abs(detail::g1_raw(sigma, K) - z);
        best_res = std::min(best_res, res);
        if (res > tol) continue;
        if (z.imag() != 0.0 && z.imag() * K.imag() > 1e-12) continue;
        double dist = std::abs(K - physical);
        if (dist < best_dist) {
            best_dist = dist;
            best = K;
        }
    }
    if (best_dist < std::numeric_limits<double>::infinity()) return best;
    throw newton_failure("invert_g1: no convergence, residual " +
                         std::to_string(best_res));
}

/// One-dimensional R-transform of an atomic measure: R(z) = G^{-1}(z) - 1/z.
inline complex r1_from_measure(const Measure1D& sigma, complex z) {
    return invert_g1(sigma, z) - 1.0 / z;
}

/// Same, but for a Cauchy transform given as a callable (closed-form oracle
/// or a reconstructed law).  Newton with a numerically differentiated G.
inline complex r1_from_g(const std::function<complex(complex)>& G, complex z,
                         double mean_hint = 0.0) {
    complex K = 1.0 / z + mean_hint;
    const double tol = 1e-13 * std::max(1.0, std::abs(z));
    double res = std::abs(G(K) - z);
    for (int iter = 0; iter < 100; ++iter) {
        complex F = G(K) - z;
        res = std::abs(F);
        if (res <= tol) return K - 1.0 / z;
        double h = 1e-6 * std::max(1.0, std::abs(K));
        complex dG = (G(K + h) - G(K - h)) / (2.0 * h);
        if (dG == 0.0) throw newton_failure("r1_from_g: vanishing derivative");
        complex step = -F / dG;
        complex K2 = K + step;
        int halvings = 0;
        while (halvings < 60 && (!detail::half_plane_ok(z, K2) ||
                                 std::abs(G(K2) - z) > res)) {
            step *= 0.5;
            K2 = K + step;
            ++halvings;
        }
        if (halvings == 60)
            throw newton_failure("r1_from_g: step damping failed");
        K = K2;
    }
    throw newton_failure("r1_from_g: no convergence, residual " + std::to_string(res));
}

/// Evaluator contract for a one-dimensional R-transform.
struct REvaluator1D {
    std::function<complex(complex)> f;
    Provenance provenance = Provenance::ClosedForm;
    StolzAngle angle;

    complex operator()(complex z) const { return f(z); }
};

inline REvaluator1D r1_evaluator(Measure1D sigma) {
    StolzAngle angle = StolzAngle::for_support(sigma.support_radius());
    return {[sigma = std::move(sigma)](complex z) { return r1_from_measure(sigma, z); },
            Provenance::FromMeasure, angle};
}

/// Levy parameters (gamma, sigma) of a freely infinitely divisible law on R.
struct FreeLKPair {
    double gamma = 0.0;
    Measure1D sigma;  // finite positive, possibly zero mass
};

/// R(z) = gamma + \int (z+x)/(1-zx) dsigma(x).
inline complex free_lk_r(const FreeLKPair& p, complex z) {
    complex acc = p.gamma;
    for (const Atom1D& a : p.sigma.atoms) {
        complex den = 1.0 - z * a.x;
        if (std::abs(den) < 1e-14)
            throw numeric_error("free_lk_r: pole at atom x=" + std::to_string(a.x));
        acc += a.w * (z + a.x) / den;
    }
    return acc;
}

inline REvaluator1D free_lk_r_evaluator(FreeLKPair p) {
    StolzAngle angle = StolzAngle::for_support(p.sigma.support_radius());
    return {[p = std::move(p)](complex z) { return free_lk_r(p, z); },
            Provenance::ClosedForm, angle};
}

/// Invert K(g) = 1/g + R(g) at a target Z off the real axis: returns the
/// Cauchy-transform value g with K(g) = Z.  Continuation descends from a
/// point high above the axis, where g ~ 1/Z seeds Newton reliably, down to
/// the requested height, warm-starting each level.
namespace detail {

// One Newton solve of 1/g + R(g) = Zk warm-started at g; returns success.
inline bool g_from_r_solve(const std::function<complex(complex)>& R, complex Zk,
                           double sgn, complex& g) try {
    auto H = [&](complex gg) { return 1.0 / gg + R(gg) - Zk; };
    double res = std::abs(H(g));
    for (int iter = 0; iter < 100; ++iter) {
        complex F = H(g);
        res = std::abs(F);
        if (res <= 1e-12 * std::max(1.0, std::abs(Zk))) return true;
        double h = 1e-7 * std::max(1e-3, std::abs(g));
        complex dR = (R(g + h) - R(g - h)) / (2.0 * h);
        complex dH = -1.0 / (g * g) + dR;
        if (dH == 0.0) return false;
        complex step = -F / dH;
        complex g2 = g + step;
        int halvings = 0;
        while (halvings < 60 && (g2.imag() * sgn >= 0.0 || std::abs(H(g2)) > res)) {
            step *= 0.5;
            g2 = g + step;
            ++halvings;
        }
        if (halvings == 60) return res <= 1e-12 * std::max(1.0, std::abs(Zk));
        g = g2;
    }
    return false;
} catch (const numeric_error&) {
    // an R evaluation outside its comfortable region counts as a stall; the
    // caller refines the continuation step instead of aborting
    return false;
}

}  // namespace detail

inline complex g_from_r(const std::function<complex(complex)>& R, complex Z,
                        double scale = 1.0) {
    detail::require_offaxis(Z, "g_from_r");
    const double y_target = std::abs(Z.imag());
    const double sgn = Z.imag() > 0 ? 1.0 : -1.0;
    double y0 = std::max({8.0 * scale + 8.0, 4.0 * std::abs(Z), y_target});

    complex g = 1.0 / complex(Z.real(), sgn * y0);
    double y = y0;
    if (!detail::g_from_r_solve(R, complex(Z.real(), sgn * y0), sgn, g))
        throw newton_failure("g_from_r: no convergence at the starting height");
    // adaptive geometric descent: halve the step when a level stalls
    double factor = 0.6;
    int levels = 0;
    while (y > y_target) {
        double y_next = std::max(y * factor, y_target);
        complex g_try = g;
        if (detail::g_from_r_solve(R, complex(Z.real(), sgn * y_next), sgn, g_try)) {
            g = g_try;
            y = y_next;
            factor = std::min(0.6, factor * 1.3);
        } else {
            factor = std::sqrt(factor);  // smaller descent step
            if (factor > 0.9999)
                throw newton_failure(
                    "g_from_r: continuation stalled at height " + std::to_string(y));
        }
        if (++levels > 500)
            throw newton_failure("g_from_r: continuation exceeded the level budget");
    }
    return g;
}

/// Cauchy transform of the free convolution of two atomic laws via the
/// two-sided subordination fixed point: omega1 + omega2 = Z + 1/g with
/// g = G_a(omega1) = G_b(omega2).
inline complex g_free_sum(const Measure1D& a, const Measure1D& b, complex Z) {
    detail::require_offaxis(Z, "g_free_sum");
    auto F = [](const Measure1D& m, complex z) { return 1.0 / detail::g1_raw(m, z); };
    complex w1 = Z, w2 = Z;
    double delta = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 5000; ++iter) {
        complex w1n = F(b, w2) + Z - w2;
        complex w2n = F(a, w1n) + Z - w1n;
        delta = std::abs(w1n - w1) + std::abs(w2n - w2);
        w1 = w1n;
        w2 = w2n;
        if (delta <= 1e-13 * std::max(1.0, std::abs(Z)))
            return detail::g1_raw(a, w1);
    }
    // iteration exhausted: accept a rounding-noise plateau, reject real stalls
    if (delta <= 1e-12 * std::max(1.0, std::abs(Z))) return detail::g1_raw(a, w1);
    throw newton_failure("g_free_sum: subordination iteration did not settle");
}

/// Cauchy transform of the k-fold free convolution power of an atomic law.
/// The subordination point omega solves k*omega - (k-1)/G_sigma(omega) = Z;
/// solved by damped Newton with continuation down in the height of Z.
inline complex g_free_power(const Measure1D& sigma, double k, complex Z) {
    detail::require_offaxis(Z, "g_free_power");
    const double sgn = Z.imag() > 0 ? 1.0 : -1.0;
    const double y_target = std::abs(Z.imag());
    double y0 = std::max(4.0 * sigma.support_radius() + 4.0, y_target);

    auto solve = [&](complex Zk, complex& omega) {
        auto phi = [&](complex om) {
            return k * om - (k - 1.0) / detail::g1_raw(sigma, om) - Zk;
        };
        double res = std::abs(phi(omega));
        for (int iter = 0; iter < 100; ++iter) {
            complex F = phi(omega);
            res = std::abs(F);
            if (res <= 1e-13 * std::max(1.0, std::abs(Zk))) return true;
            complex G = detail::g1_raw(sigma, omega);
            complex dG = 0;
            for (const Atom1D& a : sigma.atoms) {
                complex d = omega - a.x;
                dG -= a.w / (d * d);
            }
            complex dphi = k + (k - 1.0) * dG / (G * G);
            if (dphi == 0.0) return false;
            complex step = -F / dphi;
            complex om2 = omega + step;
            int halvings = 0;
            while (halvings < 60 &&
                   (om2.imag() * sgn <= 0.0 || std::abs(phi(om2)) > res)) {
                step *= 0.5;
                om2 = omega + step;
                ++halvings;
            }
            if (halvings == 60) return false;
            omega = om2;
        }
        return false;
    };

    complex omega = complex(Z.real(), sgn * y0);
    if (!solve(complex(Z.real(), sgn * y0), omega))
        throw newton_failure("g_free_power: no convergence at the starting height");
    double y = y0, factor = 0.6;
    int levels = 0;
    while (y > y_target) {
        double y_next = std::max(y * factor, y_target);
        complex om_try = omega;
        if (solve(complex(Z.real(), sgn * y_next), om_try)) {
            omega = om_try;
            y = y_next;
            factor = std::min(0.6, factor * 1.3);
        } else {
            factor = std::sqrt(factor);
            if (factor > 0.9999)
                throw newton_failure("g_free_power: continuation stalled at height " +
                                     std::to_string(y));
        }
        if (++levels > 500)
            throw newton_failure("g_free_power: continuation exceeded the level budget");
    }
    return detail::g1_raw(sigma, omega);
}

struct GridDensity1D {
    double x_min = 0, x_max = 0;
    std::size_t n = 0;
    double y = 0;
    std::vector<double> values;

    double x(std::size_t i) const {
        return x_min + (x_max - x_min) * double(i) / double(n - 1);
    }
    double dx() const { return (x_max - x_min) / double(n - 1); }

    double grid_moment(int m) const {
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double wi = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
            acc += wi * std::pow(x(i), m) * values[i];
        }
        return acc * dx();
    }
};

struct GridSpec1D {
    double x_min, x_max;
    std::size_t n;
    double y;
};

struct FreeConvolutionResult {
    GridDensity1D density;
    double moments[5];  // moments 0..4 of the grid density
    std::function<complex(complex)> g;  // Cauchy transform of the power
};

/// k-fold free convolution power of a compactly supported atomic probability:
/// 1-D Stieltjes inversion density plus a moment table.
inline FreeConvolutionResult free_convolve_power(const Measure1D& sigma, double k,
                                                 const GridSpec1D& spec) {
    if (k < 1.0) throw invalid_measure("free_convolve_power: k must be >= 1");
    if (!sigma.is_probability())
        throw invalid_measure("free_convolve_power: input must be a probability");
    FreeConvolutionResult out;
    out.g = [sigma, k](complex Z) { return g_free_power(sigma, k, Z); };
    out.density.x_min = spec.x_min;
    out.density.x_max = spec.x_max;
    out.density.n = spec.n;
    out.density.y = spec.y;
    out.density.values.assign(spec.n, 0.0);
    parallel_for(spec.n, [&](std::size_t i) {
        complex Z(out.density.x(i), spec.y);
        double v = -out.g(Z).imag() / M_PI;
        out.density.values[i] = v < 0 ? 0.0 : v;
    });
    for (int m = 0; m <= 4; ++m) out.moments[m] = out.density.grid_moment(m);
    return out;
}

}  // namespace bifree
