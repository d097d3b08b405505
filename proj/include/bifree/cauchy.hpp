#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

#include "bifree/measure.hpp"
#include "bifree/parallel.hpp"

namespace bifree {

using complex = std::complex<double>;

// Numerical failure in a transform pipeline (Newton divergence, vanishing
// denominator, pole hit, ...).
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct domain_error : numeric_error {
    using numeric_error::numeric_error;
};

namespace detail {

inline void require_offaxis(complex z, const char* who) {
    if (z.imag() == 0.0)
        throw domain_error(std::string(who) + ": argument on the real axis");
}

// Unguarded sums.  Valid wherever the denominators stay away from the atoms;
// used internally for analytic continuation across the axes (torus averaging,
// real-axis cumulant probes).
template <class M>
inline complex g2_raw(const M& mu, complex z, complex w) {
    complex acc = 0;
    for (const Atom2D& a : mu.atoms) acc += a.w / ((z - a.s) * (w - a.t));
    return acc;
}

template <class M>
inline complex g1_raw(const M& mu, complex z) {
    complex acc = 0;
    for (const auto& a : mu.atoms) acc += a.w / (z - a.x);
    return acc;
}

}  // namespace detail

/// Two-variable Cauchy transform of an atomic (signed) planar measure.
inline complex g2(const Measure2D& mu, complex z, complex w) {
    detail::require_offaxis(z, "g2");
    detail::require_offaxis(w, "g2");
    return detail::g2_raw(mu, z, w);
}
inline complex g2(const SignedMeasure2D& mu, complex z, complex w) {
    detail::require_offaxis(z, "g2");
    detail::require_offaxis(w, "g2");
    return detail::g2_raw(mu, z, w);
}

/// One-variable Cauchy transform.
inline complex g1(const Measure1D& mu, complex z) {
    detail::require_offaxis(z, "g1");
    return detail::g1_raw(mu, z);
}
inline complex g1(const SignedMeasure1D& mu, complex z) {
    detail::require_offaxis(z, "g1");
    return detail::g1_raw(mu, z);
}

enum class Provenance { FromMeasure, FromRReconstruction, ClosedForm };

/// Callable contract for a two-variable Cauchy transform.
struct GEvaluator2D {
    std::function<complex(complex, complex)> f;
    Provenance provenance = Provenance::ClosedForm;

    complex operator()(complex z, complex w) const { return f(z, w); }
};

inline GEvaluator2D g_evaluator(Measure2D mu) {
    return {[mu = std::move(mu)](complex z, complex w) { return g2(mu, z, w); },
            Provenance::FromMeasure};
}

inline GEvaluator2D g_evaluator(SignedMeasure2D mu) {
    return {[mu = std::move(mu)](complex z, complex w) { return g2(mu, z, w); },
            Provenance::FromMeasure};
}

/// Rectangular density grid produced by Stieltjes inversion.
struct GridDensity2D {
    double x_min = 0, x_max = 0;
    double u_min = 0, u_max = 0;
    std::size_t n_x = 0, n_u = 0;
    double y = 0;                 // smoothing parameter used
    std::vector<double> values;   // row-major, values[i * n_u + j]

    double x(std::size_t i) const {
        return x_min + (x_max - x_min) * double(i) / double(n_x - 1);
    }
    double u(std::size_t j) const {
        return u_min + (u_max - u_min) * double(j) / double(n_u - 1);
    }
    double value(std::size_t i, std::size_t j) const { return values[i * n_u + j]; }

    double dx() const { return (x_max - x_min) / double(n_x - 1); }
    double du() const { return (u_max - u_min) / double(n_u - 1); }

    // Trapezoid integral of x^m u^n against the grid density.
    double grid_moment(int m, int n) const {
        double acc = 0;
        for (std::size_t i = 0; i < n_x; ++i) {
            double wi = (i == 0 || i + 1 == n_x) ? 0.5 : 1.0;
            double xi = std::pow(x(i), m);
            for (std::size_t j = 0; j < n_u; ++j) {
                double wj = (j == 0 || j + 1 == n_u) ? 0.5 : 1.0;
                acc += wi * wj * xi * std::pow(u(j), n) * value(i, j);
            }
        }
        return acc * dx() * du();
    }

    double riemann_mass() const { return grid_moment(0, 0); }
};

/// Stieltjes inversion on a rectangular grid: Poisson-kernel smoothed
/// density at scale y, recovered from boundary values of G.
inline GridDensity2D invert2d(const GEvaluator2D& g, double x_min, double x_max,
                              double u_min, double u_max, std::size_t n_x,
                              std::size_t n_u, double y, bool clamp = true) {
    if (y <= 0) throw invalid_measure("invert2d: smoothing y must be positive");
    if (n_x < 2 || n_u < 2) throw invalid_measure("invert2d: grid sizes must be >= 2");
    GridDensity2D grid;
    grid.x_min = x_min;
    grid.x_max = x_max;
    grid.u_min = u_min;
    grid.u_max = u_max;
    grid.n_x = n_x;
    grid.n_u = n_u;
    grid.y = y;
    grid.values.assign(n_x * n_u, 0.0);
    const double pi2 = M_PI * M_PI;
    parallel_for(n_x, [&](std::size_t i) {
        complex z(grid.x(i), y);
        for (std::size_t j = 0; j < n_u; ++j) {
            double u = grid.u(j);
            complex diff = (g(z, complex(u, y)) - g(z, complex(u, -y))) / complex(0, 2);
            double v = diff.imag() / pi2;
            if (clamp && v < 0) v = 0;
            grid.values[i * n_u + j] = v;
        }
    });
    return grid;
}

/// Marginal Cauchy transform recovered by sending the other variable to
/// infinity along the imaginary axis.
inline complex marginal_g_limit(const GEvaluator2D& g, complex z, int axis, double M) {
    detail::require_offaxis(z, "marginal_g_limit");
    if (M <= 0) throw invalid_measure("marginal_g_limit: M must be positive");
    complex lambda(0, M);
    if (axis == 1) return lambda * g(z, lambda);
    if (axis == 2) return lambda * g(lambda, z);
    throw invalid_measure("marginal_g_limit: axis must be 1 or 2");
}

}  // namespace bifree
