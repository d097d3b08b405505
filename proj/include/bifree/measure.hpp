#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bifree {

// Thrown when an input violates a structural precondition (bad weight,
// empty atom list, malformed file, ...).
struct invalid_measure : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Atom1D {
    double x;
    double w;
};

struct Atom2D {
    double s;
    double t;
    double w;
};

namespace detail {

// Merge atoms at bit-identical coordinates.  No fuzzy matching: merging
// nearby atoms would silently change moments.
inline std::vector<Atom2D> dedup(std::vector<Atom2D> atoms) {
    std::map<std::pair<double, double>, double> merged;
    for (const Atom2D& a : atoms) merged[{a.s, a.t}] += a.w;
    std::vector<Atom2D> out;
    out.reserve(merged.size());
    for (const auto& [st, w] : merged) out.push_back({st.first, st.second, w});
    return out;
}

inline std::vector<Atom1D> dedup(std::vector<Atom1D> atoms) {
    std::map<double, double> merged;
    for (const Atom1D& a : atoms) merged[a.x] += a.w;
    std::vector<Atom1D> out;
    out.reserve(merged.size());
    for (const auto& [x, w] : merged) out.push_back({x, w});
    return out;
}

}  // namespace detail

/// Finitely supported positive measure on the line.
struct Measure1D {
    std::vector<Atom1D> atoms;

    double mass() const {
        double m = 0;
        for (const Atom1D& a : atoms) m += a.w;
        return m;
    }

    double moment(int m) const {
        double acc = 0;
        for (const Atom1D& a : atoms) acc += a.w * std::pow(a.x, m);
        return acc;
    }

    double support_radius() const {
        double r = 0;
        for (const Atom1D& a : atoms) r = std::max(r, std::abs(a.x));
        return r;
    }

    bool is_probability(double tol = 1e-12) const {
        return std::abs(mass() - 1.0) <= tol;
    }

    Measure1D scaled(double k) const {
        Measure1D out = *this;
        for (Atom1D& a : out.atoms) a.w *= k;
        return out;
    }
};

/// Finitely supported signed measure on the line.
struct SignedMeasure1D {
    std::vector<Atom1D> atoms;

    double mass() const {
        double m = 0;
        for (const Atom1D& a : atoms) m += a.w;
        return m;
    }

    double total_variation() const {
        double m = 0;
        for (const Atom1D& a : atoms) m += std::abs(a.w);
        return m;
    }
};

/// Finitely supported positive measure on the plane.
struct Measure2D {
    std::vector<Atom2D> atoms;

    double mass() const {
        double m = 0;
        for (const Atom2D& a : atoms) m += a.w;
        return m;
    }

    double support_radius() const {
        double r = 0;
        for (const Atom2D& a : atoms)
            r = std::max({r, std::abs(a.s), std::abs(a.t)});
        return r;
    }

    bool is_probability(double tol = 1e-12) const {
        return std::abs(mass() - 1.0) <= tol;
    }

    Measure2D scaled(double k) const {
        Measure2D out = *this;
        for (Atom2D& a : out.atoms) a.w *= k;
        return out;
    }
};

/// Finitely supported measure on the plane with real (signed) weights.
struct SignedMeasure2D {
    std::vector<Atom2D> atoms;

    double mass() const {
        double m = 0;
        for (const Atom2D& a : atoms) m += a.w;
        return m;
    }

    double total_variation() const {
        double m = 0;
        for (const Atom2D& a : atoms) m += std::abs(a.w);
        return m;
    }

    double support_radius() const {
        double r = 0;
        for (const Atom2D& a : atoms)
            r = std::max({r, std::abs(a.s), std::abs(a.t)});
        return r;
    }

    // Jordan decomposition by sign partition of the atom list.
    std::pair<Measure2D, Measure2D> jordan() const {
        Measure2D pos, neg;
        for (const Atom2D& a : atoms) {
            if (a.w >= 0)
                pos.atoms.push_back(a);
            else
                neg.atoms.push_back({a.s, a.t, -a.w});
        }
        return {pos, neg};
    }

    SignedMeasure2D scaled(double k) const {
        SignedMeasure2D out = *this;
        for (Atom2D& a : out.atoms) a.w *= k;
        return out;
    }
};

inline Measure2D make_discrete_2d(std::vector<Atom2D> atoms) {
    if (atoms.empty()) throw invalid_measure("make_discrete_2d: empty atom list");
    for (const Atom2D& a : atoms)
        if (a.w < 0) throw invalid_measure("make_discrete_2d: negative weight");
    return Measure2D{detail::dedup(std::move(atoms))};
}

inline SignedMeasure2D make_signed_2d(std::vector<Atom2D> atoms) {
    return SignedMeasure2D{detail::dedup(std::move(atoms))};
}

inline Measure1D make_discrete_1d(std::vector<Atom1D> atoms) {
    if (atoms.empty()) throw invalid_measure("make_discrete_1d: empty atom list");
    for (const Atom1D& a : atoms)
        if (a.w < 0) throw invalid_measure("make_discrete_1d: negative weight");
    return Measure1D{detail::dedup(std::move(atoms))};
}

inline Measure2D dirac2(double s, double t) { return Measure2D{{{s, t, 1.0}}}; }
inline Measure1D dirac1(double x) { return Measure1D{{{x, 1.0}}}; }

inline Measure1D marginal(const Measure2D& mu, int axis) {
    if (axis != 1 && axis != 2) throw invalid_measure("marginal: axis must be 1 or 2");
    std::vector<Atom1D> atoms;
    atoms.reserve(mu.atoms.size());
    for (const Atom2D& a : mu.atoms)
        atoms.push_back({axis == 1 ? a.s : a.t, a.w});
    return Measure1D{detail::dedup(std::move(atoms))};
}

inline SignedMeasure1D marginal(const SignedMeasure2D& mu, int axis) {
    if (axis != 1 && axis != 2) throw invalid_measure("marginal: axis must be 1 or 2");
    std::vector<Atom1D> atoms;
    atoms.reserve(mu.atoms.size());
    for (const Atom2D& a : mu.atoms)
        atoms.push_back({axis == 1 ? a.s : a.t, a.w});
    return SignedMeasure1D{detail::dedup(std::move(atoms))};
}

namespace detail {

template <class M>
inline double moment_impl(const M& mu, int m, int n) {
    if (m < 0 || n < 0) throw invalid_measure("moment: negative order");
    if (m + n > 20) throw invalid_measure("moment: order m+n exceeds 20");
    double acc = 0;
    for (const Atom2D& a : mu.atoms)
        acc += a.w * std::pow(a.s, m) * std::pow(a.t, n);
    return acc;
}

}  // namespace detail

inline double moment(const Measure2D& mu, int m, int n) {
    return detail::moment_impl(mu, m, n);
}
inline double moment(const SignedMeasure2D& mu, int m, int n) {
    return detail::moment_impl(mu, m, n);
}
inline double moment(const Measure1D& mu, int m) {
    if (m < 0 || m > 20) throw invalid_measure("moment: bad order");
    return mu.moment(m);
}

inline double covariance(const Measure2D& mu) {
    return moment(mu, 1, 1) - moment(mu, 1, 0) * moment(mu, 0, 1);
}

// Reweighting kernels used to form the limit objects attached to a planar
// probability law: the signed cross measure, the two variance-like measures
// on each coordinate, and the centering scalars.
enum class WeightKernel { Rho, Sigma1, Sigma2, Gamma1, Gamma2 };

inline SignedMeasure2D rho_weighted(const Measure2D& mu, double k) {
    if (k <= 0) throw invalid_measure("rho_weighted: k must be positive");
    std::vector<Atom2D> atoms;
    atoms.reserve(mu.atoms.size());
    for (const Atom2D& a : mu.atoms) {
        double w = k * a.w * a.s * a.t /
                   (std::sqrt(1 + a.s * a.s) * std::sqrt(1 + a.t * a.t));
        if (w != 0) atoms.push_back({a.s, a.t, w});
    }
    return SignedMeasure2D{std::move(atoms)};
}

inline Measure2D sigma_weighted(const Measure2D& mu, int axis, double k) {
    if (k <= 0) throw invalid_measure("sigma_weighted: k must be positive");
    if (axis != 1 && axis != 2) throw invalid_measure("sigma_weighted: axis must be 1 or 2");
    std::vector<Atom2D> atoms;
    atoms.reserve(mu.atoms.size());
    for (const Atom2D& a : mu.atoms) {
        double x = axis == 1 ? a.s : a.t;
        double w = k * a.w * x * x / (1 + x * x);
        if (w != 0) atoms.push_back({a.s, a.t, w});
    }
    return Measure2D{std::move(atoms)};
}

inline double gamma_functional(const Measure2D& mu, int axis, double k) {
    if (k <= 0) throw invalid_measure("gamma_functional: k must be positive");
    if (axis != 1 && axis != 2) throw invalid_measure("gamma_functional: axis must be 1 or 2");
    double acc = 0;
    for (const Atom2D& a : mu.atoms) {
        double x = axis == 1 ? a.s : a.t;
        acc += a.w * x / (1 + x * x);
    }
    return k * acc;
}

inline Measure2D product_measure(const Measure1D& sigma, const Measure1D& tau) {
    std::vector<Atom2D> atoms;
    atoms.reserve(sigma.atoms.size() * tau.atoms.size());
    for (const Atom1D& a : sigma.atoms)
        for (const Atom1D& b : tau.atoms)
            atoms.push_back({a.x, b.x, a.w * b.w});
    return Measure2D{detail::dedup(std::move(atoms))};
}

namespace detail {

template <class M>
inline double tail_mass_impl(const M& mu, double m) {
    if (m <= 0) throw invalid_measure("tail_mass: m must be positive");
    double acc = 0;
    for (const Atom2D& a : mu.atoms)
        if (std::abs(a.s) > m || std::abs(a.t) > m) acc += std::abs(a.w);
    return acc;
}

}  // namespace detail

inline double tail_mass(const Measure2D& mu, double m) {
    return detail::tail_mass_impl(mu, m);
}
inline double tail_mass(const SignedMeasure2D& mu, double m) {
    return detail::tail_mass_impl(mu, m);
}

}  // namespace bifree
