#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "bifree/cauchy.hpp"
#include "bifree/measure.hpp"
#include "bifree/rtransform.hpp"

namespace bifree {

/// Product domain for the two-variable R-transform: both coordinates in the
/// same Stolz angle union its reflection.
struct OmegaDomain {
    StolzAngle delta;

    bool contains(complex z, complex w) const {
        return delta.contains(z) && delta.contains(w);
    }

    static OmegaDomain for_support(double support_radius) {
        return {StolzAngle::for_support(support_radius, 8.0)};
    }
};

struct degenerate_domain : numeric_error {
    using numeric_error::numeric_error;
};

/// Bi-free partial R-transform assembled from an atomic planar measure.
/// Evaluation is permitted wherever the auxiliary map h stays away from
/// zero; the attached domain is advisory (used for flagging, not gating).
class PartialR {
  public:
    explicit PartialR(Measure2D mu)
        : mu_(std::move(mu)),
          marg1_(marginal(mu_, 1)),
          marg2_(marginal(mu_, 2)),
          omega_(OmegaDomain::for_support(mu_.support_radius())) {}

    complex r1(complex z) const { return r1_from_measure(marg1_, z); }
    complex r2(complex w) const { return r1_from_measure(marg2_, w); }

    complex h(complex z, complex w) const {
        complex K1 = 1.0 / z + r1(z);
        complex K2 = 1.0 / w + r2(w);
        return detail::g2_raw(mu_, K1, K2) / (z * w);
    }

    complex operator()(complex z, complex w) const {
        complex hv = h(z, w);
        if (std::abs(hv) < 1e-10)
            throw degenerate_domain("partial_r: h vanishes; shrink the domain");
        return z * r1(z) + w * r2(w) + (1.0 - 1.0 / hv);
    }

    const Measure2D& measure() const { return mu_; }
    const Measure1D& marginal1() const { return marg1_; }
    const Measure1D& marginal2() const { return marg2_; }
    const OmegaDomain& omega() const { return omega_; }

  private:
    Measure2D mu_;
    Measure1D marg1_, marg2_;
    OmegaDomain omega_;
};

inline complex partial_r(const Measure2D& mu, complex z, complex w) {
    return PartialR(mu)(z, w);
}

/// Evaluator bundle for a two-variable R-transform with its marginal pieces.
struct PartialREvaluator {
    std::function<complex(complex, complex)> f;
    std::function<complex(complex)> r1;
    std::function<complex(complex)> r2;
    OmegaDomain omega;
    Provenance provenance = Provenance::ClosedForm;

    complex operator()(complex z, complex w) const { return f(z, w); }
};

inline PartialREvaluator partial_r_evaluator(Measure2D mu) {
    auto shared = std::make_shared<PartialR>(std::move(mu));
    PartialREvaluator ev;
    ev.f = [shared](complex z, complex w) { return (*shared)(z, w); };
    ev.r1 = [shared](complex z) { return shared->r1(z); };
    ev.r2 = [shared](complex w) { return shared->r2(w); };
    ev.omega = shared->omega();
    ev.provenance = Provenance::FromMeasure;
    return ev;
}

/// Algebraic inversion of the R-transform definition on the image of the
/// K-maps: G(K1(z), K2(w)) = zw / (1 + zR1(z) + wR2(w) - R(z,w)).
inline complex reconstruct_g(const std::function<complex(complex)>& R1,
                             const std::function<complex(complex)>& R2,
                             const std::function<complex(complex, complex)>& R,
                             complex z, complex w) {
    complex den = 1.0 + z * R1(z) + w * R2(w) - R(z, w);
    if (std::abs(den) < 1e-12)
        throw degenerate_domain("reconstruct_g: vanishing denominator (domain too large)");
    return z * w / den;
}

/// Full Cauchy-transform evaluator for a law specified by (R1, R2, R):
/// each coordinate is pulled back through the Newton inverse of K.
inline GEvaluator2D reconstructed_g_evaluator(
    std::function<complex(complex)> R1, std::function<complex(complex)> R2,
    std::function<complex(complex, complex)> R, double scale) {
    auto f = [R1 = std::move(R1), R2 = std::move(R2), R = std::move(R),
              scale](complex Z, complex W) {
        complex z = g_from_r(R1, Z, scale);
        complex w = g_from_r(R2, W, scale);
        return reconstruct_g(R1, R2, R, z, w);
    };
    return {std::move(f), Provenance::FromRReconstruction};
}

/// Ordered two-index cumulants, kappa[m][n] for 0 <= m, n <= maxdeg.
struct CumulantTable {
    int maxdeg = 0;
    std::vector<double> kappa;  // (maxdeg+1)^2, row-major in m

    double at(int m, int n) const { return kappa[m * (maxdeg + 1) + n]; }
    double& at(int m, int n) { return kappa[m * (maxdeg + 1) + n]; }
};

struct analyticity_error : numeric_error {
    using numeric_error::numeric_error;
};

/// Coefficient extraction by double discrete Fourier averaging of R over the
/// torus |z| = |w| = r (trapezoid rule, N nodes per circle).
namespace detail {

inline CumulantTable cumulant_dft(const std::function<complex(complex, complex)>& R,
                                  int maxdeg, double r, int N) {
    CumulantTable table;
    table.maxdeg = maxdeg;
    table.kappa.assign((maxdeg + 1) * (maxdeg + 1), 0.0);

    std::vector<complex> nodes(N);
    for (int j = 0; j < N; ++j) {
        double th = 2.0 * M_PI * j / N;
        nodes[j] = r * complex(std::cos(th), std::sin(th));
    }
    std::vector<complex> samples(N * N);
    parallel_for(N, [&](std::size_t j) {
        for (int k = 0; k < N; ++k) samples[j * N + k] = R(nodes[j], nodes[k]);
    });

    for (int m = 0; m <= maxdeg; ++m) {
        for (int n = 0; n <= maxdeg; ++n) {
            complex acc = 0;
            for (int j = 0; j < N; ++j) {
                for (int k = 0; k < N; ++k) {
                    double th = -2.0 * M_PI * (m * j + n * k) / N;
                    acc += samples[j * N + k] * complex(std::cos(th), std::sin(th));
                }
            }
            acc /= double(N) * double(N) * std::pow(r, m + n);
            if (std::abs(acc.imag()) > 1e-6)
                throw analyticity_error(
                    "extract_cumulants: imaginary residue too large; shrink r");
            table.at(m, n) = acc.real();
        }
    }
    return table;
}

}  // namespace detail

inline CumulantTable extract_cumulants(
    const std::function<complex(complex, complex)>& R, int maxdeg, double r,
    int N = 64) {
    if (r <= 0) throw invalid_measure("extract_cumulants: radius must be positive");
    CumulantTable table = detail::cumulant_dft(R, maxdeg, r, N);
    // Cross-check against a smaller torus: if R is not analytic on the closed
    // bidisc of radius r the two coefficient sets disagree badly.  (The
    // imaginary-residue check alone misses real singularities because
    // conjugate symmetry cancels the imaginary parts.)
    // Only the low orders: dividing by (r/2)^(m+n) amplifies rounding noise
    // too much for the high orders to give a meaningful comparison.
    int check_deg = std::min(maxdeg, 2);
    CumulantTable half = detail::cumulant_dft(R, check_deg, 0.5 * r, N);
    for (int m = 0; m <= check_deg; ++m)
        for (int n = 0; n <= check_deg - m; ++n) {
            double a = table.at(m, n), b = half.at(m, n);
            if (std::abs(a - b) > 1e-6 * std::max(1.0, std::abs(b)))
                throw analyticity_error(
                    "extract_cumulants: coefficients unstable in the sampling "
                    "radius; shrink r");
        }
    return table;
}

/// Axis limit of the two-variable R-transform: approaches z R1(z) (axis 1)
/// or w R2(w) (axis 2) as eps decreases.
inline complex marginal_r_limit(const std::function<complex(complex, complex)>& R,
                                complex z, int axis, double eps) {
    if (eps <= 0) throw invalid_measure("marginal_r_limit: eps must be positive");
    complex small(0, -eps);
    if (axis == 1) return R(z, small);
    if (axis == 2) return R(small, z);
    throw invalid_measure("marginal_r_limit: axis must be 1 or 2");
}

}  // namespace bifree
