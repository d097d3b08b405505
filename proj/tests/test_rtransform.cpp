#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bifree/rtransform.hpp"

using namespace bifree;

namespace {

const complex I(0, 1);

// Closed-form Cauchy transform of the standard semicircle law, Nevanlinna
// branch (Im G < 0 in the upper half-plane).
complex g_semicircle(complex z) {
    complex s = std::sqrt(z * z - 4.0);
    if (s.imag() * z.imag() < 0) s = -s;
    return (z - s) / 2.0;
}

// Closed-form R-transform of the symmetric Bernoulli law (1/2)(d_-1 + d_1),
// branch with R(conj z) = conj R(z).
complex r_bernoulli(complex z) {
    complex s = std::sqrt(1.0 + 4.0 * z * z);
    if (s.real() < 0) s = -s;
    return (s - 1.0) / (2.0 * z);
}

}  // namespace

TEST_CASE("r1_from_measure on point masses and Bernoulli") {
    for (double a : {0.0, 1.5, -2.0}) {
        complex z(0.01, -0.05);
        CHECK(std::abs(r1_from_measure(dirac1(a), z) - a) < 1e-12);
    }
    Measure1D bern = make_discrete_1d({{-1, 0.5}, {1, 0.5}});
    for (complex z : {complex(0, -0.1), complex(0.03, -0.06), complex(0.05, 0.1)}) {
        CHECK(std::abs(r1_from_measure(bern, z) - r_bernoulli(z)) < 1e-11);
    }
}

TEST_CASE("r1_from_g recovers R(z) = z from the semicircle oracle") {
    for (int k = 0; k < 10; ++k) {
        double y = 0.02 + 0.01 * k;
        complex z = complex(0.2 * (k % 3) * y, -y);
        complex r = r1_from_g(g_semicircle, z);
        CHECK(std::abs(r - z) < 1e-10);
    }
    // the specific point 0.3*(-i)
    CHECK(std::abs(r1_from_g(g_semicircle, complex(0, -0.3)) - complex(0, -0.3)) <
          1e-10);
}

TEST_CASE("R-transform symmetry and small-z behavior") {
    Measure1D mu = make_discrete_1d({{-0.5, 0.3}, {1.2, 0.7}});
    complex z(0.04, -0.07);
    CHECK(std::abs(r1_from_measure(mu, std::conj(z)) -
                   std::conj(r1_from_measure(mu, z))) < 1e-12);

    // R(z) -> m1 as z -> 0 along the negative imaginary axis
    double m1 = mu.moment(1);
    double prev = 1e9;
    for (int k = 1; k <= 4; ++k) {
        double eps = std::pow(10.0, -k);
        double err = std::abs(r1_from_measure(mu, complex(0, -eps)) - m1);
        CHECK(err < prev);
        prev = err;
    }

    // z R(z) -> 0 in the angle
    prev = 1e9;
    for (int k = 1; k <= 4; ++k) {
        complex z2(0, -std::pow(10.0, -k));
        double v = std::abs(z2 * r1_from_measure(mu, z2));
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("Stolz angle membership") {
    StolzAngle a = StolzAngle::for_support(1.0);
    CHECK(a.beta == doctest::Approx(0.125));
    CHECK(a.contains(complex(0.01, -0.05)));
    CHECK(a.contains(complex(0.01, 0.05)));  // reflection included
    CHECK(!a.contains(complex(0.2, -0.05)));
    CHECK(!a.contains(complex(0, -0.5)));
    CHECK(!a.contains(complex(0.1, 0)));
}

TEST_CASE("free Levy-Khintchine R values") {
    complex z(0.3, -0.4);
    // sigma = delta_0: semicircular, R(z) = z
    CHECK(std::abs(free_lk_r({0.0, dirac1(0)}, z) - z) < 1e-15);
    // sigma = lambda delta_1: free-Poisson-type
    double lam = 0.7;
    FreeLKPair p{0.0, dirac1(1).scaled(lam)};
    CHECK(std::abs(free_lk_r(p, z) - lam * (z + 1.0) / (1.0 - z)) < 1e-14);
    // gamma = 2, sigma = 0: constant law delta_2
    CHECK(std::abs(free_lk_r({2.0, Measure1D{}}, z) - 2.0) < 1e-15);
    // sigma = a delta_0 exact affine form
    FreeLKPair q{0.5, dirac1(0).scaled(3.0)};
    CHECK(std::abs(free_lk_r(q, z) - (0.5 + 3.0 * z)) < 1e-14);
    // pole detection
    CHECK_THROWS_AS(free_lk_r(p, complex(1, 0)), numeric_error);
}

TEST_CASE("free_convolve_power of a point mass") {
    auto res = free_convolve_power(dirac1(0.75), 2.0, {-1, 4, 401, 0.02});
    CHECK(res.moments[0] == doctest::Approx(1.0).epsilon(0.03));
    CHECK(res.moments[1] / res.moments[0] == doctest::Approx(1.5).epsilon(0.01));
}

TEST_CASE("free_convolve_power Bernoulli gives the arcsine law") {
    Measure1D bern = make_discrete_1d({{-1, 0.5}, {1, 0.5}});
    auto res = free_convolve_power(bern, 2.0, {-2.5, 2.5, 501, 1e-4});
    CHECK(res.density.values[250] ==
          doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(2e-3 * 2 * M_PI));
    // independent oracle: G(z) = 1/sqrt(z^2-4)
    complex Z(0.4, 0.6);
    complex s = std::sqrt(Z * Z - 4.0);
    if (s.imag() * Z.imag() < 0) s = -s;
    CHECK(std::abs(res.g(Z) - 1.0 / s) < 1e-10);
}

TEST_CASE("variance adds under free convolution powers") {
    Measure1D bern = make_discrete_1d({{-1, 0.5}, {1, 0.5}});
    for (double k : {2.0, 3.0, 5.0}) {
        // smoothing adds ~2yL/pi to the second moment on a truncated grid
        auto res = free_convolve_power(bern, k, {-12, 12, 1201, 0.01});
        CHECK(res.moments[2] == doctest::Approx(k).epsilon(0.05));
    }
    CHECK_THROWS_AS(free_convolve_power(bern, 0.5, GridSpec1D{-2, 2, 11, 0.1}),
                    invalid_measure);
    CHECK_THROWS_AS(
        free_convolve_power(bern.scaled(0.5), 2.0, GridSpec1D{-2, 2, 11, 0.1}),
        invalid_measure);
}

TEST_CASE("R of the doubled law equals twice R") {
    Measure1D mu = make_discrete_1d({{-1, 0.4}, {0.5, 0.6}});
    auto res = free_convolve_power(mu, 2.0, {-4, 4, 11, 0.1});
    for (int k = 1; k <= 10; ++k) {
        double y = 0.03 + 0.01 * k;
        complex z(0.1 * y, -y);
        complex r2 = r1_from_g([&](complex Z) { return res.g(Z); }, z,
                               2.0 * mu.moment(1));
        CHECK(std::abs(r2 - 2.0 * r1_from_measure(mu, z)) < 1e-9);
    }
}

TEST_CASE("g_from_r round trip") {
    // closed-form R keeps the principal branch through the continuation;
    // pointwise agreement with r1_from_measure is checked separately above
    Measure1D mu = make_discrete_1d({{-1, 0.5}, {1, 0.5}});
    // probe points chosen so G(Z) stays clear of the branch cut of the
    // closed-form R at +-i/2
    auto R = [](complex z) { return r_bernoulli(z); };
    for (complex Z : {complex(1.4, 0.8), complex(-1.7, 0.05), complex(2.2, -0.3)}) {
        complex g = g_from_r(R, Z, mu.support_radius());
        CHECK(std::abs(g - g1(mu, Z)) < 1e-10);
    }
    CHECK_THROWS_AS(g_from_r(R, complex(1, 0)), domain_error);
}

TEST_CASE("g_free_sum matches the power for identical inputs") {
    Measure1D bern = make_discrete_1d({{-1, 0.5}, {1, 0.5}});
    for (complex Z : {complex(0.3, 0.4), complex(-1.9, 0.05), complex(0, 2.0)}) {
        CHECK(std::abs(g_free_sum(bern, bern, Z) - g_free_power(bern, 2.0, Z)) <
              1e-10);
    }
}
