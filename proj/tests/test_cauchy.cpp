#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "bifree/cauchy.hpp"

using namespace bifree;

namespace {
const complex I(0, 1);
}

TEST_CASE("g2 point values") {
    CHECK(std::abs(g2(dirac2(1, 2), I, 2.0 * I) - complex(0, 0.25)) < 1e-15);

    complex z(0.7, 1.3), w(-0.4, -0.9);
    CHECK(std::abs(g2(dirac2(0, 0), z, w) - 1.0 / (z * w)) < 1e-15);

    // 0.5/((i-1)i) + 0.5/((i+1)i) = 1/(i^2-1) = -1/2
    Measure2D two = make_discrete_2d({{1, 0, 0.5}, {-1, 0, 0.5}});
    CHECK(std::abs(g2(two, I, I) - complex(-0.5, 0)) < 1e-15);

    CHECK_THROWS_AS(g2(two, complex(1, 0), I), domain_error);
    CHECK_THROWS_AS(g2(two, I, complex(1, 0)), domain_error);
}

TEST_CASE("g1 point values") {
    CHECK(std::abs(g1(dirac1(0), I) - complex(0, -1)) < 1e-15);
    complex z(0.2, 2.0);
    CHECK(std::abs(g1(dirac1(1.5), z) - 1.0 / (z - 1.5)) < 1e-15);
    Measure1D bern = make_discrete_1d({{-1, 0.5}, {1, 0.5}});
    CHECK(std::abs(g1(bern, 2.0 * I) - complex(0, -0.4)) < 1e-15);
    CHECK_THROWS_AS(g1(bern, complex(0.5, 0)), domain_error);
}

TEST_CASE("g2 bound and conjugation symmetry") {
    Measure2D mu = make_discrete_2d({{0.4, -1.1, 0.3}, {-0.8, 0.2, 0.7}});
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> re(-2, 2), im(0.2, 2.0);
    for (int i = 0; i < 100; ++i) {
        complex z(re(rng), im(rng)), w(re(rng), -im(rng));
        complex v = g2(mu, z, w);
        CHECK(std::abs(v) <=
              mu.mass() / (std::abs(z.imag()) * std::abs(w.imag())) + 1e-12);
        CHECK(std::abs(g2(mu, std::conj(z), std::conj(w)) - std::conj(v)) < 1e-12);
    }
}

TEST_CASE("holomorphy proxy: discrete Cauchy-Riemann residual") {
    Measure2D mu = make_discrete_2d({{1, 1, 0.5}, {-1, -1, 0.5}});
    const double h = 1e-5;
    complex z(0.3, 0.5), w(-0.2, 0.5);
    // df/dx + i df/dy should vanish for a holomorphic function of z
    complex dx = (g2(mu, z + h, w) - g2(mu, z - h, w)) / (2 * h);
    complex dy = (g2(mu, z + h * I, w) - g2(mu, z - h * I, w)) / (2 * h);
    CHECK(std::abs(dx + I * dy) < 1e-6);
    complex dxw = (g2(mu, z, w + h) - g2(mu, z, w - h)) / (2 * h);
    complex dyw = (g2(mu, z, w + h * I) - g2(mu, z, w - h * I)) / (2 * h);
    CHECK(std::abs(dxw + I * dyw) < 1e-6);
}

TEST_CASE("invert2d recovers the Poisson kernel at its center") {
    GEvaluator2D g = g_evaluator(dirac2(1, 2));
    GridDensity2D grid = invert2d(g, 0, 2, 1, 3, 3, 3, 0.1);
    // center grid node sits exactly on the atom
    CHECK(grid.value(1, 1) == doctest::Approx(100.0 / (M_PI * M_PI)).epsilon(1e-12));
    CHECK_THROWS_AS(invert2d(g, 0, 1, 0, 1, 3, 3, 0.0), invalid_measure);
    CHECK_THROWS_AS(invert2d(g, 0, 1, 0, 1, 1, 3, 0.1), invalid_measure);
}

TEST_CASE("invert2d conserves mass on a wide grid") {
    Measure2D mu = make_discrete_2d({{0.5, -0.5, 0.5}, {-0.5, 0.5, 0.5}});
    // spacing 0.05 resolves the smoothing height 0.1; tail loss ~4y/(pi L)
    GridDensity2D grid = invert2d(g_evaluator(mu), -8, 8, -8, 8, 321, 321, 0.1);
    CHECK(grid.riemann_mass() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("invert2d moments converge as y decreases") {
    Measure2D mu = make_discrete_2d({{1, 1, 0.5}, {-1, -1, 0.5}});
    double prev_err = 1e9;
    for (double y : {0.8, 0.4, 0.2}) {
        GridDensity2D grid =
            invert2d(g_evaluator(mu), -30, 30, -30, 30, 601, 601, y);
        double err = std::abs(grid.grid_moment(1, 1) - moment(mu, 1, 1)) +
                     std::abs(grid.grid_moment(1, 0) - moment(mu, 1, 0)) +
                     std::abs(grid.grid_moment(0, 0) - 1.0);
        CHECK(err < prev_err);
        prev_err = err;
    }
}

TEST_CASE("marginal_g_limit") {
    complex z = I;
    complex v = marginal_g_limit(g_evaluator(dirac2(1, 2)), z, 1, 1e4);
    CHECK(std::abs(v - 1.0 / (z - 1.0)) < 1e-3);

    complex u = marginal_g_limit(g_evaluator(dirac2(0, 0)), z, 2, 1e6);
    CHECK(std::abs(u - 1.0 / z) < 1e-5);

    // z w G(z,w) -> 1 at z = w = i M for a tight probability law
    Measure2D mu = make_discrete_2d({{1, -1, 0.25}, {-1, 1, 0.75}});
    complex lam(0, 1e4);
    CHECK(std::abs(lam * lam * g2(mu, lam, lam) - 1.0) < 1e-3);

    CHECK_THROWS_AS(marginal_g_limit(g_evaluator(mu), z, 1, -1.0), invalid_measure);
    CHECK_THROWS_AS(marginal_g_limit(g_evaluator(mu), z, 3, 10.0), invalid_measure);
}

TEST_CASE("marginal_g_limit error decays with order >= 0.9 in M") {
    Measure2D mu = make_discrete_2d({{1, 2, 0.5}, {-1, 0.5, 0.5}});
    Measure1D m1 = marginal(mu, 1);
    complex z(0.3, 1.0);
    complex exact = g1(m1, z);
    double prev = 0;
    std::vector<double> errs;
    for (double M : {1e2, 2e2, 4e2, 8e2}) {
        errs.push_back(
            std::abs(marginal_g_limit(g_evaluator(mu), z, 1, M) - exact));
    }
    for (std::size_t i = 1; i < errs.size(); ++i) {
        double order = std::log2(errs[i - 1] / errs[i]);
        CHECK(order >= 0.9);
        (void)prev;
    }
}
