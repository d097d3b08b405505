// Acceptance gate: one printed pass/fail line per criterion, with the measured
// quantities and the pinned tolerances.  Every criterion is also a doctest
// assertion so the binary exits nonzero when any line is red.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "bifree/io.hpp"

using namespace bifree;

namespace {

const complex I(0, 1);

void report(int k, const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s  (%s)\n", ok ? "PASS" : "FAIL", k, name,
                detail.c_str());
    std::fflush(stdout);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

complex g_semicircle(complex z) {
    complex s = std::sqrt(z * z - 4.0);
    if (s.imag() * z.imag() < 0) s = -s;
    return (z - s) / 2.0;
}

LKQuintupleGeneral random_quintuple(std::mt19937& rng) {
    std::uniform_real_distribution<double> u01(0.1, 1.0);
    std::uniform_real_distribution<double> coord(0.3, 1.5);
    std::uniform_int_distribution<int> nof(0, 2);
    LKQuintupleGeneral q;
    q.gamma1 = u01(rng) - 0.5;
    q.gamma2 = u01(rng) - 0.5;
    double a = u01(rng), b = u01(rng);
    double c = (u01(rng) - 0.55) * 2.0 * std::sqrt(a * b) * 0.9;
    q.rho1.atoms.push_back({0, 0, a});
    q.rho2.atoms.push_back({0, 0, b});
    q.rho.atoms.push_back({0, 0, c});
    if (nof(rng)) q.rho1.atoms.push_back({coord(rng), 0, u01(rng)});
    if (nof(rng)) q.rho2.atoms.push_back({0, coord(rng), u01(rng)});
    int extra = nof(rng);
    for (int i = 0; i < extra; ++i) {
        double s = coord(rng), t = -coord(rng), w = u01(rng);
        q.rho1.atoms.push_back({s, t, s * s / (1 + s * s) * w});
        q.rho2.atoms.push_back({s, t, t * t / (1 + t * t) * w});
        q.rho.atoms.push_back(
            {s, t, s * t / (std::sqrt(1 + s * s) * std::sqrt(1 + t * t)) * w});
    }
    return q;
}

std::vector<std::pair<complex, complex>> ten_probes() {
    std::vector<std::pair<complex, complex>> pts;
    for (int k = 0; k < 10; ++k)
        pts.push_back({complex(0.4 * k - 1.8, 0.8 + 0.1 * k),
                       complex(1.5 - 0.35 * k, -0.7 - 0.05 * k)});
    return pts;
}

}  // namespace

TEST_CASE("criterion 1: Gaussian density reproduction") {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (double c : {0.0, 0.5}) {
        auto law = law_from_gaussian({0, 0, 1, 1, c});
        GridDensity2D grid = invert2d(law.g, -2.5, 2.5, -2.5, 2.5, 101, 101, 0.05);
        double sup = 0;
        for (std::size_t i = 0; i < grid.n_x; ++i)
            for (std::size_t j = 0; j < grid.n_u; ++j)
                sup = std::max(sup, std::abs(grid.value(i, j) -
                                             gaussian_density({0, 0, 1, 1, c},
                                                              grid.x(i), grid.u(j))));
        double mass = grid.riemann_mass();
        bool here = sup <= 2e-2 && std::abs(mass - 1.0) <= 2e-2;
        ok = ok && here;
        detail += "c=" + num(c) + ": sup=" + num(sup) + " mass=" + num(mass) + "; ";
    }
    // c = 0 closed form equals the product of semicircle densities pointwise
    auto semi = [](double x) {
        return std::abs(x) >= 2 ? 0.0 : std::sqrt(4.0 - x * x) / (2.0 * M_PI);
    };
    double prodsup = 0;
    for (int i = 0; i <= 40; ++i)
        for (int j = 0; j <= 40; ++j) {
            double s = -2.0 + 0.1 * i, t = -2.0 + 0.1 * j;
            prodsup = std::max(prodsup, std::abs(gaussian_density({0, 0, 1, 1, 0}, s, t) -
                                                 semi(s) * semi(t)));
        }
    ok = ok && prodsup <= 1e-12;
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    ok = ok && secs <= 60.0;
    detail += "c=0 product gap=" + num(prodsup) + "; " + num(secs) + "s";
    detail += "; tol sup<=2e-2 mass 1+-2e-2";
    report(1, "Gaussian density reproduction", ok, detail);
    CHECK(ok);
}

TEST_CASE("criterion 2: CLT convergence with rate") {
    LimitReport rep = check_limit_theorem(clt_array(0.5), default_probe_grid(),
                                          {100, 1000, 10000});
    double maxerr = 0, minorder = 1e9;
    for (const ProbeTrack& t : rep.probes) {
        REQUIRE(!t.failed);
        complex target = t.z * t.z + t.w * t.w + 0.5 * t.z * t.w;
        maxerr = std::max(maxerr, std::abs(t.scaled_r.back() - target));
        minorder = std::min(minorder, t.r_ext.order);
    }
    bool ok = maxerr <= 5e-3 && minorder >= 0.9;
    report(2, "CLT limit of the scaled partial R-transform", ok,
           "max err=" + num(maxerr) + " (tol 5e-3), min order=" + num(minorder) +
               " (>=0.9)");
    CHECK(ok);
}

TEST_CASE("criterion 3: Poisson accompaniment") {
    LimitReport rep = check_limit_theorem(poisson_array(1.0, dirac2(1, 1)),
                                          default_probe_grid(), {100, 1000, 10000});
    double maxerr = 0;
    for (const ProbeTrack& t : rep.probes) {
        REQUIRE(!t.failed);
        complex target = -1.0 + 1.0 / ((1.0 - t.z) * (1.0 - t.w));
        maxerr = std::max(maxerr, std::abs(t.scaled_r.back() - target));
    }
    bool ok = maxerr <= 5e-3;
    report(3, "Poisson accompaniment of the triangular array", ok,
           "max err=" + num(maxerr) + " (tol 5e-3)");
    CHECK(ok);
}

TEST_CASE("criterion 4: co-convergence of the three indicators") {
    bool ok = true;
    double worst = 0;
    for (const ArraySpec& array : {clt_array(0.5), poisson_array(1.0, dirac2(1, 1))}) {
        LimitReport rep =
            check_limit_theorem(array, default_probe_grid(), {100, 1000, 10000});
        ok = ok && rep.equivalence_ok;
        // cross part of the scaled R at the largest n vs the D-functional
        Measure2D mu = array.measure(10000);
        double k = array.scale(10000);
        PartialR r(mu);
        for (const ProbeTrack& t : rep.probes) {
            complex cross = k * ((*(&r))(t.z, t.w) - t.z * r.r1(t.z) -
                                 t.w * r.r2(t.w));
            worst = std::max(worst, std::abs(cross - t.d_values.back()));
        }
    }
    ok = ok && worst <= 1e-2;
    report(4, "scaled R, D-functional and cross-measure moments co-converge", ok,
           "cross residual=" + num(worst) + " (tol 1e-2)");
    CHECK(ok);
}

TEST_CASE("criterion 5: joint/marginal functional equation") {
    double worst = 0;
    {
        auto law = law_from_gaussian({0, 0, 1, 1, 0.5});
        SignedMeasure2D rho = make_signed_2d({{0, 0, 0.5}});
        auto G1 = [](complex z) { return g_semicircle(z); };
        FunctionalEqReport rep = verify_functional_eq(
            [&](complex z, complex w) { return law.g(z, w); }, G1, G1, rho,
            ten_probes());
        worst = std::max(worst, rep.max_residual);
    }
    {
        LKQuintupleGeneral q = compound_poisson_quintuple(1.0, dirac2(1, 1));
        auto law = law_from_quintuple(q);
        auto G1 = [&](complex z) {
            return g_from_r([&](complex g) { return lk_marginal_r(q, 1, g); }, z,
                            law.scale);
        };
        std::vector<std::pair<complex, complex>> pts;
        for (int k = 0; k < 10; ++k)
            pts.push_back({complex(0.5 * k - 1.5, 1.0 + 0.1 * k),
                           complex(2.5 - 0.4 * k, -0.8 - 0.07 * k)});
        FunctionalEqReport rep = verify_functional_eq(
            [&](complex z, complex w) { return law.g(z, w); }, G1, G1,
            SignedMeasure2D{q.rho.atoms}, pts);
        worst = std::max(worst, rep.max_residual);
    }
    bool ok = worst <= 1e-6;
    report(5, "functional equation residual on Gaussian and Poisson laws", ok,
           "max residual=" + num(worst) + " (tol 1e-6)");
    CHECK(ok);
}

TEST_CASE("criterion 6: Levy-Khintchine calculus") {
    bool ok = true;
    std::string detail;

    // (a) validation verdicts
    bool a = lk_validate(gaussian_quintuple({0, 0, 1, 1, 0.9})).valid() &&
             lk_validate(compound_poisson_quintuple(
                             2.5, make_discrete_2d({{1, 2, 0.3}, {-0.5, 0.7, 0.7}})))
                 .valid() &&
             lk_validate(product_quintuple({0.3, make_discrete_1d({{1, 0.5}})},
                                           {-0.1, make_discrete_1d({{0, 0.2}})}))
                 .valid();
    LKQuintupleGeneral bad;
    bad.rho1.atoms.push_back({0, 0, 1.0});
    bad.rho2.atoms.push_back({0, 0, 1.0});
    bad.rho.atoms.push_back({0, 0, 1.2});
    a = a && !lk_validate(bad).valid();
    detail += std::string("validate=") + (a ? "ok" : "bad");

    // (b) decomposition re-sums on 20 random quintuples
    std::mt19937 rng(7);
    double worst_b = 0;
    for (int trial = 0; trial < 20; ++trial) {
        LKQuintupleGeneral q = random_quintuple(rng);
        LKDecomposition d = lk_decompose(q);
        for (int k = 0; k < 12; ++k) {
            complex z(0.1 * k - 0.5, 0.2 + 0.04 * k);
            complex w(0.5 - 0.08 * k, -0.3 - 0.05 * k);
            worst_b = std::max(worst_b, std::abs(d.r(z, w) - lk_r_general(q, z, w)));
        }
    }
    detail += ", decompose resum=" + num(worst_b) + " (tol 1e-10)";

    // (c) compact/general conversion round trip
    LKTripleCompact c3;
    c3.kappa10 = 0.4;
    c3.kappa01 = -0.6;
    c3.rho1.atoms = {{0, 0, 0.5}, {1, 1, 0.25}};
    c3.rho2.atoms = {{0, 0, 0.3}, {1, 1, 0.25}};
    c3.rho.atoms = {{1, 1, 0.25}};
    LKTripleCompact back = lk_convert(lk_convert(c3));
    double worst_c = std::abs(back.kappa10 - c3.kappa10) +
                     std::abs(back.kappa01 - c3.kappa01) +
                     std::abs(back.rho1.atoms[1].w - 0.25) +
                     std::abs(back.rho.atoms[0].w - 0.25);
    detail += ", convert roundtrip=" + num(worst_c) + " (tol 1e-12)";

    // (d) additivity and t-scaling of the integral form
    LKQuintupleGeneral q1 = random_quintuple(rng), q2 = random_quintuple(rng);
    LKQuintupleGeneral sum = lambda_combine(q1, q2, 1.0, 1.0);
    LKQuintupleGeneral half = lk_scale(q1, 0.5);
    double worst_d = 0;
    for (int k = 0; k < 12; ++k) {
        complex z(0.1 * k - 0.5, 0.2 + 0.04 * k);
        complex w(0.5 - 0.08 * k, -0.3 - 0.05 * k);
        worst_d = std::max(worst_d, std::abs(lk_r_general(sum, z, w) -
                                             lk_r_general(q1, z, w) -
                                             lk_r_general(q2, z, w)));
        worst_d = std::max(worst_d, std::abs(lk_r_general(half, z, w) -
                                             0.5 * lk_r_general(q1, z, w)));
    }
    detail += ", lambda arithmetic=" + num(worst_d) + " (tol 1e-12)";

    ok = a && worst_b <= 1e-10 && worst_c <= 1e-12 && worst_d <= 1e-12;
    report(6, "Levy-Khintchine validate/decompose/convert/combine", ok, detail);
    CHECK(ok);
}

TEST_CASE("criterion 7: marginal recovery from the joint transforms") {
    std::vector<Measure2D> laws = {
        make_discrete_2d({{1, 1, 0.5}, {-1, -1, 0.5}}),
        make_discrete_2d({{1, -1, 0.25}, {-1, 1, 0.75}}),
        make_discrete_2d({{0.5, 0.2, 0.3}, {-0.4, 1.0, 0.4}, {0.1, -0.8, 0.3}}),
    };
    double worst_g = 0, worst_r = 0;
    for (const Measure2D& mu : laws) {
        complex z(0.3, 1.0);
        worst_g = std::max(worst_g,
                           std::abs(marginal_g_limit(g_evaluator(mu), z, 1, 1e4) -
                                    g1(marginal(mu, 1), z)));
        PartialREvaluator ev = partial_r_evaluator(mu);
        complex zr(0.03, -0.06);
        worst_r = std::max(
            worst_r, std::abs(marginal_r_limit(ev.f, zr, 1, 1e-4) -
                              zr * r1_from_measure(marginal(mu, 1), zr)));
    }
    bool ok = worst_g <= 1e-3 && worst_r <= 1e-3;
    report(7, "marginal Cauchy and R transforms recovered as axis limits", ok,
           "G err=" + num(worst_g) + ", R err=" + num(worst_r) + " (tol 1e-3)");
    CHECK(ok);
}

TEST_CASE("criterion 8: infinitesimal derivative probe") {
    LKQuintupleGeneral q = gaussian_quintuple({0, 0, 1, 1, 0.5});
    DerivativeProbeReport rep =
        derivative_probe(q, {1e-2, 1e-3, 1e-4}, complex(0, -0.1), complex(0, -0.1));
    bool clean = true;
    for (const DerivativeProbeRow& r : rep.rows) clean = clean && !r.flagged;
    bool ok = clean && rep.order >= 0.9 && rep.rows[1].st_err <= 5e-2;
    report(8, "difference quotient of the reconstruction semigroup", ok,
           "order=" + num(rep.order) + " (>=0.9), st mass err at eps=1e-3: " +
               num(rep.rows[1].st_err) + " (tol 5e-2)");
    CHECK(ok);
}

TEST_CASE("criterion 9: one-dimensional oracles") {
    Measure1D bern = make_discrete_1d({{-1, 0.5}, {1, 0.5}});
    auto res = free_convolve_power(bern, 2.0, {-2.5, 2.5, 501, 1e-4});
    double at0 = res.density.values[250];
    double arc_err = std::abs(at0 - 1.0 / (2.0 * M_PI));

    double r_err = 0;
    for (int k = 0; k < 10; ++k) {
        double y = 0.02 + 0.01 * k;
        complex z(0.2 * (k % 3) * y, -y);
        r_err = std::max(r_err, std::abs(r1_from_g(g_semicircle, z) - z));
    }
    bool ok = arc_err <= 2e-3 && r_err <= 1e-10;
    report(9, "arcsine density and semicircle R-transform oracles", ok,
           "arcsine err=" + num(arc_err) + " (tol 2e-3), R err=" + num(r_err) +
               " (tol 1e-10)");
    CHECK(ok);
}
