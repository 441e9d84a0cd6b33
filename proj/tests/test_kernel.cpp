#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mfg/grid.hpp"
#include "mfg/kernel.hpp"

using namespace mfg;

TEST_CASE("default lattice covers all example modes") {
    FrequencySet fs = FrequencySet::default_lattice();
    CHECK(fs.r() == 12);
    const double pi = M_PI;
    std::vector<Vec2> needed = {
        {pi, 0},  {0, pi},      {pi, pi},     {-pi, pi},       // example 1
        {2 * pi, 0}, {0, 2 * pi},                              // example 2
        {2 * pi, -pi}, {2 * pi, pi}, {pi, 2 * pi}, {pi, -2 * pi}};  // example 3
    for (const Vec2& w : needed) CHECK(fs.find(w) >= 0);
    CHECK(fs.find({0, 0}) < 0);
    for (int a = 0; a < fs.r(); ++a)  // no duplicates up to sign
        for (int b = a + 1; b < fs.r(); ++b) {
            bool same = (std::abs(fs.omegas[a][0] - fs.omegas[b][0]) < 1e-9 &&
                         std::abs(fs.omegas[a][1] - fs.omegas[b][1]) < 1e-9) ||
                        (std::abs(fs.omegas[a][0] + fs.omegas[b][0]) < 1e-9 &&
                         std::abs(fs.omegas[a][1] + fs.omegas[b][1]) < 1e-9);
            CHECK(!same);
        }
}

TEST_CASE("zeta basics") {
    FrequencySet fs = FrequencySet::default_lattice();
    KernelCoeffs c;
    c.mu.assign(fs.r(), 0.0);
    std::vector<double> z = zeta({0.3, -0.7}, c, fs);
    for (double v : z) CHECK(v == 0.0);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (double& m : c.mu) m = uni(rng);
    double sum_mu2 = 0.0;
    for (double m : c.mu) sum_mu2 += m * m;
    for (int trial = 0; trial < 20; ++trial) {
        Vec2 x = {uni(rng) * 2 - 1, uni(rng) * 2 - 1};
        std::vector<double> zx = zeta(x, c, fs);
        double dot = 0.0;
        for (double v : zx) dot += v * v;
        CHECK(dot == doctest::Approx(sum_mu2).epsilon(1e-12));
    }
}

TEST_CASE("feature identity zeta(x).zeta(y) = sum mu^2 cos(w.(x-y))") {
    FrequencySet fs = FrequencySet::default_lattice();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        KernelCoeffs c;
        c.mu.resize(fs.r());
        for (double& m : c.mu) m = std::abs(uni(rng));
        c.k0 = uni(rng);
        Vec2 x = {uni(rng), uni(rng)}, y = {uni(rng), uni(rng)};
        std::vector<double> zx = zeta(x, c, fs), zy = zeta(y, c, fs);
        double dot = c.k0;
        for (std::size_t k = 0; k < zx.size(); ++k) dot += zx[k] * zy[k];
        CHECK(std::abs(dot - kernel_value(x, y, c, fs)) < 1e-12);
    }
}

TEST_CASE("example 1 sparse kernel reproduced") {
    FrequencySet fs = FrequencySet::default_lattice();
    const double pi = M_PI;
    std::vector<Vec2> ws = {{pi, 0}, {0, pi}, {pi, pi}, {-pi, pi}};
    std::vector<double> mus = {0.2094, 0.2094, 0.2613, 0.2613};
    KernelCoeffs c;
    c.mu.assign(fs.r(), 0.0);
    for (int s = 0; s < 4; ++s) c.mu[fs.find(ws[s])] = mus[s];

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Vec2 x = {uni(rng), uni(rng)}, y = {uni(rng), uni(rng)};
        double d1 = x[0] - y[0], d2 = x[1] - y[1];
        double ks = 0.2094 * 0.2094 * (std::cos(pi * d1) + std::cos(pi * d2)) +
                    0.2613 * 0.2613 *
                        (std::cos(pi * d1 + pi * d2) + std::cos(-pi * d1 + pi * d2));
        std::vector<double> zx = zeta(x, c, fs), zy = zeta(y, c, fs);
        double dot = 0.0;
        for (std::size_t k = 0; k < zx.size(); ++k) dot += zx[k] * zy[k];
        CHECK(std::abs(dot - ks) < 1e-12);
    }
}

TEST_CASE("interaction_field") {
    SpaceTimeGrid g = SpaceTimeGrid::paper_default();
    FrequencySet fs = FrequencySet::default_lattice();
    FeatureTable table(g, fs);
    KernelCoeffs c;
    c.mu.assign(fs.r(), 0.5);

    SpatialField zero(g);
    std::vector<double> out = interaction_field(g, zero.v.data(), c, table);
    for (double v : out) CHECK(v == 0.0);

    // unit point mass at a cell node: moment equals zeta there
    SpatialField delta(g);
    int i0 = 13, j0 = 28;
    delta.at(i0, j0) = 1.0 / g.cell_area();
    out = interaction_field(g, delta.v.data(), c, table);
    std::vector<double> z = zeta({g.x(i0), g.y(j0)}, c, fs);
    for (std::size_t k = 0; k < out.size(); ++k)
        CHECK(out[k] == doctest::Approx(z[k]).epsilon(1e-12));

    // uniform density: trig modes integrate to zero over full periods
    SpatialField unif(g, 0.25);
    out = interaction_field(g, unif.v.data(), c, table);
    for (double v : out) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("lambda1 and mu projections") {
    FrequencySet fs = FrequencySet::default_lattice();
    std::vector<double> l = lambda1(fs, {0.0, 0.0});
    for (int k = 0; k < fs.r(); ++k) {
        CHECK(l[2 * k] == doctest::Approx(1.0));
        CHECK(l[2 * k + 1] == doctest::Approx(0.0));
    }

    CHECK(project_mu({1.0, 3.0}) == std::vector<double>{2.0});
    std::vector<double> red = {0.4, -1.2, 7.0};
    CHECK(project_mu(expand_mu(red)) == red);

    // adjoint pairing carries a factor 2: <expand(u), v>_2r = 2 <u, project(v)>_r
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> u(fs.r()), v(2 * fs.r());
    for (double& x : u) x = uni(rng);
    for (double& x : v) x = uni(rng);
    std::vector<double> ue = expand_mu(u), vp = project_mu(v);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) lhs += ue[k] * v[k];
    for (std::size_t k = 0; k < u.size(); ++k) rhs += u[k] * vp[k];
    CHECK(lhs == doctest::Approx(2.0 * rhs).epsilon(1e-12));
}

TEST_CASE("fit_background_mu") {
    SpaceTimeGrid g = SpaceTimeGrid::paper_default();
    FrequencySet fs = FrequencySet::default_lattice();

    // round trip: a kernel already on the lattice
    Vec2 w = {M_PI, M_PI};
    BackgroundFit rt = fit_background_mu(
        [&](const Vec2& d) { return 0.09 * std::cos(w[0] * d[0] + w[1] * d[1]); }, fs, g);
    int k = fs.find(w);
    CHECK(rt.mu0[k] == doctest::Approx(0.3).epsilon(1e-8));
    for (int q = 0; q < fs.r(); ++q)
        if (q != k) CHECK(std::abs(rt.mu0[q]) < 1e-6);
    CHECK(rt.rel_l2_error < 1e-10);

    BackgroundFit zero = fit_background_mu([](const Vec2&) { return 0.0; }, fs, g);
    for (double m : zero.mu0) CHECK(m == 0.0);

    // example Gaussian background fits to < 5% relative L2 error
    BackgroundFit ex = fit_background_mu(
        [](const Vec2& d) {
            return 0.2 * std::exp(-(d[0] * d[0] + d[1] * d[1]) / (2.0 * 0.4 * 0.4));
        },
        fs, g);
    CHECK(ex.rel_l2_error < 0.05);
}
