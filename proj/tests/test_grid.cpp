#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mfg/grid.hpp"

using namespace mfg;

TEST_CASE("paper grid dimensions") {
    SpaceTimeGrid g = SpaceTimeGrid::paper_default();
    CHECK(g.nx == 41);
    CHECK(g.ny == 41);
    CHECK(g.nt == 26);
    CHECK(g.i_lo == 10);
    CHECK(g.i_hi == 30);
    CHECK(g.x(g.i_lo) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(g.x(g.i_hi) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("grid construction rejects non-aligned boxes") {
    CHECK_THROWS(SpaceTimeGrid::make(-1, 1, 1, 0.05, 0.04, -0.512, 0.5));
    CHECK_THROWS(SpaceTimeGrid::make(-1, 1, 1, 0.03, 0.04, -0.5, 0.5));
}

TEST_CASE("gradient on closed forms") {
    SpaceTimeGrid g = SpaceTimeGrid::paper_default();
    ScalarField c(g, 3.5);
    VectorField gc = gradient(c);
    for (double v : gc.cx.v) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

    ScalarField fx(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) fx.at(0, i, j) = g.x(i);
    VectorField gx = gradient(fx);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            CHECK(gx.cx.at(0, i, j) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(gx.cy.at(0, i, j) == doctest::Approx(0.0).epsilon(1e-12));
        }
    }

    ScalarField q(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            q.at(0, i, j) = g.x(i) * g.x(i) + g.y(j) * g.y(j);
    VectorField gq = gradient(q);
    int i = 26, j = 22;  // (0.3, 0.1)
    CHECK(g.x(i) == doctest::Approx(0.3));
    CHECK(std::abs(gq.cx.at(0, i, j) - 0.6) < 2.5e-3);
    CHECK(std::abs(gq.cy.at(0, i, j) - 0.2) < 2.5e-3);
}

TEST_CASE("gradient second-order convergence") {
    double errs[2];
    double hs[2] = {0.05, 0.025};
    for (int c = 0; c < 2; ++c) {
        SpaceTimeGrid g = SpaceTimeGrid::make(-1, 1, 1, hs[c], 0.25, -0.5, 0.5);
        ScalarField f(g);
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j)
                f.at(0, i, j) = std::sin(g.x(i)) * std::cos(g.y(j));
        VectorField gf = gradient(f);
        double err = 0.0;
        for (int i = 1; i < g.nx - 1; ++i)
            for (int j = 1; j < g.ny - 1; ++j)
                err = std::max(err, std::abs(gf.cx.at(0, i, j) -
                                             std::cos(g.x(i)) * std::cos(g.y(j))));
        errs[c] = err;
    }
    CHECK(errs[0] / errs[1] > 3.5);  // ~4 for O(h^2)
}

TEST_CASE("gradient/divergence adjoint identity is exact") {
    SpaceTimeGrid g = SpaceTimeGrid::make(-1, 1, 0.08, 0.05, 0.04, -0.5, 0.5);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        ScalarField f(g);
        VectorField v(g);
        for (double& x : f.v) x = uni(rng);
        for (double& x : v.cx.v) x = uni(rng);
        for (double& x : v.cy.v) x = uni(rng);
        VectorField gf = gradient(f);
        ScalarField dv = divergence(v);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t p = 0; p < f.v.size(); ++p) {
            lhs += gf.cx.v[p] * v.cx.v[p] + gf.cy.v[p] * v.cy.v[p];
            rhs -= f.v[p] * dv.v[p];
        }
        CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("laplacian basics") {
    SpaceTimeGrid g = SpaceTimeGrid::paper_default();
    ScalarField c(g, 2.0);
    ScalarField lc = laplacian(c);
    for (double v : lc.v) CHECK(std::abs(v) < 1e-11);  // constants in the kernel

    ScalarField q(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            q.at(0, i, j) = g.x(i) * g.x(i) + g.y(j) * g.y(j);
    ScalarField lq = laplacian(q);
    for (int i = 1; i < g.nx - 1; ++i)
        for (int j = 1; j < g.ny - 1; ++j)
            CHECK(lq.at(0, i, j) == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("laplacian is symmetric") {
    SpaceTimeGrid g = SpaceTimeGrid::make(-1, 1, 0.04, 0.1, 0.04, -0.5, 0.5);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    ScalarField f(g), w(g);
    for (double& x : f.v) x = uni(rng);
    for (double& x : w.v) x = uni(rng);
    ScalarField lf = laplacian(f), lw = laplacian(w);
    double a = 0.0, b = 0.0;
    for (std::size_t p = 0; p < f.v.size(); ++p) {
        a += lf.v[p] * w.v[p];
        b += f.v[p] * lw.v[p];
    }
    CHECK(std::abs(a - b) < 1e-10 * std::max(1.0, std::abs(a)));
}

TEST_CASE("time derivative") {
    SpaceTimeGrid g = SpaceTimeGrid::paper_default();
    ScalarField c(g, 1.0);
    ScalarField dc = time_derivative(c);
    for (double v : dc.v) CHECK(std::abs(v) < 1e-12);

    ScalarField lin(g), quad(g);
    for (int k = 0; k < g.nt; ++k)
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j) {
                lin.at(k, i, j) = g.t(k);
                quad.at(k, i, j) = g.t(k) * g.t(k);
            }
    ScalarField dl = time_derivative(lin);
    for (double v : dl.v) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    ScalarField dq = time_derivative(quad);
    for (int k = 0; k < g.nt - 1; ++k)  // forward difference of t^2
        CHECK(dq.at(k, 3, 4) == doctest::Approx(2 * g.t(k) + g.h_time).epsilon(1e-10));
}

TEST_CASE("integrate") {
    SpaceTimeGrid g = SpaceTimeGrid::paper_default();
    ScalarField one(g, 1.0);
    CHECK(integrate(one) == doctest::Approx(4.0).epsilon(1e-12));

    SpatialField ones(g, 1.0);
    CHECK(integrate_slice(g, ones.v.data(), Region::Inner) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(integrate_slice(g, ones.v.data()) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(integrate_slice(g, ones.v.data(), Region::Outer) ==
          doctest::Approx(3.0).epsilon(1e-12));

    SpatialField gauss(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            gauss.at(i, j) = std::exp(-(g.x(i) * g.x(i) + g.y(j) * g.y(j)) / 0.1);
    // int exp(-r^2/0.1) over the plane = pi * 0.1; tails beyond [-1,1]^2 tiny
    CHECK(std::abs(integrate_slice(g, gauss.v.data()) - M_PI * 0.1) < 1e-3);
}

TEST_CASE("grid hash tracks geometry") {
    SpaceTimeGrid a = SpaceTimeGrid::paper_default();
    SpaceTimeGrid b = SpaceTimeGrid::make(-1, 1, 1, 0.1, 0.04, -0.5, 0.5);
    CHECK(a.hash() != b.hash());
    CHECK(a.hash() == SpaceTimeGrid::paper_default().hash());
}
