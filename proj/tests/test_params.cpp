#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mfg/adjoint.hpp"
#include "mfg/forward.hpp"
#include "mfg/params.hpp"

using namespace mfg;

namespace {

SpaceTimeGrid small_grid() { return SpaceTimeGrid::make(-1, 1, 0.12, 0.1, 0.04, -0.5, 0.5); }

ModelParams base_params(const SpaceTimeGrid& g) {
    ModelParams p;
    p.freqs = FrequencySet::default_lattice();
    p.mu.mu.assign(p.freqs.r(), 0.1);
    p.mu0.assign(p.freqs.r(), 0.1);
    p.kappa = SpatialField(g, 2.0);
    p.kappa0 = SpatialField(g, 2.0);
    return p;
}

}  // namespace

TEST_CASE("shrink") {
    CHECK(shrink(3.0, 1.0) == 2.0);
    CHECK(shrink(-3.0, 1.0) == -2.0);
    CHECK(shrink(-0.5, 1.0) == 0.0);
    CHECK(shrink(0.5, 1.0) == 0.0);
    CHECK(shrink(7.25, 0.0) == 7.25);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-5.0, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        double a = uni(rng), b = uni(rng), al = std::abs(uni(rng));
        CHECK(std::abs(shrink(a, al) - shrink(b, al)) <= std::abs(a - b) + 1e-15);  // 1-Lipschitz
        CHECK(shrink(-a, al) == -shrink(a, al));                                    // odd
    }
    std::vector<double> v = shrink(std::vector<double>{3.0, -0.5}, 1.0);
    CHECK(v == std::vector<double>{2.0, 0.0});
}

TEST_CASE("stabilizer mask and smoothing kernel") {
    SpaceTimeGrid g = SpaceTimeGrid::paper_default();
    Stabilizers st = Stabilizers::make(g);

    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            double w = st.mask_weight.at(i, j);
            CHECK(w >= 0.0);
            CHECK(w <= 1.0);
            if (g.on_interface(i, j)) CHECK(w == 0.0);
        }
    // within band_lo=2 cells of the interface the mask vanishes
    CHECK(st.mask_weight.at(g.i_lo + 1, 25) == 0.0);
    CHECK(st.mask_weight.at(g.i_lo - 2, 25) == 0.0);
    // beyond band_hi=6 cells it is exactly one
    CHECK(st.mask_weight.at(20, 20) == 1.0);
    CHECK(st.mask_weight.at(2, 2) == 1.0);

    double sum = 0.0;
    for (double w : st.psi) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(static_cast<int>(st.psi.size()) == (2 * st.psi_half + 1) * (2 * st.psi_half + 1));
    // radially symmetric and peaked at the center
    int side = 2 * st.psi_half + 1;
    double center = st.psi[static_cast<std::size_t>(st.psi_half) * side + st.psi_half];
    for (double w : st.psi) CHECK(w <= center);
}

TEST_CASE("convolve_psi preserves an interior spike's mass") {
    SpaceTimeGrid g = SpaceTimeGrid::paper_default();
    Stabilizers st = Stabilizers::make(g);
    SpatialField f(g);
    f.at(20, 20) = 1.0;  // farther than psi_half from the domain boundary
    SpatialField out = convolve_psi(f, st);
    double total = 0.0;
    for (double v : out.v) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    // the spike spreads exactly as psi
    int side = 2 * st.psi_half + 1;
    for (int a = -st.psi_half; a <= st.psi_half; ++a)
        for (int b = -st.psi_half; b <= st.psi_half; ++b)
            CHECK(out.at(20 + a, 20 + b) ==
                  doctest::Approx(
                      st.psi[static_cast<std::size_t>(a + st.psi_half) * side +
                             (b + st.psi_half)])
                      .epsilon(1e-12));

    // constants are reproduced exactly, including at the border
    SpatialField c(g, 3.5);
    SpatialField oc = convolve_psi(c, st);
    for (double v : oc.v) CHECK(v == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("lambda_kappa zero cases and finite-difference oracle") {
    SpaceTimeGrid g = small_grid();
    ModelParams p = base_params(g);
    PrimalDualState s;
    s.rho = ScalarField(g, 1.0);
    s.m = VectorField(g, 0.3);
    s.phi = ScalarField(g);
    AdjointState adj = AdjointState::zero(g);

    SpatialField z = lambda_kappa(p, s, adj);  // zero multipliers
    for (double v : z.v) CHECK(v == 0.0);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_real_distribution<double> pos(0.5, 2.0);
    for (std::size_t q = 0; q < s.rho.v.size(); ++q) {
        s.rho.v[q] = pos(rng);
        s.m.cx.v[q] = uni(rng);
        s.m.cy.v[q] = uni(rng);
        adj.lambda_rho.v[q] = uni(rng);
        adj.lambda_m.cx.v[q] = uni(rng);
        adj.lambda_m.cy.v[q] = uni(rng);
    }
    for (std::size_t q = 0; q < p.kappa.v.size(); ++q) p.kappa.v[q] = 2.0 + pos(rng);

    s.m.cx.v[g.idx(1, 4, 4)] = 0.0;  // m = 0 at one node: no contribution there
    s.m.cy.v[g.idx(1, 4, 4)] = 0.0;

    SpatialField lk = lambda_kappa(p, s, adj);

    // lambda_kappa is d/dkappa of the per-column scalar
    //   G(kappa) = sum_{t>=1} h_t [ -(1/(2 kappa)) (|m|^2/rho^2) lambda_rho
    //                               + (1/kappa) (m/rho).lambda_m ]
    auto G = [&](int i, int j, double kap) {
        double acc = 0.0;
        for (int t = 1; t < g.nt; ++t) {
            double rho = s.rho.at(t, i, j);
            double m1 = s.m.cx.at(t, i, j), m2 = s.m.cy.at(t, i, j);
            acc += g.h_time *
                   (-0.5 / kap * (m1 * m1 + m2 * m2) / (rho * rho) * adj.lambda_rho.at(t, i, j) +
                    1.0 / kap *
                        (m1 * adj.lambda_m.cx.at(t, i, j) + m2 * adj.lambda_m.cy.at(t, i, j)) /
                        rho);
        }
        return acc;
    };
    for (int trial = 0; trial < 20; ++trial) {
        int i = static_cast<int>((uni(rng) * 0.5 + 0.5) * (g.nx - 1));
        int j = static_cast<int>((uni(rng) * 0.5 + 0.5) * (g.ny - 1));
        double kap = p.kappa.at(i, j);
        const double dk = 1e-6;
        double fd = (G(i, j, kap + dk) - G(i, j, kap - dk)) / (2.0 * dk);
        double denom = std::max(1e-8, std::abs(fd));
        CHECK(std::abs(lk.at(i, j) - fd) / denom < 1e-5);
    }
}

TEST_CASE("lambda_mu nested-loop oracle") {
    SpaceTimeGrid g = small_grid();
    FrequencySet fs = FrequencySet::default_lattice();
    FeatureTable table(g, fs);
    AdjointState adj = AdjointState::zero(g);

    std::vector<std::vector<double>> a(g.nt, std::vector<double>(2 * fs.r(), 0.0));
    std::vector<double> zero = lambda_mu(adj, a, fs, table);
    for (double v : zero) CHECK(v == 0.0);

    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (double& v : adj.lambda_rho.v) v = uni(rng);
    for (int t = 0; t < g.nt; ++t)
        for (double& v : a[t]) v = uni(rng);

    std::vector<double> out = lambda_mu(adj, a, fs, table);

    // oracle: rectangle rule over cells with lambda1 evaluated per node
    std::vector<double> oracle(2 * fs.r(), 0.0);
    for (int t = 1; t < g.nt; ++t)
        for (int i = 0; i < g.nx - 1; ++i)
            for (int j = 0; j < g.ny - 1; ++j) {
                std::vector<double> l1 = lambda1(fs, {g.x(i), g.y(j)});
                double lr = adj.lambda_rho.at(t, i, j);
                for (std::size_t c = 0; c < oracle.size(); ++c)
                    oracle[c] += g.cell_area() * g.h_time * l1[c] * lr * a[t][c];
            }
    for (std::size_t c = 0; c < oracle.size(); ++c)
        CHECK(std::abs(out[c] - oracle[c]) < 1e-10);
}

TEST_CASE("update_kappa fixed point and invariants") {
    SpaceTimeGrid g = SpaceTimeGrid::paper_default();
    ModelParams p = base_params(g);
    Stabilizers st = Stabilizers::make(g);
    SplittingState sp = SplittingState::init(p);
    SpatialField zero_grads(g);

    SpatialField before = p.kappa;
    update_kappa(p, sp, zero_grads, st, g);
    for (std::size_t q = 0; q < before.v.size(); ++q)
        CHECK(p.kappa.v[q] == doctest::Approx(before.v[q]).epsilon(1e-13));

    // random gradients: floor, outside freeze
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(-50.0, 50.0);
    SpatialField grads(g);
    for (double& v : grads.v) v = uni(rng);
    update_kappa(p, sp, grads, st, g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            CHECK(p.kappa.at(i, j) >= p.eps1);
            if (!g.inside_inner(i, j))
                CHECK(p.kappa.at(i, j) == p.kappa0.at(i, j));
        }
}

TEST_CASE("update_kappa hand oracle with identity mask and smoothing") {
    SpaceTimeGrid g = small_grid();
    ModelParams p = base_params(g);
    Stabilizers st = Stabilizers::make(g, 2.0, 6.0, 2.0, 0);  // psi_half=0: no smoothing
    for (double& w : st.mask_weight.v) w = 1.0;               // no mask
    CHECK(st.psi.size() == 1);
    CHECK(st.psi[0] == doctest::Approx(1.0));

    SplittingState sp = SplittingState::init(p);
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> uni(-5.0, 5.0);
    SpatialField grads(g);
    for (double& v : grads.v) v = uni(rng);
    for (std::size_t q = 0; q < p.kappa.v.size(); ++q) p.kappa.v[q] = 2.0 + std::abs(uni(rng));
    SpatialField kap0 = p.kappa;
    SpatialField til0 = sp.kappa_tilde;

    update_kappa(p, sp, grads, st, g);

    const double th = p.alpha_kappa * p.gamma_kappa;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            std::size_t q = g.sidx(i, j);
            double arg = 2.0 * kap0.v[q] - til0.v[q] - p.alpha_kappa * grads.v[q] -
                         p.kappa0.v[q];
            double tilde = til0.v[q] + shrink(arg, th) + p.kappa0.v[q] - kap0.v[q];
            CHECK(sp.kappa_tilde.v[q] == doctest::Approx(tilde).epsilon(1e-13));
            double expect = g.inside_inner(i, j) ? std::max(p.eps1, tilde) : p.kappa0.v[q];
            CHECK(p.kappa.v[q] == doctest::Approx(expect).epsilon(1e-13));
        }
}

TEST_CASE("update_mu fixed point, cap, and hand oracle") {
    SpaceTimeGrid g = small_grid();
    ModelParams p = base_params(g);
    SplittingState sp = SplittingState::init(p);
    const int r = p.freqs.r();

    std::vector<double> zero(2 * r, 0.0);
    update_mu(p, sp, zero);
    for (double v : p.mu.mu) CHECK(v == doctest::Approx(0.1).epsilon(1e-14));

    // hand oracle with random gradients
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> grads(2 * r);
    for (double& v : grads) v = uni(rng);
    std::vector<double> mu_exp = expand_mu(p.mu.mu);
    std::vector<double> mu0_exp = expand_mu(p.mu0);
    std::vector<double> til0 = sp.mu_tilde;

    update_mu(p, sp, grads);

    const double th = p.alpha_mu * p.gamma_mu;
    std::vector<double> cap(2 * r);
    for (int c = 0; c < 2 * r; ++c) {
        double arg = 2.0 * mu_exp[c] - til0[c] - p.alpha_mu * grads[c] - mu0_exp[c];
        double tilde = til0[c] + shrink(arg, th) + mu0_exp[c] - mu_exp[c];
        CHECK(sp.mu_tilde[c] == doctest::Approx(tilde).epsilon(1e-13));
        cap[c] = std::min(p.eps2, tilde);
    }
    std::vector<double> expect = project_mu(cap);
    for (int k = 0; k < r; ++k)
        CHECK(p.mu.mu[k] == doctest::Approx(expect[k]).epsilon(1e-13));

    // cap: a huge negative gradient pushes mu to the ceiling eps2
    ModelParams pc = base_params(g);
    SplittingState spc = SplittingState::init(pc);
    std::vector<double> push(2 * r, -1e6);
    update_mu(pc, spc, push);
    for (double v : pc.mu.mu) CHECK(v == doctest::Approx(pc.eps2).epsilon(1e-13));
}

TEST_CASE("enforce_bounds") {
    SpaceTimeGrid g = small_grid();
    ModelParams p = base_params(g);
    for (double& v : p.kappa.v) v = 0.5;  // below the floor
    p.kappa.at(12, 12) = 9.0;
    p.mu.mu[3] = 4.0;
    p.enforce_bounds(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            if (!g.inside_inner(i, j))
                CHECK(p.kappa.at(i, j) == p.kappa0.at(i, j));
            CHECK(p.kappa.at(i, j) >= p.eps1);
        }
    CHECK(p.kappa.at(12, 12) == 9.0);
    CHECK(p.mu.mu[3] == p.eps2);
}
