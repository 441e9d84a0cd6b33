#include "mfg/scenario.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace mfg {

namespace {

double gauss_bump(double x1, double x2, double c1, double c2, double w) {
    double d2 = (x1 - c1) * (x1 - c1) + (x2 - c2) * (x2 - c2);
    return std::exp(-d2 / (w * w));
}

}  // namespace

ExampleTruth example_params(int id, const SpaceTimeGrid& g) {
    ExampleTruth ex;
    FrequencySet freqs = FrequencySet::default_lattice();

    // kappa: background 2 plus example-specific Gaussian bumps of height 4
    std::vector<Vec2> centers;
    switch (id) {
        case 1: centers = {{0.25, 0.25}}; break;
        case 2: centers = {{-0.25, 0.25}, {0.25, -0.25}}; break;
        case 3: centers = {{0.25, 0.25}, {0.25, -0.25}}; break;
        default: throw std::invalid_argument("example_params: id must be 1..3");
    }
    SpatialField kappa(g, 0.0), kappa0(g, 2.0);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            double v = 2.0;
            for (const Vec2& c : centers)
                v += 4.0 * gauss_bump(g.x(i), g.y(j), c[0], c[1], 0.1);
            kappa.at(i, j) = v;
        }
    }

    switch (id) {
        case 1:
            ex.mu_s = {0.2094, 0.2094, 0.2613, 0.2613};
            ex.omega_s = {{M_PI, 0}, {0, M_PI}, {M_PI, M_PI}, {-M_PI, M_PI}};
            break;
        case 2:
            ex.mu_s = {0.3374, 0.3374, 0.2942, 0.2942};
            ex.omega_s = {{M_PI, 0}, {0, M_PI}, {2 * M_PI, 0}, {0, 2 * M_PI}};
            break;
        case 3:
            ex.mu_s = {0.2973, 0.2973, 0.2973, 0.2973};
            ex.omega_s = {{2 * M_PI, -M_PI}, {2 * M_PI, M_PI}, {M_PI, 2 * M_PI}, {M_PI, -2 * M_PI}};
            break;
    }

    ex.fit = fit_background_mu(
        [](const Vec2& d) {
            return 0.2 * std::exp(-(d[0] * d[0] + d[1] * d[1]) / (2.0 * 0.4 * 0.4));
        },
        freqs, g);

    // K = K0 + Ks: squared coefficients add modewise
    std::vector<double> mu_true = ex.fit.mu0;
    for (std::size_t s = 0; s < ex.omega_s.size(); ++s) {
        int k = freqs.find(ex.omega_s[s]);
        if (k < 0)
            throw std::logic_error("example_params: omega_s not on the lattice");
        mu_true[k] = std::sqrt(mu_true[k] * mu_true[k] + ex.mu_s[s] * ex.mu_s[s]);
    }

    ModelParams& p = ex.params;
    p.kappa = kappa;
    p.kappa0 = kappa0;
    p.mu.mu = mu_true;
    p.mu0 = ex.fit.mu0;
    p.freqs = freqs;
    p.mu.k0 = solve_k0(p.mu, freqs, g);
    return ex;
}

double solve_k0(const KernelCoeffs& coeffs, const FrequencySet& freqs,
                const SpaceTimeGrid& g) {
    // int int K = k0 |O'|^2 + sum_k mu_k^2 (C_k^2 + S_k^2) with C, S the
    // cosine/sine integrals over Omega' (cell rule, matching integrate_slice)
    const double area = (g.x_max - g.x_min) * (g.y_max - g.y_min);
    double acc = 0.0;
    for (int k = 0; k < freqs.r(); ++k) {
        double c = 0.0, s = 0.0;
        for (int i = 0; i < g.nx - 1; ++i) {
            for (int j = 0; j < g.ny - 1; ++j) {
                double ph = freqs.omegas[k][0] * g.x(i) + freqs.omegas[k][1] * g.y(j);
                c += std::cos(ph);
                s += std::sin(ph);
            }
        }
        c *= g.cell_area();
        s *= g.cell_area();
        acc += coeffs.mu[k] * coeffs.mu[k] * (c * c + s * s);
    }
    return (1.0 - acc) / (area * area);
}

std::vector<EventData> event_catalog(const SpaceTimeGrid& g, int count) {
    if (count <= 0) throw std::invalid_argument("event_catalog: count must be positive");
    std::vector<EventData> events;
    events.reserve(count);
    const double ring = 0.75, width = 0.15;
    for (int e = 0; e < count; ++e) {
        double th = 2.0 * M_PI * e / count;
        Vec2 c1 = {ring * std::cos(th), ring * std::sin(th)};
        Vec2 c2 = {ring * std::cos(th + M_PI / 4), ring * std::sin(th + M_PI / 4)};
        Vec2 xg = {-c1[0], -c1[1]};

        EventData ev;
        ev.rho0 = SpatialField(g);
        ev.g = SpatialField(g);
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                double r = 0.5 * (gauss_bump(g.x(i), g.y(j), c1[0], c1[1], width) +
                                  gauss_bump(g.x(i), g.y(j), c2[0], c2[1], width));
                ev.rho0.at(i, j) = std::max(r, 1e-8);
                ev.g.at(i, j) = 1.0 - gauss_bump(g.x(i), g.y(j), xg[0], xg[1], 0.2);
            }
        }
        double mass = integrate_slice(g, ev.rho0.v.data());
        for (double& v : ev.rho0.v) v /= mass;
        events.push_back(std::move(ev));
    }
    return events;
}

BoundaryTrace add_noise(const BoundaryTrace& trace, double eps_n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> delta(-0.5, 0.5);
    BoundaryTrace out = trace;
    for (int t = 0; t < trace.nt; ++t) {
        for (int b = 0; b < trace.nb; ++b) {
            out.rho(t, b) *= 1.0 + eps_n * delta(rng);
            out.flux(t, b) *= 1.0 + eps_n * delta(rng);
        }
    }
    return out;
}

std::vector<MeasurementEvent> generate_measurements(const ExampleTruth& truth,
                                                    const SpaceTimeGrid& g,
                                                    const BoundaryOps& bops,
                                                    const ForwardOptions& opt,
                                                    int event_count, double eps_n,
                                                    std::uint64_t seed) {
    std::vector<EventData> catalog = event_catalog(g, event_count);
    ForwardContext ctx(g, truth.params.freqs);
    std::vector<MeasurementEvent> out(catalog.size());
    std::string failure;

#pragma omp parallel for schedule(dynamic)
    for (int e = 0; e < static_cast<int>(catalog.size()); ++e) {
        PrimalDualState init =
            PrimalDualState::cold_start(g, catalog[e], truth.params.freqs.r());
        ForwardResult res = solve_forward(catalog[e], truth.params, std::move(init),
                                          opt, ctx);
        if (!res.converged) {
#pragma omp critical
            failure = "generate_measurements: event " + std::to_string(e) +
                      " stalled at gap " + std::to_string(res.gap);
            continue;
        }
        out[e].data = std::move(catalog[e]);
        out[e].trace = add_noise(bops.trace(res.state), eps_n,
                                 seed + static_cast<std::uint64_t>(e));
    }
    if (!failure.empty()) throw std::runtime_error(failure);
    return out;
}

}  // namespace mfg
