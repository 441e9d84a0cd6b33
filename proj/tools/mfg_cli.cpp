#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <cstdio>
#include <filesystem>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mfg/adjoint.hpp"
#include "mfg/boundary.hpp"
#include "mfg/forward.hpp"
#include "mfg/inverse.hpp"
#include "mfg/io.hpp"
#include "mfg/scenario.hpp"

namespace fs = std::filesystem;
using namespace mfg;

namespace {

ModelParams background_params(const RunConfig& cfg, const SpaceTimeGrid& g, double k0) {
    ModelParams p;
    p.freqs = FrequencySet::default_lattice();
    p.kappa = SpatialField(g, cfg.kappa0_value);
    p.kappa0 = SpatialField(g, cfg.kappa0_value);
    BackgroundFit fit = fit_background_mu(
        [](const Vec2& d) {
            return 0.2 * std::exp(-(d[0] * d[0] + d[1] * d[1]) / (2.0 * 0.4 * 0.4));
        },
        p.freqs, g);
    p.mu.mu = fit.mu0;
    p.mu0 = fit.mu0;
    p.mu.k0 = k0;
    p.nu = cfg.nu;
    p.eps1 = cfg.eps1;
    p.eps2 = cfg.eps2;
    p.gamma_kappa = cfg.gamma_kappa;
    p.gamma_mu = cfg.gamma_mu;
    p.alpha_kappa = cfg.alpha_kappa;
    p.alpha_mu = cfg.alpha_mu;
    return p;
}

double manifest_k0(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("no dataset manifest in " + dir.string());
    nlohmann::json j;
    in >> j;
    if (!j.contains("k0")) throw std::runtime_error("manifest lacks k0");
    return std::stod(j["k0"].get<std::string>());
}

int cmd_generate(const RunConfig& cfg, const fs::path& out) {
    fs::create_directories(out);
    SpaceTimeGrid g = cfg.make_grid();
    BoundaryOps bops(g);
    ExampleTruth truth = example_params(cfg.example_id, g);
    truth.params.nu = cfg.nu;
    std::fprintf(stderr, "generate: example %d, %d events, eps_n=%g, seed=%llu\n",
                 cfg.example_id, cfg.event_count, cfg.eps_n,
                 static_cast<unsigned long long>(cfg.seed));

    std::vector<MeasurementEvent> events = generate_measurements(
        truth, g, bops, cfg.data_options(), cfg.event_count, cfg.eps_n, cfg.seed);
    for (std::size_t e = 0; e < events.size(); ++e) {
        save_event(out / ("event_" + std::to_string(e) + ".json"), events[e].data, g);
        save_trace(out / ("trace_" + std::to_string(e) + ".csv"), events[e].trace, bops, g);
    }
    char k0buf[32];
    std::snprintf(k0buf, sizeof(k0buf), "%.17g", truth.params.mu.k0);
    save_manifest(out / "manifest.json", cfg, g, {{"k0", k0buf}});
    save_field_csv(out / "kappa_true.csv", truth.params.kappa, g);
    save_mu_csv(out / "mu_true.csv", truth.params.mu.mu, truth.params.freqs);
    std::fprintf(stderr, "generate: wrote %zu events to %s\n", events.size(),
                 out.string().c_str());
    return 0;
}

std::vector<MeasurementEvent> load_dataset(const fs::path& dir, const SpaceTimeGrid& g,
                                           const BoundaryOps& bops, int limit) {
    std::vector<MeasurementEvent> events;
    for (int e = 0;; ++e) {
        fs::path ev = dir / ("event_" + std::to_string(e) + ".json");
        fs::path tr = dir / ("trace_" + std::to_string(e) + ".csv");
        if (!fs::exists(ev) || !fs::exists(tr)) break;
        if (limit > 0 && e >= limit) break;
        MeasurementEvent m;
        m.data = load_event(ev, g);
        m.trace = load_trace(tr, bops.nb());
        events.push_back(std::move(m));
    }
    if (events.empty())
        throw std::runtime_error("no dataset found in " + dir.string());
    return events;
}

int cmd_forward(const RunConfig& cfg, const fs::path& event_path,
                const fs::path& kappa_path, const fs::path& mu_path,
                const fs::path& out) {
    fs::create_directories(out);
    SpaceTimeGrid g = cfg.make_grid();
    ModelParams p = background_params(cfg, g, 0.0);
    if (!kappa_path.empty()) p.kappa = load_field_csv(kappa_path, g);
    if (!mu_path.empty()) {
        // mu CSV: reuse the field loader contract is wrong shape; parse simply
        std::ifstream in(mu_path);
        if (!in) throw std::runtime_error("cannot open " + mu_path.string());
        std::string line;
        std::getline(in, line);
        if (line != "# schema: mu v1") throw std::runtime_error("unsupported mu schema");
        std::getline(in, line);
        std::vector<double> mu;
        while (std::getline(in, line)) {
            double w1, w2, m;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &w1, &w2, &m) == 3)
                mu.push_back(m);
        }
        if (mu.size() != static_cast<std::size_t>(p.freqs.r()))
            throw std::runtime_error("mu file length mismatch");
        p.mu.mu = mu;
    }

    EventData ev = load_event(event_path, g);
    ForwardContext ctx(g, p.freqs);
    ForwardOptions opt = cfg.forward_options();
    std::vector<std::array<double, 3>> gap_trace;
    opt.gap_trace = &gap_trace;
    ForwardResult res = solve_forward(
        ev, p, PrimalDualState::cold_start(g, ev, p.freqs.r()), opt, ctx);

    save_field_bin(out / "rho.bin", res.state.rho.v);
    save_field_bin(out / "m1.bin", res.state.m.cx.v);
    save_field_bin(out / "m2.bin", res.state.m.cy.v);
    save_gap_history(out / "gap_history.csv", gap_trace);
    std::fprintf(stderr, "forward: %s after %d sweeps, gap %.3e, drift %.3e\n",
                 res.converged ? "converged" : "NOT converged", res.iterations, res.gap,
                 res.drift);
    return res.converged ? 0 : 2;
}

int cmd_invert(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out) {
    fs::create_directories(out);
    SpaceTimeGrid g = cfg.make_grid();
    BoundaryOps bops(g);
    std::vector<MeasurementEvent> events = load_dataset(data_dir, g, bops, cfg.event_count);
    ModelParams init = background_params(cfg, g, manifest_k0(data_dir));
    std::fprintf(stderr, "invert: %zu events, n_max=%d\n", events.size(), cfg.n_max);

    InversionResult res = run_inversion(events, init, g, bops, cfg.inversion_options());
    save_field_csv(out / "kappa_opt.csv", res.params_opt.kappa, g);
    save_mu_csv(out / "mu_opt.csv", res.params_opt.mu.mu, res.params_opt.freqs);
    save_res_history(out / "res_history.csv", res.history);
    save_manifest(out / "manifest.json", cfg, g,
                  {{"n_opt", std::to_string(res.n_opt)},
                   {"aborted", res.aborted ? "true" : "false"}});
    std::fprintf(stderr, "invert: n_opt=%d res=%.6e%s\n", res.n_opt,
                 res.history[res.n_opt].res,
                 res.aborted ? (" ABORTED: " + res.abort_reason).c_str() : "");
    return res.aborted ? 3 : 0;
}

int cmd_verify(const RunConfig& cfg, const fs::path& data_dir) {
    SpaceTimeGrid g = cfg.make_grid();
    BoundaryOps bops(g);
    int failures = 0;
    auto report = [&](const char* name, bool ok, double err) {
        std::printf("%-32s %s  (err %.3e)\n", name, ok ? "pass" : "FAIL", err);
        if (!ok) ++failures;
    };

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    // kernel identity zeta(x).zeta(y) = sum mu^2 cos(w.(x-y))
    {
        FrequencySet freqs = FrequencySet::default_lattice();
        KernelCoeffs c;
        c.mu.resize(freqs.r());
        double err = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
            for (double& m : c.mu) m = std::abs(uni(rng));
            Vec2 x = {uni(rng), uni(rng)}, y = {uni(rng), uni(rng)};
            std::vector<double> zx = zeta(x, c, freqs), zy = zeta(y, c, freqs);
            double dot = 0.0;
            for (std::size_t k = 0; k < zx.size(); ++k) dot += zx[k] * zy[k];
            err = std::max(err, std::abs(dot + c.k0 - kernel_value(x, y, c, freqs)));
        }
        report("kernel identity", err < 1e-12, err);
    }

    // gradient/divergence adjointness
    {
        double err = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            ScalarField f(g), wx(g), wy(g);
            for (double& v : f.v) v = uni(rng);
            for (double& v : wx.v) v = uni(rng);
            for (double& v : wy.v) v = uni(rng);
            VectorField gf = gradient(f);
            VectorField w;
            w.cx = wx;
            w.cy = wy;
            ScalarField dv = divergence(w);
            double lhs = 0.0, rhs = 0.0;
            for (std::size_t p = 0; p < f.v.size(); ++p) {
                lhs += gf.cx.v[p] * wx.v[p] + gf.cy.v[p] * wy.v[p];
                rhs -= f.v[p] * dv.v[p];
            }
            err = std::max(err, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
        }
        report("grad/div adjointness", err < 1e-8, err);
    }

    // adjoint 3x3 resolvent vs dense solve
    {
        double err = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            double kap = 1.0 + std::abs(uni(rng));
            double rho = 0.1 + std::abs(uni(rng));
            double m1 = uni(rng), m2 = uni(rng);
            Eigen::Matrix3d sys =
                Eigen::Matrix3d::Identity() + 10.0 * rho * hessian_block(kap, rho, m1, m2);
            Eigen::Vector3d b(uni(rng), uni(rng), uni(rng));
            err = std::max(err, (sys.llt().solve(b) - sys.fullPivLu().solve(b)).norm());
        }
        report("adjoint resolvent", err < 1e-12, err);
    }

    // dataset schema
    if (!data_dir.empty()) {
        try {
            std::vector<MeasurementEvent> events = load_dataset(data_dir, g, bops, 0);
            double err = 0.0;
            for (const MeasurementEvent& ev : events) ev.data.validate(g);
            report("dataset schema", true, err);
        } catch (const std::exception& e) {
            std::printf("%-32s FAIL  (%s)\n", "dataset schema", e.what());
            ++failures;
        }
    }

    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field-game parameter reconstruction from boundary traces"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", data_dir, event_path, kappa_path, mu_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int events_override = 0, max_iter_override = 0, threads = 0;

    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--seed", seed, "override scenario seed")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--events", events_override, "override event count");
    app.add_option("--max-iter", max_iter_override, "override outer iteration cap");
    app.add_option("--threads", threads, "worker thread cap");

    CLI::App* gen = app.add_subcommand("generate", "synthesize a measurement dataset");
    gen->add_option("--out", out_dir, "output directory");

    CLI::App* fwd = app.add_subcommand("forward", "solve one forward event");
    fwd->add_option("--event", event_path, "event file")->required();
    fwd->add_option("--kappa", kappa_path, "kappa field CSV (default: background)");
    fwd->add_option("--mu", mu_path, "mu coefficients CSV (default: background)");
    fwd->add_option("--out", out_dir, "output directory");

    CLI::App* inv = app.add_subcommand("invert", "reconstruct (kappa, mu) from a dataset");
    inv->add_option("--data", data_dir, "dataset directory")->required();
    inv->add_option("--out", out_dir, "output directory");

    CLI::App* ver = app.add_subcommand("verify", "run the oracle/diagnostic suite");
    ver->add_option("--data", data_dir, "dataset directory (optional)");

    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    try {
        RunConfig cfg =
            config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
        if (seed_set) cfg.seed = seed;
        if (events_override > 0) cfg.event_count = events_override;
        if (max_iter_override > 0) cfg.n_max = max_iter_override;
        cfg.validate();

        if (gen->parsed()) return cmd_generate(cfg, out_dir);
        if (fwd->parsed()) return cmd_forward(cfg, event_path, kappa_path, mu_path, out_dir);
        if (inv->parsed()) return cmd_invert(cfg, data_dir, out_dir);
        if (ver->parsed()) return cmd_verify(cfg, data_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
