#include "mfg/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfg {

namespace {

double mu_l1_dist(const std::vector<double>& mu, const std::vector<double>& mu0) {
    double acc = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) acc += std::abs(mu[k] - mu0[k]);
    return acc;
}

ExtensionPair build_extensions(const MeasurementEvent& ev, const PrimalDualState& state,
                               const BoundaryOps& bops, const SpaceTimeGrid& g) {
    BoundaryTrace tr = bops.trace(state);
    std::vector<double> drho(tr.rho_trace.size()), dflux(tr.flux_trace.size());
    for (std::size_t k = 0; k < drho.size(); ++k) {
        drho[k] = tr.rho_trace[k] - ev.trace.rho_trace[k];
        dflux[k] = tr.flux_trace[k] - ev.trace.flux_trace[k];
    }
    ExtensionPair ext;
    ext.eta = bops.dirichlet_extend(drho, g.nt);
    ext.grad_xi = bops.neumann_extend(dflux, g.nt).grad_xi;
    return ext;
}

}  // namespace

double residual(const std::vector<MeasurementEvent>& events,
                const std::vector<BoundaryTrace>& traces, const SpaceTimeGrid& g) {
    if (events.size() != traces.size())
        throw std::invalid_argument("residual: event/trace count mismatch");
    const double w = g.h_space * g.h_time;
    double acc = 0.0;
    for (std::size_t e = 0; e < events.size(); ++e) {
        const BoundaryTrace& a = traces[e];
        const BoundaryTrace& b = events[e].trace;
        for (std::size_t k = 0; k < a.rho_trace.size(); ++k) {
            double dr = a.rho_trace[k] - b.rho_trace[k];
            double df = a.flux_trace[k] - b.flux_trace[k];
            acc += w * (dr * dr + df * df);
        }
    }
    return acc;
}

InversionResult run_inversion(const std::vector<MeasurementEvent>& events,
                              ModelParams init, const SpaceTimeGrid& g,
                              const BoundaryOps& bops, const InversionOptions& opt) {
    const int ne = static_cast<int>(events.size());
    if (ne == 0) throw std::invalid_argument("run_inversion: no events");

    ModelParams params = std::move(init);
    params.enforce_bounds(g);
    SplittingState splitting = SplittingState::init(params);
    Stabilizers stab = Stabilizers::make(g, opt.mask_band_lo, opt.mask_band_hi,
                                         opt.psi_sigma_cells, opt.psi_half);
    ForwardContext ctx(g, params.freqs);

    std::vector<PrimalDualState> states;
    std::vector<AdjointState> adjoints_kappa;  // integrating channel
    std::vector<AdjointState> adjoints_mu;     // damped channel
    states.reserve(ne);
    for (int e = 0; e < ne; ++e) {
        states.push_back(PrimalDualState::cold_start(g, events[e].data, params.freqs.r()));
        adjoints_kappa.push_back(AdjointState::zero(g, opt.alpha_lambda, opt.lambda_leak));
        adjoints_mu.push_back(AdjointState::zero(g, opt.alpha_lambda_mu, opt.lambda_leak_mu));
    }

    InversionResult result;
    int consecutive_flags = 0;
    double best_res = std::numeric_limits<double>::infinity();

    auto forward_pass = [&](int n) {
        bool flagged = false;
#pragma omp parallel for schedule(dynamic)
        for (int e = 0; e < ne; ++e) {
            ForwardResult fr = solve_forward(events[e].data, params, std::move(states[e]),
                                             opt.forward, ctx);
            states[e] = std::move(fr.state);
            if (!fr.converged) {
#pragma omp critical
                flagged = true;
            }
        }
        std::vector<BoundaryTrace> traces(ne);
        for (int e = 0; e < ne; ++e) traces[e] = bops.trace(states[e]);
        IterationStats st;
        st.n = n;
        st.res = residual(events, traces, g);
        double kmax = params.kappa.v[0];
        for (double v : params.kappa.v) kmax = std::max(kmax, v);
        st.kappa_max = kmax;
        st.mu_l1 = mu_l1_dist(params.mu.mu, params.mu0);
        st.forward_flagged = flagged;
        result.history.push_back(st);

        if (st.res < best_res) {
            best_res = st.res;
            result.n_opt = n;
            result.params_opt = params;
        }
        if (n % opt.checkpoint_stride == 0)
            result.checkpoints.push_back({n, params.kappa, params.mu.mu});
        return flagged;
    };

    consecutive_flags = forward_pass(0) ? 1 : 0;

    for (int n = 1; n <= opt.n_max; ++n) {
        // step 1: mismatch extensions and adjoint updates, per event
#pragma omp parallel for schedule(dynamic)
        for (int e = 0; e < ne; ++e) {
            ExtensionPair ext = build_extensions(events[e], states[e], bops, g);
            update_adjoint(adjoints_kappa[e], states[e], params, ext);
            update_adjoint(adjoints_mu[e], states[e], params, ext);
        }

        // step 2: summed gradients, then the splitting updates (barrier)
        SpatialField grad_kappa(g.nx, g.ny, 0.0);
        std::vector<double> grad_mu(2 * params.freqs.r(), 0.0);
        for (int e = 0; e < ne; ++e) {
            SpatialField gk = lambda_kappa(params, states[e], adjoints_kappa[e]);
            for (std::size_t p = 0; p < grad_kappa.v.size(); ++p)
                grad_kappa.v[p] += gk.v[p];
            std::vector<double> gm =
                lambda_mu(adjoints_mu[e], states[e].a, params.freqs, ctx.table);
            for (std::size_t c = 0; c < grad_mu.size(); ++c) grad_mu[c] += gm[c];
        }
        update_kappa(params, splitting, grad_kappa, stab, g);
        update_mu(params, splitting, grad_mu);
        params.enforce_bounds(g);

        // step 3: warm-started forward solves and residual tracking
        bool flagged = forward_pass(n);
        consecutive_flags = flagged ? consecutive_flags + 1 : 0;
        if (consecutive_flags >= 3) {
            result.aborted = true;
            result.abort_reason = "three consecutive non-converged forward sweeps at n=" +
                                  std::to_string(n);
            break;
        }
    }
    return result;
}

}  // namespace mfg
