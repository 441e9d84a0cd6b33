#pragma once

#include <vector>

#include "mfg/grid.hpp"
#include "mfg/kernel.hpp"

namespace mfg {

struct PrimalDualState;
struct AdjointState;

// The unknowns (kappa, mu) together with known background and the
// regularization/step constants of the inverse update.
struct ModelParams {
    SpatialField kappa;        // speed field, >= eps1, == kappa0 outside Omega
    KernelCoeffs mu;           // reduced kernel coefficients + known k0
    FrequencySet freqs;
    double nu = 0.1;           // viscosity; config value, no reference default exists
    SpatialField kappa0;       // known background speed
    std::vector<double> mu0;   // background coefficients, reduced layout
    double eps1 = 2.0;         // kappa floor (kappa_c)
    double eps2 = 1.0;         // mu cap
    // gamma_mu / alpha_mu are small because the mu update works against a
    // bounded (leaky) multiplier channel: the product alpha_mu * alpha_lambda_mu
    // sets the mu <-> lambda loop frequency and alpha_mu * alpha_lambda_mu /
    // lambda_leak_mu the DC gain (see InversionOptions).
    double gamma_kappa = 0.2;
    double gamma_mu = 0.01;
    double alpha_kappa = 0.1;
    double alpha_mu = 0.001;

    void enforce_bounds(const SpaceTimeGrid& g);
};

// Davis-Yin shadow variables; mu_tilde kept in expanded (2r) layout.
struct SplittingState {
    SpatialField kappa_tilde;
    std::vector<double> mu_tilde;

    static SplittingState init(const ModelParams& p);
};

// Cutoff mask vanishing near the interface and a normalized smoothing kernel.
struct Stabilizers {
    SpatialField mask_weight;          // w(x) in [0,1], 0 in a band around dOmega
    std::vector<double> psi;           // (2*half+1)^2 stencil, unit sum
    int psi_half = 0;

    // mask: cosine ramp, 0 within band_lo*h of dOmega, 1 beyond band_hi*h.
    // psi: truncated discrete Gaussian, sigma = psi_sigma_cells*h, renormalized
    // near the domain boundary.
    static Stabilizers make(const SpaceTimeGrid& g, double band_lo = 2.0,
                            double band_hi = 6.0, double psi_sigma_cells = 2.0,
                            int psi_half = 4);
};

// Soft threshold S_alpha(r) = sign(r) max(|r|-alpha, 0).
double shrink(double r, double alpha);
std::vector<double> shrink(const std::vector<double>& r, double alpha);
SpatialField shrink(const SpatialField& r, double alpha);

// Time-integrated gradient of the data coupling with respect to kappa:
// int_0^T (1/(2 kappa^2)) (|m|^2/rho^2) lambda_rho - (1/kappa^2) (m/rho).lambda_m dt.
SpatialField lambda_kappa(const ModelParams& params, const PrimalDualState& state,
                          const AdjointState& adj);

// Expanded-layout gradient with respect to mu:
// int_0^T int Lambda_1(omega, y) lambda_rho(y, s) a(s) dy ds.
std::vector<double> lambda_mu(const AdjointState& adj,
                              const std::vector<std::vector<double>>& a,
                              const FrequencySet& freqs, const FeatureTable& table);

// One kappa step of the splitting (shrinkage + mask + convolution + floor),
// writing the new kappa and kappa_tilde in place. grads = sum of per-event
// lambda_kappa fields.
void update_kappa(ModelParams& params, SplittingState& splitting,
                  const SpatialField& grads, const Stabilizers& stab,
                  const SpaceTimeGrid& g);

// One mu step (shrinkage in expanded layout, cap, projection to reduced).
void update_mu(ModelParams& params, SplittingState& splitting,
               const std::vector<double>& grads);

// Discrete convolution with psi; truncated weights renormalized at the border.
SpatialField convolve_psi(const SpatialField& f, const Stabilizers& stab);

}  // namespace mfg
