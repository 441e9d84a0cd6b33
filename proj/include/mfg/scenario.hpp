#pragma once

#include <cstdint>
#include <vector>

#include "mfg/boundary.hpp"
#include "mfg/forward.hpp"
#include "mfg/grid.hpp"
#include "mfg/kernel.hpp"
#include "mfg/params.hpp"

namespace mfg {

// One inversion datum: the event's known inputs plus its (noisy) trace.
struct MeasurementEvent {
    EventData data;
    BoundaryTrace trace;
};

// Ground truth of one paper example plus the sparse modes used to build it.
struct ExampleTruth {
    ModelParams params;            // kappa/mu = truth; kappa0/mu0 = background
    std::vector<Vec2> omega_s;     // sparse modes (reduced convention)
    std::vector<double> mu_s;      // their coefficients
    BackgroundFit fit;             // background-kernel fit diagnostics
};

// Closed-form examples 1..3: Gaussian kappa bumps on background 2, kernel
// K = K0 + Ks + k0 with K0(d) = exp(-|d|^2/(2*0.4^2))/5 fitted on the lattice
// and mu_true = sqrt(mu0^2 + mu_s^2) modewise.
ExampleTruth example_params(int id, const SpaceTimeGrid& g);

// k0 making the full kernel integrate to 1 over Omega' x Omega' (cell rule).
double solve_k0(const KernelCoeffs& coeffs, const FrequencySet& freqs,
                const SpaceTimeGrid& g);

// Deterministic catalog: two-Gaussian initial densities with centers on a
// ring of radius 0.75 (angles 2 pi i/count and +pi/4), terminal cost dipped
// at the diametrically opposite point.
std::vector<EventData> event_catalog(const SpaceTimeGrid& g, int count);

// Multiplicative uniform noise, Eq. (noise): independent draws per sample
// and per component, delta ~ U[-0.5, 0.5] scaled by eps_n.
BoundaryTrace add_noise(const BoundaryTrace& trace, double eps_n, std::uint64_t seed);

// Cold-start forward solves at the true parameters, traced and perturbed.
// Per-event noise streams are split as seed + event index. Throws if any
// event fails to reach tolerance.
std::vector<MeasurementEvent> generate_measurements(const ExampleTruth& truth,
                                                    const SpaceTimeGrid& g,
                                                    const BoundaryOps& bops,
                                                    const ForwardOptions& opt,
                                                    int event_count, double eps_n,
                                                    std::uint64_t seed);

}  // namespace mfg
