#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/kernel.hpp"
#include "mfg/params.hpp"

namespace mfg {

// One measurement event's boundary/terminal data.
struct EventData {
    SpatialField rho0;  // initial density, unit mass under integrate_slice
    SpatialField g;     // terminal cost

    void validate(const SpaceTimeGrid& grid) const;
};

struct StepSizes {
    double alpha_rho = 0.05;
    double alpha_m = 0.05;
    double alpha_phi = 0.5;
    double alpha_a = 0.5;
};

// Per-timeslice auxiliary dual vectors, expanded layout (2r); slice 0 inert.
using DualA = std::vector<std::vector<double>>;

// Forward saddle-point variables of one event. rho/m/a are active on slices
// 1..nt-1 (slice 0 pinned to rho0 / zero); phi is active on slices 0..nt-2
// (final slice pinned to g). phi and a store the latest prox outputs; the
// extrapolated copies used inside the (rho,m) step live in the solver loop.
struct PrimalDualState {
    ScalarField rho;
    VectorField m;
    ScalarField phi;
    DualA a;

    static PrimalDualState cold_start(const SpaceTimeGrid& g, const EventData& ev, int r);
};

// Exact inverse of the separable space-time stiffness operator
// D_t^T D_t + Gx^T Gx + Gy^T Gy on the phi degrees of freedom (Neumann in
// space and at t=0, Dirichlet at the pinned final slice), via 1D
// eigendecompositions and tensor contractions.
class SpacetimePoisson {
public:
    explicit SpacetimePoisson(const SpaceTimeGrid& g);
    // rhs and out are (nt-1) x nx x ny, time-major.
    void solve(const std::vector<double>& rhs, std::vector<double>& out) const;

private:
    const SpaceTimeGrid* grid_;
    int nf_;
    Eigen::MatrixXd qt_, qx_, qy_;
    Eigen::VectorXd lt_, lx_, ly_;
};

// Shared per-grid machinery for forward solves.
struct ForwardContext {
    const SpaceTimeGrid* grid;
    FeatureTable table;
    SpacetimePoisson poisson;

    ForwardContext(const SpaceTimeGrid& g, const FrequencySet& freqs)
        : grid(&g), table(g, freqs), poisson(g) {}
};

// Discrete Lagrangian; +inf sentinel when rho=0 meets m!=0, throws on rho<0.
double lagrangian(const EventData& ev, const PrimalDualState& s,
                  const ModelParams& p, const ForwardContext& ctx);

// Pointwise first derivatives on the active degrees of freedom (zero on
// pinned slices).
std::pair<ScalarField, VectorField> grad_rho_m(const EventData& ev,
                                               const PrimalDualState& s,
                                               const ModelParams& p,
                                               const ForwardContext& ctx);
std::pair<DualA, ScalarField> grad_a_phi(const EventData& ev, const PrimalDualState& s,
                                         const ModelParams& p, const ForwardContext& ctx);

// Coupled (rho, m) proximal step against the supplied (extrapolated) phi/a.
// m is eliminated in closed form; the scalar rho equation is solved per node
// by safeguarded Newton. Throws on root-finder failure with node coordinates.
// With conserve_mass the slice is additionally projected onto the exact mass
// shell {sum rho = sum rho0} through a per-slice Lagrange multiplier (the
// prox of the same objective plus the affine indicator); the multiplier
// vanishes at stationarity so the saddle point is unchanged. The multipliers
// are optionally reported (per slice, entry 0 unused): they are the constant
// spatial mode of the phi update, which the mass projection otherwise
// freezes, and the solver loop folds them back into phi.
std::pair<ScalarField, VectorField> prox_rho_m(const EventData& ev,
                                               const PrimalDualState& s,
                                               const ModelParams& p, const StepSizes& st,
                                               const ForwardContext& ctx,
                                               const ScalarField& phi_bar,
                                               const DualA& a_bar,
                                               bool conserve_mass = false,
                                               std::vector<double>* nu_out = nullptr);

// G-prox phi step: phi - alpha_phi * Ainv(Fokker-Planck residual).
ScalarField prox_phi(const EventData& ev, const PrimalDualState& s, const ModelParams& p,
                     const StepSizes& st, const ForwardContext& ctx);

// Closed-form a step per time slice.
DualA prox_a(const PrimalDualState& s, const ModelParams& p, const StepSizes& st,
             const ForwardContext& ctx, const ScalarField& rho_new);

// Componentwise 2*current - previous.
ScalarField extrapolate(const ScalarField& current, const ScalarField& previous);
DualA extrapolate(const DualA& current, const DualA& previous);

// Squared weighted norm of the four projected partial-gradient blocks of the
// Lagrangian (the Fokker-Planck residual is the phi block). Zero iff
// first-order stationary.
double primal_dual_gap(const EventData& ev, const PrimalDualState& s,
                       const ModelParams& p, const ForwardContext& ctx);

// max_t |sum_x rho(.,t) - sum_x rho0| under uniform node weights (the sum the
// discrete scheme conserves exactly at stationarity).
double mass_drift(const EventData& ev, const PrimalDualState& s);

struct ForwardOptions {
    double e_tol = 2e-3;
    double drift_tol = 1e-6;
    int max_iter = 30000;
    StepSizes steps;
    int stagnation_window = 400;
    int max_backoffs = 6;
    std::vector<std::array<double, 3>>* gap_trace = nullptr;  // (iter, gap, drift)
};

struct ForwardResult {
    PrimalDualState state;
    bool converged = false;
    int iterations = 0;
    double gap = 0.0;
    double drift = 0.0;
};

ForwardResult solve_forward(const EventData& ev, const ModelParams& p,
                            PrimalDualState init, const ForwardOptions& opt,
                            const ForwardContext& ctx);

}  // namespace mfg
