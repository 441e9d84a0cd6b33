#pragma once

#include <Eigen/Dense>

#include "mfg/boundary.hpp"
#include "mfg/forward.hpp"
#include "mfg/grid.hpp"

namespace mfg {

// Mismatch extensions feeding one adjoint update: the Dirichlet extension of
// the density mismatch and the gradient of the Neumann extension of the flux
// mismatch.
struct ExtensionPair {
    ScalarField eta;
    VectorField grad_xi;
};

// Multipliers lambda_(rho,m) of one event, plus the previous prox output for
// the 2*temp - temp_prev extrapolation. lambda_a and lambda_phi are omitted
// (identically zero / redundant).
//
// leak optionally damps the multiplier memory: the resolvent right-hand side
// uses (1 - leak) lambda^n. The kinetic Hessian annihilates (rho, m), so the
// mismatch component along that null direction is integrated across outer
// iterations; that sustained integration is what builds the parameter
// gradients, and the default leak = 0 keeps it. A positive leak bounds the
// multipliers by ~ (alpha/leak) times the forcing at the cost of turning the
// integrator into a lightly damped oscillator, and is exposed only as a
// stabilization knob for very long runs.
struct AdjointState {
    ScalarField lambda_rho;
    VectorField lambda_m;
    ScalarField lambda_rho_temp_prev;
    VectorField lambda_m_temp_prev;
    double alpha_lambda = 10.0;
    double leak = 0.0;

    static AdjointState zero(const SpaceTimeGrid& g, double alpha_lambda = 10.0,
                             double leak = 0.0);
};

// Second derivative of the kinetic density |m|^2/(2 kappa rho) with respect
// to (rho, m1, m2); symmetric positive semidefinite for rho > 0 and
// annihilates (rho, m1, m2) itself.
Eigen::Matrix3d hessian_block(double kappa, double rho, double m1, double m2);

// One PDHG adjoint sweep: per node solve
//   [I + alpha rho H] lambda_temp = (1 - leak) lambda^n - alpha rho (eta, grad xi)
// then extrapolate lambda^{n+1} = 2 lambda_temp - lambda_temp_prev.
void update_adjoint(AdjointState& adj, const PrimalDualState& state,
                    const ModelParams& params, const ExtensionPair& ext);

}  // namespace mfg
