#include "mfg/adjoint.hpp"

#include <cmath>
#include <stdexcept>

namespace mfg {

namespace {
constexpr double kRhoVacuum = 1e-7;  // matches the forward solver's vacuum floor
}

AdjointState AdjointState::zero(const SpaceTimeGrid& g, double alpha_lambda,
                                double leak) {
    AdjointState adj;
    adj.lambda_rho = ScalarField(g);
    adj.lambda_m = VectorField(g);
    adj.lambda_rho_temp_prev = ScalarField(g);
    adj.lambda_m_temp_prev = VectorField(g);
    adj.alpha_lambda = alpha_lambda;
    adj.leak = leak;
    return adj;
}

Eigen::Matrix3d hessian_block(double kappa, double rho, double m1, double m2) {
    const double kr = kappa * rho;
    Eigen::Matrix3d h;
    h(0, 0) = (m1 * m1 + m2 * m2) / (kr * rho * rho);
    h(0, 1) = h(1, 0) = -m1 / (kr * rho);
    h(0, 2) = h(2, 0) = -m2 / (kr * rho);
    h(1, 1) = h(2, 2) = 1.0 / kr;
    h(1, 2) = h(2, 1) = 0.0;
    return h;
}

void update_adjoint(AdjointState& adj, const PrimalDualState& state,
                    const ModelParams& params, const ExtensionPair& ext) {
    const SpaceTimeGrid& g = *state.rho.grid;
    const double al = adj.alpha_lambda;
    const double keep = 1.0 - adj.leak;
    if (!(al > 0.0)) throw std::invalid_argument("update_adjoint: alpha_lambda <= 0");
    if (!(adj.leak >= 0.0 && adj.leak < 1.0))
        throw std::invalid_argument("update_adjoint: leak outside [0, 1)");

    for (int t = 0; t < g.nt; ++t) {
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                const double rho = std::max(state.rho.at(t, i, j), kRhoVacuum);
                const double m1 = state.m.cx.at(t, i, j);
                const double m2 = state.m.cy.at(t, i, j);
                const double kap = params.kappa.at(i, j);

                Eigen::Matrix3d sys =
                    Eigen::Matrix3d::Identity() + al * rho * hessian_block(kap, rho, m1, m2);
                Eigen::Vector3d rhs(
                    keep * adj.lambda_rho.at(t, i, j) - al * rho * ext.eta.at(t, i, j),
                    keep * adj.lambda_m.cx.at(t, i, j) -
                        al * rho * ext.grad_xi.cx.at(t, i, j),
                    keep * adj.lambda_m.cy.at(t, i, j) -
                        al * rho * ext.grad_xi.cy.at(t, i, j));
                Eigen::Vector3d temp = sys.llt().solve(rhs);
                if (!temp.allFinite())
                    throw std::runtime_error("update_adjoint: singular resolvent block");

                adj.lambda_rho.at(t, i, j) = 2.0 * temp[0] - adj.lambda_rho_temp_prev.at(t, i, j);
                adj.lambda_m.cx.at(t, i, j) = 2.0 * temp[1] - adj.lambda_m_temp_prev.cx.at(t, i, j);
                adj.lambda_m.cy.at(t, i, j) = 2.0 * temp[2] - adj.lambda_m_temp_prev.cy.at(t, i, j);
                adj.lambda_rho_temp_prev.at(t, i, j) = temp[0];
                adj.lambda_m_temp_prev.cx.at(t, i, j) = temp[1];
                adj.lambda_m_temp_prev.cy.at(t, i, j) = temp[2];
            }
        }
    }
}

}  // namespace mfg
