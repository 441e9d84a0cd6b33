#include "mfg/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mfg/adjoint.hpp"
#include "mfg/forward.hpp"

namespace mfg {

namespace {
constexpr double kRhoVacuum = 1e-7;
}

void ModelParams::enforce_bounds(const SpaceTimeGrid& g) {
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            if (!g.inside_inner(i, j)) kappa.at(i, j) = kappa0.at(i, j);
            kappa.at(i, j) = std::max(kappa.at(i, j), eps1);
        }
    }
    for (double& v : mu.mu) v = std::min(v, eps2);
}

SplittingState SplittingState::init(const ModelParams& p) {
    SplittingState s;
    s.kappa_tilde = p.kappa0;
    s.mu_tilde = expand_mu(p.mu0);
    return s;
}

Stabilizers Stabilizers::make(const SpaceTimeGrid& g, double band_lo, double band_hi,
                              double psi_sigma_cells, int psi_half) {
    Stabilizers st;
    st.mask_weight = SpatialField(g);
    const double cx = 0.5 * (g.inner_lo + g.inner_hi);
    const double half = 0.5 * (g.inner_hi - g.inner_lo);
    const double d_lo = band_lo * g.h_space;
    const double d_hi = band_hi * g.h_space;
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            // unsigned distance to the boundary of the inner square
            double d = std::abs(std::max(std::abs(g.x(i) - cx), std::abs(g.y(j) - cx)) - half);
            double w;
            if (d <= d_lo) w = 0.0;
            else if (d >= d_hi) w = 1.0;
            else w = 0.5 * (1.0 - std::cos(M_PI * (d - d_lo) / (d_hi - d_lo)));
            st.mask_weight.at(i, j) = w;
        }
    }

    st.psi_half = psi_half;
    const int side = 2 * psi_half + 1;
    st.psi.assign(static_cast<std::size_t>(side) * side, 0.0);
    const double sigma = psi_sigma_cells * g.h_space;
    double sum = 0.0;
    for (int a = -psi_half; a <= psi_half; ++a) {
        for (int b = -psi_half; b <= psi_half; ++b) {
            double r2 = (a * a + b * b) * g.h_space * g.h_space;
            double w = std::exp(-r2 / (2.0 * sigma * sigma));
            st.psi[static_cast<std::size_t>(a + psi_half) * side + (b + psi_half)] = w;
            sum += w;
        }
    }
    for (double& w : st.psi) w /= sum;
    return st;
}

double shrink(double r, double alpha) {
    double mag = std::abs(r) - alpha;
    return mag > 0.0 ? (r > 0.0 ? mag : -mag) : 0.0;
}

std::vector<double> shrink(const std::vector<double>& r, double alpha) {
    std::vector<double> out(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) out[k] = shrink(r[k], alpha);
    return out;
}

SpatialField shrink(const SpatialField& r, double alpha) {
    SpatialField out = r;
    for (double& v : out.v) v = shrink(v, alpha);
    return out;
}

SpatialField convolve_psi(const SpatialField& f, const Stabilizers& stab) {
    const int half = stab.psi_half;
    const int side = 2 * half + 1;
    SpatialField out(f.nx, f.ny, 0.0);
    for (int i = 0; i < f.nx; ++i) {
        for (int j = 0; j < f.ny; ++j) {
            double acc = 0.0, wsum = 0.0;
            for (int a = -half; a <= half; ++a) {
                int ii = i + a;
                if (ii < 0 || ii >= f.nx) continue;
                for (int b = -half; b <= half; ++b) {
                    int jj = j + b;
                    if (jj < 0 || jj >= f.ny) continue;
                    double w = stab.psi[static_cast<std::size_t>(a + half) * side + (b + half)];
                    acc += w * f.at(ii, jj);
                    wsum += w;
                }
            }
            out.at(i, j) = acc / wsum;
        }
    }
    return out;
}

SpatialField lambda_kappa(const ModelParams& params, const PrimalDualState& state,
                          const AdjointState& adj) {
    const SpaceTimeGrid& g = *state.rho.grid;
    SpatialField out(g.nx, g.ny, 0.0);
    for (int t = 1; t < g.nt; ++t) {
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                double rho = std::max(state.rho.at(t, i, j), kRhoVacuum);
                double m1 = state.m.cx.at(t, i, j);
                double m2 = state.m.cy.at(t, i, j);
                double kap = params.kappa.at(i, j);
                double k2 = kap * kap;
                double term = 0.5 / k2 * (m1 * m1 + m2 * m2) / (rho * rho) *
                                  adj.lambda_rho.at(t, i, j) -
                              1.0 / k2 *
                                  (m1 * adj.lambda_m.cx.at(t, i, j) +
                                   m2 * adj.lambda_m.cy.at(t, i, j)) /
                                  rho;
                out.at(i, j) += g.h_time * term;
            }
        }
    }
    return out;
}

std::vector<double> lambda_mu(const AdjointState& adj,
                              const std::vector<std::vector<double>>& a,
                              const FrequencySet& freqs, const FeatureTable& table) {
    const SpaceTimeGrid& g = *adj.lambda_rho.grid;
    const int r = freqs.r();
    std::vector<double> out(2 * r, 0.0);
    const double w = g.cell_area() * g.h_time;
    for (int t = 1; t < g.nt; ++t) {
        const double* lr = adj.lambda_rho.slice(t);
        for (int k = 0; k < r; ++k) {
            const double* ct = table.cos_t[k].data();
            const double* st = table.sin_t[k].data();
            double ac = 0.0, as = 0.0;
            for (int i = 0; i < g.nx - 1; ++i) {
                for (int j = 0; j < g.ny - 1; ++j) {
                    std::size_t p = g.sidx(i, j);
                    ac += ct[p] * lr[p];
                    as += st[p] * lr[p];
                }
            }
            out[2 * k] += w * ac * a[t][2 * k];
            out[2 * k + 1] += w * as * a[t][2 * k + 1];
        }
    }
    return out;
}

void update_kappa(ModelParams& params, SplittingState& splitting,
                  const SpatialField& grads, const Stabilizers& stab,
                  const SpaceTimeGrid& g) {
    const double thresh = params.alpha_kappa * params.gamma_kappa;
    SpatialField temp(g.nx, g.ny, 0.0);
    for (std::size_t p = 0; p < temp.v.size(); ++p) {
        double arg = 2.0 * params.kappa.v[p] - splitting.kappa_tilde.v[p] -
                     params.alpha_kappa * grads.v[p] - params.kappa0.v[p];
        double masked = stab.mask_weight.v[p] * shrink(arg, thresh);  // T_mask - kappa0
        splitting.kappa_tilde.v[p] += masked + params.kappa0.v[p] - params.kappa.v[p];
    }
    SpatialField smoothed = convolve_psi(splitting.kappa_tilde, stab);
    for (std::size_t p = 0; p < smoothed.v.size(); ++p)
        params.kappa.v[p] = std::max(params.eps1, smoothed.v[p]);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            if (!g.inside_inner(i, j)) params.kappa.at(i, j) = params.kappa0.at(i, j);
}

void update_mu(ModelParams& params, SplittingState& splitting,
               const std::vector<double>& grads) {
    const double thresh = params.alpha_mu * params.gamma_mu;
    std::vector<double> mu_exp = expand_mu(params.mu.mu);
    std::vector<double> mu0_exp = expand_mu(params.mu0);
    if (grads.size() != mu_exp.size())
        throw std::invalid_argument("update_mu: gradient length mismatch");
    for (std::size_t c = 0; c < mu_exp.size(); ++c) {
        double arg = 2.0 * mu_exp[c] - splitting.mu_tilde[c] -
                     params.alpha_mu * grads[c] - mu0_exp[c];
        double temp = shrink(arg, thresh) + mu0_exp[c];
        splitting.mu_tilde[c] += temp - mu_exp[c];
        mu_exp[c] = std::min(params.eps2, splitting.mu_tilde[c]);
    }
    params.mu.mu = project_mu(mu_exp);
}

}  // namespace mfg
