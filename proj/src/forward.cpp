#include "mfg/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mfg {

namespace {

constexpr double kRhoVacuum = 1e-7;  // below this the kinetic block is treated as inactive

// a_k . zeta(x) on one slice (no cell mask applied).
void azeta_slice(const SpaceTimeGrid& g, const FeatureTable& table,
                 const std::vector<double>& mu, const std::vector<double>& ak,
                 double* out) {
    std::fill(out, out + g.n_space(), 0.0);
    for (int k = 0; k < table.r; ++k) {
        double wc = mu[k] * ak[2 * k];
        double ws = mu[k] * ak[2 * k + 1];
        if (wc == 0.0 && ws == 0.0) continue;
        const double* ct = table.cos_t[k].data();
        const double* st = table.sin_t[k].data();
        for (std::size_t p = 0; p < g.n_space(); ++p) out[p] += wc * ct[p] + ws * st[p];
    }
}

inline bool in_cell_support(const SpaceTimeGrid& g, int i, int j) {
    return i < g.nx - 1 && j < g.ny - 1;
}

}  // namespace

void EventData::validate(const SpaceTimeGrid& grid) const {
    if (rho0.nx != grid.nx || g.nx != grid.nx)
        throw std::invalid_argument("event: field shape mismatch");
    double mass = integrate_slice(grid, rho0.v.data());
    if (std::abs(mass - 1.0) > 1e-8)
        throw std::invalid_argument("event: rho0 mass " + std::to_string(mass) + " != 1");
    for (double x : rho0.v)
        if (!(x >= 0.0)) throw std::invalid_argument("event: rho0 must be nonnegative");
}

PrimalDualState PrimalDualState::cold_start(const SpaceTimeGrid& g, const EventData& ev,
                                            int r) {
    PrimalDualState s;
    s.rho = ScalarField(g);
    s.m = VectorField(g);
    s.phi = ScalarField(g);
    s.a.assign(g.nt, std::vector<double>(2 * r, 0.0));
    double mass = node_sum_slice(g, ev.rho0.v.data());
    double uniform = mass / (g.cell_area() * static_cast<double>(g.n_space()));
    for (int k = 0; k < g.nt; ++k) {
        double* rp = s.rho.slice(k);
        double* pp = s.phi.slice(k);
        for (std::size_t p = 0; p < g.n_space(); ++p) {
            rp[p] = (k == 0) ? ev.rho0.v[p] : uniform;
            pp[p] = ev.g.v[p];
        }
    }
    return s;
}

SpacetimePoisson::SpacetimePoisson(const SpaceTimeGrid& g) : grid_(&g), nf_(g.nt - 1) {
    auto neumann_1d = [](int n, double h) {
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            L(i, i) = (i == 0 || i == n - 1) ? 1.0 : 2.0;
            if (i > 0) L(i, i - 1) = -1.0;
            if (i < n - 1) L(i, i + 1) = -1.0;
        }
        return (L / (h * h)).eval();
    };
    Eigen::MatrixXd Lt = Eigen::MatrixXd::Zero(nf_, nf_);
    for (int i = 0; i < nf_; ++i) {
        Lt(i, i) = (i == 0) ? 1.0 : 2.0;
        if (i > 0) Lt(i, i - 1) = -1.0;
        if (i < nf_ - 1) Lt(i, i + 1) = -1.0;
    }
    if (nf_ == 1) Lt(0, 0) = 1.0;
    Lt /= g.h_time * g.h_time;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> et(Lt);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ex(neumann_1d(g.nx, g.h_space));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ey(neumann_1d(g.ny, g.h_space));
    qt_ = et.eigenvectors();
    lt_ = et.eigenvalues();
    qx_ = ex.eigenvectors();
    lx_ = ex.eigenvalues();
    qy_ = ey.eigenvectors();
    ly_ = ey.eigenvalues();
}

void SpacetimePoisson::solve(const std::vector<double>& rhs, std::vector<double>& out) const {
    const SpaceTimeGrid& g = *grid_;
    const int nx = g.nx, ny = g.ny, nf = nf_;
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    out = rhs;
    Eigen::Map<RowMat> all(out.data(), static_cast<long>(nf) * nx, ny);
    all = (all * qy_).eval();
    for (int k = 0; k < nf; ++k) {
        Eigen::Map<RowMat> m(out.data() + static_cast<std::size_t>(k) * nx * ny, nx, ny);
        m = (qx_.transpose() * m).eval();
    }
    Eigen::Map<RowMat> tm(out.data(), nf, static_cast<long>(nx) * ny);
    tm = (qt_.transpose() * tm).eval();
    for (int k = 0; k < nf; ++k)
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j)
                out[(static_cast<std::size_t>(k) * nx + i) * ny + j] /=
                    lt_[k] + lx_[i] + ly_[j];
    tm = (qt_ * tm).eval();
    for (int k = 0; k < nf; ++k) {
        Eigen::Map<RowMat> m(out.data() + static_cast<std::size_t>(k) * nx * ny, nx, ny);
        m = (qx_ * m).eval();
    }
    all = (all * qy_.transpose()).eval();
}

double lagrangian(const EventData& ev, const PrimalDualState& s, const ModelParams& p,
                  const ForwardContext& ctx) {
    const SpaceTimeGrid& g = *ctx.grid;
    const double w = g.cell_area(), wt = g.h_time;
    double acc = 0.0;
    // -(1/2) int |a|^2 dt
    for (int k = 1; k < g.nt; ++k)
        for (double ak : s.a[k]) acc -= 0.5 * wt * ak * ak;
    // int phi(.,0) rho0
    {
        const double* phi0 = s.phi.slice(0);
        for (std::size_t q = 0; q < g.n_space(); ++q) acc += w * phi0[q] * ev.rho0.v[q];
    }
    std::vector<double> lap(g.n_space()), gx(g.n_space()), gy(g.n_space()),
        az(g.n_space());
    for (int k = 1; k < g.nt; ++k) {
        const double* rk = s.rho.slice(k);
        const double* mk_x = s.m.cx.slice(k);
        const double* mk_y = s.m.cy.slice(k);
        const double* pk = s.phi.slice(k);
        const double* pk1 = s.phi.slice(k - 1);
        laplacian_slice(g, pk1, lap.data());
        gradient_slice(g, pk1, gx.data(), gy.data());
        azeta_slice(g, ctx.table, p.mu.mu, s.a[k], az.data());
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                std::size_t q = g.sidx(i, j);
                double rho = rk[q];
                if (rho < 0.0) throw std::domain_error("lagrangian: rho < 0");
                double kappa = p.kappa.at(i, j);
                double m2 = mk_x[q] * mk_x[q] + mk_y[q] * mk_y[q];
                if (rho == 0.0 && m2 > 0.0) return std::numeric_limits<double>::infinity();
                // coupling: rho (phi_k - phi_{k-1}) + h_t (nu rho lap + m.grad)
                acc += w * (rho * (pk[q] - pk1[q]) +
                            wt * (p.nu * rho * lap[q] + mk_x[q] * gx[q] + mk_y[q] * gy[q]));
                if (rho > 0.0) acc += w * wt * m2 / (2.0 * kappa * rho);
                if (in_cell_support(g, i, j)) acc += w * wt * rho * az[q];
            }
        }
    }
    return acc;
}

std::pair<ScalarField, VectorField> grad_rho_m(const EventData& /*ev*/,
                                               const PrimalDualState& s,
                                               const ModelParams& p,
                                               const ForwardContext& ctx) {
    const SpaceTimeGrid& g = *ctx.grid;
    ScalarField grho(g);
    VectorField gm(g);
    std::vector<double> lap(g.n_space()), gx(g.n_space()), gy(g.n_space()),
        az(g.n_space());
    for (int k = 1; k < g.nt; ++k) {
        const double* rk = s.rho.slice(k);
        const double* mk_x = s.m.cx.slice(k);
        const double* mk_y = s.m.cy.slice(k);
        const double* pk = s.phi.slice(k);
        const double* pk1 = s.phi.slice(k - 1);
        laplacian_slice(g, pk1, lap.data());
        gradient_slice(g, pk1, gx.data(), gy.data());
        azeta_slice(g, ctx.table, p.mu.mu, s.a[k], az.data());
        double* gr = grho.slice(k);
        double* gmx = gm.cx.slice(k);
        double* gmy = gm.cy.slice(k);
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                std::size_t q = g.sidx(i, j);
                double rho = rk[q];
                if (rho <= 0.0) throw std::domain_error("grad_rho_m: rho <= 0");
                double kappa = p.kappa.at(i, j);
                double m2 = mk_x[q] * mk_x[q] + mk_y[q] * mk_y[q];
                gr[q] = (pk[q] - pk1[q]) / g.h_time + p.nu * lap[q] -
                        m2 / (2.0 * kappa * rho * rho) +
                        (in_cell_support(g, i, j) ? az[q] : 0.0);
                gmx[q] = gx[q] + mk_x[q] / (kappa * rho);
                gmy[q] = gy[q] + mk_y[q] / (kappa * rho);
            }
        }
    }
    return {std::move(grho), std::move(gm)};
}

std::pair<DualA, ScalarField> grad_a_phi(const EventData& /*ev*/, const PrimalDualState& s,
                                         const ModelParams& p, const ForwardContext& ctx) {
    const SpaceTimeGrid& g = *ctx.grid;
    DualA ga(g.nt, std::vector<double>(2 * ctx.table.r, 0.0));
    for (int k = 1; k < g.nt; ++k) {
        std::vector<double> ik = interaction_field(g, s.rho.slice(k), p.mu, ctx.table);
        for (std::size_t c = 0; c < ik.size(); ++c) ga[k][c] = -s.a[k][c] + ik[c];
    }
    ScalarField gphi(g);
    std::vector<double> lap(g.n_space()), dv(g.n_space());
    for (int j = 0; j < g.nt - 1; ++j) {
        const double* r0 = s.rho.slice(j);
        const double* r1 = s.rho.slice(j + 1);
        laplacian_slice(g, r1, lap.data());
        divergence_slice(g, s.m.cx.slice(j + 1), s.m.cy.slice(j + 1), dv.data());
        double* o = gphi.slice(j);
        for (std::size_t q = 0; q < g.n_space(); ++q)
            o[q] = -(r1[q] - r0[q]) / g.h_time + p.nu * lap[q] - dv[q];
    }
    return {std::move(ga), std::move(gphi)};
}

std::pair<ScalarField, VectorField> prox_rho_m(const EventData& ev,
                                               const PrimalDualState& s,
                                               const ModelParams& p, const StepSizes& st,
                                               const ForwardContext& ctx,
                                               const ScalarField& phi_bar,
                                               const DualA& a_bar, bool conserve_mass,
                                               std::vector<double>* nu_out) {
    const SpaceTimeGrid& g = *ctx.grid;
    ScalarField rho_new(g);
    VectorField m_new(g);
    rho_new.set_slice(0, ev.rho0);
    std::vector<double> lap(g.n_space()), gx(g.n_space()), gy(g.n_space()),
        az(g.n_space());
    const double ar = st.alpha_rho, am = st.alpha_m;
    double mass0 = 0.0;
    for (double v : ev.rho0.v) mass0 += v;
    if (nu_out) nu_out->assign(g.nt, 0.0);
    for (int k = 1; k < g.nt; ++k) {
        const double* rk = s.rho.slice(k);
        const double* mk_x = s.m.cx.slice(k);
        const double* mk_y = s.m.cy.slice(k);
        const double* pk = phi_bar.slice(k);
        const double* pk1 = phi_bar.slice(k - 1);
        laplacian_slice(g, pk1, lap.data());
        gradient_slice(g, pk1, gx.data(), gy.data());
        azeta_slice(g, ctx.table, p.mu.mu, a_bar[k], az.data());
        double* ro = rho_new.slice(k);
        double* mox = m_new.cx.slice(k);
        double* moy = m_new.cy.slice(k);

        // per-node scalar solve with the slice multiplier nu added to b;
        // returns rho and d rho / d nu (via the implicit function theorem);
        // x0 warm-starts the safeguarded Newton (the current iterate, or the
        // previous mass-projection pass)
        auto solve_node = [&](int i, int j, double nu, double x0, double& drho_dnu) {
            std::size_t q = g.sidx(i, j);
            double kappa = p.kappa.at(i, j);
            double rn = rk[q];
            double b = (pk[q] - pk1[q]) / g.h_time + p.nu * lap[q] +
                       (in_cell_support(g, i, j) ? az[q] : 0.0) + nu;
            double qx_ = mk_x[q] - am * gx[q];
            double qy_ = mk_y[q] - am * gy[q];
            double q2 = qx_ * qx_ + qy_ * qy_;
            auto gp = [&](double rho) {
                double denom = kappa * rho + am;
                return b + (rho - rn) / ar - kappa * q2 / (2.0 * denom * denom);
            };
            auto gpd = [&](double rho) {
                double denom = kappa * rho + am;
                return 1.0 / ar + kappa * kappa * q2 / (denom * denom * denom);
            };
            double rho_star;
            if (gp(0.0) >= 0.0) {
                rho_star = 0.0;
                drho_dnu = 0.0;
            } else {
                double hi = std::max({rn, x0, 1.0});
                int expand = 0;
                while (gp(hi) < 0.0) {
                    hi *= 2.0;
                    if (++expand > 200)
                        throw std::runtime_error(
                            "prox_rho_m: no bracket at node (" + std::to_string(i) +
                            "," + std::to_string(j) + "), slice " + std::to_string(k));
                }
                double lo = 0.0;
                double x = (x0 > 0.0 && x0 < hi) ? x0 : 0.5 * hi;
                bool done = false;
                for (int it = 0; it < 120; ++it) {
                    double f = gp(x);
                    if (std::abs(f) < 1e-13 * std::max(1.0, std::abs(b))) {
                        done = true;
                        break;
                    }
                    if (f > 0.0) hi = x; else lo = x;
                    double xn = x - f / gpd(x);
                    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
                    if (std::abs(xn - x) < 1e-15 * std::max(1.0, x)) { x = xn; done = true; break; }
                    x = xn;
                }
                if (!done && hi - lo > 1e-10 * std::max(1.0, hi))
                    throw std::runtime_error(
                        "prox_rho_m: root finder stalled at node (" + std::to_string(i) +
                        "," + std::to_string(j) + "), slice " + std::to_string(k));
                rho_star = x;
                drho_dnu = -1.0 / gpd(x);
            }
            return rho_star;
        };

        auto solve_slice = [&](double nu, bool warm, double& dmass_dnu) {
            double mass = 0.0;
            dmass_dnu = 0.0;
            for (int i = 0; i < g.nx; ++i) {
                for (int j = 0; j < g.ny; ++j) {
                    std::size_t q = g.sidx(i, j);
                    double dr;
                    double rho = solve_node(i, j, nu, warm ? ro[q] : rk[q], dr);
                    ro[q] = rho;
                    mass += rho;
                    dmass_dnu += dr;
                }
            }
            return mass;
        };

        // conserve_mass: project the slice onto {sum rho = sum rho0} by the
        // exact Lagrange multiplier (prox of the objective plus the affine
        // indicator), found by Newton on the scalar mass equation. The
        // multiplier vanishes at stationarity, so the constrained and
        // unconstrained saddle points coincide.
        double nu = 0.0, dmass;
        double mass = solve_slice(nu, false, dmass);
        if (conserve_mass) {
            for (int outer = 0; outer < 60; ++outer) {
                if (std::abs(mass - mass0) < 1e-12 * std::max(1.0, mass0)) break;
                if (dmass >= -1e-300) break;  // fully degenerate slice
                nu -= (mass - mass0) / dmass;
                mass = solve_slice(nu, true, dmass);
            }
        }
        if (nu_out) (*nu_out)[k] = nu;

        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                std::size_t q = g.sidx(i, j);
                double kappa = p.kappa.at(i, j);
                double qx_ = mk_x[q] - am * gx[q];
                double qy_ = mk_y[q] - am * gy[q];
                double denom = kappa * ro[q] + am;
                mox[q] = kappa * ro[q] * qx_ / denom;
                moy[q] = kappa * ro[q] * qy_ / denom;
            }
        }
    }
    return {std::move(rho_new), std::move(m_new)};
}

ScalarField prox_phi(const EventData& ev, const PrimalDualState& s, const ModelParams& p,
                     const StepSizes& st, const ForwardContext& ctx) {
    const SpaceTimeGrid& g = *ctx.grid;
    const int nf = g.nt - 1;
    std::vector<double> rhs(static_cast<std::size_t>(nf) * g.n_space());
    std::vector<double> lap(g.n_space()), dv(g.n_space());
    for (int j = 0; j < nf; ++j) {
        const double* r0 = s.rho.slice(j);
        const double* r1 = s.rho.slice(j + 1);
        laplacian_slice(g, r1, lap.data());
        divergence_slice(g, s.m.cx.slice(j + 1), s.m.cy.slice(j + 1), dv.data());
        double* o = rhs.data() + static_cast<std::size_t>(j) * g.n_space();
        for (std::size_t q = 0; q < g.n_space(); ++q)
            o[q] = (r1[q] - r0[q]) / g.h_time - p.nu * lap[q] + dv[q];
    }
    std::vector<double> delta;
    ctx.poisson.solve(rhs, delta);
    ScalarField out(g);
    for (int j = 0; j < nf; ++j) {
        const double* pc = s.phi.slice(j);
        const double* d = delta.data() + static_cast<std::size_t>(j) * g.n_space();
        double* o = out.slice(j);
        for (std::size_t q = 0; q < g.n_space(); ++q) o[q] = pc[q] - st.alpha_phi * d[q];
    }
    out.set_slice(g.nt - 1, ev.g);
    return out;
}

DualA prox_a(const PrimalDualState& s, const ModelParams& p, const StepSizes& st,
             const ForwardContext& ctx, const ScalarField& rho_new) {
    const SpaceTimeGrid& g = *ctx.grid;
    DualA out(g.nt, std::vector<double>(2 * ctx.table.r, 0.0));
    for (int k = 1; k < g.nt; ++k) {
        std::vector<double> ik = interaction_field(g, rho_new.slice(k), p.mu, ctx.table);
        for (std::size_t c = 0; c < ik.size(); ++c)
            out[k][c] = (s.a[k][c] + st.alpha_a * ik[c]) / (1.0 + st.alpha_a);
    }
    return out;
}

ScalarField extrapolate(const ScalarField& current, const ScalarField& previous) {
    ScalarField out = current;
    for (std::size_t q = 0; q < out.v.size(); ++q) out.v[q] = 2.0 * current.v[q] - previous.v[q];
    return out;
}

DualA extrapolate(const DualA& current, const DualA& previous) {
    DualA out = current;
    for (std::size_t k = 0; k < out.size(); ++k)
        for (std::size_t c = 0; c < out[k].size(); ++c)
            out[k][c] = 2.0 * current[k][c] - previous[k][c];
    return out;
}

double primal_dual_gap(const EventData& ev, const PrimalDualState& s,
                       const ModelParams& p, const ForwardContext& ctx) {
    const SpaceTimeGrid& g = *ctx.grid;
    const double w = g.cell_volume(), wt = g.h_time;
    double gap = 0.0;
    std::vector<double> lap(g.n_space()), gx(g.n_space()), gy(g.n_space()),
        az(g.n_space()), dv(g.n_space());
    // (rho, m) block, projected onto the rho >= 0 constraint
    for (int k = 1; k < g.nt; ++k) {
        const double* rk = s.rho.slice(k);
        const double* mk_x = s.m.cx.slice(k);
        const double* mk_y = s.m.cy.slice(k);
        const double* pk = s.phi.slice(k);
        const double* pk1 = s.phi.slice(k - 1);
        laplacian_slice(g, pk1, lap.data());
        gradient_slice(g, pk1, gx.data(), gy.data());
        azeta_slice(g, ctx.table, p.mu.mu, s.a[k], az.data());
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                std::size_t q = g.sidx(i, j);
                double rho = rk[q];
                double kappa = p.kappa.at(i, j);
                double base = (pk[q] - pk1[q]) / g.h_time + p.nu * lap[q] +
                              (in_cell_support(g, i, j) ? az[q] : 0.0);
                if (rho > kRhoVacuum) {
                    double m2 = mk_x[q] * mk_x[q] + mk_y[q] * mk_y[q];
                    double d1 = base - m2 / (2.0 * kappa * rho * rho);
                    double d2x = gx[q] + mk_x[q] / (kappa * rho);
                    double d2y = gy[q] + mk_y[q] / (kappa * rho);
                    gap += w * (d1 * d1 + d2x * d2x + d2y * d2y);
                } else {
                    double viol = std::min(base, 0.0);
                    gap += w * viol * viol;
                }
            }
        }
    }
    // (a, phi) block
    for (int k = 1; k < g.nt; ++k) {
        std::vector<double> ik = interaction_field(g, s.rho.slice(k), p.mu, ctx.table);
        for (std::size_t c = 0; c < ik.size(); ++c) {
            double d = ik[c] - s.a[k][c];
            gap += wt * d * d;
        }
    }
    for (int j = 0; j < g.nt - 1; ++j) {
        const double* r0 = s.rho.slice(j);
        const double* r1 = s.rho.slice(j + 1);
        laplacian_slice(g, r1, lap.data());
        divergence_slice(g, s.m.cx.slice(j + 1), s.m.cy.slice(j + 1), dv.data());
        for (std::size_t q = 0; q < g.n_space(); ++q) {
            double d = -(r1[q] - r0[q]) / g.h_time + p.nu * lap[q] - dv[q];
            gap += w * d * d;
        }
    }
    (void)ev;
    return gap;
}

double mass_drift(const EventData& ev, const PrimalDualState& s) {
    const SpaceTimeGrid& g = *s.rho.grid;
    double m0 = node_sum_slice(g, ev.rho0.v.data());
    double drift = 0.0;
    for (int k = 0; k < g.nt; ++k)
        drift = std::max(drift, std::abs(node_sum_slice(g, s.rho.slice(k)) - m0));
    return drift;
}

ForwardResult solve_forward(const EventData& ev, const ModelParams& p,
                            PrimalDualState init, const ForwardOptions& opt,
                            const ForwardContext& ctx) {
    const SpaceTimeGrid& g = *ctx.grid;
    ForwardResult res;
    res.state = std::move(init);
    PrimalDualState& s = res.state;
    s.rho.set_slice(0, ev.rho0);
    s.phi.set_slice(g.nt - 1, ev.g);
    for (auto& ak : s.a[0]) ak = 0.0;
    ScalarField phi_prev = s.phi;
    DualA a_prev = s.a;
    StepSizes st = opt.steps;
    double best_gap = std::numeric_limits<double>::infinity();
    int since_improve = 0, backoffs = 0;
    // The gap evaluation costs a sizable fraction of a sweep, so far from
    // tolerance it is sampled only every few sweeps.
    int check_every = 1, since_check = 0;
    for (int it = 0; it <= opt.max_iter; ++it) {
        if (since_check == 0 || it == opt.max_iter) {
            int stride = since_check == 0 ? check_every : since_check;
            res.gap = primal_dual_gap(ev, s, p, ctx);
            res.drift = mass_drift(ev, s);
            res.iterations = it;
            if (opt.gap_trace)
                opt.gap_trace->push_back({static_cast<double>(it), res.gap, res.drift});
            if (res.gap < opt.e_tol && res.drift < opt.drift_tol) {
                res.converged = true;
                return res;
            }
            if (it == opt.max_iter) break;
            if (res.gap < 0.98 * best_gap) {
                best_gap = res.gap;
                since_improve = 0;
            } else if ((since_improve += stride) >= opt.stagnation_window &&
                       backoffs < opt.max_backoffs) {
                st.alpha_rho *= 0.5;
                st.alpha_m *= 0.5;
                st.alpha_phi *= 0.5;
                st.alpha_a *= 0.5;
                ++backoffs;
                since_improve = 0;
            }
            check_every = res.gap > 100.0 * opt.e_tol ? 8
                          : res.gap > 10.0 * opt.e_tol ? 2
                                                       : 1;
            since_check = check_every;
        }
        --since_check;
        ScalarField phi_bar = extrapolate(s.phi, phi_prev);
        DualA a_bar = extrapolate(s.a, a_prev);
        std::vector<double> nu;
        auto [rho_n, m_n] = prox_rho_m(ev, s, p, st, ctx, phi_bar, a_bar,
                                       /*conserve_mass=*/true, &nu);
        s.rho = std::move(rho_n);
        s.m = std::move(m_n);
        // Fold the mass multipliers back into phi as a cumulative shift of its
        // constant spatial mode (the terminal slice stays pinned). The mass
        // projection zeroes the constant mode of the Fokker-Planck residual,
        // so prox_phi alone would leave that mode of phi frozen; nu is
        // exactly its missing update. Shifting phi and phi_prev by the same
        // amount keeps the extrapolation consistent.
        {
            std::vector<double> shift(g.nt, 0.0);
            for (int k = g.nt - 2; k >= 0; --k) shift[k] = shift[k + 1] - g.h_time * nu[k + 1];
            for (int k = 0; k < g.nt - 1; ++k) {
                if (shift[k] == 0.0) continue;
                double* pp = s.phi.slice(k);
                double* qq = phi_prev.slice(k);
                for (std::size_t q = 0; q < g.n_space(); ++q) {
                    pp[q] += shift[k];
                    qq[q] += shift[k];
                }
            }
        }
        ScalarField phi_n = prox_phi(ev, s, p, st, ctx);
        DualA a_n = prox_a(s, p, st, ctx, s.rho);
        phi_prev = std::move(s.phi);
        a_prev = std::move(s.a);
        s.phi = std::move(phi_n);
        s.a = std::move(a_n);
    }
    res.converged = false;
    return res;
}

}  // namespace mfg
