#include "mfg/boundary.hpp"

#include <cmath>
#include <stdexcept>

namespace mfg {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;
using Factor = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;

std::unique_ptr<Factor> factorize(int n, const Triplets& trip, const char* what) {
    Eigen::SparseMatrix<double> mat(n, n);
    mat.setFromTriplets(trip.begin(), trip.end());
    auto f = std::make_unique<Factor>();
    f->compute(mat);
    if (f->info() != Eigen::Success)
        throw std::runtime_error(std::string("BoundaryOps: factorization failed: ") + what);
    return f;
}

}  // namespace

BoundaryOps::BoundaryOps(const SpaceTimeGrid& g) : grid_(&g) {
    const int lo = g.i_lo, hi = g.i_hi;
    if (hi - lo < 2) throw std::invalid_argument("BoundaryOps: inner box too small");
    nin_ = hi - lo + 1;

    // Counterclockwise walk; each corner belongs to exactly one face.
    for (int i = lo; i < hi; ++i) nodes_.push_back({i, lo, 0.0, -1.0});   // south
    for (int j = lo; j < hi; ++j) nodes_.push_back({hi, j, 1.0, 0.0});    // east
    for (int i = hi; i > lo; --i) nodes_.push_back({i, hi, 0.0, 1.0});    // north
    for (int j = hi; j > lo; --j) nodes_.push_back({lo, j, -1.0, 0.0});   // west

    const std::size_t ns = g.n_space();
    inner_dir_index_.assign(ns, -1);
    outer_dir_index_.assign(ns, -1);
    inner_neu_index_.assign(ns, -1);
    outer_neu_index_.assign(ns, -1);
    int nid = 0, nod = 0, nin = 0, non = 0;
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            std::size_t p = g.sidx(i, j);
            bool strictly_in = g.inside_inner(i, j);
            bool in_closed = strictly_in || g.on_interface(i, j);
            if (strictly_in) inner_dir_index_[p] = nid++;
            if (!in_closed && i > 0 && i < g.nx - 1 && j > 0 && j < g.ny - 1)
                outer_dir_index_[p] = nod++;
            if (in_closed) inner_neu_index_[p] = nin++;
            if (!strictly_in) outer_neu_index_[p] = non++;
        }
    }
    inner_neu_n_ = nin;
    outer_neu_n_ = non;

    // Dirichlet systems: plain 5-point Laplacian on the unknowns; known
    // boundary values are moved to the right-hand side at solve time.
    auto assemble_dirichlet = [&](const std::vector<int>& index, int n, const char* what) {
        Triplets trip;
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                int row = index[g.sidx(i, j)];
                if (row < 0) continue;
                trip.emplace_back(row, row, 4.0);
                const int di[4] = {1, -1, 0, 0};
                const int dj[4] = {0, 0, 1, -1};
                for (int s = 0; s < 4; ++s) {
                    int col = index[g.sidx(i + di[s], j + dj[s])];
                    if (col >= 0) trip.emplace_back(row, col, -1.0);
                }
            }
        }
        return factorize(n, trip, what);
    };
    inner_dir_ = assemble_dirichlet(inner_dir_index_, nid, "inner Dirichlet");
    outer_dir_ = assemble_dirichlet(outer_dir_index_, nod, "outer Dirichlet");

    // Neumann systems: edge-based energy form, half-weight edges along each
    // subdomain boundary (second-order flux closure). The pure-Neumann matrix
    // is singular with constant nullspace; unknown 0 is pinned and removed,
    // which is exact once the right-hand side is projected to zero sum.
    auto assemble_neumann = [&](const std::vector<int>& index, int n,
                                auto edge_weight, const char* what) {
        Triplets trip;
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                int a = index[g.sidx(i, j)];
                if (a < 0) continue;
                // right and top edges only, each edge visited once
                const int di[2] = {1, 0};
                const int dj[2] = {0, 1};
                for (int s = 0; s < 2; ++s) {
                    int ii = i + di[s], jj = j + dj[s];
                    if (ii >= g.nx || jj >= g.ny) continue;
                    int b = index[g.sidx(ii, jj)];
                    if (b < 0) continue;
                    double c = edge_weight(i, j, s == 0);
                    // pinned unknown 0: drop its row and column
                    if (a != 0) trip.emplace_back(a - 1, a - 1, c);
                    if (b != 0) trip.emplace_back(b - 1, b - 1, c);
                    if (a != 0 && b != 0) {
                        trip.emplace_back(a - 1, b - 1, -c);
                        trip.emplace_back(b - 1, a - 1, -c);
                    }
                }
            }
        }
        return factorize(n - 1, trip, what);
    };
    auto inner_weight = [&](int i, int j, bool horizontal) {
        if (horizontal) return (j == lo || j == hi) ? 0.5 : 1.0;
        return (i == lo || i == hi) ? 0.5 : 1.0;
    };
    auto outer_weight = [&](int i, int j, bool horizontal) {
        if (horizontal) {
            if (j == 0 || j == g.ny - 1) return 0.5;
            if ((j == lo || j == hi) && i >= lo && i + 1 <= hi) return 0.5;
        } else {
            if (i == 0 || i == g.nx - 1) return 0.5;
            if ((i == lo || i == hi) && j >= lo && j + 1 <= hi) return 0.5;
        }
        return 1.0;
    };
    inner_neu_ = assemble_neumann(inner_neu_index_, inner_neu_n_, inner_weight,
                                  "inner Neumann");
    outer_neu_ = assemble_neumann(outer_neu_index_, outer_neu_n_, outer_weight,
                                  "outer Neumann");
}

BoundaryTrace BoundaryOps::trace(const ScalarField& rho, const VectorField& m) const {
    const SpaceTimeGrid& g = *grid_;
    BoundaryTrace tr(g.nt, nb());
    for (int t = 0; t < g.nt; ++t) {
        for (int b = 0; b < nb(); ++b) {
            const BoundaryNode& nd = nodes_[b];
            tr.rho(t, b) = rho.at(t, nd.i, nd.j);
            tr.flux(t, b) = m.cx.at(t, nd.i, nd.j) * nd.nx + m.cy.at(t, nd.i, nd.j) * nd.ny;
        }
    }
    return tr;
}

void BoundaryOps::dirichlet_slice(const double* values, SliceSolution& out) const {
    const SpaceTimeGrid& g = *grid_;
    SpatialField bdata(g.nx, g.ny, 0.0);
    for (int b = 0; b < nb(); ++b) bdata.at(nodes_[b].i, nodes_[b].j) = values[b];

    auto solve = [&](const std::vector<int>& index, Factor& fac, int n) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                int row = index[g.sidx(i, j)];
                if (row < 0) continue;
                const int di[4] = {1, -1, 0, 0};
                const int dj[4] = {0, 0, 1, -1};
                for (int s = 0; s < 4; ++s) {
                    int ii = i + di[s], jj = j + dj[s];
                    if (index[g.sidx(ii, jj)] < 0 && g.on_interface(ii, jj))
                        rhs[row] += bdata.at(ii, jj);
                }
            }
        }
        return Eigen::VectorXd(fac.solve(rhs));
    };

    const int lo = g.i_lo;
    Eigen::VectorXd uin = solve(inner_dir_index_, *inner_dir_,
                                static_cast<int>(inner_dir_->rows()));
    out.inner.assign(static_cast<std::size_t>(nin_) * nin_, 0.0);
    for (int i = g.i_lo; i <= g.i_hi; ++i) {
        for (int j = g.i_lo; j <= g.i_hi; ++j) {
            int id = inner_dir_index_[g.sidx(i, j)];
            double val = id >= 0 ? uin[id] : bdata.at(i, j);
            out.inner[static_cast<std::size_t>(i - lo) * nin_ + (j - lo)] = val;
        }
    }

    Eigen::VectorXd uout = solve(outer_dir_index_, *outer_dir_,
                                 static_cast<int>(outer_dir_->rows()));
    out.outer.assign(g.n_space(), 0.0);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            std::size_t p = g.sidx(i, j);
            int id = outer_dir_index_[p];
            if (id >= 0) out.outer[p] = uout[id];
            else if (g.on_interface(i, j)) out.outer[p] = bdata.at(i, j);
        }
    }
}

void BoundaryOps::neumann_slice(const double* flux, SliceSolution& out, double& mean_in,
                                double& mean_out) const {
    const SpaceTimeGrid& g = *grid_;
    const double h = g.h_space;

    // Compatibility: project the flux data to zero mean on the loop (the same
    // projection closes both subdomain problems since the outer system sees
    // the negated data on the shared interface and zero flux elsewhere).
    double mean = 0.0;
    for (int b = 0; b < nb(); ++b) mean += flux[b];
    mean /= nb();
    mean_in = mean;
    mean_out = -mean;

    auto solve = [&](const std::vector<int>& index, Factor& fac, int n, double sign) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n - 1);
        double r0 = 0.0;
        for (int b = 0; b < nb(); ++b) {
            int id = index[g.sidx(nodes_[b].i, nodes_[b].j)];
            double val = sign * (flux[b] - mean) * h;
            if (id == 0) r0 += val;
            else rhs[id - 1] += val;
        }
        (void)r0;  // consistent by construction: entries sum to zero
        Eigen::VectorXd red = fac.solve(rhs);
        // reinsert the pinned unknown and fix the zero-mean gauge
        Eigen::VectorXd full(n);
        full[0] = 0.0;
        full.tail(n - 1) = red;
        full.array() -= full.mean();
        return full;
    };

    const int lo = g.i_lo;
    Eigen::VectorXd uin = solve(inner_neu_index_, *inner_neu_, inner_neu_n_, 1.0);
    out.inner.assign(static_cast<std::size_t>(nin_) * nin_, 0.0);
    for (int i = g.i_lo; i <= g.i_hi; ++i)
        for (int j = g.i_lo; j <= g.i_hi; ++j)
            out.inner[static_cast<std::size_t>(i - lo) * nin_ + (j - lo)] =
                uin[inner_neu_index_[g.sidx(i, j)]];

    Eigen::VectorXd uout = solve(outer_neu_index_, *outer_neu_, outer_neu_n_, -1.0);
    out.outer.assign(g.n_space(), 0.0);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            std::size_t p = g.sidx(i, j);
            if (outer_neu_index_[p] >= 0) out.outer[p] = uout[outer_neu_index_[p]];
        }
    }
}

ScalarField BoundaryOps::dirichlet_extend(const std::vector<double>& values, int nt) const {
    const SpaceTimeGrid& g = *grid_;
    if (values.size() != static_cast<std::size_t>(nt) * nb())
        throw std::invalid_argument("dirichlet_extend: bad data length");
    ScalarField eta(g);
    SliceSolution sol;
    const int lo = g.i_lo;
    for (int t = 0; t < nt; ++t) {
        dirichlet_slice(values.data() + static_cast<std::size_t>(t) * nb(), sol);
        double* sl = eta.slice(t);
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                std::size_t p = g.sidx(i, j);
                bool in_closed = g.inside_inner(i, j) || g.on_interface(i, j);
                sl[p] = in_closed
                            ? sol.inner[static_cast<std::size_t>(i - lo) * nin_ + (j - lo)]
                            : sol.outer[p];
            }
        }
    }
    return eta;
}

NeumannExtension BoundaryOps::neumann_extend(const std::vector<double>& flux, int nt) const {
    const SpaceTimeGrid& g = *grid_;
    if (flux.size() != static_cast<std::size_t>(nt) * nb())
        throw std::invalid_argument("neumann_extend: bad data length");
    NeumannExtension ext;
    ext.xi = ScalarField(g);
    ext.grad_xi = VectorField(g);
    ext.removed_mean_inner.resize(nt);
    ext.removed_mean_outer.resize(nt);

    SliceSolution sol;
    const int lo = g.i_lo, hi = g.i_hi;
    const double h = g.h_space;
    std::vector<double> ogx(g.n_space()), ogy(g.n_space());
    for (int t = 0; t < nt; ++t) {
        neumann_slice(flux.data() + static_cast<std::size_t>(t) * nb(), sol,
                      ext.removed_mean_inner[t], ext.removed_mean_outer[t]);
        double* sl = ext.xi.slice(t);
        double* gx = ext.grad_xi.cx.slice(t);
        double* gy = ext.grad_xi.cy.slice(t);

        // outer subdomain: full-grid differencing, values kept strictly outside
        gradient_slice(g, sol.outer.data(), ogx.data(), ogy.data());
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                std::size_t p = g.sidx(i, j);
                if (g.inside_inner(i, j) || g.on_interface(i, j)) continue;
                sl[p] = sol.outer[p];
                gx[p] = ogx[p];
                gy[p] = ogy[p];
            }
        }

        // inner subdomain (interface included): one-sided at the subgrid edge
        auto iv = [&](int i, int j) {
            return sol.inner[static_cast<std::size_t>(i - lo) * nin_ + (j - lo)];
        };
        for (int i = lo; i <= hi; ++i) {
            for (int j = lo; j <= hi; ++j) {
                std::size_t p = g.sidx(i, j);
                sl[p] = iv(i, j);
                if (i == lo) gx[p] = (iv(i + 1, j) - iv(i, j)) / h;
                else if (i == hi) gx[p] = (iv(i, j) - iv(i - 1, j)) / h;
                else gx[p] = (iv(i + 1, j) - iv(i - 1, j)) / (2 * h);
                if (j == lo) gy[p] = (iv(i, j + 1) - iv(i, j)) / h;
                else if (j == hi) gy[p] = (iv(i, j) - iv(i, j - 1)) / h;
                else gy[p] = (iv(i, j + 1) - iv(i, j - 1)) / (2 * h);
            }
        }
    }
    return ext;
}

double BoundaryOps::inner_box_energy_product(const SpatialField& u,
                                             const SpatialField& w) const {
    const SpaceTimeGrid& g = *grid_;
    const int lo = g.i_lo, hi = g.i_hi;
    double acc = 0.0;
    for (int i = lo; i <= hi; ++i) {
        for (int j = lo; j <= hi; ++j) {
            if (i < hi) {
                double c = (j == lo || j == hi) ? 0.5 : 1.0;
                acc += c * (u.at(i + 1, j) - u.at(i, j)) * (w.at(i + 1, j) - w.at(i, j));
            }
            if (j < hi) {
                double c = (i == lo || i == hi) ? 0.5 : 1.0;
                acc += c * (u.at(i, j + 1) - u.at(i, j)) * (w.at(i, j + 1) - w.at(i, j));
            }
        }
    }
    return acc;
}

double BoundaryOps::seminorm_h_half(const std::vector<double>& values) const {
    if (values.size() != static_cast<std::size_t>(nb()))
        throw std::invalid_argument("seminorm_h_half: expected one slice of data");
    SliceSolution sol;
    dirichlet_slice(values.data(), sol);
    const SpaceTimeGrid& g = *grid_;
    SpatialField u(g.nx, g.ny, 0.0);
    const int lo = g.i_lo;
    for (int i = g.i_lo; i <= g.i_hi; ++i)
        for (int j = g.i_lo; j <= g.i_hi; ++j)
            u.at(i, j) = sol.inner[static_cast<std::size_t>(i - lo) * nin_ + (j - lo)];
    return inner_box_energy_product(u, u);
}

double BoundaryOps::seminorm_h_minus_half(const std::vector<double>& flux) const {
    if (flux.size() != static_cast<std::size_t>(nb()))
        throw std::invalid_argument("seminorm_h_minus_half: expected one slice of data");
    SliceSolution sol;
    double mi = 0.0, mo = 0.0;
    neumann_slice(flux.data(), sol, mi, mo);
    // b^T xi with b the projected-flux load vector (equals xi^T L xi)
    const SpaceTimeGrid& g = *grid_;
    const int lo = g.i_lo;
    double acc = 0.0;
    for (int b = 0; b < nb(); ++b) {
        const BoundaryNode& nd = nodes_[b];
        double xi = sol.inner[static_cast<std::size_t>(nd.i - lo) * nin_ + (nd.j - lo)];
        acc += (flux[b] - mi) * g.h_space * xi;
    }
    return acc;
}

}  // namespace mfg
