#include "mfg/grid.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

namespace mfg {

namespace {

int checked_count(double lo, double hi, double h, const char* what) {
    double q = (hi - lo) / h;
    double r = std::round(q);
    if (std::abs(q - r) > 1e-9) {
        throw std::invalid_argument(std::string(what) +
                                    ": extent is not an integer multiple of the step");
    }
    return static_cast<int>(r) + 1;
}

int grid_line_index(double coord, double lo, double h, const char* what) {
    double q = (coord - lo) / h;
    double r = std::round(q);
    if (std::abs(q - r) > 1e-9) {
        throw std::invalid_argument(std::string(what) + ": inner box edge is off-grid");
    }
    return static_cast<int>(r);
}

}  // namespace

SpaceTimeGrid SpaceTimeGrid::make(double x_min, double x_max, double t_max,
                                  double h_space, double h_time,
                                  double inner_lo, double inner_hi) {
    if (h_space <= 0 || h_time <= 0) throw std::invalid_argument("grid: steps must be positive");
    SpaceTimeGrid g;
    g.x_min = g.y_min = x_min;
    g.x_max = g.y_max = x_max;
    g.t_max = t_max;
    g.h_space = h_space;
    g.h_time = h_time;
    g.inner_lo = inner_lo;
    g.inner_hi = inner_hi;
    g.nx = checked_count(x_min, x_max, h_space, "grid x");
    g.ny = g.nx;
    g.nt = checked_count(0.0, t_max, h_time, "grid t");
    g.i_lo = grid_line_index(inner_lo, x_min, h_space, "inner box lo");
    g.i_hi = grid_line_index(inner_hi, x_min, h_space, "inner box hi");
    if (g.i_lo <= 0 || g.i_hi >= g.nx - 1 || g.i_lo >= g.i_hi) {
        throw std::invalid_argument("grid: inner box must be strictly inside the domain");
    }
    return g;
}

std::string SpaceTimeGrid::hash() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g",
                  x_min, x_max, t_max, h_space, h_time, inner_lo, inner_hi);
    return std::to_string(std::hash<std::string>{}(buf));
}

SpatialField ScalarField::slice_copy(int k) const {
    SpatialField s(grid->nx, grid->ny);
    const double* p = slice(k);
    std::copy(p, p + grid->n_space(), s.v.begin());
    return s;
}

void ScalarField::set_slice(int k, const SpatialField& s) {
    std::copy(s.v.begin(), s.v.end(), slice(k));
}

void gradient_slice(const SpaceTimeGrid& g, const double* f, double* gx, double* gy) {
    const int nx = g.nx, ny = g.ny;
    const double inv2h = 0.5 / g.h_space, invh = 1.0 / g.h_space;
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            std::size_t p = g.sidx(i, j);
            if (i == 0)
                gx[p] = (f[g.sidx(1, j)] - f[g.sidx(0, j)]) * invh;
            else if (i == nx - 1)
                gx[p] = (f[g.sidx(nx - 1, j)] - f[g.sidx(nx - 2, j)]) * invh;
            else
                gx[p] = (f[g.sidx(i + 1, j)] - f[g.sidx(i - 1, j)]) * inv2h;
            if (j == 0)
                gy[p] = (f[p + 1] - f[p]) * invh;
            else if (j == ny - 1)
                gy[p] = (f[p] - f[p - 1]) * invh;
            else
                gy[p] = (f[p + 1] - f[p - 1]) * inv2h;
        }
    }
}

void divergence_slice(const SpaceTimeGrid& g, const double* vx, const double* vy,
                      double* out) {
    // out = -(Gx^T vx + Gy^T vy) under uniform node weights; each gradient
    // stencil row is scattered with negated coefficients.
    const int nx = g.nx, ny = g.ny;
    const double inv2h = 0.5 / g.h_space, invh = 1.0 / g.h_space;
    for (std::size_t p = 0; p < g.n_space(); ++p) out[p] = 0.0;
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            std::size_t p = g.sidx(i, j);
            double wx = vx[p], wy = vy[p];
            // scatter the transpose of the gradient stencil row at (i,j)
            if (i == 0) {
                out[g.sidx(1, j)] -= wx * invh;
                out[g.sidx(0, j)] += wx * invh;
            } else if (i == nx - 1) {
                out[g.sidx(nx - 1, j)] -= wx * invh;
                out[g.sidx(nx - 2, j)] += wx * invh;
            } else {
                out[g.sidx(i + 1, j)] -= wx * inv2h;
                out[g.sidx(i - 1, j)] += wx * inv2h;
            }
            if (j == 0) {
                out[p + 1] -= wy * invh;
                out[p] += wy * invh;
            } else if (j == ny - 1) {
                out[p] -= wy * invh;
                out[p - 1] += wy * invh;
            } else {
                out[p + 1] -= wy * inv2h;
                out[p - 1] += wy * inv2h;
            }
        }
    }
}

void laplacian_slice(const SpaceTimeGrid& g, const double* f, double* out) {
    const int nx = g.nx, ny = g.ny;
    const double invh2 = 1.0 / (g.h_space * g.h_space);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            std::size_t p = g.sidx(i, j);
            double acc = 0.0;
            if (i > 0) acc += f[g.sidx(i - 1, j)] - f[p];
            if (i < nx - 1) acc += f[g.sidx(i + 1, j)] - f[p];
            if (j > 0) acc += f[p - 1] - f[p];
            if (j < ny - 1) acc += f[p + 1] - f[p];
            out[p] = acc * invh2;
        }
    }
}

VectorField gradient(const ScalarField& f) {
    const SpaceTimeGrid& g = *f.grid;
    VectorField out(g);
    for (int k = 0; k < g.nt; ++k)
        gradient_slice(g, f.slice(k), out.cx.slice(k), out.cy.slice(k));
    return out;
}

ScalarField divergence(const VectorField& w) {
    const SpaceTimeGrid& g = *w.cx.grid;
    ScalarField out(g);
    for (int k = 0; k < g.nt; ++k)
        divergence_slice(g, w.cx.slice(k), w.cy.slice(k), out.slice(k));
    return out;
}

ScalarField laplacian(const ScalarField& f) {
    const SpaceTimeGrid& g = *f.grid;
    ScalarField out(g);
    for (int k = 0; k < g.nt; ++k) laplacian_slice(g, f.slice(k), out.slice(k));
    return out;
}

ScalarField time_derivative(const ScalarField& f) {
    const SpaceTimeGrid& g = *f.grid;
    ScalarField out(g);
    const double invht = 1.0 / g.h_time;
    for (int k = 0; k < g.nt; ++k) {
        int ka = (k < g.nt - 1) ? k : g.nt - 2;
        const double* fa = f.slice(ka);
        const double* fb = f.slice(ka + 1);
        double* o = out.slice(k);
        for (std::size_t p = 0; p < g.n_space(); ++p) o[p] = (fb[p] - fa[p]) * invht;
    }
    return out;
}

double integrate_slice(const SpaceTimeGrid& g, const double* f, Region region) {
    double acc = 0.0;
    for (int i = 0; i < g.nx - 1; ++i) {
        for (int j = 0; j < g.ny - 1; ++j) {
            bool in_cell = (i >= g.i_lo && i < g.i_hi && j >= g.i_lo && j < g.i_hi);
            if (region == Region::Inner && !in_cell) continue;
            if (region == Region::Outer && in_cell) continue;
            acc += f[g.sidx(i, j)];
        }
    }
    return acc * g.cell_area();
}

double integrate(const ScalarField& f, Region region) {
    const SpaceTimeGrid& g = *f.grid;
    double acc = 0.0;
    for (int k = 0; k < g.nt - 1; ++k) acc += integrate_slice(g, f.slice(k), region);
    return acc * g.h_time;
}

double node_sum_slice(const SpaceTimeGrid& g, const double* f) {
    double acc = 0.0;
    for (std::size_t p = 0; p < g.n_space(); ++p) acc += f[p];
    return acc * g.cell_area();
}

}  // namespace mfg
