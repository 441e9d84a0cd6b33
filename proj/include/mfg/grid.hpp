#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace mfg {

// Uniform collocated discretization of [x_min,x_max]^2 x [0,t_max] plus the
// inner sampling square whose edges must lie on grid lines.
struct SpaceTimeGrid {
    double x_min = -1.0;
    double x_max = 1.0;
    double y_min = -1.0;
    double y_max = 1.0;
    double t_max = 1.0;
    double h_space = 0.05;
    double h_time = 0.04;
    double inner_lo = -0.5;  // inner box [inner_lo, inner_hi]^2
    double inner_hi = 0.5;

    int nx = 0;
    int ny = 0;
    int nt = 0;
    int i_lo = 0;  // index of x == inner_lo (same for y; the box is square)
    int i_hi = 0;  // index of x == inner_hi

    static SpaceTimeGrid make(double x_min, double x_max, double t_max,
                              double h_space, double h_time,
                              double inner_lo, double inner_hi);
    static SpaceTimeGrid paper_default() {
        return make(-1.0, 1.0, 1.0, 0.05, 0.04, -0.5, 0.5);
    }

    double x(int i) const { return x_min + i * h_space; }
    double y(int j) const { return y_min + j * h_space; }
    double t(int k) const { return k * h_time; }

    std::size_t n_space() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t n_total() const { return n_space() * nt; }
    std::size_t sidx(int i, int j) const {
        return static_cast<std::size_t>(i) * ny + j;
    }
    std::size_t idx(int k, int i, int j) const {
        return (static_cast<std::size_t>(k) * nx + i) * ny + j;
    }

    double cell_area() const { return h_space * h_space; }
    double cell_volume() const { return h_space * h_space * h_time; }

    bool inside_inner(int i, int j) const {
        return i > i_lo && i < i_hi && j > i_lo && j < i_hi;
    }
    bool on_interface(int i, int j) const {
        bool edge_i = (i == i_lo || i == i_hi);
        bool edge_j = (j == i_lo || j == i_hi);
        bool in_i = (i >= i_lo && i <= i_hi);
        bool in_j = (j >= i_lo && j <= i_hi);
        return (edge_i && in_j) || (edge_j && in_i);
    }

    std::string hash() const;  // stable digest of the geometry, for manifests
};

// One time slice (or a time-independent field such as kappa).
struct SpatialField {
    int nx = 0;
    int ny = 0;
    std::vector<double> v;

    SpatialField() = default;
    SpatialField(int nx_, int ny_, double fill = 0.0)
        : nx(nx_), ny(ny_), v(static_cast<std::size_t>(nx_) * ny_, fill) {}
    explicit SpatialField(const SpaceTimeGrid& g, double fill = 0.0)
        : SpatialField(g.nx, g.ny, fill) {}

    double& at(int i, int j) { return v[static_cast<std::size_t>(i) * ny + j]; }
    double at(int i, int j) const { return v[static_cast<std::size_t>(i) * ny + j]; }
    std::size_t size() const { return v.size(); }
};

struct ScalarField {
    const SpaceTimeGrid* grid = nullptr;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const SpaceTimeGrid& g, double fill = 0.0)
        : grid(&g), v(g.n_total(), fill) {}

    double& at(int k, int i, int j) { return v[grid->idx(k, i, j)]; }
    double at(int k, int i, int j) const { return v[grid->idx(k, i, j)]; }
    double* slice(int k) { return v.data() + grid->idx(k, 0, 0); }
    const double* slice(int k) const { return v.data() + grid->idx(k, 0, 0); }

    SpatialField slice_copy(int k) const;
    void set_slice(int k, const SpatialField& s);
};

struct VectorField {
    ScalarField cx;  // first component (m1)
    ScalarField cy;  // second component (m2)

    VectorField() = default;
    explicit VectorField(const SpaceTimeGrid& g, double fill = 0.0)
        : cx(g, fill), cy(g, fill) {}
};

enum class Region { Full, Inner, Outer };

// Spatial differential operators, applied slice-wise.
// gradient: centered in the interior, one-sided on the outer boundary.
// divergence: exact negative adjoint of gradient under uniform h^2 weights,
// so <grad f, v> + <f, div v> = 0 holds to machine precision for all fields.
// laplacian: compact 5-point stencil assembled as -D^T D per axis (symmetric
// homogeneous-Neumann closure); note this is NOT div(grad .) node-by-node,
// the two agree on quadratics in the interior but differ at O(h^2) otherwise.
void gradient_slice(const SpaceTimeGrid& g, const double* f, double* gx, double* gy);
void divergence_slice(const SpaceTimeGrid& g, const double* vx, const double* vy,
                      double* out);
void laplacian_slice(const SpaceTimeGrid& g, const double* f, double* out);

VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& w);
ScalarField laplacian(const ScalarField& f);

// Forward difference in time on slices 0..nt-2; the last slice carries the
// backward difference so the output shape matches the input.
ScalarField time_derivative(const ScalarField& f);

// Composite rectangle rule: each cell weighted h^2*h_t, integrand evaluated
// at the cell's lower-left-earliest node. Region restricts the spatial cells.
double integrate(const ScalarField& f, Region region = Region::Full);
// Same rule for a single slice: spatial cells only, weight h^2.
double integrate_slice(const SpaceTimeGrid& g, const double* f,
                       Region region = Region::Full);

// Plain node sum with uniform h^2 weight; this is the quadrature the solver
// conserves exactly (see forward.hpp).
double node_sum_slice(const SpaceTimeGrid& g, const double* f);

}  // namespace mfg
