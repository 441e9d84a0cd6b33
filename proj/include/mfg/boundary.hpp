#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <vector>

#include "mfg/forward.hpp"
#include "mfg/grid.hpp"

namespace mfg {

struct BoundaryNode {
    int i = 0;
    int j = 0;
    double nx = 0.0;  // outward unit normal (from the inner box)
    double ny = 0.0;
};

// Density and normal-flux samples on [0,T] x dOmega. Row-major (t, node).
struct BoundaryTrace {
    int nt = 0;
    int nb = 0;
    std::vector<double> rho_trace;
    std::vector<double> flux_trace;

    BoundaryTrace() = default;
    BoundaryTrace(int nt_, int nb_)
        : nt(nt_), nb(nb_), rho_trace(static_cast<std::size_t>(nt_) * nb_, 0.0),
          flux_trace(static_cast<std::size_t>(nt_) * nb_, 0.0) {}
    double& rho(int t, int b) { return rho_trace[static_cast<std::size_t>(t) * nb + b]; }
    double rho(int t, int b) const { return rho_trace[static_cast<std::size_t>(t) * nb + b]; }
    double& flux(int t, int b) { return flux_trace[static_cast<std::size_t>(t) * nb + b]; }
    double flux(int t, int b) const { return flux_trace[static_cast<std::size_t>(t) * nb + b]; }
};

struct NeumannExtension {
    ScalarField xi;        // zero-mean per subdomain; interface nodes carry inner values
    VectorField grad_xi;   // one-sided at the interface, per subdomain
    std::vector<double> removed_mean_inner;  // per slice, compatibility diagnostic
    std::vector<double> removed_mean_outer;
};

// Measurement operator Pi_B and its harmonic-extension adjoint on a fixed
// grid. The four Laplace systems (Dirichlet/Neumann, inner/outer) are
// factorized once at construction and reused for every slice and iteration.
class BoundaryOps {
public:
    explicit BoundaryOps(const SpaceTimeGrid& g);

    const std::vector<BoundaryNode>& nodes() const { return nodes_; }
    int nb() const { return static_cast<int>(nodes_.size()); }

    BoundaryTrace trace(const ScalarField& rho, const VectorField& m) const;
    BoundaryTrace trace(const PrimalDualState& s) const {
        return trace(s.rho, s.m);
    }

    // Slice-wise Dirichlet harmonic extension of boundary values: harmonic in
    // the inner box and in the annulus, zero on the outer boundary.
    ScalarField dirichlet_extend(const std::vector<double>& values, int nt) const;
    // Slice-wise Neumann extension of flux values; the mismatch is projected
    // to zero mean on each closed boundary loop first (the pure-Neumann
    // systems are singular and noisy data need not be compatible).
    NeumannExtension neumann_extend(const std::vector<double>& flux, int nt) const;

    // Energy of the corresponding harmonic extension in the inner box.
    double seminorm_h_half(const std::vector<double>& values) const;
    double seminorm_h_minus_half(const std::vector<double>& flux) const;

    // Dirichlet-energy inner product over the inner box of two full fields
    // restricted to the box (the quadratic form behind both seminorms).
    double inner_box_energy_product(const SpatialField& u, const SpatialField& w) const;

private:
    struct SliceSolution {
        std::vector<double> inner;  // values on the closed inner box subgrid
        std::vector<double> outer;  // values on the full grid, inner box zeroed
    };

    void dirichlet_slice(const double* values, SliceSolution& out) const;
    void neumann_slice(const double* flux, SliceSolution& out, double& mean_in,
                       double& mean_out) const;

    const SpaceTimeGrid* grid_;
    std::vector<BoundaryNode> nodes_;
    int nin_ = 0;  // inner box side node count

    // index maps and factorizations
    std::vector<int> inner_dir_index_;   // strictly-inside node -> unknown id (-1 else)
    std::vector<int> outer_dir_index_;   // annulus-interior node -> unknown id
    std::vector<int> inner_neu_index_;   // closed inner box node -> unknown id
    std::vector<int> outer_neu_index_;   // closed annulus node -> unknown id
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> inner_dir_;
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> outer_dir_;
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> inner_neu_;
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> outer_neu_;
    int inner_neu_n_ = 0, outer_neu_n_ = 0;
};

}  // namespace mfg
