#pragma once

#include <array>
#include <functional>
#include <vector>

#include "mfg/grid.hpp"

namespace mfg {

using Vec2 = std::array<double, 2>;

// Fixed trigonometric frequency lattice for the kernel expansion
// K(x,y) = k0 + sum_k mu_k^2 cos(omega_k . (x-y)).
struct FrequencySet {
    std::vector<Vec2> omegas;  // one entry per distinct mode (no sign duplicates)

    int r() const { return static_cast<int>(omegas.size()); }
    // {(k1*pi, k2*pi): k1 in 0..2, k2 in -2..2} minus (0,0) and sign duplicates.
    static FrequencySet default_lattice();
    // Index of a frequency in the lattice (matching up to sign), or -1.
    int find(const Vec2& w, double tol = 1e-9) const;
};

struct KernelCoeffs {
    std::vector<double> mu;  // reduced layout, length r, nonnegative
    double k0 = 0.0;         // known constant (0,0)-mode offset, not recovered
};

// cos/sin tables at the spatial grid nodes, mu-independent.
struct FeatureTable {
    const SpaceTimeGrid* grid = nullptr;
    int r = 0;
    // layout: mode-major, cos_table[k][node], sin_table[k][node]
    std::vector<std::vector<double>> cos_t;
    std::vector<std::vector<double>> sin_t;

    FeatureTable() = default;
    FeatureTable(const SpaceTimeGrid& g, const FrequencySet& freqs);
};

// zeta(x) entries: (mu_1 cos(w_1.x), mu_1 sin(w_1.x), ..., mu_r cos, mu_r sin).
std::vector<double> zeta(const Vec2& x, const KernelCoeffs& coeffs,
                         const FrequencySet& freqs);

double kernel_value(const Vec2& x, const Vec2& y, const KernelCoeffs& coeffs,
                    const FrequencySet& freqs);

// Feature-space moment int_{Omega'} zeta(x) rho(x) dx of one time slice,
// rectangle rule matching integrate_slice. Expanded layout, length 2r.
std::vector<double> interaction_field(const SpaceTimeGrid& g, const double* rho_slice,
                                      const KernelCoeffs& coeffs,
                                      const FeatureTable& table);

// Diagonal of Lambda_1(omega, x): (cos(w_1.x), sin(w_1.x), ..., cos(w_r.x), sin(w_r.x)).
std::vector<double> lambda1(const FrequencySet& freqs, const Vec2& x);

// Pi_mu / Pi_mu^*: averaging projection onto the odd=even subspace and its
// duplicating adjoint (adjoint up to the factor 2 from the pairing; see tests).
std::vector<double> project_mu(const std::vector<double>& expanded);
std::vector<double> expand_mu(const std::vector<double>& reduced);

struct BackgroundFit {
    std::vector<double> mu0;  // reduced layout, sqrt of fitted nonnegative coeffs
    double c0 = 0.0;          // fitted constant (absorbed into k0)
    double rel_l2_error = 0.0;
};

// Nonnegative least-squares fit of a translation-invariant kernel
// K0(x-y) ~ c0 + sum_k c_k cos(omega_k . d) over one period cell of the
// displacement lattice; a constant term is included since the lattice
// excludes (0,0).
BackgroundFit fit_background_mu(const std::function<double(const Vec2&)>& K0,
                                const FrequencySet& freqs, const SpaceTimeGrid& g);

}  // namespace mfg
