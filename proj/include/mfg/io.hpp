#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mfg/boundary.hpp"
#include "mfg/forward.hpp"
#include "mfg/grid.hpp"
#include "mfg/inverse.hpp"
#include "mfg/scenario.hpp"

namespace mfg {

// Flat view of the JSON config (blocks: grid, model, solver, inverse,
// scenario). Unknown keys and out-of-range values are load errors.
struct RunConfig {
    // grid
    double x_min = -1.0, x_max = 1.0, t_max = 1.0;
    double h_space = 0.05, h_time = 0.04;
    double inner_lo = -0.5, inner_hi = 0.5;
    // model
    double nu = 0.1;
    double kappa0_value = 2.0;
    double eps1 = 2.0, eps2 = 1.0;
    // solver
    StepSizes steps;
    double e_tol = 2e-3;       // single forward solve (`forward` command)
    double e_tol_data = 2e-5;  // dataset generation + inversion re-solves
    int max_iter = 30000;
    // inverse
    double gamma_kappa = 0.2, gamma_mu = 0.01;
    double alpha_kappa = 0.1, alpha_mu = 0.001, alpha_lambda = 10.0;
    double lambda_leak = 0.0;
    double alpha_lambda_mu = 50.0, lambda_leak_mu = 0.05;
    int n_max = 1500;
    double mask_band_lo = 2.0, mask_band_hi = 6.0, psi_sigma_cells = 2.0;
    int psi_half = 4;
    int checkpoint_stride = 10;
    // scenario
    int example_id = 1;
    int event_count = 16;
    double eps_n = 0.1;
    std::uint64_t seed = 20240501;

    static RunConfig load(const std::filesystem::path& path);
    void validate() const;
    std::string to_json() const;

    SpaceTimeGrid make_grid() const;
    ForwardOptions forward_options() const;
    // forward_options() with e_tol_data: the boundary traces move by O(0.1)
    // between gap 2e-3 and convergence (the cold start is data-derived, so a
    // loose solve is biased toward the measurements); data generation and the
    // inversion's residual tracking must both resolve past that slack.
    ForwardOptions data_options() const;
    InversionOptions inversion_options() const;
};

// event_<i>.json
void save_event(const std::filesystem::path& path, const EventData& ev,
                const SpaceTimeGrid& g);
EventData load_event(const std::filesystem::path& path, const SpaceTimeGrid& g);

// trace_<i>.csv (schema: trace v1; full precision for bitwise round trips)
void save_trace(const std::filesystem::path& path, const BoundaryTrace& tr,
                const BoundaryOps& bops, const SpaceTimeGrid& g);
BoundaryTrace load_trace(const std::filesystem::path& path, int nb_expected);

// manifest.json: config echo + seed + grid hash (+ optional extras)
void save_manifest(const std::filesystem::path& path, const RunConfig& cfg,
                   const SpaceTimeGrid& g,
                   const std::vector<std::pair<std::string, std::string>>& extras = {});

// small CSV emitters (schema-versioned header lines)
void save_field_csv(const std::filesystem::path& path, const SpatialField& f,
                    const SpaceTimeGrid& g);
SpatialField load_field_csv(const std::filesystem::path& path, const SpaceTimeGrid& g);
void save_mu_csv(const std::filesystem::path& path, const std::vector<double>& mu,
                 const FrequencySet& freqs);
void save_res_history(const std::filesystem::path& path,
                      const std::vector<IterationStats>& history);

// columnar binary for full space-time fields: magic "MFGF", u32 version,
// u64 count, then count little-endian doubles
void save_field_bin(const std::filesystem::path& path, const std::vector<double>& data);
std::vector<double> load_field_bin(const std::filesystem::path& path);

void save_gap_history(const std::filesystem::path& path,
                      const std::vector<std::array<double, 3>>& trace);

}  // namespace mfg
