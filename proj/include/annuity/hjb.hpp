#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "annuity/model.hpp"

namespace annuity::hjb {

enum class Spacing { Uniform, Log };

struct Grid {
    double y_min = 1e-3;
    double y_max = 200.0;
    int n = 2000;
    Spacing spacing = Spacing::Log;

    void validate() const;
    std::vector<double> nodes() const;
};

enum class ObstacleMode { Projection, Penalty, Disabled };
// DriftSign: one-sided first differences chosen by the drift sign at every node.
// Hybrid: central first differences wherever the resulting row is still monotone, DriftSign elsewhere.
enum class Upwind { DriftSign, Hybrid };

struct SolverConfig {
    int max_sweeps = 200;
    double tolerance = 1e-9;  // sup-norm of |dV| / max(1, |V|) between sweeps
    ObstacleMode obstacle = ObstacleMode::Projection;
    double penalty = 1e8;
    Upwind upwind = Upwind::Hybrid;
    // |p| bound; only binds where the value estimate is not strictly concave.
    double portfolio_cap = 1e3;

    void validate() const;
};

enum class Region { Interior, Corner, Stopped };
const char* region_name(Region r);
Region parse_region(const std::string& s);

struct BoundaryDiagnostics {
    // At y* (first stopped node), one-sided on the continuation branch.
    std::optional<double> value_matching;
    std::optional<double> smooth_pasting;
    std::optional<double> super_contact;
    // Jumps of V, V', V'' across the labor threshold.
    std::optional<double> labor_jump_value;
    std::optional<double> labor_jump_d1;
    std::optional<double> labor_jump_d2;
};

struct Diagnostics {
    std::vector<double> hjb_residual;     // A V - u with the maximising controls
    std::vector<double> complementarity;  // min(A V - u, V - G), or A V - u without obstacle
    double max_complementarity = 0.0;
    double last_update = 0.0;
    int sweeps = 0;
    int nonconcave_nodes = 0;
    BoundaryDiagnostics boundary;
};

struct SolveResult {
    std::vector<double> y;
    std::vector<double> value;
    std::vector<double> obstacle;
    std::vector<double> obstacle_slope;
    std::vector<double> portfolio;
    std::vector<double> kappa;
    std::vector<double> labor;
    std::vector<Region> region;
    std::optional<double> y_tilde;
    std::optional<double> y_star;  // refined between the bracketing nodes
    ObstacleMode mode = ObstacleMode::Projection;
    Diagnostics diagnostics;
};

struct ControlChoice {
    double portfolio;
    double kappa;
    double labor;
    double hamiltonian;
};

// Pointwise maximiser of u + V' * drift + 0.5 sigma^2 p^2 y^2 V''.
ControlChoice maximize_hamiltonian(double y, double v1, double v2, const model::ModelParams& params);

SolveResult solve_vi(const Grid& grid, const model::ModelParams& params, const SolverConfig& config);

struct Thresholds {
    std::optional<double> y_tilde;
    std::optional<double> y_star;
    std::optional<std::size_t> y_tilde_node;
    std::optional<std::size_t> y_star_node;
};

// Throws GridTooSmall when no node is stopped unless require_stopping is false.
Thresholds extract_thresholds(const SolveResult& result, bool require_stopping = true);

BoundaryDiagnostics boundary_diagnostics(const SolveResult& result, const model::ModelParams& params);

}  // namespace annuity::hjb
