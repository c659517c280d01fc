#pragma once

#include "imdp/bellman.hpp"

#include <optional>
#include <vector>

namespace imdp {

struct SolveConfig {
    Mode mode = Mode::pessimistic;
    std::vector<int> grid{101};  // points per action dimension; a single entry applies to all
    double tolerance = 1e-6;      // target on ||v - V*||_inf
    int max_iterations = 100000;
    std::optional<ValueVector> v0;  // defaults to zero
    bool record_trajectory = false;
    Exec exec = Exec::parallel;
};

struct SolveResult {
    ValueVector value;
    Policy policy;
    int iterations = 0;
    double residual = 0.0;         // ||v^{k+1} - v^k||_inf at the last step
    double certified_error = 0.0;  // residual * gamma / (1 - gamma)
    bool converged = false;
    std::vector<ValueVector> trajectory;  // v^0 .. v^K when requested
};

ActionGrid make_grid(const IntervalMdp& mdp, const std::vector<int>& resolution);

/**
 * Value iteration v <- G(v) with the maximum over actions taken on the grid.
 * Stops once ||v^{k+1} - v^k|| <= tolerance (1 - gamma) / gamma, which bounds
 * the distance to the grid fixed point by `tolerance`. Hitting max_iterations
 * first leaves `converged` false; the last iterate is still returned.
 */
SolveResult solve(const IntervalMdp& mdp, const SolveConfig& config);

/// Grid argmax of the mode's Bellman-policy objective at `value`.
Policy extract_policy(std::span<const double> value, const IntervalMdp& mdp, Mode mode, const std::vector<int>& grid,
                      Exec exec = Exec::parallel);

/// ||G(value) - value||_inf for the grid-realized operator.
double certify_fixed_point(std::span<const double> value, const IntervalMdp& mdp, Mode mode,
                           const std::vector<int>& grid, Exec exec = Exec::parallel);

double sup_distance(std::span<const double> a, std::span<const double> b);

}  // namespace imdp
