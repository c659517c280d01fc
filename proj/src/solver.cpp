#include "imdp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace imdp {

double sup_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

ActionGrid make_grid(const IntervalMdp& mdp, const std::vector<int>& resolution) {
    if (resolution.size() == 1)
        return ActionGrid(mdp.action_box, resolution.front());
    return ActionGrid(mdp.action_box, resolution);
}

SolveResult solve(const IntervalMdp& mdp, const SolveConfig& config) {
    check_structure(mdp, false);
    if (!(config.tolerance > 0.0) && config.max_iterations <= 0)
        throw std::invalid_argument("solve needs a positive tolerance or a finite iteration cap");
    const int n = mdp.num_states();
    const ActionGrid grid = make_grid(mdp, config.grid);
    const GridTable table(mdp, grid, config.exec);

    ValueVector v = config.v0.value_or(ValueVector(n, 0.0));
    if (static_cast<int>(v.size()) != n)
        throw std::invalid_argument("initial value has wrong length");
    const double gamma = mdp.gamma;
    const double stop = gamma > 0.0 ? config.tolerance * (1.0 - gamma) / gamma : std::numeric_limits<double>::infinity();

    SolveResult result;
    if (config.record_trajectory)
        result.trajectory.push_back(v);
    GridMaximum step;
    for (int k = 0; k < config.max_iterations; ++k) {
        step = g_sweep(config.mode, v, table, gamma, config.exec);
        result.residual = sup_distance(step.value, v);
        v = step.value;
        result.iterations = k + 1;
        if (config.record_trajectory)
            result.trajectory.push_back(v);
        if (result.residual <= stop) {
            result.converged = true;
            break;
        }
    }
    result.value = v;
    result.certified_error = gamma > 0.0 ? result.residual * gamma / (1.0 - gamma) : 0.0;
    // Policy greedy with respect to the returned iterate.
    GridMaximum final_step = g_sweep(config.mode, v, table, gamma, config.exec);
    for (std::size_t g : final_step.argmax) result.policy.push_back(grid.point(g));
    return result;
}

Policy extract_policy(std::span<const double> value, const IntervalMdp& mdp, Mode mode, const std::vector<int>& grid,
                      Exec exec) {
    return g_operator_grid(mode, value, mdp, make_grid(mdp, grid), exec).policy;
}

double certify_fixed_point(std::span<const double> value, const IntervalMdp& mdp, Mode mode,
                           const std::vector<int>& grid, Exec exec) {
    auto g = g_operator_grid(mode, value, mdp, make_grid(mdp, grid), exec);
    return sup_distance(g.value, value);
}

}  // namespace imdp
