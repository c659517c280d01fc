#pragma once

#include "imdp/model.hpp"
#include "imdp/parallel.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace imdp {

/// No greedy pivot satisfies the sandwich: the bounds are inconsistent at this (s, a).
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Which side of the transition intervals nature takes.
enum class Mode { pessimistic, optimistic };

/// Absolute slack used when testing the residual mass against its interval.
inline constexpr double kPivotTolerance = 1e-12;

/// States sorted by descending value; ties keep ascending state index.
std::vector<int> order_permutation(std::span<const double> v);

/**
 * Pivot positions of the greedy vertices. `order` is order_permutation(v);
 * `lower`/`upper` are the interval bounds indexed by successor state. The
 * return value is a 0-based position into `order` (the largest feasible one).
 */
int iota_lower(std::span<const int> order, std::span<const double> lower, std::span<const double> upper);
int iota_upper(std::span<const int> order, std::span<const double> lower, std::span<const double> upper);

/// Minimizing / maximizing distribution over the transition polytope.
struct GreedyVertex {
    std::vector<double> probabilities;  // indexed by state
    int pivot = -1;                     // state receiving the residual mass
};

/// Omega (min) or Lambda (max) of sum_s' p(s') v(s') on plain bound vectors.
struct PivotValue {
    double value = 0.0;
    int position = -1;  // pivot position in `order`
};
PivotValue extreme_value(Mode mode, std::span<const int> order, std::span<const double> v,
                         std::span<const double> lower, std::span<const double> upper);
GreedyVertex extreme_vertex(Mode mode, std::span<const int> order, std::span<const double> lower,
                            std::span<const double> upper, int position);

/// Transition bounds P(., s, a) and, optionally, their action gradients (n x m, row-major).
struct LocalBounds {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> lower_grad;
    std::vector<double> upper_grad;
};
LocalBounds evaluate_bounds(const IntervalMdp& mdp, int s, std::span<const double> a, bool with_gradient);

struct OmegaResult {
    double value = 0.0;
    GreedyVertex vertex;
    std::vector<double> grad;  // d/da with permutation and pivot held fixed
};

OmegaResult omega(std::span<const double> v, int s, std::span<const double> a, const IntervalMdp& mdp);
OmegaResult lambda(std::span<const double> v, int s, std::span<const double> a, const IntervalMdp& mdp);
OmegaResult extreme(Mode mode, std::span<const double> v, int s, std::span<const double> a, const IntervalMdp& mdp);
/// Same, with `order` = order_permutation(v) supplied by the caller.
OmegaResult extreme(Mode mode, std::span<const double> v, std::span<const int> order, int s,
                    std::span<const double> a, const IntervalMdp& mdp);

/// Interval Bellman-policy operator: R(s, pi(s)) + gamma * Omega/Lambda(v, s, pi(s)).
ValueVector f_operator(Mode mode, std::span<const double> v, const Policy& pi, const IntervalMdp& mdp,
                       Exec exec = Exec::parallel);
ValueVector f_lower(std::span<const double> v, const Policy& pi, const IntervalMdp& mdp, Exec exec = Exec::parallel);
ValueVector f_upper(std::span<const double> v, const Policy& pi, const IntervalMdp& mdp, Exec exec = Exec::parallel);

/// Cartesian action grid over a box; dimensions with lower == upper collapse to one point.
class ActionGrid {
public:
    ActionGrid(const Box& box, std::span<const int> resolution);
    ActionGrid(const Box& box, int resolution);

    std::size_t size() const noexcept { return count_; }
    int dim() const noexcept { return static_cast<int>(axes_.size()); }
    /// Point `index` in lexicographic order (first dimension most significant).
    Action point(std::size_t index) const;
    void point(std::size_t index, std::span<double> out) const;
    const std::vector<std::vector<double>>& axes() const noexcept { return axes_; }

private:
    std::vector<std::vector<double>> axes_;
    std::size_t count_ = 1;
};

/// Bounds and rewards of every state evaluated at every grid point.
class GridTable {
public:
    GridTable(const IntervalMdp& mdp, const ActionGrid& grid, Exec exec = Exec::parallel);

    int num_states() const noexcept { return n_; }
    std::size_t num_points() const noexcept { return points_; }
    std::span<const double> lower(int s, std::size_t g) const { return {lower_.data() + offset(s, g), span_n()}; }
    std::span<const double> upper(int s, std::size_t g) const { return {upper_.data() + offset(s, g), span_n()}; }
    double reward(Mode mode, int s, std::size_t g) const {
        return (mode == Mode::pessimistic ? reward_lower_ : reward_upper_)[static_cast<std::size_t>(s) * points_ + g];
    }

private:
    std::size_t offset(int s, std::size_t g) const { return (static_cast<std::size_t>(s) * points_ + g) * span_n(); }
    std::size_t span_n() const { return static_cast<std::size_t>(n_); }

    int n_;
    std::size_t points_;
    std::vector<double> lower_, upper_, reward_lower_, reward_upper_;
};

struct GridMaximum {
    ValueVector value;
    std::vector<std::size_t> argmax;  // grid index per state
};

/**
 * Interval Bellman operator realized on a grid: per state, the maximum over
 * grid points of R(s, a) + gamma * Omega/Lambda(v, s, a). Ties resolve to the
 * first grid point.
 */
GridMaximum g_sweep(Mode mode, std::span<const double> v, const GridTable& table, double gamma,
                    Exec exec = Exec::parallel);

struct GridResult {
    ValueVector value;
    Policy policy;
};
GridResult g_operator_grid(Mode mode, std::span<const double> v, const IntervalMdp& mdp, const ActionGrid& grid,
                           Exec exec = Exec::parallel);
GridResult g_lower_grid(std::span<const double> v, const IntervalMdp& mdp, const ActionGrid& grid,
                        Exec exec = Exec::parallel);
GridResult g_upper_grid(std::span<const double> v, const IntervalMdp& mdp, const ActionGrid& grid,
                        Exec exec = Exec::parallel);

}  // namespace imdp
