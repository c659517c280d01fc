#include "imdp/bellman.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace imdp {

std::vector<int> order_permutation(std::span<const double> v) {
    std::vector<int> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&v](int a, int b) { return v[a] > v[b]; });
    return order;
}

namespace {

// Bounds placed before / after the pivot along the descending order.
struct Sides {
    std::span<const double> before;
    std::span<const double> after;
};

Sides sides(Mode mode, std::span<const double> lower, std::span<const double> upper) {
    // Minimum: low mass on high values. Maximum: high mass on high values.
    return mode == Mode::pessimistic ? Sides{lower, upper} : Sides{upper, lower};
}

int pivot_position(Mode mode, std::span<const int> order, std::span<const double> lower,
                   std::span<const double> upper) {
    const int n = static_cast<int>(order.size());
    auto [before, after] = sides(mode, lower, upper);
    // residual(j) = 1 - sum_{i<j} before(i_v) - sum_{i>j} after(i_v), scanned from j = n-1 down.
    double sum_before = 0.0;
    for (int i = 0; i + 1 < n; ++i) sum_before += before[order[i]];
    double residual = 1.0 - sum_before;
    for (int j = n - 1; j >= 0; --j) {
        const int s = order[j];
        if (residual >= lower[s] - kPivotTolerance && residual <= upper[s] + kPivotTolerance)
            return j;
        if (j > 0)
            residual += before[order[j - 1]] - after[s];
    }
    throw InfeasibleError("no feasible pivot: transition bounds violate sum(lower) <= 1 <= sum(upper)");
}

}  // namespace

int iota_lower(std::span<const int> order, std::span<const double> lower, std::span<const double> upper) {
    return pivot_position(Mode::pessimistic, order, lower, upper);
}

int iota_upper(std::span<const int> order, std::span<const double> lower, std::span<const double> upper) {
    return pivot_position(Mode::optimistic, order, lower, upper);
}

PivotValue extreme_value(Mode mode, std::span<const int> order, std::span<const double> v,
                         std::span<const double> lower, std::span<const double> upper) {
    const int n = static_cast<int>(order.size());
    const int j = pivot_position(mode, order, lower, upper);
    auto [before, after] = sides(mode, lower, upper);
    const double vj = v[order[j]];
    double value = vj;
    for (int i = 0; i < j; ++i) value += (v[order[i]] - vj) * before[order[i]];
    for (int i = j + 1; i < n; ++i) value += (v[order[i]] - vj) * after[order[i]];
    return {value, j};
}

GreedyVertex extreme_vertex(Mode mode, std::span<const int> order, std::span<const double> lower,
                            std::span<const double> upper, int position) {
    const int n = static_cast<int>(order.size());
    auto [before, after] = sides(mode, lower, upper);
    GreedyVertex vertex;
    vertex.probabilities.assign(order.size(), 0.0);
    vertex.pivot = order[position];
    double rest = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i == position)
            continue;
        const int s = order[i];
        vertex.probabilities[s] = i < position ? before[s] : after[s];
        rest += vertex.probabilities[s];
    }
    vertex.probabilities[vertex.pivot] = 1.0 - rest;
    return vertex;
}

LocalBounds evaluate_bounds(const IntervalMdp& mdp, int s, std::span<const double> a, bool with_gradient) {
    const int n = mdp.num_states();
    const std::size_t m = static_cast<std::size_t>(mdp.action_dim);
    LocalBounds b;
    b.lower.assign(n, 0.0);
    b.upper.assign(n, 0.0);
    if (with_gradient) {
        b.lower_grad.assign(n * m, 0.0);
        b.upper_grad.assign(n * m, 0.0);
    }
    for (int t = 0; t < n; ++t) {
        const Expression& lo = mdp.trans_lower.at(s, t);
        const Expression& hi = mdp.trans_upper.at(s, t);
        if (with_gradient) {
            std::span<double> glo(b.lower_grad.data() + t * m, m);
            std::span<double> ghi(b.upper_grad.data() + t * m, m);
            b.lower[t] = lo.is_zero() ? 0.0 : lo.eval(a, glo);
            b.upper[t] = hi.is_zero() ? 0.0 : hi.eval(a, ghi);
        } else {
            b.lower[t] = lo.is_zero() ? 0.0 : lo.value(a);
            b.upper[t] = hi.is_zero() ? 0.0 : hi.value(a);
        }
    }
    return b;
}

OmegaResult extreme(Mode mode, std::span<const double> v, int s, std::span<const double> a, const IntervalMdp& mdp) {
    if (static_cast<int>(v.size()) != mdp.num_states())
        throw std::invalid_argument("value vector has wrong length");
    return extreme(mode, v, order_permutation(v), s, a, mdp);
}

OmegaResult extreme(Mode mode, std::span<const double> v, std::span<const int> order, int s,
                    std::span<const double> a, const IntervalMdp& mdp) {
    const int n = mdp.num_states();
    const std::size_t m = static_cast<std::size_t>(mdp.action_dim);
    LocalBounds b = evaluate_bounds(mdp, s, a, true);
    PivotValue pv = extreme_value(mode, order, v, b.lower, b.upper);

    OmegaResult out;
    out.value = pv.value;
    out.vertex = extreme_vertex(mode, order, b.lower, b.upper, pv.position);
    out.grad.assign(m, 0.0);
    const auto& grad_before = mode == Mode::pessimistic ? b.lower_grad : b.upper_grad;
    const auto& grad_after = mode == Mode::pessimistic ? b.upper_grad : b.lower_grad;
    const double vj = v[order[pv.position]];
    for (int i = 0; i < n; ++i) {
        if (i == pv.position)
            continue;
        const int t = order[i];
        const double w = v[t] - vj;
        const double* g = (i < pv.position ? grad_before : grad_after).data() + t * m;
        for (std::size_t k = 0; k < m; ++k) out.grad[k] += w * g[k];
    }
    return out;
}

OmegaResult omega(std::span<const double> v, int s, std::span<const double> a, const IntervalMdp& mdp) {
    return extreme(Mode::pessimistic, v, s, a, mdp);
}

OmegaResult lambda(std::span<const double> v, int s, std::span<const double> a, const IntervalMdp& mdp) {
    return extreme(Mode::optimistic, v, s, a, mdp);
}

ValueVector f_operator(Mode mode, std::span<const double> v, const Policy& pi, const IntervalMdp& mdp, Exec exec) {
    const int n = mdp.num_states();
    if (static_cast<int>(v.size()) != n || static_cast<int>(pi.size()) != n)
        throw std::invalid_argument("value vector or policy has wrong length");
    for (int s = 0; s < n; ++s) {
        if (!mdp.action_box.contains(pi[s], 1e-12))
            throw std::invalid_argument("policy action of state '" + mdp.states[s] + "' lies outside the action box");
    }
    const auto order = order_permutation(v);
    const auto& rewards = mode == Mode::pessimistic ? mdp.reward_lower : mdp.reward_upper;
    ValueVector out(n);
    parallel_for(n, exec, [&](std::ptrdiff_t i) {
        const int s = static_cast<int>(i);
        LocalBounds b = evaluate_bounds(mdp, s, pi[s], false);
        out[s] = rewards[s].value(pi[s]) + mdp.gamma * extreme_value(mode, order, v, b.lower, b.upper).value;
    });
    return out;
}

ValueVector f_lower(std::span<const double> v, const Policy& pi, const IntervalMdp& mdp, Exec exec) {
    return f_operator(Mode::pessimistic, v, pi, mdp, exec);
}

ValueVector f_upper(std::span<const double> v, const Policy& pi, const IntervalMdp& mdp, Exec exec) {
    return f_operator(Mode::optimistic, v, pi, mdp, exec);
}

// ---------------------------------------------------------------------------
// grids

ActionGrid::ActionGrid(const Box& box, std::span<const int> resolution) {
    if (static_cast<int>(resolution.size()) != box.dim())
        throw std::invalid_argument("grid resolution must list one entry per action dimension");
    for (int k = 0; k < box.dim(); ++k) {
        const double lo = box.lower[k], hi = box.upper[k];
        std::vector<double> axis;
        if (lo == hi) {
            axis.push_back(lo);
        } else {
            const int r = resolution[k];
            if (r < 2)
                throw std::invalid_argument("grid needs at least 2 points per non-degenerate dimension");
            axis.resize(static_cast<std::size_t>(r));
            for (int i = 0; i < r; ++i) axis[i] = lo + (hi - lo) * static_cast<double>(i) / (r - 1);
            axis.back() = hi;
        }
        count_ *= axis.size();
        axes_.push_back(std::move(axis));
    }
}

ActionGrid::ActionGrid(const Box& box, int resolution)
    : ActionGrid(box, std::vector<int>(static_cast<std::size_t>(box.dim()), resolution)) {}

void ActionGrid::point(std::size_t index, std::span<double> out) const {
    for (int k = dim() - 1; k >= 0; --k) {
        const std::size_t len = axes_[k].size();
        out[k] = axes_[k][index % len];
        index /= len;
    }
}

Action ActionGrid::point(std::size_t index) const {
    Action a(axes_.size());
    point(index, a);
    return a;
}

GridTable::GridTable(const IntervalMdp& mdp, const ActionGrid& grid, Exec exec)
    : n_(mdp.num_states()), points_(grid.size()) {
    const std::size_t n = static_cast<std::size_t>(n_);
    const std::size_t m = static_cast<std::size_t>(grid.dim());
    std::vector<double> coords(points_ * m);
    for (std::size_t g = 0; g < points_; ++g) grid.point(g, std::span<double>(coords.data() + g * m, m));
    lower_.assign(n * points_ * n, 0.0);
    upper_.assign(n * points_ * n, 0.0);
    reward_lower_.assign(n * points_, 0.0);
    reward_upper_.assign(n * points_, 0.0);
    parallel_for(static_cast<std::ptrdiff_t>(n * points_), exec, [&](std::ptrdiff_t i) {
        const int s = static_cast<int>(static_cast<std::size_t>(i) / points_);
        const std::size_t g = static_cast<std::size_t>(i) % points_;
        std::span<const double> a(coords.data() + g * m, m);
        double* lo = lower_.data() + static_cast<std::size_t>(i) * n;
        double* hi = upper_.data() + static_cast<std::size_t>(i) * n;
        for (int t = 0; t < n_; ++t) {
            const Expression& el = mdp.trans_lower.at(s, t);
            const Expression& eu = mdp.trans_upper.at(s, t);
            lo[t] = el.is_zero() ? 0.0 : el.value(a);
            hi[t] = eu.is_zero() ? 0.0 : eu.value(a);
        }
        reward_lower_[i] = mdp.reward_lower[s].value(a);
        reward_upper_[i] = mdp.reward_upper[s].value(a);
    });
}

GridMaximum g_sweep(Mode mode, std::span<const double> v, const GridTable& table, double gamma, Exec exec) {
    const int n = table.num_states();
    const std::size_t points = table.num_points();
    if (static_cast<int>(v.size()) != n)
        throw std::invalid_argument("value vector has wrong length");
    const auto order = order_permutation(v);
    std::vector<double> objective(static_cast<std::size_t>(n) * points);
    parallel_for(static_cast<std::ptrdiff_t>(objective.size()), exec, [&](std::ptrdiff_t i) {
        const int s = static_cast<int>(static_cast<std::size_t>(i) / points);
        const std::size_t g = static_cast<std::size_t>(i) % points;
        objective[i] = table.reward(mode, s, g) +
                       gamma * extreme_value(mode, order, v, table.lower(s, g), table.upper(s, g)).value;
    });
    GridMaximum out;
    out.value.assign(n, 0.0);
    out.argmax.assign(n, 0);
    for (int s = 0; s < n; ++s) {
        const double* row = objective.data() + static_cast<std::size_t>(s) * points;
        std::size_t best = 0;
        for (std::size_t g = 1; g < points; ++g) {
            if (row[g] > row[best])
                best = g;
        }
        out.value[s] = row[best];
        out.argmax[s] = best;
    }
    return out;
}

GridResult g_operator_grid(Mode mode, std::span<const double> v, const IntervalMdp& mdp, const ActionGrid& grid,
                           Exec exec) {
    GridTable table(mdp, grid, exec);
    GridMaximum gm = g_sweep(mode, v, table, mdp.gamma, exec);
    GridResult out;
    out.value = std::move(gm.value);
    for (std::size_t g : gm.argmax) out.policy.push_back(grid.point(g));
    return out;
}

GridResult g_lower_grid(std::span<const double> v, const IntervalMdp& mdp, const ActionGrid& grid, Exec exec) {
    return g_operator_grid(Mode::pessimistic, v, mdp, grid, exec);
}

GridResult g_upper_grid(std::span<const double> v, const IntervalMdp& mdp, const ActionGrid& grid, Exec exec) {
    return g_operator_grid(Mode::optimistic, v, mdp, grid, exec);
}

}  // namespace imdp
