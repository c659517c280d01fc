#include "imdp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace imdp::oracle {

namespace {

constexpr double kFeasTol = 1e-12;

LPSolution enumerate(const BoxLP& p, bool maximize) {
    const int n = static_cast<int>(p.objective.size());
    if (n < 1 || static_cast<int>(p.lower.size()) != n || static_cast<int>(p.upper.size()) != n)
        throw std::invalid_argument("BoxLP: mismatched sizes");
    if (n > kMaxOracleStates)
        throw std::invalid_argument("BoxLP: oracle limited to " + std::to_string(kMaxOracleStates) + " coordinates");
    double sum_lo = 0.0, sum_hi = 0.0;
    for (int i = 0; i < n; ++i) {
        if (p.lower[i] > p.upper[i] + kFeasTol)
            throw OracleInfeasible("BoxLP: lower > upper");
        sum_lo += p.lower[i];
        sum_hi += p.upper[i];
    }
    if (sum_lo > 1.0 + kFeasTol || sum_hi < 1.0 - kFeasTol)
        throw OracleInfeasible("BoxLP: empty feasible set");

    LPSolution best;
    best.value = maximize ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    std::vector<double> x(n);
    const std::uint32_t patterns = 1u << (n - 1);
    for (int free = 0; free < n; ++free) {
        for (std::uint32_t mask = 0; mask < patterns; ++mask) {
            double rest = 0.0;
            int bit = 0;
            for (int i = 0; i < n; ++i) {
                if (i == free)
                    continue;
                x[i] = (mask >> bit++) & 1u ? p.upper[i] : p.lower[i];
                rest += x[i];
            }
            x[free] = 1.0 - rest;
            if (x[free] < p.lower[free] - kFeasTol || x[free] > p.upper[free] + kFeasTol)
                continue;
            double value = 0.0;
            for (int i = 0; i < n; ++i) value += p.objective[i] * x[i];
            if (maximize ? value > best.value : value < best.value) {
                best.value = value;
                best.solution = x;
            }
        }
    }
    if (best.solution.empty())
        throw OracleInfeasible("BoxLP: no feasible basic solution");
    return best;
}

// Greedy fill from the lower bounds along `order`.
std::vector<double> fill_vertex(std::span<const double> lo, std::span<const double> hi, std::span<const int> order) {
    std::vector<double> p(lo.begin(), lo.end());
    double rest = 1.0 - std::accumulate(lo.begin(), lo.end(), 0.0);
    for (int t : order) {
        double add = std::clamp(rest, 0.0, hi[t] - lo[t]);
        p[t] += add;
        rest -= add;
    }
    return p;
}

}  // namespace

LPSolution lp_min(const BoxLP& problem) { return enumerate(problem, false); }
LPSolution lp_max(const BoxLP& problem) { return enumerate(problem, true); }

GridArgmax argmax_grid(const std::function<double(std::span<const double>)>& objective, const Box& box,
                       int resolution) {
    const int m = box.dim();
    std::vector<int> counts(m);
    for (int k = 0; k < m; ++k) {
        if (box.lower[k] == box.upper[k])
            counts[k] = 1;
        else if (resolution < 2)
            throw std::invalid_argument("argmax_grid: resolution must be >= 2");
        else
            counts[k] = resolution;
    }
    auto coord = [&](int k, int i) {
        if (counts[k] == 1)
            return box.lower[k];
        if (i == counts[k] - 1)
            return box.upper[k];
        return box.lower[k] + (box.upper[k] - box.lower[k]) * i / (counts[k] - 1);
    };
    std::vector<int> idx(m, 0);
    std::vector<double> a(m);
    GridArgmax best;
    best.value = -std::numeric_limits<double>::infinity();
    for (;;) {
        for (int k = 0; k < m; ++k) a[k] = coord(k, idx[k]);
        double value = objective(a);
        if (value > best.value) {
            best.value = value;
            best.action = a;
        }
        int k = m - 1;
        while (k >= 0 && ++idx[k] == counts[k]) idx[k--] = 0;
        if (k < 0)
            break;
    }
    return best;
}

ConcreteMdp sample_member_mdp(const IntervalMdp& mdp, const std::vector<std::vector<double>>& actions,
                              std::uint64_t seed) {
    const int n = mdp.num_states();
    ConcreteMdp out;
    out.actions = actions;
    out.gamma = mdp.gamma;
    out.P.assign(n, {});
    out.R.assign(n, {});
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<int> order(n);
    std::vector<double> lo(n), hi(n);
    for (int s = 0; s < n; ++s) {
        for (const auto& a : actions) {
            double sum_lo = 0.0, sum_hi = 0.0;
            for (int t = 0; t < n; ++t) {
                lo[t] = mdp.trans_lower.at(s, t).value(a);
                hi[t] = mdp.trans_upper.at(s, t).value(a);
                sum_lo += lo[t];
                sum_hi += hi[t];
            }
            if (sum_lo > 1.0 + kFeasTol || sum_hi < 1.0 - kFeasTol)
                throw OracleInfeasible("member sampling: inconsistent bounds at state '" + mdp.states[s] + "'");
            // Convex mix of greedy vertices for random fill orders.
            constexpr int kVertices = 3;
            std::vector<double> p(n, 0.0);
            double total_weight = 0.0;
            for (int r = 0; r < kVertices; ++r) {
                std::iota(order.begin(), order.end(), 0);
                std::shuffle(order.begin(), order.end(), rng);
                auto vertex = fill_vertex(lo, hi, order);
                double w = -std::log(1.0 - u(rng));
                total_weight += w;
                for (int t = 0; t < n; ++t) p[t] += w * vertex[t];
            }
            for (int t = 0; t < n; ++t) p[t] = std::clamp(p[t] / total_weight, lo[t], hi[t]);
            out.P[s].push_back(std::move(p));
            const double r_lo = mdp.reward_lower[s].value(a);
            const double r_hi = mdp.reward_upper[s].value(a);
            out.R[s].push_back(r_lo + u(rng) * (r_hi - r_lo));
        }
    }
    return out;
}

ValueVector mdp_bellman(std::span<const double> v, const ConcreteMdp& mdp) {
    const int n = mdp.num_states();
    ValueVector out(n, -std::numeric_limits<double>::infinity());
    for (int s = 0; s < n; ++s) {
        for (std::size_t g = 0; g < mdp.R[s].size(); ++g) {
            double q = mdp.R[s][g];
            for (int t = 0; t < n; ++t) q += mdp.gamma * mdp.P[s][g][t] * v[t];
            out[s] = std::max(out[s], q);
        }
    }
    return out;
}

ValueVector mdp_bellman_policy(std::span<const double> v, const ConcreteMdp& mdp, std::span<const std::size_t> policy) {
    const int n = mdp.num_states();
    ValueVector out(n);
    for (int s = 0; s < n; ++s) {
        const std::size_t g = policy[s];
        double q = mdp.R[s][g];
        for (int t = 0; t < n; ++t) q += mdp.gamma * mdp.P[s][g][t] * v[t];
        out[s] = q;
    }
    return out;
}

}  // namespace imdp::oracle
