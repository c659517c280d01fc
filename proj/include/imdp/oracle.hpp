#pragma once

// Brute-force references used to arbitrate the closed forms in bellman.hpp.
// Nothing here calls into the bellman module.

#include "imdp/model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace imdp::oracle {

class OracleInfeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Default size gate for callers; the enumeration itself accepts up to kMaxOracleStates.
inline constexpr int kDefaultOracleStates = 12;
inline constexpr int kMaxOracleStates = 24;

/// min / max of objective . p subject to lower <= p <= upper and sum p = 1.
struct BoxLP {
    std::vector<double> objective;
    std::vector<double> lower;
    std::vector<double> upper;
};

struct LPSolution {
    double value = 0.0;
    std::vector<double> solution;
};

/**
 * Exact optimum by enumerating every basic solution: all but one coordinate
 * at a bound, the free coordinate absorbing 1 - sum(others). Cost n^2 * 2^(n-1).
 */
LPSolution lp_min(const BoxLP& problem);
LPSolution lp_max(const BoxLP& problem);

struct GridArgmax {
    std::vector<double> action;
    double value = 0.0;
};

/// Exhaustive maximization on a per-dimension uniform grid; the first maximizer wins.
GridArgmax argmax_grid(const std::function<double(std::span<const double>)>& objective, const Box& box,
                       int resolution);

/// A finite-action MDP: P[s][g][s'] and R[s][g] on a shared list of actions.
struct ConcreteMdp {
    std::vector<std::vector<double>> actions;        // grid points
    std::vector<std::vector<std::vector<double>>> P;  // [s][g][s']
    std::vector<std::vector<double>> R;               // [s][g]
    double gamma = 0.0;

    int num_states() const { return static_cast<int>(R.size()); }
};

/// Random member of the IMDP on the given actions, deterministic under `seed`.
ConcreteMdp sample_member_mdp(const IntervalMdp& mdp, const std::vector<std::vector<double>>& actions,
                              std::uint64_t seed);

/// Classical Bellman operator max_g R + gamma P v over the finite action list.
ValueVector mdp_bellman(std::span<const double> v, const ConcreteMdp& mdp);

/// Bellman-policy operator for the policy given as action indices.
ValueVector mdp_bellman_policy(std::span<const double> v, const ConcreteMdp& mdp, std::span<const std::size_t> policy);

}  // namespace imdp::oracle
