#pragma once

// Iteration-distributed pessimistic value iteration on an action-space
// pessimistic relaxation: one Bellman-policy sweep interleaved with a few
// projected gradient ascent steps on the policy, plus the a-priori bound on
// the distance to the relaxed optimum.

#include "imdp/bellman.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace imdp {

struct GradientConfig {
    std::optional<double> beta;  // defaults to 1 / L
    int inner_steps = 1;
    int outer_iterations = 1000;
    std::optional<Policy> pi0;       // defaults to the box midpoint in every state
    std::optional<ValueVector> v0;   // defaults to zero
    int stride = 1;                  // keep every stride-th trajectory point (the last is always kept)
    Exec exec = Exec::parallel;
};

struct ConstantEstimates {
    double c = 0.0;         // strong concavity of a -> F(v, .)(s)
    double L = 0.0;         // smoothness of the same map
    double m_lower = 0.0;   // sup of the lower reward, clipped at 0
    double min_reward = 0.0;
    double sup_grad = 0.0;  // sup over X of the l1 norm of the action gradient, per state
    double diameter = 0.0;  // ||A^cv||_inf
    std::vector<double> c_per_state;
    std::vector<double> L_per_state;
    bool c_supplied = false;
    bool L_supplied = false;
    bool m_supplied = false;
    /// Strong concavity not observed (c numerically zero or negative).
    bool c_flagged = false;
    int curvature_samples = 0;  // samples used after discarding pivot switches
};

/**
 * Sampled estimates of the constants the bound needs. Values are drawn from
 * X = [0, m/(1-gamma)]^n (half the time from its corners), actions from the
 * relaxed box. Curvature comes from central differences of the exact action
 * gradient along random unit directions, skipping samples whose Omega pivot
 * changes within the stencil. Supplied constants override the estimates.
 */
ConstantEstimates estimate_constants(const IntervalMdp& relaxed, const RelaxationConstants& supplied, int samples,
                                     std::uint64_t seed);

/// Action gradient of a -> R_lower(s, a) + gamma * Omega(v, s, a) at a = pi(s).
std::vector<double> policy_gradient(std::span<const double> v, std::span<const int> order, int s,
                                    std::span<const double> a, const IntervalMdp& relaxed);

/// One projected gradient ascent step of every state's action; projection is a clamp onto the box.
Policy projected_gradient_step(std::span<const double> v, const Policy& pi, double beta, const IntervalMdp& relaxed,
                               Exec exec = Exec::parallel);

struct BoundReport {
    ValueVector vk;
    ValueVector lower;
    ValueVector upper;
    double epsilon = 0.0;
    double d0 = 0.0;                   // bound on ||v0 - V*||_inf
    bool d0_certified = true;          // false when rewards may be negative
    double contraction_factor = 1.0;   // (1 - c/L), or 1 when c is flagged
    double beta = 0.0;
    ConstantEstimates constants;
};

struct TrajectoryPoint {
    int k = 0;
    ValueVector v;
    Policy pi;
};

struct ValuePolicyResult {
    std::vector<TrajectoryPoint> trajectory;
    BoundReport bounds;
    double residual = 0.0;  // ||v^K - v^{K-1}||_inf
    std::vector<std::string> warnings;
};

/// Runs v^{k+1} = F(v^k, pi^k), pi^{k+1} = T^l(v^{k+1}, pi^k, beta) for k = 0..K-1.
ValuePolicyResult value_policy_iterate(const IntervalMdp& relaxed, const GradientConfig& config,
                                       const ConstantEstimates& constants);

struct InvarianceViolation {
    int k = 0;
    int state = -1;
    std::string what;
};

struct InvarianceReport {
    bool applicable = true;
    std::string reason;
    double cap = 0.0;  // m / (1 - gamma)
    std::vector<InvarianceViolation> violations;

    bool ok() const noexcept { return applicable && violations.empty(); }
};

/// Checks 0 <= v^k <= m/(1-gamma) and pi^k in the box for every trajectory point.
InvarianceReport check_forward_invariance(const std::vector<TrajectoryPoint>& trajectory, double m_lower,
                                          double gamma, const Box& box, bool rewards_nonnegative);

}  // namespace imdp
