#include "imdp/relax.hpp"

#include "imdp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace imdp {

std::vector<double> policy_gradient(std::span<const double> v, std::span<const int> order, int s,
                                    std::span<const double> a, const IntervalMdp& relaxed) {
    const std::size_t m = static_cast<std::size_t>(relaxed.action_dim);
    std::vector<double> grad(m, 0.0);
    relaxed.reward_lower[s].eval(a, grad);
    OmegaResult om = extreme(Mode::pessimistic, v, order, s, a, relaxed);
    for (std::size_t k = 0; k < m; ++k) grad[k] += relaxed.gamma * om.grad[k];
    return grad;
}

Policy projected_gradient_step(std::span<const double> v, const Policy& pi, double beta, const IntervalMdp& relaxed,
                               Exec exec) {
    const int n = relaxed.num_states();
    if (static_cast<int>(v.size()) != n || static_cast<int>(pi.size()) != n)
        throw std::invalid_argument("value vector or policy has wrong length");
    if (!(beta >= 0.0))
        throw std::invalid_argument("learning rate must be non-negative");
    const auto order = order_permutation(v);
    Policy next(pi);
    parallel_for(n, exec, [&](std::ptrdiff_t i) {
        const int s = static_cast<int>(i);
        auto grad = policy_gradient(v, order, s, pi[s], relaxed);
        for (std::size_t k = 0; k < grad.size(); ++k) next[s][k] += beta * grad[k];
        relaxed.action_box.clamp(next[s]);
    });
    return next;
}

// ---------------------------------------------------------------------------
// constants

namespace {

// Objective value and directional derivative of a -> F(v, .)(s) at a along d.
struct Probe {
    double slope = 0.0;
    int pivot = -1;
};

Probe probe(std::span<const double> v, std::span<const int> order, int s, std::span<const double> a,
            std::span<const double> d, const IntervalMdp& mdp) {
    auto grad = policy_gradient(v, order, s, a, mdp);
    Probe p;
    for (std::size_t k = 0; k < grad.size(); ++k) p.slope += grad[k] * d[k];
    p.pivot = extreme(Mode::pessimistic, v, order, s, a, mdp).vertex.pivot;
    return p;
}

}  // namespace

ConstantEstimates estimate_constants(const IntervalMdp& relaxed, const RelaxationConstants& supplied, int samples,
                                     std::uint64_t seed) {
    if (samples < 2)
        throw std::invalid_argument("constant estimation needs at least 2 samples");
    const int n = relaxed.num_states();
    const int m = relaxed.action_dim;
    const Box& box = relaxed.action_box;
    const double gamma = relaxed.gamma;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    ConstantEstimates est;
    est.diameter = box.diameter();

    auto random_action = [&](double margin) {
        Action a(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k) {
            const double lo = box.lower[k], hi = box.upper[k];
            const double pad = std::min(margin, 0.5 * (hi - lo));
            a[k] = lo + pad + u(rng) * (hi - lo - 2.0 * pad);
        }
        return a;
    };

    // Reward bound m: corners, midpoint and random actions.
    std::vector<Action> reward_points{box.lower, box.upper, box.midpoint()};
    for (int i = 0; i < samples; ++i) reward_points.push_back(random_action(0.0));
    double r_max = -std::numeric_limits<double>::infinity();
    double r_min = std::numeric_limits<double>::infinity();
    for (const Action& a : reward_points) {
        for (int s = 0; s < n; ++s) {
            const double r = relaxed.reward_lower[s].value(a);
            r_max = std::max(r_max, r);
            r_min = std::min(r_min, r);
        }
    }
    est.min_reward = r_min;
    est.m_lower = std::max(0.0, r_max);
    if (supplied.m) {
        est.m_lower = *supplied.m;
        est.m_supplied = true;
    }
    const double cap = est.m_lower / (1.0 - gamma);

    // Curvature and gradient magnitude over X x A^cv.
    const double h = 1e-5 * std::max(est.diameter, 1e-12);
    est.c_per_state.assign(n, std::numeric_limits<double>::infinity());
    est.L_per_state.assign(n, -std::numeric_limits<double>::infinity());
    ValueVector v(n);
    Action d(static_cast<std::size_t>(m)), a_plus(d.size()), a_minus(d.size());
    for (int i = 0; i < samples; ++i) {
        const bool corner = i % 2 == 1;
        for (int t = 0; t < n; ++t) v[t] = corner ? (u(rng) < 0.5 ? 0.0 : cap) : u(rng) * cap;
        const auto order = order_permutation(v);
        double norm = 0.0;
        for (int k = 0; k < m; ++k) {
            d[k] = box.lower[k] == box.upper[k] ? 0.0 : normal(rng);
            norm += d[k] * d[k];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0)
            continue;
        for (double& x : d) x /= norm;
        // The first few samples sit next to the box corners, where curvature often degenerates.
        Action a = random_action(2.0 * h);
        if (i < 2) {
            for (int k = 0; k < m; ++k) {
                const double pad = std::min(2.0 * h, 0.5 * (box.upper[k] - box.lower[k]));
                a[k] = i == 0 ? box.lower[k] + pad : box.upper[k] - pad;
            }
        }
        for (int k = 0; k < m; ++k) {
            a_plus[k] = a[k] + h * d[k];
            a_minus[k] = a[k] - h * d[k];
        }
        for (int s = 0; s < n; ++s) {
            auto grad = policy_gradient(v, order, s, a, relaxed);
            double l1 = 0.0;
            for (double g : grad) l1 += std::abs(g);
            est.sup_grad = std::max(est.sup_grad, l1);

            Probe mid = probe(v, order, s, a, d, relaxed);
            Probe plus = probe(v, order, s, a_plus, d, relaxed);
            Probe minus = probe(v, order, s, a_minus, d, relaxed);
            if (plus.pivot != mid.pivot || minus.pivot != mid.pivot)
                continue;
            const double curvature = -(plus.slope - minus.slope) / (2.0 * h);
            est.c_per_state[s] = std::min(est.c_per_state[s], curvature);
            est.L_per_state[s] = std::max(est.L_per_state[s], std::abs(curvature));
            ++est.curvature_samples;
        }
    }
    est.c = std::numeric_limits<double>::infinity();
    est.L = 0.0;
    for (int s = 0; s < n; ++s) {
        if (!std::isfinite(est.c_per_state[s])) {
            est.c_per_state[s] = 0.0;
            est.L_per_state[s] = 0.0;
        }
        est.c = std::min(est.c, est.c_per_state[s]);
        est.L = std::max(est.L, est.L_per_state[s]);
    }
    if (supplied.c) {
        est.c = *supplied.c;
        est.c_supplied = true;
    }
    if (supplied.L) {
        est.L = *supplied.L;
        est.L_supplied = true;
    }
    // Sampled curvature below this fraction of L is indistinguishable from zero.
    est.c_flagged = !(est.c > 1e-6 * std::max(est.L, 1.0));
    return est;
}

// ---------------------------------------------------------------------------
// value-policy iteration

ValuePolicyResult value_policy_iterate(const IntervalMdp& relaxed, const GradientConfig& config,
                                       const ConstantEstimates& constants) {
    check_structure(relaxed, false);
    const int n = relaxed.num_states();
    const double gamma = relaxed.gamma;
    if (config.inner_steps < 1 || config.outer_iterations < 1 || config.stride < 1)
        throw std::invalid_argument("inner_steps, outer_iterations and stride must be >= 1");

    ValuePolicyResult result;
    double beta;
    if (config.beta) {
        beta = *config.beta;
    } else {
        if (!(constants.L > 0.0))
            throw std::invalid_argument("learning rate defaults to 1/L but L is zero; pass beta explicitly");
        beta = 1.0 / constants.L;
    }
    if (!(beta > 0.0))
        throw std::invalid_argument("learning rate must be positive");

    Policy pi = config.pi0.value_or(Policy(n, relaxed.action_box.midpoint()));
    if (static_cast<int>(pi.size()) != n)
        throw std::invalid_argument("initial policy has wrong length");
    for (const Action& a : pi) {
        if (!relaxed.action_box.contains(a))
            throw std::invalid_argument("initial policy leaves the relaxed action box");
    }
    ValueVector v = config.v0.value_or(ValueVector(n, 0.0));
    if (static_cast<int>(v.size()) != n)
        throw std::invalid_argument("initial value has wrong length");
    const ValueVector v0 = v;

    if (constants.c_flagged)
        result.warnings.push_back("strong concavity not observed (c estimate " + std::to_string(constants.c) +
                                  "); the bound uses contraction factor 1");

    result.trajectory.push_back({0, v, pi});
    ValueVector previous = v;
    for (int k = 0; k < config.outer_iterations; ++k) {
        previous = v;
        v = f_lower(v, pi, relaxed, config.exec);
        for (int l = 0; l < config.inner_steps; ++l) pi = projected_gradient_step(v, pi, beta, relaxed, config.exec);
        const int step = k + 1;
        if (step % config.stride == 0 || step == config.outer_iterations)
            result.trajectory.push_back({step, v, pi});
    }
    result.residual = sup_distance(v, previous);

    BoundReport& b = result.bounds;
    b.constants = constants;
    b.beta = beta;
    b.vk = v;
    b.lower = v;
    b.contraction_factor = constants.c_flagged || !(constants.L > 0.0)
                               ? 1.0
                               : std::clamp(1.0 - constants.c / constants.L, 0.0, 1.0);
    b.epsilon = constants.sup_grad * std::pow(b.contraction_factor, config.inner_steps) * constants.diameter;
    // V* lies in [min(0, r_min), m] / (1 - gamma).
    const double lo_end = std::min(0.0, constants.min_reward) / (1.0 - gamma);
    const double hi_end = constants.m_lower / (1.0 - gamma);
    b.d0 = 0.0;
    for (double x : v0) b.d0 = std::max({b.d0, std::abs(x - lo_end), std::abs(x - hi_end)});
    b.d0_certified = constants.min_reward >= 0.0;
    const double gk = std::pow(gamma, config.outer_iterations);
    const double gap = gk * b.d0 + (1.0 - gk) * b.epsilon / (1.0 - gamma);
    b.upper = v;
    for (double& x : b.upper) x += gap;
    return result;
}

InvarianceReport check_forward_invariance(const std::vector<TrajectoryPoint>& trajectory, double m_lower,
                                          double gamma, const Box& box, bool rewards_nonnegative) {
    InvarianceReport report;
    report.cap = m_lower / (1.0 - gamma);
    if (!rewards_nonnegative) {
        report.applicable = false;
        report.reason = "not applicable: negative rewards";
        return report;
    }
    constexpr double kSlack = 1e-9;
    for (const auto& point : trajectory) {
        for (std::size_t s = 0; s < point.v.size(); ++s) {
            if (point.v[s] < -kSlack)
                report.violations.push_back({point.k, static_cast<int>(s), "value below 0"});
            if (point.v[s] > report.cap + kSlack)
                report.violations.push_back({point.k, static_cast<int>(s), "value above m/(1-gamma)"});
        }
        for (std::size_t s = 0; s < point.pi.size(); ++s) {
            if (!box.contains(point.pi[s]))
                report.violations.push_back({point.k, static_cast<int>(s), "action outside the relaxed box"});
        }
    }
    return report;
}

}  // namespace imdp
