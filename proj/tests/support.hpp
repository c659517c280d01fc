#pragma once

// Shared generators for the unit and acceptance suites.

#include "imdp/model.hpp"

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#ifndef IMDP_MODELS_DIR
#define IMDP_MODELS_DIR "models"
#endif

namespace imdp::testing {

/// Expressions with their action dimension; every one is smooth on (0.05, 0.95)^m.
inline const std::vector<std::pair<const char*, int>> kCorpus = {
    {"0.5*a1", 1},
    {"0.7 + 0.3*a1", 1},
    {"1 + 4*a1*sqrt(a1) - a1^3", 1},
    {"5 - a1*sqrt(a1)", 1},
    {"1 + 4*a1 - a1^4", 1},
    {"5 - a1^2", 1},
    {"exp(-a1) * log(1 + a2) / (2 + a1*a2)", 2},
    {"(a1 - 0.3)^2 + a2^1.5 - -a3", 3},
    {"sqrt(a1 + a2) * exp(a2 / 3) - log(a1 + 0.1)^2", 2},
    {"2^3^0.5 * a1 - 1e-2 * a2^-1", 2},
};

inline std::string example1_path() { return std::string(IMDP_MODELS_DIR) + "/example1.json"; }

inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Random bounds with 0 <= lower <= upper <= 1 and sum(lower) <= 1 <= sum(upper).
struct RandomBounds {
    std::vector<double> lower, upper;
};

inline RandomBounds random_bounds(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> q(n);
    double total = 0.0;
    for (double& x : q) total += (x = u(rng) < 0.2 ? 0.0 : u(rng));
    if (total == 0.0) {
        q[0] = 1.0;
        total = 1.0;
    }
    RandomBounds b;
    for (int i = 0; i < n; ++i) {
        q[i] /= total;
        const int kind = static_cast<int>(u(rng) * 4.0);
        double lo = q[i] * u(rng), hi = q[i] + (1.0 - q[i]) * u(rng);
        if (kind == 0)
            lo = hi = q[i];  // point interval
        else if (kind == 1)
            lo = 0.0;
        b.lower.push_back(lo);
        b.upper.push_back(hi);
    }
    return b;
}

/**
 * Random IMDP whose bounds are consistent for every action in [0,1]^m.
 * Lower transitions are concave and upper transitions convex in the action,
 * lower rewards concave; the base model is a pessimistic relaxation target
 * when `with_relaxation` is set (base bounds shrunk inside the overlay).
 */
inline Model random_model(int n, int m, std::uint64_t seed, bool with_relaxation = false, double gamma = 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto var = [&](int k) { return "a" + std::to_string(k + 1); };
    auto pick = [&] { return static_cast<int>(u(rng) * m) % m; };
    if (gamma <= 0.0)
        gamma = 0.5 + 0.45 * u(rng);

    IntervalMdp cv;
    for (int s = 0; s < n; ++s) cv.states.push_back("s" + std::to_string(s));
    cv.action_dim = m;
    cv.action_box = Box{std::vector<double>(m, 0.0), std::vector<double>(m, 1.0)};
    cv.gamma = gamma;
    cv.trans_lower = ExpressionGrid(n, m);
    cv.trans_upper = ExpressionGrid(n, m);
    ExpressionGrid base_lo(n, m), base_hi(n, m);

    for (int s = 0; s < n; ++s) {
        std::vector<double> q(n, 0.0);
        double total = 0.0;
        for (int t = 0; t < n; ++t) total += (q[t] = u(rng) < 0.3 && t != s ? 0.0 : u(rng) + 0.05);
        for (int t = 0; t < n; ++t) {
            q[t] /= total;
            if (q[t] == 0.0)
                continue;  // absent edge: [0, 0]
            const double w0 = 0.6 * u(rng), w1 = (1.0 - w0) * u(rng);
            const double u0 = 0.5 * u(rng), u1 = (1.0 - u0) * u(rng);
            const std::string x = var(pick()), y = var(pick());
            // concave: q (w0 + w1 (2x - x^2)); convex: q + (1 - q)(u0 + u1 y^2)
            std::string lo = num(q[t]) + " * (" + num(w0) + " + " + num(w1) + " * (2*" + x + " - " + x + "^2))";
            std::string hi = num(q[t]) + " + " + num(1.0 - q[t]) + " * (" + num(u0) + " + " + num(u1) + " * " + y +
                             "^2)";
            cv.trans_lower.at(s, t) = Expression::parse(lo, m);
            cv.trans_upper.at(s, t) = Expression::parse(hi, m);
            const double shrink = 0.5 + 0.5 * u(rng), widen = 0.5 * u(rng);
            base_lo.at(s, t) = Expression::parse(num(shrink) + " * (" + lo + ")", m);
            base_hi.at(s, t) = Expression::parse("(" + hi + ") + " + num(widen) + " * (1 - (" + hi + "))", m);
        }
    }
    for (int s = 0; s < n; ++s) {
        const std::string x = var(pick());
        const double r0 = 5.0 * u(rng), r1 = 4.0 * u(rng), r2 = 0.5 + 3.0 * u(rng);
        std::string r = num(r0) + " + " + num(r1) + " * " + x + " - " + num(r2) + " * " + x + "^2";
        cv.reward_lower.push_back(Expression::parse(r, m));
        cv.reward_upper.push_back(Expression::parse(r + " + " + num(2.0 * u(rng)), m));
    }

    Model model;
    if (!with_relaxation) {
        model.base = cv;
        return model;
    }
    model.base = cv;
    model.base.trans_lower = base_lo;
    model.base.trans_upper = base_hi;
    for (int s = 0; s < n; ++s) {
        const double drop = 0.5 * u(rng), curve = 0.5 * u(rng);
        const std::string x = var(pick());
        model.base.reward_lower[s] =
            Expression::parse("(" + cv.reward_lower[s].render() + ") - " + num(drop) + " - " + num(curve) + " * " + x +
                                  "^3",
                              m);
    }
    RelaxationOverlay overlay;
    overlay.action_box = cv.action_box;
    overlay.trans_lower = cv.trans_lower;
    overlay.trans_upper = cv.trans_upper;
    overlay.reward_lower = cv.reward_lower;
    model.relaxation = overlay;
    return model;
}

/// Action-independent IMDP on a one-dimensional box [0, 1]; rows are indexed [from][to].
inline IntervalMdp constant_mdp(const std::vector<std::vector<double>>& lower,
                                const std::vector<std::vector<double>>& upper, const std::vector<double>& reward_lower,
                                const std::vector<double>& reward_upper, double gamma) {
    const int n = static_cast<int>(lower.size());
    IntervalMdp mdp;
    for (int s = 0; s < n; ++s) mdp.states.push_back("s" + std::to_string(s));
    mdp.action_dim = 1;
    mdp.action_box = Box{{0.0}, {1.0}};
    mdp.gamma = gamma;
    mdp.trans_lower = ExpressionGrid(n, 1);
    mdp.trans_upper = ExpressionGrid(n, 1);
    for (int s = 0; s < n; ++s) {
        for (int t = 0; t < n; ++t) {
            mdp.trans_lower.at(s, t) = Expression::constant(lower[s][t], 1);
            mdp.trans_upper.at(s, t) = Expression::constant(upper[s][t], 1);
        }
        mdp.reward_lower.push_back(Expression::constant(reward_lower[s], 1));
        mdp.reward_upper.push_back(Expression::constant(reward_upper[s], 1));
    }
    return mdp;
}

inline std::vector<double> random_vector(int n, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

inline Policy random_policy(const Box& box, int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Policy pi(n, Action(box.lower.size()));
    for (auto& a : pi)
        for (std::size_t k = 0; k < a.size(); ++k) a[k] = box.lower[k] + u(rng) * (box.upper[k] - box.lower[k]);
    return pi;
}

}  // namespace imdp::testing
