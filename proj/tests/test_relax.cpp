#include "imdp/relax.hpp"
#include "imdp/solver.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace imdp;

namespace {

IntervalMdp example_relaxed() { return relaxed_view(load_model(testing::example1_path())); }

}  // namespace

TEST_CASE("projected gradient step") {
    IntervalMdp cv = example_relaxed();
    std::vector<double> v{0.0, 0.0};
    Policy pi{{0.3}, {0.5}};
    CHECK(projected_gradient_step(v, pi, 0.0, cv) == pi);
    auto next = projected_gradient_step(v, pi, 0.01, cv);
    CHECK(next[1][0] == doctest::Approx(0.49).epsilon(1e-14));
    auto edge = projected_gradient_step(v, Policy{{1.0}, {0.0}}, 0.01, cv);
    CHECK(edge == Policy{{1.0}, {0.0}});
    auto far = projected_gradient_step(v, Policy{{0.9}, {0.1}}, 10.0, cv);
    CHECK(far == Policy{{1.0}, {0.0}});
    CHECK_THROWS_AS(projected_gradient_step(v, pi, -1.0, cv), std::invalid_argument);
}

TEST_CASE("constant estimates on the two-state example") {
    IntervalMdp cv = example_relaxed();
    auto est = estimate_constants(cv, {}, 2000, 0);
    CHECK(est.diameter == 1.0);
    CHECK(est.m_lower == doctest::Approx(5.0));
    CHECK(est.c_per_state[1] == doctest::Approx(2.0).epsilon(0.05));
    CHECK(est.L_per_state[1] == doctest::Approx(2.0).epsilon(0.05));
    CHECK(est.c_per_state[0] < 1e-3);
    CHECK(est.L_per_state[0] == doctest::Approx(12.0).epsilon(0.05));
    CHECK(est.c_flagged);
    CHECK(est.curvature_samples > 0);

    auto again = estimate_constants(cv, {}, 2000, 0);
    CHECK(again.c == est.c);
    CHECK(again.L == est.L);
    CHECK(again.sup_grad == est.sup_grad);

    auto supplied = estimate_constants(cv, RelaxationConstants{1.0, 4.0, 6.0}, 10, 0);
    CHECK(supplied.c == 1.0);
    CHECK(supplied.L == 4.0);
    CHECK(supplied.m_lower == 6.0);
    CHECK_FALSE(supplied.c_flagged);
    CHECK_THROWS_AS(estimate_constants(cv, {}, 1, 0), std::invalid_argument);
}

TEST_CASE("value-policy iteration stays sound and invariant") {
    IntervalMdp cv = example_relaxed();
    auto est = estimate_constants(cv, {}, 2000, 0);
    GradientConfig cfg;
    cfg.beta = 0.01;
    cfg.outer_iterations = 1000;
    auto run = value_policy_iterate(cv, cfg, est);
    REQUIRE(run.trajectory.size() == 1001);
    CHECK_FALSE(run.warnings.empty());

    SolveConfig sc;
    sc.grid = {1001};
    sc.tolerance = 1e-9;
    auto ref = solve(cv, sc);
    for (const auto& point : run.trajectory)
        for (int s = 0; s < 2; ++s) CHECK(point.v[s] <= ref.value[s] + 1e-6);
    for (int s = 0; s < 2; ++s) {
        CHECK(run.bounds.lower[s] <= ref.value[s] + 1e-3);
        CHECK(ref.value[s] <= run.bounds.upper[s] + 1e-3);
        CHECK(run.bounds.lower[s] <= run.bounds.upper[s]);
    }
    CHECK(run.bounds.d0 == doctest::Approx(50.0));
    CHECK(run.bounds.epsilon >= 0.0);

    auto inv = check_forward_invariance(run.trajectory, est.m_lower, cv.gamma, cv.action_box, true);
    CHECK(inv.ok());
    CHECK(inv.cap == doctest::Approx(50.0));
}

TEST_CASE("forward invariance detects leaving the set") {
    Box box{{0.0}, {1.0}};
    std::vector<TrajectoryPoint> traj{{0, {0.0, 0.0}, {{0.5}, {0.5}}}, {1, {60.0, -1.0}, {{1.5}, {0.5}}}};
    auto report = check_forward_invariance(traj, 5.0, 0.9, box, true);
    CHECK(report.violations.size() == 3);
    auto na = check_forward_invariance(traj, 5.0, 0.9, box, false);
    CHECK_FALSE(na.applicable);
    CHECK(na.reason == "not applicable: negative rewards");
    CHECK_FALSE(na.ok());
}

TEST_CASE("value-policy iteration on synthetic relaxations") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        // One action dimension keeps the reference grid fine enough for a 1e-6 comparison.
        auto model = testing::random_model(4, 1, seed, true);
        IntervalMdp cv = relaxed_view(model);
        auto est = estimate_constants(cv, {}, 400, seed);
        GradientConfig cfg;
        cfg.inner_steps = 20;
        cfg.outer_iterations = 300;
        cfg.stride = 10;
        auto run = value_policy_iterate(cv, cfg, est);
        CHECK(run.trajectory.size() == 31);
        SolveConfig sc;
        sc.grid = {2001};
        sc.tolerance = 1e-9;
        auto ref = solve(cv, sc);
        for (const auto& point : run.trajectory)
            for (int s = 0; s < 4; ++s) CHECK(point.v[s] <= ref.value[s] + 1e-6);
        for (int s = 0; s < 4; ++s) CHECK(ref.value[s] <= run.bounds.upper[s] + 1e-3);
        auto inv = check_forward_invariance(run.trajectory, est.m_lower, cv.gamma, cv.action_box, true);
        CHECK(inv.ok());
    }
}

TEST_CASE("two-sided bound holds in two action dimensions") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto model = testing::random_model(4, 2, seed, true);
        IntervalMdp cv = relaxed_view(model);
        auto est = estimate_constants(cv, {}, 400, seed);
        for (int steps : {1, 5}) {
            GradientConfig cfg;
            cfg.inner_steps = steps;
            cfg.outer_iterations = 100;
            auto run = value_policy_iterate(cv, cfg, est);
            SolveConfig sc;
            sc.grid = {201};
            sc.tolerance = 1e-9;
            auto ref = solve(cv, sc);
            for (int s = 0; s < 4; ++s) {
                CHECK(run.bounds.lower[s] <= ref.value[s] + 1e-3);
                CHECK(ref.value[s] <= run.bounds.upper[s] + 1e-3);
            }
        }
    }
}

TEST_CASE("inner objective is concave along segments with a fixed pivot") {
    int tested = 0;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        auto model = testing::random_model(4, 2, seed, true);
        IntervalMdp cv = relaxed_view(model);
        std::mt19937_64 rng(seed);
        for (int trial = 0; trial < 100; ++trial) {
            auto v = testing::random_vector(4, 0, 30, rng);
            const auto order = order_permutation(v);
            auto pa = testing::random_policy(cv.action_box, 4, rng);
            auto pb = testing::random_policy(cv.action_box, 4, rng);
            for (int s = 0; s < 4; ++s) {
                auto at = [&](double t) {
                    return Action{pa[s][0] + t * (pb[s][0] - pa[s][0]), pa[s][1] + t * (pb[s][1] - pa[s][1])};
                };
                const int pivot = extreme(Mode::pessimistic, v, order, s, at(0.0), cv).vertex.pivot;
                bool fixed = true;
                for (int i = 1; i <= 16 && fixed; ++i)
                    fixed = extreme(Mode::pessimistic, v, order, s, at(i / 16.0), cv).vertex.pivot == pivot;
                if (!fixed)
                    continue;
                auto objective = [&](double t) {
                    const Action a = at(t);
                    return cv.reward_lower[s].value(a) + cv.gamma * extreme(Mode::pessimistic, v, order, s, a, cv).value;
                };
                CHECK(objective(0.5) >= 0.5 * (objective(0.0) + objective(1.0)) - 1e-9);
                ++tested;
            }
        }
    }
    CHECK(tested >= 200);
}

TEST_CASE("inner objective is not concave across a pivot switch") {
    // On the two-state example Omega(v, 1, a) = v2 + (v1 - v2) max(0.5 a, 0.3 - 0.3 a): convex at a = 0.375.
    IntervalMdp cv = example_relaxed();
    std::vector<double> v{50.0, 0.0};
    auto objective = [&](double a) {
        std::vector<double> act{a};
        return cv.reward_lower[0].value(act) + cv.gamma * omega(v, 0, act, cv).value;
    };
    CHECK(objective(0.375) < 0.5 * (objective(0.3) + objective(0.45)) - 1.0);
    CHECK(omega(v, 0, std::vector{0.3}, cv).vertex.pivot != omega(v, 0, std::vector{0.45}, cv).vertex.pivot);
}

TEST_CASE("the relaxation dominates the base operators") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        auto model = testing::random_model(4, 2, seed, true);
        IntervalMdp cv = relaxed_view(model);
        const IntervalMdp& base = model.base;
        std::mt19937_64 rng(seed);
        ActionGrid grid(base.action_box, 7);
        for (int trial = 0; trial < 30; ++trial) {
            auto v = testing::random_vector(4, 0, 30, rng);
            auto pi = testing::random_policy(base.action_box, 4, rng);
            auto fbase = f_lower(v, pi, base), fcv = f_lower(v, pi, cv);
            auto gbase = g_lower_grid(v, base, grid).value, gcv = g_lower_grid(v, cv, grid).value;
            for (int s = 0; s < 4; ++s) {
                CHECK(fbase[s] <= fcv[s] + 1e-9);
                CHECK(gbase[s] <= gcv[s] + 1e-9);
            }
        }
    }
}

TEST_CASE("configuration errors") {
    IntervalMdp cv = example_relaxed();
    ConstantEstimates zero;
    GradientConfig cfg;
    CHECK_THROWS_AS(value_policy_iterate(cv, cfg, zero), std::invalid_argument);
    cfg.beta = 0.1;
    cfg.pi0 = Policy{{2.0}, {0.0}};
    CHECK_THROWS_AS(value_policy_iterate(cv, cfg, zero), std::invalid_argument);
    cfg.pi0.reset();
    cfg.inner_steps = 0;
    CHECK_THROWS_AS(value_policy_iterate(cv, cfg, zero), std::invalid_argument);
}
