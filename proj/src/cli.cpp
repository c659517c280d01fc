#include "imdp/cli.hpp"

#include "imdp/model.hpp"
#include "imdp/oracle.hpp"
#include "imdp/relax.hpp"
#include "imdp/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

namespace imdp::cli {

using ojson = nlohmann::ordered_json;

namespace {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError(path + ": file not found");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const ojson& doc) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw InputError(path + ": cannot write result file");
    out << doc.dump(2) << '\n';
}

ojson per_state(const IntervalMdp& mdp, std::span<const double> values) {
    ojson obj = ojson::object();
    for (int s = 0; s < mdp.num_states(); ++s) obj[mdp.states[s]] = values[s];
    return obj;
}

ojson per_state(const IntervalMdp& mdp, const Policy& policy) {
    ojson obj = ojson::object();
    for (int s = 0; s < mdp.num_states(); ++s) obj[mdp.states[s]] = policy[s];
    return obj;
}

std::string join_command(const std::vector<std::string>& args) {
    std::string out = "imdp";
    for (const auto& a : args) out += " " + a;
    return out;
}

void print_table(std::ostream& out, const IntervalMdp& mdp, std::span<const double> values, const Policy& policy) {
    out << std::setprecision(10);
    for (int s = 0; s < mdp.num_states(); ++s) {
        out << "  " << std::setw(12) << std::left << mdp.states[s] << std::right << " value " << std::setw(18)
            << values[s] << "  action (";
        for (std::size_t k = 0; k < policy[s].size(); ++k) out << (k ? ", " : "") << policy[s][k];
        out << ")\n";
    }
}

// ---------------------------------------------------------------------------

struct SolveArgs {
    std::string model;
    std::string mode = "pessimistic";
    std::string method = "grid";
    bool relaxed = false;
    int grid = 101;
    double tol = 1e-6;
    int max_iters = 100000;
    std::optional<double> beta;
    int inner_steps = 1;
    int iters = 1000;
    int samples = 2000;
    std::uint64_t seed = 0;
    std::string out = "result.json";
    bool timing = false;
};

int cmd_solve(const SolveArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    const std::string text = read_file(a.model);
    Model model = parse_model(text, a.model);
    if (a.relaxed && !model.relaxation)
        throw InputError("--relaxed requested but the model has no 'relaxation' section");
    const IntervalMdp mdp = a.relaxed ? relaxed_view(model) : model.base;
    const Mode mode = a.mode == "optimistic" ? Mode::optimistic : Mode::pessimistic;

    ojson doc;
    doc["version"] = kVersion;
    doc["command"] = join_command(argv);
    doc["model_digest"] = content_digest(text);
    doc["mode"] = a.mode;
    doc["method"] = a.method;
    doc["relaxed"] = a.relaxed;
    int code = ok;

    if (a.method == "grid") {
        SolveConfig cfg;
        cfg.mode = mode;
        cfg.grid = {a.grid};
        cfg.tolerance = a.tol;
        cfg.max_iterations = a.max_iters;
        SolveResult r = solve(mdp, cfg);
        ValueVector lo = r.value, hi = r.value;
        for (auto& x : lo) x -= r.certified_error;
        for (auto& x : hi) x += r.certified_error;
        doc["values"] = per_state(mdp, r.value);
        doc["policy"] = per_state(mdp, r.policy);
        doc["bounds"] = {{"lower", per_state(mdp, lo)}, {"upper", per_state(mdp, hi)}};
        doc["iterations"] = r.iterations;
        doc["residual"] = r.residual;
        doc["certified_error"] = r.certified_error;
        doc["converged"] = r.converged;
        doc["epsilon"] = nullptr;
        doc["constants"] = nullptr;
        out << (mode == Mode::pessimistic ? "pessimistic" : "optimistic") << " value iteration on grid " << a.grid
            << (a.relaxed ? " (relaxed model)" : "") << ": " << r.iterations << " iterations, residual "
            << r.residual << (r.converged ? "" : " (NOT converged)") << '\n';
        print_table(out, mdp, r.value, r.policy);
        if (!r.converged) {
            err << "error: no convergence after " << r.iterations << " iterations (residual " << r.residual
                << ")\n";
            code = not_converged;
        }
    } else {
        if (!a.relaxed)
            throw InputError("--method gradient runs on the relaxation; pass --relaxed");
        if (mode != Mode::pessimistic)
            throw InputError("--method gradient supports --mode pessimistic only");
        ConstantEstimates k = estimate_constants(mdp, model.relaxation->constants, a.samples, a.seed);
        GradientConfig cfg;
        cfg.beta = a.beta;
        cfg.inner_steps = a.inner_steps;
        cfg.outer_iterations = a.iters;
        cfg.stride = a.iters;
        ValuePolicyResult r = value_policy_iterate(mdp, cfg, k);
        const auto& b = r.bounds;
        const Policy& pi = r.trajectory.back().pi;
        doc["values"] = per_state(mdp, b.vk);
        doc["policy"] = per_state(mdp, pi);
        doc["bounds"] = {{"lower", per_state(mdp, b.lower)}, {"upper", per_state(mdp, b.upper)}};
        doc["iterations"] = a.iters;
        doc["residual"] = r.residual;
        doc["epsilon"] = b.epsilon;
        doc["constants"] = {{"c", k.c},
                            {"L", k.L},
                            {"m", k.m_lower},
                            {"sup_grad", k.sup_grad},
                            {"diameter", k.diameter},
                            {"c_flagged", k.c_flagged},
                            {"contraction_factor", b.contraction_factor},
                            {"beta", b.beta},
                            {"d0", b.d0},
                            {"d0_certified", b.d0_certified}};
        doc["warnings"] = r.warnings;
        out << "pessimistic value-policy iteration: " << a.iters << " outer iterations, " << a.inner_steps
            << " gradient step(s), beta " << b.beta << '\n';
        print_table(out, mdp, b.vk, pi);
        out << "  epsilon " << b.epsilon << ", bound gap " << (b.upper[0] - b.lower[0]) << '\n';
        for (const auto& w : r.warnings) err << "warning: " << w << '\n';
    }
    doc["seed"] = a.seed;
    if (a.timing)
        doc["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    else
        doc["wall_time_s"] = nullptr;
    write_file(a.out, doc);
    out << "wrote " << a.out << '\n';
    return code;
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path, int samples, std::uint64_t seed, const std::string& out_path,
                 std::ostream& out) {
    const std::string text = read_file(path);
    Model model = parse_model(text, path);
    ValidationReport report = validate(model, samples, seed);

    ojson doc;
    doc["version"] = kVersion;
    doc["model_digest"] = content_digest(text);
    doc["samples"] = samples;
    doc["seed"] = seed;
    doc["checks"] = report.checks_run;
    ojson list = ojson::array();
    for (const auto& v : report.violations) {
        ojson item;
        item["check"] = v.check;
        item["detail"] = v.detail;
        item["state"] = v.state >= 0 ? ojson(model.base.states[v.state]) : ojson(nullptr);
        item["successor"] = v.successor >= 0 ? ojson(model.base.states[v.successor]) : ojson(nullptr);
        item["witness"] = v.witness;
        list.push_back(std::move(item));
    }
    doc["violations"] = std::move(list);
    doc["ok"] = report.ok();
    write_file(out_path, doc);

    if (report.ok()) {
        out << "validate: all " << report.checks_run.size() << " checks pass (" << samples << " samples, seed "
            << seed << ")\n";
        return ok;
    }
    out << "validate: " << report.violations.size() << " violation(s)\n";
    for (const auto& v : report.violations) out << "  [" << v.check << "] " << v.detail << '\n';
    return violations;
}

}  // namespace

// ---------------------------------------------------------------------------

OracleCheckReport oracle_check(const IntervalMdp& mdp, const OracleCheckOptions& options) {
    const int n = mdp.num_states();
    const int m = mdp.action_dim;
    const double tol = options.tolerance;
    ExtremeFn closed_form = options.extreme;
    if (!closed_form)
        closed_form = [](Mode mode, std::span<const double> v, std::span<const int> order,
                         std::span<const double> lo, std::span<const double> hi) {
            return extreme_value(mode, order, v, lo, hi).value;
        };

    OracleCheckReport report;
    report.trials = options.trials;
    report.oracle_used = n <= std::min(options.max_states, oracle::kMaxOracleStates);
    if (!report.oracle_used)
        report.notice = "oracle skipped: " + std::to_string(n) + " states exceeds --max-states " +
                        std::to_string(options.max_states) + "; running invariant checks only";

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto fail = [&](int trial, const std::string& what) {
        if (report.failures.size() < 50)
            report.failures.push_back("trial " + std::to_string(trial) + ": " + what);
    };

    ValueVector v(n);
    Action a(static_cast<std::size_t>(m));
    for (int trial = 0; trial < options.trials; ++trial) {
        const int s = static_cast<int>(u(rng) * n) % n;
        for (int k = 0; k < m; ++k)
            a[k] = mdp.action_box.lower[k] + u(rng) * (mdp.action_box.upper[k] - mdp.action_box.lower[k]);
        for (int t = 0; t < n; ++t) v[t] = -10.0 + 20.0 * u(rng);
        const std::uint64_t member_seed = rng();

        LocalBounds b = evaluate_bounds(mdp, s, a, false);
        const auto order = order_permutation(v);
        double value[2];
        for (Mode mode : {Mode::pessimistic, Mode::optimistic}) {
            const int side = mode == Mode::pessimistic ? 0 : 1;
            const char* name = side == 0 ? "Omega" : "Lambda";
            try {
                value[side] = closed_form(mode, v, order, b.lower, b.upper);
            } catch (const std::exception& e) {
                fail(trial, std::string(name) + " failed: " + e.what());
                value[side] = std::nan("");
                continue;
            }
            // The greedy vertex must be feasible and attain the value.
            const int pos = mode == Mode::pessimistic ? iota_lower(order, b.lower, b.upper)
                                                      : iota_upper(order, b.lower, b.upper);
            GreedyVertex vx = extreme_vertex(mode, order, b.lower, b.upper, pos);
            double sum = 0.0, dot = 0.0;
            for (int t = 0; t < n; ++t) {
                const double p = vx.probabilities[t];
                sum += p;
                dot += p * v[t];
                if (p < b.lower[t] - 1e-12 || p > b.upper[t] + 1e-12)
                    fail(trial, std::string(name) + " vertex leaves the bounds at successor " + mdp.states[t]);
            }
            if (std::abs(sum - 1.0) > 1e-12)
                fail(trial, std::string(name) + " vertex does not sum to one");
            if (std::abs(dot - value[side]) > tol * std::max(1.0, std::abs(dot)))
                fail(trial, std::string(name) + " value " + std::to_string(value[side]) +
                                " differs from its vertex objective " + std::to_string(dot));
            if (report.oracle_used) {
                oracle::BoxLP lp{v, b.lower, b.upper};
                auto sol = mode == Mode::pessimistic ? oracle::lp_min(lp) : oracle::lp_max(lp);
                const double err = std::abs(sol.value - value[side]);
                report.max_lp_error = std::max(report.max_lp_error, err);
                ++report.lp_comparisons;
                if (err > tol)
                    fail(trial, std::string(name) + " = " + std::to_string(value[side]) + " but LP optimum is " +
                                    std::to_string(sol.value));
            }
        }
        if (value[0] > value[1] + tol)
            fail(trial, "Omega exceeds Lambda");
        // Any member distribution lies between the two extremes.
        auto member = oracle::sample_member_mdp(mdp, {a}, member_seed);
        double dot = 0.0;
        for (int t = 0; t < n; ++t) dot += member.P[s][0][t] * v[t];
        if (dot < value[0] - tol || dot > value[1] + tol)
            fail(trial, "member expectation " + std::to_string(dot) + " outside [Omega, Lambda]");
    }
    return report;
}

namespace {

int cmd_oracle_check(const std::string& path, const OracleCheckOptions& opts, const std::string& out_path,
                     std::ostream& out) {
    const std::string text = read_file(path);
    Model model = parse_model(text, path);
    std::vector<std::pair<std::string, IntervalMdp>> targets{{"base", model.base}};
    if (model.relaxation)
        targets.emplace_back("relaxed", relaxed_view(model));

    ojson doc;
    doc["version"] = kVersion;
    doc["model_digest"] = content_digest(text);
    doc["trials"] = opts.trials;
    doc["seed"] = opts.seed;
    doc["tolerance"] = opts.tolerance;
    bool all_ok = true;
    for (const auto& [name, mdp] : targets) {
        OracleCheckReport r = oracle_check(mdp, opts);
        all_ok = all_ok && r.ok();
        doc["results"][name] = {{"oracle_used", r.oracle_used},
                                {"notice", r.notice},
                                {"lp_comparisons", r.lp_comparisons},
                                {"max_lp_error", r.max_lp_error},
                                {"failures", r.failures}};
        if (!r.notice.empty())
            out << "notice (" << name << "): " << r.notice << '\n';
        out << "oracle-check " << name << ": " << opts.trials << " trials, " << r.lp_comparisons
            << " LP comparisons, max error " << r.max_lp_error << ", " << r.failures.size() << " failure(s)\n";
        for (const auto& f : r.failures) out << "  " << f << '\n';
    }
    doc["ok"] = all_ok;
    write_file(out_path, doc);
    return all_ok ? ok : violations;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const ExtremeFn& extreme) {
    CLI::App app{"Interval MDP solver: pessimistic/optimistic value iteration, relaxations and bounds", "imdp"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SolveArgs sa;
    auto* solve_cmd = app.add_subcommand("solve", "Solve a model with grid value iteration or value-policy iteration");
    solve_cmd->add_option("model", sa.model, "Model JSON file")->required();
    solve_cmd->add_option("--mode", sa.mode)->check(CLI::IsMember({"pessimistic", "optimistic"}));
    solve_cmd->add_option("--method", sa.method)->check(CLI::IsMember({"grid", "gradient"}));
    solve_cmd->add_flag("--relaxed", sa.relaxed, "Use the relaxation overlay");
    solve_cmd->add_option("--grid", sa.grid, "Grid points per action dimension")->check(CLI::Range(2, 1 << 24));
    solve_cmd->add_option("--tol", sa.tol, "Target distance to the fixed point")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--max-iters", sa.max_iters)->check(CLI::PositiveNumber);
    solve_cmd->add_option("--beta", sa.beta, "Learning rate (default 1/L)")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--inner-steps", sa.inner_steps)->check(CLI::PositiveNumber);
    solve_cmd->add_option("--iters", sa.iters, "Outer value-policy iterations")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--samples", sa.samples, "Samples for constant estimation")->check(CLI::Range(2, 1 << 30));
    solve_cmd->add_option("--seed", sa.seed);
    solve_cmd->add_option("--out", sa.out);
    solve_cmd->add_flag("--timing", sa.timing, "Record wall time in the result file");

    std::string v_model, v_out = "validation.json";
    int v_samples = 1000;
    std::uint64_t v_seed = 0;
    auto* validate_cmd = app.add_subcommand("validate", "Check model consistency and relaxation conditions");
    validate_cmd->add_option("model", v_model)->required();
    validate_cmd->add_option("--samples", v_samples)->check(CLI::PositiveNumber);
    validate_cmd->add_option("--seed", v_seed);
    validate_cmd->add_option("--out", v_out);

    std::string o_model, o_out = "oracle_check.json";
    OracleCheckOptions o_opts;
    o_opts.extreme = extreme;
    auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare closed-form Omega/Lambda against the LP oracle");
    oracle_cmd->add_option("model", o_model)->required();
    oracle_cmd->add_option("--trials", o_opts.trials)->check(CLI::PositiveNumber);
    oracle_cmd->add_option("--seed", o_opts.seed);
    oracle_cmd->add_option("--max-states", o_opts.max_states)->check(CLI::Range(1, oracle::kMaxOracleStates));
    oracle_cmd->add_option("--out", o_out);

    std::vector<std::string> storage{"imdp"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : storage) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? ok : input_error;
    }

    try {
        if (*solve_cmd)
            return cmd_solve(sa, args, out, err);
        if (*validate_cmd)
            return cmd_validate(v_model, v_samples, v_seed, v_out, out);
        if (*oracle_cmd)
            return cmd_oracle_check(o_model, o_opts, o_out, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const SchemaError& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    }
    return input_error;
}

}  // namespace imdp::cli
