#pragma once

#include "imdp/bellman.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace imdp::cli {

inline constexpr const char* kVersion = "0.3.1";

enum ExitCode : int { ok = 0, input_error = 1, not_converged = 2, violations = 3 };

/// Signature of the closed-form extreme value under test by oracle-check.
using ExtremeFn = std::function<double(Mode, std::span<const double> v, std::span<const int> order,
                                       std::span<const double> lower, std::span<const double> upper)>;

/// Entry point shared by the executable and the tests; args exclude the program name.
/// `extreme` replaces the closed form checked by oracle-check (harness self-test).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const ExtremeFn& extreme = {});

struct OracleCheckOptions {
    int trials = 1000;
    std::uint64_t seed = 0;
    int max_states = 12;
    double tolerance = 1e-9;
    ExtremeFn extreme;  // defaults to bellman's extreme_value
};

struct OracleCheckReport {
    int trials = 0;
    bool oracle_used = true;
    std::string notice;
    int lp_comparisons = 0;
    double max_lp_error = 0.0;
    std::vector<std::string> failures;

    bool ok() const noexcept { return failures.empty(); }
};

/// Randomized closed form vs. LP enumeration, vertex feasibility and sandwich checks.
OracleCheckReport oracle_check(const IntervalMdp& mdp, const OracleCheckOptions& options);

}  // namespace imdp::cli
