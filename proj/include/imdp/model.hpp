#pragma once

#include "imdp/expr.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace imdp {

using ValueVector = std::vector<double>;
using Action = std::vector<double>;
using Policy = std::vector<Action>;

/// Problem in the model file: missing field, bad range, unknown state, expression error.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Axis-aligned action set [lower, upper] in R^m.
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    int dim() const noexcept { return static_cast<int>(lower.size()); }
    bool contains(std::span<const double> a, double slack = 0.0) const;
    bool contains(const Box& inner) const;
    void clamp(std::span<double> a) const;
    Action midpoint() const;
    /// Largest side length, i.e. sup ||x - y||_inf over the box.
    double diameter() const;
};

/// Row-major n x n table of expressions; entry (from, to) holds the bound for
/// arriving in `to` when acting in `from`.
class ExpressionGrid {
public:
    ExpressionGrid() = default;
    ExpressionGrid(int n, int action_dim) : n_(n), cells_(static_cast<std::size_t>(n) * n, Expression(action_dim)) {}

    const Expression& at(int from, int to) const { return cells_[static_cast<std::size_t>(from) * n_ + to]; }
    Expression& at(int from, int to) { return cells_[static_cast<std::size_t>(from) * n_ + to]; }
    int size() const noexcept { return n_; }

private:
    int n_ = 0;
    std::vector<Expression> cells_;
};

/**
 * An interval MDP (S, A, [P], [R], gamma) with box-shaped action set. This is
 * the object every operator works on; a relaxation overlay is turned into one
 * of these by relaxed_view().
 */
struct IntervalMdp {
    std::vector<std::string> states;
    int action_dim = 1;
    Box action_box;
    double gamma = 0.9;
    ExpressionGrid trans_lower;
    ExpressionGrid trans_upper;
    std::vector<Expression> reward_lower;
    std::vector<Expression> reward_upper;

    int num_states() const noexcept { return static_cast<int>(states.size()); }
};

struct RelaxationConstants {
    std::optional<double> c;  // strong concavity
    std::optional<double> L;  // smoothness
    std::optional<double> m;  // upper bound on the lower reward
};

/// Action-space pessimistic relaxation: concave lower / convex upper surrogates on a larger box.
struct RelaxationOverlay {
    Box action_box;
    ExpressionGrid trans_lower;
    ExpressionGrid trans_upper;
    std::vector<Expression> reward_lower;
    RelaxationConstants constants;
};

struct Model {
    IntervalMdp base;
    std::optional<RelaxationOverlay> relaxation;
};

/// Parses a model document (JSON text). `origin` prefixes diagnostics.
Model parse_model(const std::string& json_text, const std::string& origin = "model");

/// Reads and parses a model file; throws std::runtime_error on I/O failure and SchemaError otherwise.
Model load_model(const std::filesystem::path& path);

/// The relaxed IMDP: overlay box, transition and lower-reward bounds; the upper reward is the base one.
IntervalMdp relaxed_view(const Model& model);

/// Checks that do not need sampling: gamma range, box ordering, dimensions.
void check_structure(const IntervalMdp& mdp, bool strict_gamma = true);

/// 64-bit FNV-1a hash, hex-encoded.
std::string content_digest(std::string_view bytes);

struct Violation {
    std::string check;      // e.g. "row_sum", "concavity"
    std::string detail;     // human readable
    int state = -1;         // acting state (0-based), -1 when not applicable
    int successor = -1;     // successor state (0-based), -1 when not applicable
    std::vector<Action> witness;  // one point, or a pair for concavity/convexity
};

struct ValidationReport {
    int samples = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> checks_run;
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
};

/**
 * Seeded falsification of the pointwise model conditions: interval ordering,
 * row-sum consistency, reward ordering and, when an overlay is present, the
 * relaxation dominance plus concavity/convexity by midpoint second
 * differences. Only the first witness per (check, state, successor) is kept.
 */
ValidationReport validate(const Model& model, int samples, std::uint64_t seed);

}  // namespace imdp
