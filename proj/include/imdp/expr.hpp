#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace imdp {

/// Raised by Expression::parse; `position` is the 0-based byte offset of the offending token.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t position);
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Raised by Expression::eval when a node produces a non-finite value.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EvalResult {
    double value = 0.0;
    std::vector<double> gradient;  // d/da_1 .. d/da_m
};

/**
 * Immutable arithmetic expression in the action variables a1..am.
 *
 * Grammar (whitespace insignificant):
 *   expr    := term (('+' | '-') term)*
 *   term    := unary (('*' | '/') unary)*
 *   unary   := '-' unary | power
 *   power   := primary ('^' unary)?        exponent must be constant
 *   primary := number | 'a'<k> | func '(' expr ')' | '(' expr ')'
 *   func    := sqrt | exp | log
 *
 * `^` binds tighter than unary minus, so -a1^2 is -(a1^2). The tree is stored
 * as a flat tape with children before parents; copies share the tape.
 */
class Expression {
public:
    /// The constant zero in dimension `action_dim`.
    explicit Expression(int action_dim = 1);

    static Expression parse(std::string_view text, int action_dim);
    static Expression constant(double value, int action_dim);

    /// Value and exact first derivatives (forward-mode dual numbers).
    EvalResult eval(std::span<const double> action) const;

    /// Writes the gradient into `gradient` (size m) and returns the value.
    double eval(std::span<const double> action, std::span<double> gradient) const;

    /// Value only.
    double value(std::span<const double> action) const;

    /// Canonical, fully parenthesized text that parses back to an equivalent tree.
    std::string render() const;

    int action_dim() const noexcept { return action_dim_; }

    /// True when the expression is a literal constant.
    bool is_constant() const noexcept;
    bool is_zero() const noexcept;

    struct Node;

private:
    Expression(std::shared_ptr<const std::vector<Node>> tape, int action_dim);

    std::shared_ptr<const std::vector<Node>> tape_;
    int action_dim_;
};

}  // namespace imdp
