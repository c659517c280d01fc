#include "imdp/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace imdp {

ParseError::ParseError(const std::string& message, std::size_t position)
    : std::runtime_error(message + " at position " + std::to_string(position)),
      position_(position) {}

enum class Op { constant, variable, neg, add, sub, mul, div, pow, sqrt, exp, log };

struct Expression::Node {
    Op op = Op::constant;
    int lhs = -1;
    int rhs = -1;
    double constant = 0.0;  // literal value, or the exponent for Op::pow
    int variable = 0;       // 0-based
};

namespace {

using Tape = std::vector<Expression::Node>;

const char* op_name(Op op) {
    switch (op) {
    case Op::constant: return "constant";
    case Op::variable: return "variable";
    case Op::neg: return "negation";
    case Op::add: return "addition";
    case Op::sub: return "subtraction";
    case Op::mul: return "multiplication";
    case Op::div: return "division";
    case Op::pow: return "power";
    case Op::sqrt: return "sqrt";
    case Op::exp: return "exp";
    case Op::log: return "log";
    }
    return "?";
}

class Parser {
public:
    Parser(std::string_view text, int action_dim) : text_(text), dim_(action_dim) {}

    Tape run() {
        int root = expr();
        skip_ws();
        if (pos_ != text_.size()) {
            if (text_[pos_] == ')')
                throw ParseError("unbalanced ')'", pos_);
            throw ParseError(std::string("unexpected character '") + text_[pos_] + "'", pos_);
        }
        (void)root;
        return std::move(tape_);
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int push(Expression::Node node) {
        tape_.push_back(node);
        return static_cast<int>(tape_.size()) - 1;
    }

    int binary(Op op, int lhs, int rhs) { return push({op, lhs, rhs, 0.0, 0}); }

    int expr() {
        int lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = binary(Op::add, lhs, term());
            else if (accept('-'))
                lhs = binary(Op::sub, lhs, term());
            else
                return lhs;
        }
    }

    int term() {
        int lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = binary(Op::mul, lhs, unary());
            else if (accept('/'))
                lhs = binary(Op::div, lhs, unary());
            else
                return lhs;
        }
    }

    int unary() {
        if (accept('-')) {
            int arg = unary();
            return push({Op::neg, arg, -1, 0.0, 0});
        }
        return power();
    }

    int power() {
        int base = primary();
        if (!accept('^'))
            return base;
        skip_ws();
        std::size_t exponent_pos = pos_;
        std::size_t mark = tape_.size();
        int exponent = unary();
        for (std::size_t i = mark; i < tape_.size(); ++i) {
            if (tape_[i].op == Op::variable)
                throw ParseError("variable exponent", exponent_pos);
        }
        double p = constant_value(exponent);
        if (!std::isfinite(p))
            throw ParseError("non-finite exponent", exponent_pos);
        // Fold the exponent subtree away; only its value is kept.
        tape_.resize(mark);
        return push({Op::pow, base, -1, p, 0});
    }

    double constant_value(int index) const {
        const auto& n = tape_[index];
        switch (n.op) {
        case Op::constant: return n.constant;
        case Op::neg: return -constant_value(n.lhs);
        case Op::add: return constant_value(n.lhs) + constant_value(n.rhs);
        case Op::sub: return constant_value(n.lhs) - constant_value(n.rhs);
        case Op::mul: return constant_value(n.lhs) * constant_value(n.rhs);
        case Op::div: return constant_value(n.lhs) / constant_value(n.rhs);
        case Op::pow: return std::pow(constant_value(n.lhs), n.constant);
        case Op::sqrt: return std::sqrt(constant_value(n.lhs));
        case Op::exp: return std::exp(constant_value(n.lhs));
        case Op::log: return std::log(constant_value(n.lhs));
        case Op::variable: break;
        }
        return std::nan("");
    }

    int primary() {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (c == '(') {
            std::size_t open = pos_;
            ++pos_;
            int inner = expr();
            if (!accept(')')) {
                skip_ws();
                throw ParseError(pos_ >= text_.size() ? "unbalanced '(' opened at " + std::to_string(open)
                                                      : "expected ')'",
                                 pos_);
            }
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)))
            return identifier();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    int number() {
        std::size_t start = pos_;
        double value = 0.0;
        auto [end, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
        if (ec != std::errc())
            throw ParseError("malformed number", start);
        pos_ = static_cast<std::size_t>(end - text_.data());
        return push({Op::constant, -1, -1, value, 0});
    }

    int identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        std::string_view name = text_.substr(start, pos_ - start);
        if (name == "a") {
            std::size_t digits = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            if (digits == pos_)
                throw ParseError("action variable needs an index (a1..a" + std::to_string(dim_) + ")", start);
            int index = 0;
            std::from_chars(text_.data() + digits, text_.data() + pos_, index);
            if (index < 1 || index > dim_)
                throw ParseError("variable index out of range 1.." + std::to_string(dim_) + ": " +
                                     std::string(text_.substr(start, pos_ - start)),
                                 start);
            return push({Op::variable, -1, -1, 0.0, index - 1});
        }
        Op op;
        if (name == "sqrt")
            op = Op::sqrt;
        else if (name == "exp")
            op = Op::exp;
        else if (name == "log")
            op = Op::log;
        else
            throw ParseError("unknown identifier '" + std::string(name) + "'", start);
        if (!accept('('))
            throw ParseError("expected '(' after " + std::string(name), pos_);
        int arg = expr();
        if (!accept(')')) {
            skip_ws();
            throw ParseError("unbalanced '(' in call to " + std::string(name), pos_);
        }
        return push({op, arg, -1, 0.0, 0});
    }

    std::string_view text_;
    int dim_;
    std::size_t pos_ = 0;
    Tape tape_;
};

bool is_integer(double p) { return std::floor(p) == p; }

void fail(Op op, int index, const char* what) {
    throw DomainError(std::string(what) + " in " + op_name(op) + " node #" + std::to_string(index));
}

// Scratch storage reused across calls on the same thread.
struct Scratch {
    std::vector<double> value;
    std::vector<double> grad;
};

thread_local Scratch scratch;

void render_node(const Tape& tape, int index, std::ostringstream& out) {
    const auto& n = tape[index];
    auto num = [&out](double x) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        if (x < 0)
            out << '(' << buf << ')';
        else
            out << buf;
    };
    switch (n.op) {
    case Op::constant: num(n.constant); return;
    case Op::variable: out << 'a' << n.variable + 1; return;
    case Op::neg: out << "(-"; render_node(tape, n.lhs, out); out << ')'; return;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div: {
        static constexpr char symbols[] = {'+', '-', '*', '/'};
        out << '(';
        render_node(tape, n.lhs, out);
        out << ' ' << symbols[static_cast<int>(n.op) - static_cast<int>(Op::add)] << ' ';
        render_node(tape, n.rhs, out);
        out << ')';
        return;
    }
    case Op::pow:
        out << '(';
        render_node(tape, n.lhs, out);
        out << '^';
        num(n.constant);
        out << ')';
        return;
    case Op::sqrt:
    case Op::exp:
    case Op::log:
        out << op_name(n.op) << '(';
        render_node(tape, n.lhs, out);
        out << ')';
        return;
    }
}

}  // namespace

Expression::Expression(int action_dim)
    : tape_(std::make_shared<const Tape>(Tape{Node{Op::constant, -1, -1, 0.0, 0}})), action_dim_(action_dim) {}

Expression::Expression(std::shared_ptr<const std::vector<Node>> tape, int action_dim)
    : tape_(std::move(tape)), action_dim_(action_dim) {}

Expression Expression::parse(std::string_view text, int action_dim) {
    if (action_dim < 1)
        throw std::invalid_argument("action_dim must be >= 1");
    Parser parser(text, action_dim);
    return Expression(std::make_shared<const Tape>(parser.run()), action_dim);
}

Expression Expression::constant(double value, int action_dim) {
    return Expression(std::make_shared<const Tape>(Tape{Node{Op::constant, -1, -1, value, 0}}), action_dim);
}

bool Expression::is_constant() const noexcept {
    return tape_->size() == 1 && tape_->front().op == Op::constant;
}

bool Expression::is_zero() const noexcept { return is_constant() && tape_->front().constant == 0.0; }

double Expression::value(std::span<const double> action) const {
    if (static_cast<int>(action.size()) != action_dim_)
        throw std::invalid_argument("action dimension mismatch");
    const Tape& tape = *tape_;
    auto& vals = scratch.value;
    vals.resize(tape.size());
    for (std::size_t i = 0; i < tape.size(); ++i) {
        const Node& n = tape[i];
        double x = n.lhs >= 0 ? vals[n.lhs] : 0.0;
        double y = n.rhs >= 0 ? vals[n.rhs] : 0.0;
        double r = 0.0;
        switch (n.op) {
        case Op::constant: r = n.constant; break;
        case Op::variable: r = action[n.variable]; break;
        case Op::neg: r = -x; break;
        case Op::add: r = x + y; break;
        case Op::sub: r = x - y; break;
        case Op::mul: r = x * y; break;
        case Op::div:
            if (y == 0.0)
                fail(n.op, static_cast<int>(i), "division by zero");
            r = x / y;
            break;
        case Op::pow:
            if (x < 0.0 && !is_integer(n.constant))
                fail(n.op, static_cast<int>(i), "negative base with fractional exponent");
            r = std::pow(x, n.constant);
            break;
        case Op::sqrt:
            if (x < 0.0)
                fail(n.op, static_cast<int>(i), "square root of negative value");
            r = std::sqrt(x);
            break;
        case Op::exp: r = std::exp(x); break;
        case Op::log:
            if (x <= 0.0)
                fail(n.op, static_cast<int>(i), "logarithm of non-positive value");
            r = std::log(x);
            break;
        }
        if (!std::isfinite(r))
            fail(n.op, static_cast<int>(i), "non-finite value");
        vals[i] = r;
    }
    return vals.back();
}

double Expression::eval(std::span<const double> action, std::span<double> gradient) const {
    const std::size_t m = static_cast<std::size_t>(action_dim_);
    if (gradient.size() != m)
        throw std::invalid_argument("gradient dimension mismatch");
    double result = value(action);  // validates the domain and fills scratch.value
    const Tape& tape = *tape_;
    const auto& vals = scratch.value;
    auto& grad = scratch.grad;
    grad.assign(tape.size() * m, 0.0);
    for (std::size_t i = 0; i < tape.size(); ++i) {
        const Node& n = tape[i];
        double* g = grad.data() + i * m;
        const double* gx = n.lhs >= 0 ? grad.data() + static_cast<std::size_t>(n.lhs) * m : nullptr;
        const double* gy = n.rhs >= 0 ? grad.data() + static_cast<std::size_t>(n.rhs) * m : nullptr;
        double x = n.lhs >= 0 ? vals[n.lhs] : 0.0;
        double y = n.rhs >= 0 ? vals[n.rhs] : 0.0;
        double r = vals[i];
        switch (n.op) {
        case Op::constant: break;
        case Op::variable: g[n.variable] = 1.0; break;
        case Op::neg:
            for (std::size_t k = 0; k < m; ++k) g[k] = -gx[k];
            break;
        case Op::add:
            for (std::size_t k = 0; k < m; ++k) g[k] = gx[k] + gy[k];
            break;
        case Op::sub:
            for (std::size_t k = 0; k < m; ++k) g[k] = gx[k] - gy[k];
            break;
        case Op::mul:
            for (std::size_t k = 0; k < m; ++k) g[k] = gx[k] * y + x * gy[k];
            break;
        case Op::div:
            for (std::size_t k = 0; k < m; ++k) g[k] = (gx[k] * y - x * gy[k]) / (y * y);
            break;
        case Op::pow: {
            double p = n.constant;
            double d = p == 0.0 ? 0.0 : p == 1.0 ? 1.0 : p * std::pow(x, p - 1.0);
            for (std::size_t k = 0; k < m; ++k) g[k] = gx[k] == 0.0 ? 0.0 : d * gx[k];
            break;
        }
        case Op::sqrt:
            for (std::size_t k = 0; k < m; ++k) g[k] = gx[k] == 0.0 ? 0.0 : gx[k] / (2.0 * r);
            break;
        case Op::exp:
            for (std::size_t k = 0; k < m; ++k) g[k] = r * gx[k];
            break;
        case Op::log:
            for (std::size_t k = 0; k < m; ++k) g[k] = gx[k] / x;
            break;
        }
        for (std::size_t k = 0; k < m; ++k) {
            if (!std::isfinite(g[k]))
                fail(n.op, static_cast<int>(i), "non-finite derivative");
        }
    }
    const double* root = grad.data() + (tape.size() - 1) * m;
    for (std::size_t k = 0; k < m; ++k) gradient[k] = root[k];
    return result;
}

EvalResult Expression::eval(std::span<const double> action) const {
    EvalResult out;
    out.gradient.assign(static_cast<std::size_t>(action_dim_), 0.0);
    out.value = eval(action, out.gradient);
    return out;
}

std::string Expression::render() const {
    std::ostringstream out;
    render_node(*tape_, static_cast<int>(tape_->size()) - 1, out);
    return out.str();
}

}  // namespace imdp
