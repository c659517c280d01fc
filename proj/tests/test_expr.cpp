#include "imdp/expr.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using imdp::DomainError;
using imdp::Expression;
using imdp::ParseError;

namespace {

using imdp::testing::kCorpus;


// Central difference of the value path only.
double central_difference(const Expression& e, std::vector<double> a, int k, double h) {
    a[k] += h;
    double up = e.value(a);
    a[k] -= 2 * h;
    double down = e.value(a);
    return (up - down) / (2 * h);
}

}  // namespace

TEST_CASE("parse and evaluate the reward and transition forms of the two-state example") {
    auto p = Expression::parse("0.5*a1", 1);
    CHECK(p.value(std::vector{0.4}) == doctest::Approx(0.2));
    auto r = Expression::parse("1 + 4*a1*sqrt(a1) - a1^3", 1);
    CHECK(r.value(std::vector{0.25}) == doctest::Approx(1 + 4 * 0.25 * 0.5 - 0.25 * 0.25 * 0.25));

    auto cv = Expression::parse("1+4*a1-a1^4", 1);
    CHECK(cv.eval(std::vector{1.0}).value == 4.0);
    auto at0 = cv.eval(std::vector{0.0});
    REQUIRE(at0.gradient.size() == 1);
    CHECK(at0.gradient[0] == 4.0);
}

TEST_CASE("syntax errors carry the offset of the offending token") {
    try {
        Expression::parse("(a1", 1);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position() == 3);
    }
    CHECK_THROWS_AS(Expression::parse("a1)", 1), ParseError);
    CHECK_THROWS_AS(Expression::parse("foo(a1)", 1), ParseError);
    CHECK_THROWS_AS(Expression::parse("a2", 1), ParseError);
    CHECK_THROWS_AS(Expression::parse("a0", 1), ParseError);
    CHECK_THROWS_AS(Expression::parse("2^a1", 1), ParseError);
    CHECK_THROWS_AS(Expression::parse("a1 +", 1), ParseError);
    CHECK_THROWS_AS(Expression::parse("a1 a1", 1), ParseError);
    CHECK_THROWS_AS(Expression::parse("", 1), ParseError);
    try {
        Expression::parse("1 + 2^(a1+1)", 1);
    } catch (const ParseError& e) {
        CHECK(e.position() == 6);
        CHECK(std::string(e.what()).find("variable exponent") != std::string::npos);
    }
}

TEST_CASE("precedence: power over unary minus over product over sum") {
    auto e = Expression::parse("-a1^2", 1);
    CHECK(e.value(std::vector{3.0}) == -9.0);
    CHECK(Expression::parse("2^3^2", 1).value(std::vector{0.0}) == 512.0);
    CHECK(Expression::parse("8 - 3 - 2", 1).value(std::vector{0.0}) == 3.0);
    CHECK(Expression::parse("8 / 4 / 2", 1).value(std::vector{0.0}) == 1.0);
    CHECK(Expression::parse(" 1+2 * 3 ", 1).value(std::vector{0.0}) == 7.0);
    CHECK(Expression::parse("2^-1", 1).value(std::vector{0.0}) == 0.5);
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(Expression::parse("sqrt(a1)", 1).eval(std::vector{-0.5}), DomainError);
    CHECK_THROWS_AS(Expression::parse("log(a1)", 1).value(std::vector{0.0}), DomainError);
    CHECK_THROWS_AS(Expression::parse("1 / a1", 1).value(std::vector{0.0}), DomainError);
    CHECK_THROWS_AS(Expression::parse("a1^0.5", 1).value(std::vector{-1.0}), DomainError);
    CHECK(Expression::parse("a1^2", 1).value(std::vector{-1.5}) == 2.25);
    // The value exists at 0 but the slope of sqrt does not.
    CHECK(Expression::parse("sqrt(a1)", 1).value(std::vector{0.0}) == 0.0);
    CHECK_THROWS_AS(Expression::parse("sqrt(a1)", 1).eval(std::vector{0.0}), DomainError);
    CHECK_THROWS_AS(Expression::parse("a1", 1).value(std::vector{0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("forward-mode gradient matches central differences") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (auto [text, m] : kCorpus) {
        auto e = Expression::parse(text, m);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> a(m);
            for (double& x : a) x = u(rng);
            auto r = e.eval(a);
            CHECK(r.value == e.value(a));
            for (int k = 0; k < m; ++k) {
                double fd = central_difference(e, a, k, 1e-6);
                CHECK(std::abs(r.gradient[k] - fd) / std::max(1.0, std::abs(r.gradient[k])) <= 1e-5);
            }
        }
    }
}

TEST_CASE("render round-trips through the parser") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (auto [text, m] : kCorpus) {
        auto e = Expression::parse(text, m);
        auto back = Expression::parse(e.render(), m);
        CHECK(back.render() == e.render());
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> a(m);
            for (double& x : a) x = u(rng);
            CHECK(back.value(a) == e.value(a));
        }
    }
    CHECK(Expression::constant(-2.5, 1).render() == "(-2.5)");
}

TEST_CASE("evaluation is pure") {
    auto e = Expression::parse("exp(a1) * sqrt(a2) - a1 / (1 + a2^2)", 2);
    std::vector<double> a{0.3, 0.7};
    auto first = e.eval(a);
    for (int i = 0; i < 10; ++i) {
        auto again = e.eval(a);
        CHECK(again.value == first.value);
        CHECK(again.gradient == first.gradient);
    }
}

TEST_CASE("constants") {
    CHECK(Expression(2).is_zero());
    CHECK(Expression::parse("0", 1).is_zero());
    CHECK_FALSE(Expression::parse("0*a1", 1).is_constant());
    auto e = Expression::parse("1.5e1", 1);
    CHECK(e.is_constant());
    CHECK(e.eval(std::vector{0.2}).gradient[0] == 0.0);
}
