#include "doctest.h"

#include "tperiodic/error.hpp"
#include "tperiodic/expr.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

using namespace tperiodic;

namespace {

ErrorKind kind_of(const std::string& src, const VariableSet& vars) {
    try {
        (void)Expr::parse(src, vars);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a parse error for " << src);
    return ErrorKind::Config;
}

std::size_t offset_of(const std::string& src, const VariableSet& vars) {
    try {
        (void)Expr::parse(src, vars);
    } catch (const Error& e) {
        REQUIRE(e.offset().has_value());
        return *e.offset();
    }
    FAIL("expected a parse error for " << src);
    return 0;
}

std::string random_expr(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
    static const char* funcs[] = {"sin", "cos", "exp", "abs", "sqrt", "log"};
    static const char* ops[] = {" + ", " - ", " * ", " / ", "^"};
    std::uniform_real_distribution<double> num(0.0, 9.0);
    switch (pick(rng)) {
        case 0: return std::to_string(num(rng)).substr(0, 5);
        case 1: return "x";
        case 2: return "pi";
        case 3:
        case 4: return "-" + random_expr(rng, depth - 1);
        case 5: return std::string(funcs[rng() % 6]) + "(" + random_expr(rng, depth - 1) + ")";
        case 6: return "(" + random_expr(rng, depth - 1) + ")";
        default: return random_expr(rng, depth - 1) + ops[rng() % 5] + random_expr(rng, depth - 1);
    }
}

const std::map<std::string, double> kNoBindings;

}  // namespace

TEST_SUITE("expr") {

TEST_CASE("sin of a delayed variable") {
    const Expr e = Expr::parse("sin(yd1)", VariableSet{"t", "y1", "yd1"});
    CHECK(e.free_variables() == std::vector<std::string>{"yd1"});
    const double slots[] = {0.0, 0.0, std::numbers::pi / 2};
    CHECK(e.evaluate(slots) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("sigma-shifted coefficient evaluates by hand") {
    const Expr e = Expr::parse("cos(t)/(sin(t)+2) - (sin(t)+2)", VariableSet{"t"});
    CHECK(e.evaluate({{"t", 0.0}}) == doctest::Approx(-1.5).epsilon(1e-15));
    // direct closed form at a few points
    for (double t : {0.3, 1.7, 4.0, 6.1}) {
        const double ref = std::cos(t) / (std::sin(t) + 2.0) - (std::sin(t) + 2.0);
        CHECK(std::abs(e.evaluate({{"t", t}}) - ref) <= 1e-15 * std::abs(ref));
    }
}

TEST_CASE("incomplete expression reports its offset") {
    const VariableSet vars{"x1"};
    CHECK(kind_of("x1 +", vars) == ErrorKind::Syntax);
    CHECK(offset_of("x1 +", vars) == 4);
    CHECK(offset_of("", vars) == 0);
    CHECK(offset_of("x1 * (2", vars) == 7);
    CHECK(offset_of("x1 $ 2", vars) == 3);
}

TEST_CASE("literals, pi and associativity") {
    CHECK(Expr::parse("3.5", {}).evaluate(kNoBindings) == 3.5);
    CHECK(Expr::parse("2^3^2", {}).evaluate(kNoBindings) == 512.0);
    CHECK(Expr::parse("pi", {}).evaluate(kNoBindings) == 3.141592653589793);
    CHECK(Expr::parse("1e-3 * 2", {}).evaluate(kNoBindings) == doctest::Approx(2e-3));
    CHECK(Expr::parse("10 - 4 - 3", {}).evaluate(kNoBindings) == 3.0);
    CHECK(Expr::parse("12 / 3 / 2", {}).evaluate(kNoBindings) == 2.0);
    CHECK(Expr::parse("1 + 2 * 3", {}).evaluate(kNoBindings) == 7.0);
}

TEST_CASE("unary minus and powers") {
    const VariableSet vars{"x"};
    CHECK(Expr::parse("-x^2", vars).evaluate({{"x", 3.0}}) == -9.0);
    CHECK(Expr::parse("(-x)^2", vars).evaluate({{"x", 3.0}}) == 9.0);
    CHECK(Expr::parse("2^-1", vars).evaluate(kNoBindings) == 0.5);
    CHECK(Expr::parse("--x", vars).evaluate({{"x", 3.0}}) == 3.0);
}

TEST_CASE("identifier and arity errors") {
    const VariableSet vars{"t"};
    CHECK(kind_of("q + 1", vars) == ErrorKind::UnknownIdentifier);
    CHECK(offset_of("t + q", vars) == 4);
    CHECK(kind_of("sin(t, t)", vars) == ErrorKind::Arity);
    CHECK(kind_of("tan(t)", vars) == ErrorKind::UnknownIdentifier);
    CHECK(kind_of("2 t", vars) == ErrorKind::Syntax);
}

TEST_CASE("evaluation errors carry the node offset") {
    const VariableSet vars{"x"};
    const Expr div = Expr::parse("1 + 1/x", vars);
    try {
        (void)div.evaluate({{"x", 0.0}});
        FAIL("division by zero not reported");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Evaluation);
        CHECK(e.offset() == std::optional<std::size_t>(5));
    }
    CHECK_THROWS_AS((void)Expr::parse("log(x)", vars).evaluate({{"x", -1.0}}), Error);
    CHECK_THROWS_AS((void)Expr::parse("sqrt(x)", vars).evaluate({{"x", -1.0}}), Error);
    CHECK_THROWS_AS((void)Expr::parse("x + 1", vars).evaluate(kNoBindings), Error);
}

TEST_CASE("aliases share a slot") {
    VariableSet vars;
    vars.add("p", 0);
    vars.add("x1", 0);
    vars.add("q", 1);
    const Expr e = Expr::parse("p*x1 + q", vars);
    const double slots[] = {3.0, 0.5};
    CHECK(e.evaluate(slots) == 9.5);
}

TEST_CASE("pretty-print round trip on random expressions") {
    std::mt19937 rng(20240611);
    const VariableSet vars{"x"};
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
        const std::string src = random_expr(rng, 4);
        const Expr first = Expr::parse(src, vars);
        const Expr second = Expr::parse(first.to_string(), vars);
        CHECK_MESSAGE(first.structurally_equal(second), src << " -> " << first.to_string());
        CHECK(Expr::parse(second.to_string(), vars).structurally_equal(second));
        ++checked;
    }
    CHECK(checked == 100);
}

}
