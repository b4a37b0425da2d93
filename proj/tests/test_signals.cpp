#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "l1adapt/signals.hpp"

using namespace l1adapt;
using namespace l1adapt::signals;

namespace {

template <typename F>
Error capture(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e;
    }
    ADD_FAILURE() << "expected an exception";
    return Error(Errc::InvalidArgument, "none");
}

double ev(const std::string& text, double t, std::vector<double> x = {}) {
    return eval(parse(text, x.size()), t, std::span<const double>(x));
}

// Random expression generator that carries its own value, so the parser and evaluator are
// checked against a structurally independent reference.
struct Generated {
    std::string text;
    double value;
};

class Generator {
public:
    Generator(std::mt19937& rng, double t, std::vector<double> x) : rng_(rng), t_(t), x_(std::move(x)) {}

    Generated expr(int depth) {
        std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
        switch (pick(rng_)) {
        case 0: {
            std::uniform_real_distribution<double> v(0.0, 5.0);
            const double c = std::round(v(rng_) * 100.0) / 100.0;
            return {std::to_string(c), std::stod(std::to_string(c))};
        }
        case 1: return {"t", t_};
        case 2: {
            std::uniform_int_distribution<std::size_t> i(0, x_.size() - 1);
            const auto k = i(rng_);
            return {"x" + std::to_string(k + 1), x_[k]};
        }
        case 3: {
            auto a = expr(depth - 1), b = expr(depth - 1);
            return {"(" + a.text + " + " + b.text + ")", a.value + b.value};
        }
        case 4: {
            auto a = expr(depth - 1), b = expr(depth - 1);
            return {"(" + a.text + " - " + b.text + ")", a.value - b.value};
        }
        case 5: {
            auto a = expr(depth - 1), b = expr(depth - 1);
            return {a.text.front() == '(' ? a.text + "*" + b.text : "(" + a.text + ")*(" + b.text + ")", a.value * b.value};
        }
        case 6: {
            auto a = expr(depth - 1), b = expr(depth - 1);
            const double den = 1.5 + b.value * b.value;
            return {"(" + a.text + ")/(1.5 + (" + b.text + ")*(" + b.text + "))", a.value / den};
        }
        case 7: {
            auto a = expr(depth - 1);
            return {"sin(" + a.text + ")", std::sin(a.value)};
        }
        case 8: {
            auto a = expr(depth - 1);
            return {"cos(" + a.text + ")", std::cos(a.value)};
        }
        default: {
            auto a = expr(depth - 1);
            return {"-(" + a.text + ")", -a.value};
        }
        }
    }

private:
    std::mt19937& rng_;
    double t_;
    std::vector<double> x_;
};

} // namespace

TEST(Parse, RobotArmExpressions) {
    EXPECT_DOUBLE_EQ(ev("2+cos(pi*t)", 0.0), 3.0);
    EXPECT_NEAR(ev("sin(pi*t)", 0.5), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(ev("2+0.3*sin(pi*t)+0.2*cos(2*t)", 0.0), 2.2);
    const auto e = parse("cos(x1)+2*sin(100*t)", 2);
    EXPECT_TRUE(e.depends_on_state());
    EXPECT_TRUE(e.depends_on_time());
    const std::vector<double> x{0.5, -1.0};
    EXPECT_NEAR(eval(e, 0.01, std::span<const double>(x)), std::cos(0.5) + 2.0 * std::sin(1.0), 1e-15);
}

TEST(Parse, PrecedenceAndAssociativity) {
    EXPECT_DOUBLE_EQ(ev("1 + 2*3", 0), 7.0);
    EXPECT_DOUBLE_EQ(ev("(1 + 2)*3", 0), 9.0);
    EXPECT_DOUBLE_EQ(ev("8 - 3 - 2", 0), 3.0);
    EXPECT_DOUBLE_EQ(ev("8 / 4 / 2", 0), 1.0);
    EXPECT_DOUBLE_EQ(ev("-2*3", 0), -6.0);
    EXPECT_DOUBLE_EQ(ev("--2", 0), 2.0);
    EXPECT_DOUBLE_EQ(ev("2*-3", 0), -6.0);
    EXPECT_DOUBLE_EQ(ev("1.5e2 + .5", 0), 150.5);
    EXPECT_DOUBLE_EQ(ev("abs(-3) + exp(0)", 0), 4.0);
    EXPECT_DOUBLE_EQ(ev("x2 - x1", 0, {1.0, 5.0}), 4.0);
}

TEST(Parse, ConstantDetection) {
    EXPECT_TRUE(parse("2 + 3*pi", 2).is_constant());
    EXPECT_FALSE(parse("2 + t", 2).is_constant());
    EXPECT_FALSE(parse("x1", 2).is_constant());
}

TEST(ParseErrors, UnknownIdentifiers) {
    auto e = capture([] { (void)parse("cos(x3)", 2); });
    EXPECT_EQ(e.code(), Errc::UnknownIdentifier);
    EXPECT_EQ(e.offset(), std::optional<std::size_t>(4));
    EXPECT_EQ(capture([] { (void)parse("tan(t)", 2); }).code(), Errc::UnknownIdentifier);
    EXPECT_EQ(capture([] { (void)parse("x0", 2); }).code(), Errc::UnknownIdentifier);
    EXPECT_EQ(capture([] { (void)parse("x1", 0); }).code(), Errc::UnknownIdentifier);
}

TEST(ParseErrors, SyntaxWithByteOffset) {
    auto e = capture([] { (void)parse("2 + * 3", 1); });
    EXPECT_EQ(e.code(), Errc::SyntaxError);
    EXPECT_EQ(e.offset(), std::optional<std::size_t>(4));
    EXPECT_EQ(capture([] { (void)parse("sin(t", 1); }).code(), Errc::SyntaxError);
    EXPECT_EQ(capture([] { (void)parse("", 1); }).code(), Errc::SyntaxError);
    EXPECT_EQ(capture([] { (void)parse("2 3", 1); }).offset(), std::optional<std::size_t>(2));
    EXPECT_EQ(capture([] { (void)parse("t(1)", 1); }).code(), Errc::SyntaxError);
    EXPECT_EQ(capture([] { (void)parse("sin t", 1); }).code(), Errc::SyntaxError);
}

TEST(ParseErrors, Arity) {
    EXPECT_EQ(capture([] { (void)parse("sin()", 1); }).code(), Errc::ArityError);
    EXPECT_EQ(capture([] { (void)parse("cos(t, 1)", 1); }).code(), Errc::ArityError);
}

TEST(ParseErrors, DepthLimit) {
    std::string deep;
    for (int i = 0; i < 70; ++i) deep += "sin(";
    deep += "t";
    for (int i = 0; i < 70; ++i) deep += ")";
    EXPECT_EQ(capture([&] { (void)parse(deep, 1); }).code(), Errc::SyntaxError);
    std::string ok;
    for (int i = 0; i < 20; ++i) ok += "(((";
    ok += "t";
    for (int i = 0; i < 20; ++i) ok += ")))";
    EXPECT_NO_THROW((void)parse(ok, 1)); // parentheses alone do not deepen the tree
}

TEST(Eval, DivisionByZeroIsNonFinite) {
    EXPECT_EQ(capture([] { (void)ev("1/t", 0.0); }).code(), Errc::NonFinite);
    EXPECT_EQ(capture([] { (void)ev("exp(1000)", 0.0); }).code(), Errc::NonFinite);
}

TEST(RoundTrip, PrettyPrintReparsesToSameTree) {
    for (const char* text : {"2+cos(pi*t)", "-(x1)*x2 - 3/(1+t)", "--t", "abs(sin(x1) - exp(-t))", "1 - (2 - 3)"}) {
        const auto a = parse(text, 2);
        const auto b = parse(to_string(a), 2);
        EXPECT_TRUE(a.same_tree(b)) << text << " -> " << to_string(a);
        EXPECT_EQ(to_string(a), to_string(b));
    }
}

TEST(Property, RandomExpressionsMatchReferenceEvaluator) {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 300; ++trial) {
        const double t = u(rng);
        std::vector<double> x{u(rng), u(rng), u(rng)};
        Generator gen(rng, t, x);
        const auto g = gen.expr(5);
        const auto e = parse(g.text, 3);
        EXPECT_NEAR(eval(e, t, std::span<const double>(x)), g.value, 1e-12 * std::max(1.0, std::abs(g.value))) << g.text;
        EXPECT_TRUE(e.same_tree(parse(to_string(e), 3))) << g.text;
    }
}

TEST(DeclaredBounds, Examples) {
    SignalSpec s{parse("sin(pi*t)", 0), "sin(pi*t)", 1.0, std::numbers::pi + 0.01};
    EXPECT_TRUE(verify_declared_bounds(s, 10.0, 4000));
    SignalSpec c{parse("2+cos(pi*t)", 0), "2+cos(pi*t)", 2.5, std::nullopt};
    const auto chk = check_declared_bounds(c, 10.0, 1000);
    EXPECT_FALSE(chk.ok);
    EXPECT_NEAR(chk.max_abs, 3.0, 1e-12);
    SignalSpec r{parse("2*sin(100*t)", 0), "2*sin(100*t)", std::nullopt, 150.0};
    const auto rc = check_declared_bounds(r, 1.0, 20000);
    EXPECT_FALSE(rc.ok);
    EXPECT_NEAR(rc.max_rate, 200.0, 0.5);
}

TEST(DeclaredBounds, StateDependentUsesTrajectory) {
    SignalSpec s{parse("x1", 1), "x1", 1.0, std::nullopt};
    EXPECT_TRUE(verify_declared_bounds(s, 1.0, 100));
    const StateTrajectory traj = [](double t) { return Vector::Constant(1, 3.0 * t); };
    EXPECT_FALSE(verify_declared_bounds(s, 1.0, 100, traj));
}
