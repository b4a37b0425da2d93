#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "l1adapt/error.hpp"
#include "l1adapt/lti.hpp"

namespace l1adapt::signals {

// ============================================================================
// Expression tree
// ============================================================================

enum class NodeKind { Literal, Time, State, Pi, Neg, Add, Sub, Mul, Div, Sin, Cos, Exp, Abs };

struct Node {
    NodeKind kind = NodeKind::Literal;
    double value = 0.0; // Literal
    int index = -1;     // State: zero-based state index
    int lhs = -1;       // unary operand / left operand
    int rhs = -1;       // right operand

    friend bool operator==(const Node&, const Node&) = default;
};

inline constexpr int kMaxDepth = 64;

/// Immutable parsed signal expression over t, x1..xn and pi.
class SignalExpr {
public:
    SignalExpr() = default;

    [[nodiscard]] std::size_t n_states() const noexcept { return n_states_; }
    [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] int root() const noexcept { return root_; }
    [[nodiscard]] bool empty() const noexcept { return root_ < 0; }

    [[nodiscard]] bool depends_on_state() const {
        return std::any_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.kind == NodeKind::State; });
    }
    [[nodiscard]] bool depends_on_time() const {
        return std::any_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.kind == NodeKind::Time; });
    }
    [[nodiscard]] bool is_constant() const { return !depends_on_state() && !depends_on_time(); }

    /// Structural equality of the trees (node numbering may differ).
    [[nodiscard]] bool same_tree(const SignalExpr& other) const {
        return root_ >= 0 && other.root_ >= 0 && same_subtree(root_, other, other.root_);
    }

    [[nodiscard]] int depth() const { return root_ < 0 ? 0 : depth_of(root_); }

private:
    friend class Parser;

    [[nodiscard]] bool same_subtree(int a, const SignalExpr& o, int b) const {
        const Node& x = nodes_[static_cast<std::size_t>(a)];
        const Node& y = o.nodes_[static_cast<std::size_t>(b)];
        if (x.kind != y.kind) return false;
        if (x.kind == NodeKind::Literal) return x.value == y.value;
        if (x.kind == NodeKind::State) return x.index == y.index;
        if ((x.lhs < 0) != (y.lhs < 0) || (x.rhs < 0) != (y.rhs < 0)) return false;
        if (x.lhs >= 0 && !same_subtree(x.lhs, o, y.lhs)) return false;
        if (x.rhs >= 0 && !same_subtree(x.rhs, o, y.rhs)) return false;
        return true;
    }

    [[nodiscard]] int depth_of(int i) const {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        int d = 0;
        if (n.lhs >= 0) d = std::max(d, depth_of(n.lhs));
        if (n.rhs >= 0) d = std::max(d, depth_of(n.rhs));
        return d + 1;
    }

    std::vector<Node> nodes_;
    int root_ = -1;
    std::size_t n_states_ = 0;
};

// ============================================================================
// Parser
// ============================================================================

class Parser {
public:
    Parser(std::string_view text, std::size_t n_states) : text_(text), n_states_(n_states) {}

    SignalExpr parse() {
        if (text_.find_first_not_of(" \t\r\n") == std::string_view::npos)
            throw Error(Errc::SyntaxError, "empty expression", 0);
        expr_.n_states_ = n_states_;
        expr_.root_ = parse_sum(0);
        skip_ws();
        if (pos_ != text_.size()) throw Error(Errc::SyntaxError, "unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
        if (expr_.depth() > kMaxDepth)
            throw Error(Errc::SyntaxError, "expression nested deeper than " + std::to_string(kMaxDepth), 0);
        return std::move(expr_);
    }

private:
    int add(Node n) {
        expr_.nodes_.push_back(n);
        return static_cast<int>(expr_.nodes_.size() - 1);
    }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r' || text_[pos_] == '\n'))
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

    // Recursion guard only; the tree-depth limit is enforced after parsing.
    void guard(int depth) const {
        if (depth > 4 * kMaxDepth + 8) throw Error(Errc::SyntaxError, "expression nested deeper than " + std::to_string(kMaxDepth), pos_);
    }

    int parse_sum(int depth) {
        guard(depth);
        int lhs = parse_product(depth + 1);
        for (;;) {
            if (accept('+')) lhs = add({NodeKind::Add, 0.0, -1, lhs, parse_product(depth + 1)});
            else if (accept('-')) lhs = add({NodeKind::Sub, 0.0, -1, lhs, parse_product(depth + 1)});
            else return lhs;
        }
    }

    int parse_product(int depth) {
        guard(depth);
        int lhs = parse_unary(depth + 1);
        for (;;) {
            if (accept('*')) lhs = add({NodeKind::Mul, 0.0, -1, lhs, parse_unary(depth + 1)});
            else if (accept('/')) lhs = add({NodeKind::Div, 0.0, -1, lhs, parse_unary(depth + 1)});
            else return lhs;
        }
    }

    int parse_unary(int depth) {
        guard(depth);
        if (accept('-')) return add({NodeKind::Neg, 0.0, -1, parse_unary(depth + 1), -1});
        return parse_primary(depth + 1);
    }

    int parse_primary(int depth) {
        guard(depth);
        skip_ws();
        if (pos_ >= text_.size()) throw Error(Errc::SyntaxError, "unexpected end of expression", pos_);
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            const int inner = parse_sum(depth + 1);
            if (!accept(')')) throw Error(Errc::SyntaxError, "expected ')'", pos_);
            return inner;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier(depth);
        throw Error(Errc::SyntaxError, "unexpected '" + std::string(1, c) + "'", pos_);
    }

    int parse_number() {
        const std::size_t start = pos_;
        std::size_t end = pos_;
        auto digits = [&] {
            while (end < text_.size() && text_[end] >= '0' && text_[end] <= '9') ++end;
        };
        digits();
        if (end < text_.size() && text_[end] == '.') {
            ++end;
            digits();
        }
        if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
            std::size_t e = end + 1;
            if (e < text_.size() && (text_[e] == '+' || text_[e] == '-')) ++e;
            if (e < text_.size() && text_[e] >= '0' && text_[e] <= '9') {
                end = e;
                digits();
            }
        }
        double v = 0.0;
        const auto res = std::from_chars(text_.data() + start, text_.data() + end, v);
        if (res.ec != std::errc() || res.ptr != text_.data() + end || !std::isfinite(v))
            throw Error(Errc::SyntaxError, "malformed number", start);
        pos_ = end;
        return add({NodeKind::Literal, v, -1, -1, -1});
    }

    int parse_identifier(int depth) {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);

        static constexpr std::array<std::pair<std::string_view, NodeKind>, 4> kFunctions{
            {{"sin", NodeKind::Sin}, {"cos", NodeKind::Cos}, {"exp", NodeKind::Exp}, {"abs", NodeKind::Abs}}};
        for (const auto& [fname, kind] : kFunctions) {
            if (name != fname) continue;
            if (!accept('(')) throw Error(Errc::SyntaxError, "expected '(' after " + std::string(name), pos_);
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == ')')
                throw Error(Errc::ArityError, std::string(name) + " takes exactly one argument", pos_);
            const int arg = parse_sum(depth + 1);
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == ',')
                throw Error(Errc::ArityError, std::string(name) + " takes exactly one argument", pos_);
            if (!accept(')')) throw Error(Errc::SyntaxError, "expected ')'", pos_);
            return add({kind, 0.0, -1, arg, -1});
        }

        int node = -1;
        if (name == "t") node = add({NodeKind::Time, 0.0, -1, -1, -1});
        else if (name == "pi") node = add({NodeKind::Pi, 0.0, -1, -1, -1});
        else if (name.size() >= 2 && name[0] == 'x' &&
                 std::all_of(name.begin() + 1, name.end(), [](char ch) { return ch >= '0' && ch <= '9'; }) &&
                 name[1] != '0') {
            std::size_t idx = 0;
            const auto res = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
            if (res.ec != std::errc() || idx < 1 || idx > n_states_)
                throw Error(Errc::UnknownIdentifier,
                            "'" + std::string(name) + "' (declared states: x1..x" + std::to_string(n_states_) + ")", start);
            node = add({NodeKind::State, 0.0, static_cast<int>(idx - 1), -1, -1});
        } else {
            throw Error(Errc::UnknownIdentifier, "'" + std::string(name) + "'", start);
        }
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '(')
            throw Error(Errc::SyntaxError, "'" + std::string(name) + "' is not a function", pos_);
        return node;
    }

    std::string_view text_;
    std::size_t n_states_;
    std::size_t pos_ = 0;
    SignalExpr expr_;
};

inline SignalExpr parse(std::string_view text, std::size_t n_states) { return Parser(text, n_states).parse(); }

// ============================================================================
// Evaluation and printing
// ============================================================================

namespace detail {

inline double eval_node(const std::vector<Node>& nodes, int i, double t, std::span<const double> x) {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    double v = 0.0;
    switch (n.kind) {
    case NodeKind::Literal: v = n.value; break;
    case NodeKind::Time: v = t; break;
    case NodeKind::Pi: v = std::numbers::pi; break;
    case NodeKind::State: v = x[static_cast<std::size_t>(n.index)]; break;
    case NodeKind::Neg: v = -eval_node(nodes, n.lhs, t, x); break;
    case NodeKind::Add: v = eval_node(nodes, n.lhs, t, x) + eval_node(nodes, n.rhs, t, x); break;
    case NodeKind::Sub: v = eval_node(nodes, n.lhs, t, x) - eval_node(nodes, n.rhs, t, x); break;
    case NodeKind::Mul: v = eval_node(nodes, n.lhs, t, x) * eval_node(nodes, n.rhs, t, x); break;
    case NodeKind::Div: {
        const double num = eval_node(nodes, n.lhs, t, x);
        const double den = eval_node(nodes, n.rhs, t, x);
        if (den == 0.0) throw Error(Errc::NonFinite, "division by zero at t = " + std::to_string(t));
        v = num / den;
        break;
    }
    case NodeKind::Sin: v = std::sin(eval_node(nodes, n.lhs, t, x)); break;
    case NodeKind::Cos: v = std::cos(eval_node(nodes, n.lhs, t, x)); break;
    case NodeKind::Exp: v = std::exp(eval_node(nodes, n.lhs, t, x)); break;
    case NodeKind::Abs: v = std::abs(eval_node(nodes, n.lhs, t, x)); break;
    }
    if (!std::isfinite(v)) throw Error(Errc::NonFinite, "expression is not finite at t = " + std::to_string(t));
    return v;
}

inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline void print_node(const std::vector<Node>& nodes, int i, std::string& out) {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    auto binary = [&](char op) {
        out += '(';
        print_node(nodes, n.lhs, out);
        out += ' ';
        out += op;
        out += ' ';
        print_node(nodes, n.rhs, out);
        out += ')';
    };
    auto call = [&](const char* name) {
        out += name;
        out += '(';
        print_node(nodes, n.lhs, out);
        out += ')';
    };
    switch (n.kind) {
    case NodeKind::Literal: out += format_double(n.value); break;
    case NodeKind::Time: out += 't'; break;
    case NodeKind::Pi: out += "pi"; break;
    case NodeKind::State: out += 'x' + std::to_string(n.index + 1); break;
    case NodeKind::Neg:
        out += "-(";
        print_node(nodes, n.lhs, out);
        out += ')';
        break;
    case NodeKind::Add: binary('+'); break;
    case NodeKind::Sub: binary('-'); break;
    case NodeKind::Mul: binary('*'); break;
    case NodeKind::Div: binary('/'); break;
    case NodeKind::Sin: call("sin"); break;
    case NodeKind::Cos: call("cos"); break;
    case NodeKind::Exp: call("exp"); break;
    case NodeKind::Abs: call("abs"); break;
    }
}

} // namespace detail

/// Evaluates at time t and state x. Throws NonFinite on division by zero or overflow.
inline double eval(const SignalExpr& expr, double t, std::span<const double> x = {}) {
    if (expr.empty()) throw Error(Errc::InvalidArgument, "evaluating an empty expression");
    if (x.size() < expr.n_states() && expr.depends_on_state())
        throw Error(Errc::InvalidArgument, "state vector shorter than the declared dimension");
    return detail::eval_node(expr.nodes(), expr.root(), t, x);
}

inline double eval(const SignalExpr& expr, double t, const Vector& x) {
    return eval(expr, t, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

/// Fully parenthesized rendering; parsing it yields the same tree.
inline std::string to_string(const SignalExpr& expr) {
    std::string out;
    if (!expr.empty()) detail::print_node(expr.nodes(), expr.root(), out);
    return out;
}

// ============================================================================
// Declared bounds
// ============================================================================

/// An expression with its declared sup-norm and rate bounds.
struct SignalSpec {
    SignalExpr expr;
    std::string text;
    std::optional<double> declared_bound;
    std::optional<double> declared_rate_bound;
};

/// Maps a time to the state at which state-dependent expressions are sampled.
using StateTrajectory = std::function<Vector(double)>;

struct BoundCheck {
    bool ok = true;
    double max_abs = 0.0;
    double max_rate = 0.0;
};

/// Samples |f| and a central-difference |df/dt| on a uniform grid of [0, horizon];
/// fails when either exceeds its declared bound by more than 1%.
inline BoundCheck check_declared_bounds(const SignalSpec& spec, double horizon, int samples,
                                        const StateTrajectory& trajectory = {}) {
    if (!(horizon > 0.0)) throw Error(Errc::InvalidArgument, "horizon must be positive");
    if (samples < 2) throw Error(Errc::InvalidArgument, "need at least two samples");
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(std::max<std::size_t>(spec.expr.n_states(), 1)));
    auto value_at = [&](double t) {
        if (trajectory && spec.expr.depends_on_state()) return eval(spec.expr, t, trajectory(t));
        return eval(spec.expr, t, zero);
    };
    constexpr double kStep = 1e-5;
    BoundCheck out;
    for (int i = 0; i <= samples; ++i) {
        const double t = horizon * static_cast<double>(i) / static_cast<double>(samples);
        out.max_abs = std::max(out.max_abs, std::abs(value_at(t)));
        const double rate = (value_at(t + kStep) - value_at(std::max(0.0, t - kStep))) / (t + kStep - std::max(0.0, t - kStep));
        out.max_rate = std::max(out.max_rate, std::abs(rate));
    }
    if (spec.declared_bound && out.max_abs > 1.01 * *spec.declared_bound) out.ok = false;
    if (spec.declared_rate_bound && out.max_rate > 1.01 * *spec.declared_rate_bound) out.ok = false;
    return out;
}

inline bool verify_declared_bounds(const SignalSpec& spec, double horizon, int samples,
                                   const StateTrajectory& trajectory = {}) {
    return check_declared_bounds(spec, horizon, samples, trajectory).ok;
}

} // namespace l1adapt::signals
