#pragma once

// Small arithmetic expression language used by configuration files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | 'pi' | variable | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | exp | log | abs | sqrt
//
// "-x^2" is -(x^2) and "2^3^2" is 2^(3^2). There is no implicit
// multiplication.

#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tperiodic {

/// Variables an expression may reference, each bound to an evaluation slot.
/// Several names may share a slot (aliases such as `p` and `x1`).
class VariableSet {
public:
    VariableSet() = default;
    /// Names bound to consecutive slots 0, 1, 2, ...
    VariableSet(std::initializer_list<std::string> names);

    void add(std::string name, int slot);
    [[nodiscard]] std::optional<int> slot(std::string_view name) const;
    [[nodiscard]] int slot_count() const noexcept { return slot_count_; }
    [[nodiscard]] const std::vector<std::pair<std::string, int>>& entries() const noexcept { return entries_; }

private:
    std::vector<std::pair<std::string, int>> entries_;
    int slot_count_ = 0;
};

enum class ExprFunc : std::uint8_t { Sin, Cos, Exp, Log, Abs, Sqrt };

enum class ExprOp : std::uint8_t { Number, Pi, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };

struct ExprNode {
    ExprOp op = ExprOp::Number;
    ExprFunc func = ExprFunc::Sin;
    double value = 0.0;
    std::string name;  // variable name
    int slot = -1;
    int lhs = -1;  // operand (unary ops and calls use lhs)
    int rhs = -1;
    std::size_t offset = 0;  // byte offset in the source
};

/// Parsed, immutable expression.
class Expr {
public:
    static Expr parse(std::string_view source, const VariableSet& allowed);

    /// Slot-indexed evaluation (fast path used inside integrators).
    [[nodiscard]] double evaluate(std::span<const double> slots) const;
    /// Name-indexed evaluation; every free variable must be bound.
    [[nodiscard]] double evaluate(const std::map<std::string, double>& bindings) const;

    /// Fully parenthesized rendering that parses back to the same tree.
    [[nodiscard]] std::string to_string() const;
    [[nodiscard]] const std::string& source() const noexcept { return source_; }
    [[nodiscard]] std::vector<std::string> free_variables() const;
    [[nodiscard]] bool structurally_equal(const Expr& other) const;

    [[nodiscard]] const std::vector<ExprNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] int root() const noexcept { return root_; }

private:
    friend class ExprParser;
    std::string source_;
    std::vector<ExprNode> nodes_;
    int root_ = -1;
};

[[nodiscard]] const char* function_name(ExprFunc f) noexcept;

}  // namespace tperiodic
