#include "tperiodic/expr.hpp"

#include "tperiodic/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

namespace tperiodic {

VariableSet::VariableSet(std::initializer_list<std::string> names) {
    int slot = 0;
    for (const auto& n : names) {
        add(n, slot++);
    }
}

void VariableSet::add(std::string name, int slot) {
    if (slot < 0) {
        throw Error(ErrorKind::InvalidParameter, "variable slot must be nonnegative");
    }
    for (auto& [n, s] : entries_) {
        if (n == name) {
            s = slot;
            slot_count_ = std::max(slot_count_, slot + 1);
            return;
        }
    }
    entries_.emplace_back(std::move(name), slot);
    slot_count_ = std::max(slot_count_, slot + 1);
}

std::optional<int> VariableSet::slot(std::string_view name) const {
    for (const auto& [n, s] : entries_) {
        if (n == name) {
            return s;
        }
    }
    return std::nullopt;
}

const char* function_name(ExprFunc f) noexcept {
    switch (f) {
        case ExprFunc::Sin: return "sin";
        case ExprFunc::Cos: return "cos";
        case ExprFunc::Exp: return "exp";
        case ExprFunc::Log: return "log";
        case ExprFunc::Abs: return "abs";
        case ExprFunc::Sqrt: return "sqrt";
    }
    return "?";
}

namespace {

std::optional<ExprFunc> lookup_function(std::string_view name) {
    static constexpr std::array<ExprFunc, 6> all{ExprFunc::Sin, ExprFunc::Cos, ExprFunc::Exp,
                                                 ExprFunc::Log, ExprFunc::Abs, ExprFunc::Sqrt};
    for (auto f : all) {
        if (name == function_name(f)) {
            return f;
        }
    }
    return std::nullopt;
}

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    std::size_t offset;
    std::string_view text;
    double number = 0.0;
};

std::string describe(const Token& t) {
    if (t.kind == Tok::End) {
        return "end of input";
    }
    return "'" + std::string(t.text) + "'";
}

}  // namespace

class ExprParser {
public:
    ExprParser(std::string_view source, const VariableSet& allowed) : src_(source), allowed_(allowed) {
        advance();
    }

    Expr run() {
        if (src_.find_first_not_of(" \t\r\n") == std::string_view::npos) {
            throw Error(ErrorKind::Syntax, "empty expression", 0);
        }
        Expr e;
        e.source_ = std::string(src_);
        out_ = &e;
        e.root_ = parse_sum();
        if (cur_.kind != Tok::End) {
            throw Error(ErrorKind::Syntax, "unexpected " + describe(cur_) + " at offset " + std::to_string(cur_.offset),
                        cur_.offset);
        }
        return e;
    }

private:
    void advance() {
        std::size_t i = pos_;
        while (i < src_.size() && std::isspace(static_cast<unsigned char>(src_[i]))) {
            ++i;
        }
        if (i >= src_.size()) {
            cur_ = {Tok::End, src_.size(), {}};
            pos_ = i;
            return;
        }
        const char c = src_[i];
        auto single = [&](Tok k) {
            cur_ = {k, i, src_.substr(i, 1)};
            pos_ = i + 1;
        };
        switch (c) {
            case '+': return single(Tok::Plus);
            case '-': return single(Tok::Minus);
            case '*': return single(Tok::Star);
            case '/': return single(Tok::Slash);
            case '^': return single(Tok::Caret);
            case '(': return single(Tok::LParen);
            case ')': return single(Tok::RParen);
            case ',': return single(Tok::Comma);
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t j = i;
            while (j < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[j])) || src_[j] == '.')) {
                ++j;
            }
            if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) {
                    ++k;
                }
                if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
                    while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
                        ++k;
                    }
                    j = k;
                }
            }
            const std::string_view text = src_.substr(i, j - i);
            double value = 0.0;
            const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
            if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(value)) {
                throw Error(ErrorKind::Syntax, "malformed number '" + std::string(text) + "'", i);
            }
            cur_ = {Tok::Number, i, text, value};
            pos_ = j;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_')) {
                ++j;
            }
            cur_ = {Tok::Ident, i, src_.substr(i, j - i)};
            pos_ = j;
            return;
        }
        throw Error(ErrorKind::Syntax, std::string("unexpected character '") + c + "' at offset " + std::to_string(i),
                    i);
    }

    int add(ExprNode n) {
        out_->nodes_.push_back(std::move(n));
        return static_cast<int>(out_->nodes_.size()) - 1;
    }

    int binary(ExprOp op, int lhs, int rhs, std::size_t offset) {
        ExprNode n;
        n.op = op;
        n.lhs = lhs;
        n.rhs = rhs;
        n.offset = offset;
        return add(std::move(n));
    }

    int parse_sum() {
        int lhs = parse_product();
        while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
            const Token op = cur_;
            advance();
            const int rhs = parse_product();
            lhs = binary(op.kind == Tok::Plus ? ExprOp::Add : ExprOp::Sub, lhs, rhs, op.offset);
        }
        return lhs;
    }

    int parse_product() {
        int lhs = parse_unary();
        while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
            const Token op = cur_;
            advance();
            const int rhs = parse_unary();
            lhs = binary(op.kind == Tok::Star ? ExprOp::Mul : ExprOp::Div, lhs, rhs, op.offset);
        }
        return lhs;
    }

    int parse_unary() {
        if (cur_.kind == Tok::Minus) {
            const std::size_t offset = cur_.offset;
            advance();
            const int operand = parse_unary();
            ExprNode n;
            n.op = ExprOp::Neg;
            n.lhs = operand;
            n.offset = offset;
            return add(std::move(n));
        }
        return parse_power();
    }

    int parse_power() {
        const int base = parse_primary();
        if (cur_.kind == Tok::Caret) {
            const std::size_t offset = cur_.offset;
            advance();
            const int exponent = parse_unary();
            return binary(ExprOp::Pow, base, exponent, offset);
        }
        return base;
    }

    int parse_primary() {
        const Token tok = cur_;
        switch (tok.kind) {
            case Tok::Number: {
                advance();
                ExprNode n;
                n.op = ExprOp::Number;
                n.value = tok.number;
                n.offset = tok.offset;
                return add(std::move(n));
            }
            case Tok::LParen: {
                advance();
                const int inner = parse_sum();
                expect(Tok::RParen, "')'");
                return inner;
            }
            case Tok::Ident: return parse_identifier(tok);
            default:
                throw Error(ErrorKind::Syntax,
                            "expected an operand but found " + describe(tok) + " at offset " +
                                std::to_string(tok.offset),
                            tok.offset);
        }
    }

    int parse_identifier(const Token& tok) {
        advance();
        const std::string name(tok.text);
        if (auto func = lookup_function(name)) {
            if (cur_.kind != Tok::LParen) {
                throw Error(ErrorKind::Arity, "function '" + name + "' takes exactly 1 argument", tok.offset);
            }
            advance();
            std::vector<int> args;
            if (cur_.kind != Tok::RParen) {
                args.push_back(parse_sum());
                while (cur_.kind == Tok::Comma) {
                    advance();
                    args.push_back(parse_sum());
                }
            }
            expect(Tok::RParen, "')'");
            if (args.size() != 1) {
                throw Error(ErrorKind::Arity,
                            "function '" + name + "' takes exactly 1 argument, got " + std::to_string(args.size()),
                            tok.offset);
            }
            ExprNode n;
            n.op = ExprOp::Call;
            n.func = *func;
            n.lhs = args.front();
            n.offset = tok.offset;
            return add(std::move(n));
        }
        if (name == "pi") {
            ExprNode n;
            n.op = ExprOp::Pi;
            n.value = std::numbers::pi;
            n.offset = tok.offset;
            return add(std::move(n));
        }
        const auto slot = allowed_.slot(name);
        if (!slot) {
            throw Error(ErrorKind::UnknownIdentifier, "unknown identifier '" + name + "'", tok.offset);
        }
        ExprNode n;
        n.op = ExprOp::Variable;
        n.name = name;
        n.slot = *slot;
        n.offset = tok.offset;
        return add(std::move(n));
    }

    void expect(Tok kind, const char* what) {
        if (cur_.kind != kind) {
            throw Error(ErrorKind::Syntax,
                        std::string("expected ") + what + " but found " + describe(cur_) + " at offset " +
                            std::to_string(cur_.offset),
                        cur_.offset);
        }
        advance();
    }

    std::string_view src_;
    const VariableSet& allowed_;
    std::size_t pos_ = 0;
    Token cur_{Tok::End, 0, {}};
    Expr* out_ = nullptr;
};

Expr Expr::parse(std::string_view source, const VariableSet& allowed) {
    return ExprParser(source, allowed).run();
}

namespace {

[[noreturn]] void eval_error(const ExprNode& n, const std::string& what) {
    throw Error(ErrorKind::Evaluation, what + " at offset " + std::to_string(n.offset), n.offset);
}

template <typename Lookup>
double eval_node(const std::vector<ExprNode>& nodes, int idx, const Lookup& lookup) {
    const ExprNode& n = nodes[static_cast<std::size_t>(idx)];
    switch (n.op) {
        case ExprOp::Number:
        case ExprOp::Pi: return n.value;
        case ExprOp::Variable: return lookup(n);
        case ExprOp::Neg: return -eval_node(nodes, n.lhs, lookup);
        default: break;
    }
    if (n.op == ExprOp::Call) {
        const double x = eval_node(nodes, n.lhs, lookup);
        double r = 0.0;
        switch (n.func) {
            case ExprFunc::Sin: r = std::sin(x); break;
            case ExprFunc::Cos: r = std::cos(x); break;
            case ExprFunc::Exp: r = std::exp(x); break;
            case ExprFunc::Abs: r = std::abs(x); break;
            case ExprFunc::Log:
                if (!(x > 0.0)) {
                    eval_error(n, "log of nonpositive value");
                }
                r = std::log(x);
                break;
            case ExprFunc::Sqrt:
                if (x < 0.0) {
                    eval_error(n, "sqrt of negative value");
                }
                r = std::sqrt(x);
                break;
        }
        if (!std::isfinite(r)) {
            eval_error(n, std::string(function_name(n.func)) + " produced a non-finite value");
        }
        return r;
    }
    const double a = eval_node(nodes, n.lhs, lookup);
    const double b = eval_node(nodes, n.rhs, lookup);
    double r = 0.0;
    switch (n.op) {
        case ExprOp::Add: r = a + b; break;
        case ExprOp::Sub: r = a - b; break;
        case ExprOp::Mul: r = a * b; break;
        case ExprOp::Div:
            if (b == 0.0) {
                eval_error(n, "division by zero");
            }
            r = a / b;
            break;
        case ExprOp::Pow: r = std::pow(a, b); break;
        default: break;
    }
    if (!std::isfinite(r)) {
        eval_error(n, "operation produced a non-finite value");
    }
    return r;
}

void render(const std::vector<ExprNode>& nodes, int idx, std::string& out) {
    const ExprNode& n = nodes[static_cast<std::size_t>(idx)];
    switch (n.op) {
        case ExprOp::Number: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            out += buf;
            return;
        }
        case ExprOp::Pi: out += "pi"; return;
        case ExprOp::Variable: out += n.name; return;
        case ExprOp::Neg:
            out += "(-";
            render(nodes, n.lhs, out);
            out += ")";
            return;
        case ExprOp::Call:
            out += function_name(n.func);
            out += "(";
            render(nodes, n.lhs, out);
            out += ")";
            return;
        default: break;
    }
    const char* sym = n.op == ExprOp::Add ? " + " : n.op == ExprOp::Sub ? " - " : n.op == ExprOp::Mul ? " * "
                                                                       : n.op == ExprOp::Div   ? " / "
                                                                                               : " ^ ";
    out += "(";
    render(nodes, n.lhs, out);
    out += sym;
    render(nodes, n.rhs, out);
    out += ")";
}

bool equal_nodes(const Expr& a, int ia, const Expr& b, int ib) {
    const ExprNode& x = a.nodes()[static_cast<std::size_t>(ia)];
    const ExprNode& y = b.nodes()[static_cast<std::size_t>(ib)];
    if (x.op != y.op) {
        return false;
    }
    switch (x.op) {
        case ExprOp::Number: return x.value == y.value;
        case ExprOp::Pi: return true;
        case ExprOp::Variable: return x.name == y.name;
        case ExprOp::Neg: return equal_nodes(a, x.lhs, b, y.lhs);
        case ExprOp::Call: return x.func == y.func && equal_nodes(a, x.lhs, b, y.lhs);
        default: return equal_nodes(a, x.lhs, b, y.lhs) && equal_nodes(a, x.rhs, b, y.rhs);
    }
}

}  // namespace

double Expr::evaluate(std::span<const double> slots) const {
    return eval_node(nodes_, root_, [&](const ExprNode& n) {
        if (n.slot < 0 || static_cast<std::size_t>(n.slot) >= slots.size()) {
            throw Error(ErrorKind::InvalidParameter, "no value supplied for variable '" + n.name + "'", n.offset);
        }
        return slots[static_cast<std::size_t>(n.slot)];
    });
}

double Expr::evaluate(const std::map<std::string, double>& bindings) const {
    return eval_node(nodes_, root_, [&](const ExprNode& n) {
        const auto it = bindings.find(n.name);
        if (it == bindings.end()) {
            throw Error(ErrorKind::InvalidParameter, "no binding for variable '" + n.name + "'", n.offset);
        }
        return it->second;
    });
}

std::string Expr::to_string() const {
    std::string out;
    render(nodes_, root_, out);
    return out;
}

std::vector<std::string> Expr::free_variables() const {
    std::set<std::string> names;
    for (const auto& n : nodes_) {
        if (n.op == ExprOp::Variable) {
            names.insert(n.name);
        }
    }
    return {names.begin(), names.end()};
}

bool Expr::structurally_equal(const Expr& other) const {
    return equal_nodes(*this, root_, other, other.root_);
}

}  // namespace tperiodic
