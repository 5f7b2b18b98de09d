#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "specrisk/errors.hpp"

namespace specrisk::expr {

enum class Op {
    constant,
    variable,
    add,
    sub,
    mul,
    div,
    pow,
    neg,
    fn_sqrt,
    fn_exp,
    fn_log,
    fn_abs,
    fn_min,
    fn_max,
    fn_relu,
};

struct Node {
    Op op = Op::constant;
    double value = 0.0;  // constant
    int var = -1;        // variable index
    std::vector<Node> kids;
};

/// Thrown when evaluation leaves the payout's domain (division by zero,
/// log/sqrt of a negative number, non-finite result).
class eval_error : public numerical_error {
public:
    explicit eval_error(const std::string& msg) : numerical_error(msg) {}
};

inline double eval(const Node& n, std::span<const double> x) {
    switch (n.op) {
        case Op::constant:
            return n.value;
        case Op::variable:
            return x[static_cast<std::size_t>(n.var)];
        case Op::add:
            return eval(n.kids[0], x) + eval(n.kids[1], x);
        case Op::sub:
            return eval(n.kids[0], x) - eval(n.kids[1], x);
        case Op::mul:
            return eval(n.kids[0], x) * eval(n.kids[1], x);
        case Op::div: {
            const double den = eval(n.kids[1], x);
            if (den == 0.0) throw eval_error("division by zero");
            return eval(n.kids[0], x) / den;
        }
        case Op::pow: {
            const double base = eval(n.kids[0], x), e = eval(n.kids[1], x);
            const double r = std::pow(base, e);
            if (!std::isfinite(r)) throw eval_error("power produced a non-finite value");
            return r;
        }
        case Op::neg:
            return -eval(n.kids[0], x);
        case Op::fn_sqrt: {
            const double a = eval(n.kids[0], x);
            if (a < 0.0) throw eval_error("sqrt of a negative number");
            return std::sqrt(a);
        }
        case Op::fn_exp:
            return std::exp(eval(n.kids[0], x));
        case Op::fn_log: {
            const double a = eval(n.kids[0], x);
            if (a <= 0.0) throw eval_error("log of a non-positive number");
            return std::log(a);
        }
        case Op::fn_abs:
            return std::abs(eval(n.kids[0], x));
        case Op::fn_min:
            return std::min(eval(n.kids[0], x), eval(n.kids[1], x));
        case Op::fn_max:
            return std::max(eval(n.kids[0], x), eval(n.kids[1], x));
        case Op::fn_relu:
            return std::max(eval(n.kids[0], x), 0.0);
    }
    return 0.0;
}

/// Signs of every kink argument (max/min: first-second, abs/relu: argument),
/// in a fixed traversal order. Two stencil points whose signatures differ
/// straddle a kink of the expression.
inline void kink_signature(const Node& n, std::span<const double> x, std::vector<int>& out) {
    for (const Node& k : n.kids) kink_signature(k, x, out);
    auto sign_of = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };
    switch (n.op) {
        case Op::fn_min:
        case Op::fn_max:
            out.push_back(sign_of(eval(n.kids[0], x) - eval(n.kids[1], x)));
            break;
        case Op::fn_abs:
        case Op::fn_relu:
            out.push_back(sign_of(eval(n.kids[0], x)));
            break;
        default:
            break;
    }
}

inline bool has_kinks(const Node& n) {
    if (n.op == Op::fn_min || n.op == Op::fn_max || n.op == Op::fn_abs || n.op == Op::fn_relu)
        return true;
    for (const Node& k : n.kids)
        if (has_kinks(k)) return true;
    return false;
}

/// Rewrite x_i -> -x_i inside the tree (used by sign-covariance checks).
inline Node flip_variable(const Node& n, int var) {
    Node out = n;
    for (Node& k : out.kids) k = flip_variable(k, var);
    if (n.op == Op::variable && n.var == var) {
        Node neg;
        neg.op = Op::neg;
        neg.kids.push_back(out);
        return neg;
    }
    return out;
}

namespace detail {

struct Parser {
    const std::string& src;
    const std::vector<std::string>& vars;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    bool consume(char c) {
        skip_ws();
        if (pos < src.size() && src[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }

    [[noreturn]] void fail(const std::string& expected) {
        throw parse_error("expected " + expected +
                              (pos < src.size() ? std::string(", found '") + src[pos] + "'"
                                                : std::string(", found end of input")),
                          pos);
    }

    Node parse_expression() {
        Node lhs = parse_term();
        while (true) {
            skip_ws();
            if (consume('+')) {
                Node n;
                n.op = Op::add;
                n.kids = {std::move(lhs), parse_term()};
                lhs = std::move(n);
            } else if (consume('-')) {
                Node n;
                n.op = Op::sub;
                n.kids = {std::move(lhs), parse_term()};
                lhs = std::move(n);
            } else {
                return lhs;
            }
        }
    }

    Node parse_term() {
        Node lhs = parse_factor();
        while (true) {
            skip_ws();
            if (consume('*')) {
                Node n;
                n.op = Op::mul;
                n.kids = {std::move(lhs), parse_factor()};
                lhs = std::move(n);
            } else if (consume('/')) {
                Node n;
                n.op = Op::div;
                n.kids = {std::move(lhs), parse_factor()};
                lhs = std::move(n);
            } else {
                return lhs;
            }
        }
    }

    // unary minus binds looser than '^': -x^2 parses as -(x^2)
    Node parse_factor() {
        if (consume('-')) {
            Node n;
            n.op = Op::neg;
            n.kids.push_back(parse_factor());
            return n;
        }
        return parse_power();
    }

    Node parse_power() {
        Node base = parse_primary();
        skip_ws();
        if (consume('^')) {
            Node n;
            n.op = Op::pow;
            n.kids = {std::move(base), parse_factor()};  // right-associative, allows 2^-3
            return n;
        }
        return base;
    }

    Node parse_primary() {
        skip_ws();
        if (pos >= src.size()) fail("a number, variable, function or '('");
        const char c = src[pos];
        if (c == '(') {
            ++pos;
            Node inner = parse_expression();
            if (!consume(')')) fail("')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        fail("a number, variable, function or '('");
    }

    Node parse_number() {
        const std::size_t start = pos;
        std::size_t consumed = 0;
        double v = 0.0;
        try {
            v = std::stod(src.substr(start), &consumed);
        } catch (const std::exception&) {
            fail("a numeric literal");
        }
        pos = start + consumed;
        Node n;
        n.op = Op::constant;
        n.value = v;
        return n;
    }

    Node parse_identifier() {
        const std::size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
            ++pos;
        const std::string name = src.substr(start, pos - start);
        static const std::vector<std::pair<std::string, Op>> functions = {
            {"sqrt", Op::fn_sqrt}, {"exp", Op::fn_exp}, {"log", Op::fn_log},
            {"abs", Op::fn_abs},   {"min", Op::fn_min}, {"max", Op::fn_max},
            {"relu", Op::fn_relu}};
        for (const auto& [fname, op] : functions) {
            if (name == fname) {
                if (!consume('(')) fail("'(' after function name '" + name + "'");
                Node n;
                n.op = op;
                n.kids.push_back(parse_expression());
                const bool binary = (op == Op::fn_min || op == Op::fn_max);
                if (binary) {
                    if (!consume(',')) fail("',' in call to '" + name + "'");
                    n.kids.push_back(parse_expression());
                }
                if (!consume(')')) fail("')' closing call to '" + name + "'");
                return n;
            }
        }
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (name == vars[i]) {
                Node n;
                n.op = Op::variable;
                n.var = static_cast<int>(i);
                return n;
            }
        }
        throw parse_error("unknown identifier '" + name + "'", start);
    }
};

}  // namespace detail

/// Parse an arithmetic expression over the named variables. Precedence:
/// '^' (right-associative), unary minus, '*' '/', '+' '-'.
inline Node parse(const std::string& src, const std::vector<std::string>& variables) {
    detail::Parser p{src, variables};
    Node root = p.parse_expression();
    p.skip_ws();
    if (p.pos != src.size())
        throw parse_error("unexpected trailing input", p.pos);
    return root;
}

}  // namespace specrisk::expr
