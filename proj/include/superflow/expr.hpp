#pragma once

// Expression language for the even-coordinate coefficient functions.
//
// An Expr is an immutable AST. Nodes are built through the smart
// constructors below, which fold constant subtrees and the 0/1 identities;
// no further simplification is attempted. Two expressions built from the
// same constructor calls are structurally equal.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "superflow/scalar.hpp"

namespace superflow {

enum class Op { constant, variable, add, sub, mul, div, pow, neg, exp, log, sin, cos };

bool is_function_head(Op op);
std::string_view head_name(Op op);

class Expr {
public:
    struct Node;

    /// The constant 0.
    Expr();

    static Expr constant(cplx v);
    static Expr constant(double v) { return constant(cplx(v, 0.0)); }
    static Expr variable(std::string name);

    Op op() const;
    /// Value of a constant node.
    cplx value() const;
    /// Name of a variable node.
    const std::string& name() const;
    /// Exponent of a pow node.
    int exponent() const;
    /// Operands; `rhs()` is only meaningful for binary nodes.
    const Expr& lhs() const;
    const Expr& rhs() const;

    bool is_constant() const { return op() == Op::constant; }
    bool is_zero() const { return is_constant() && value() == cplx(0.0, 0.0); }
    bool is_one() const { return is_constant() && value() == cplx(1.0, 0.0); }

    /// Printer output; parse_expr(to_string()) reproduces the AST.
    std::string to_string() const;

    friend bool operator==(const Expr& a, const Expr& b);

private:
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    friend Expr make_node(Op, cplx, std::string, int, Expr, Expr);
    std::shared_ptr<const Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, int exponent);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
/// Applies the elementary function `head` to `a`.
Expr apply_head(Op head, const Expr& a);

/// Parses `text` in the expression grammar. Identifiers must appear in
/// `vars`; `pi` is a built-in constant. Throws ParseError.
Expr parse_expr(std::string_view text, std::span<const std::string> vars);

/// Exact symbolic derivative.
Expr diff(const Expr& e, std::string_view var);

/// Variable bindings for numeric evaluation.
class Env {
public:
    Env() = default;
    void bind(std::string name, cplx value);
    const cplx* find(std::string_view name) const;
    std::size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::vector<cplx> values_;
};

/// Evaluates `e`. In the real field a logarithm of a non-positive number is
/// a domain error; complex logarithms use the principal branch.
cplx evaluate(const Expr& e, const Env& env, Field field);

/// Evaluates with a Scalar binding per variable; all bindings must share a
/// field.
Scalar eval_expr(const Expr& e, const std::map<std::string, Scalar>& point);

/// Replaces variables by expressions.
Expr substitute_vars(const Expr& e, const std::map<std::string, Expr>& images);

std::set<std::string> free_variables(const Expr& e);
bool has_imaginary_constant(const Expr& e);

/// Exponent vector (one entry per variable in the order given) -> coefficient.
using Polynomial = std::map<std::vector<int>, cplx>;

/// Converts a polynomial expression (no functions, no division by
/// non-constants, no negative powers) into coefficient form.
std::optional<Polynomial> to_polynomial(const Expr& e, std::span<const std::string> vars);
Expr from_polynomial(const Polynomial& p, std::span<const std::string> vars);
/// Expanded canonical form when `e` is polynomial, otherwise `e` itself.
Expr normalize_polynomial(const Expr& e, std::span<const std::string> vars);

}  // namespace superflow
