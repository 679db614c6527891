#include "superflow/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

#include "superflow/detail/expr_parser.hpp"

namespace superflow {

struct Expr::Node {
    Op op = Op::constant;
    cplx value{};
    std::string name;
    int exponent = 0;
    Expr a;
    Expr b;
};

namespace {

cplx int_power(cplx base, int n) {
    if (n < 0) {
        if (base == cplx(0.0, 0.0)) throw DomainError("zero to a negative power", "0^" + std::to_string(n));
        return cplx(1.0, 0.0) / int_power(base, -n);
    }
    cplx result(1.0, 0.0);
    cplx b = base;
    unsigned k = static_cast<unsigned>(n);
    while (k) {
        if (k & 1u) result *= b;
        b *= b;
        k >>= 1u;
    }
    return result;
}

bool binary(Op op) {
    return op == Op::add || op == Op::sub || op == Op::mul || op == Op::div;
}

}  // namespace

bool is_function_head(Op op) {
    return op == Op::exp || op == Op::log || op == Op::sin || op == Op::cos;
}

std::string_view head_name(Op op) {
    switch (op) {
        case Op::exp: return "exp";
        case Op::log: return "log";
        case Op::sin: return "sin";
        case Op::cos: return "cos";
        default: return "";
    }
}

Expr make_node(Op op, cplx value, std::string name, int exponent, Expr a, Expr b) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->value = value;
    n->name = std::move(name);
    n->exponent = exponent;
    n->a = std::move(a);
    n->b = std::move(b);
    return Expr(std::move(n));
}

Expr::Expr() = default;

Expr Expr::constant(cplx v) { return make_node(Op::constant, v, {}, 0, {}, {}); }
Expr Expr::variable(std::string name) { return make_node(Op::variable, {}, std::move(name), 0, {}, {}); }

Op Expr::op() const { return node_ ? node_->op : Op::constant; }
cplx Expr::value() const { return node_ ? node_->value : cplx(0.0, 0.0); }
const std::string& Expr::name() const { return node_->name; }
int Expr::exponent() const { return node_->exponent; }
const Expr& Expr::lhs() const { return node_->a; }
const Expr& Expr::rhs() const { return node_->b; }

bool operator==(const Expr& x, const Expr& y) {
    if (x.node_ == y.node_) return true;
    if (!x.node_ || !y.node_) return x.op() == y.op() && x.op() == Op::constant && x.value() == y.value();
    const auto& a = *x.node_;
    const auto& b = *y.node_;
    if (a.op != b.op) return false;
    switch (a.op) {
        case Op::constant: return a.value == b.value;
        case Op::variable: return a.name == b.name;
        case Op::pow: return a.exponent == b.exponent && a.a == b.a;
        case Op::neg:
        case Op::exp:
        case Op::log:
        case Op::sin:
        case Op::cos: return a.a == b.a;
        default: return a.a == b.a && a.b == b.b;
    }
}

// Smart constructors -------------------------------------------------------

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() + b.value());
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    return make_node(Op::add, {}, {}, 0, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() - b.value());
    if (b.is_zero()) return a;
    if (a.is_zero()) return -b;
    return make_node(Op::sub, {}, {}, 0, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.value() * b.value());
    if (a.is_zero() || b.is_zero()) return Expr();
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    return make_node(Op::mul, {}, {}, 0, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant() && !b.is_zero())
        return Expr::constant(a.value() / b.value());
    if (b.is_one()) return a;
    if (a.is_zero() && !b.is_zero()) return Expr();
    return make_node(Op::div, {}, {}, 0, a, b);
}

Expr operator-(const Expr& a) {
    if (a.is_constant()) return Expr::constant(-a.value());
    if (a.op() == Op::neg) return a.lhs();
    return make_node(Op::neg, {}, {}, 0, a, {});
}

Expr pow(const Expr& base, int exponent) {
    if (exponent == 0) return Expr::constant(1.0);
    if (exponent == 1) return base;
    if (base.is_constant() && (exponent > 0 || !base.is_zero()))
        return Expr::constant(int_power(base.value(), exponent));
    return make_node(Op::pow, {}, {}, exponent, base, {});
}

Expr apply_head(Op head, const Expr& a) {
    if (a.is_constant()) {
        const cplx v = a.value();
        switch (head) {
            case Op::exp: return Expr::constant(std::exp(v));
            case Op::sin: return Expr::constant(std::sin(v));
            case Op::cos: return Expr::constant(std::cos(v));
            case Op::log:
                if ((v.imag() == 0.0 && v.real() > 0.0) || v.imag() != 0.0)
                    return Expr::constant(v.imag() == 0.0 ? cplx(std::log(v.real()), 0.0) : std::log(v));
                break;
            default: break;
        }
    }
    if (!is_function_head(head)) throw Error("not a function head");
    return make_node(head, {}, {}, 0, a, {});
}

Expr exp(const Expr& a) { return apply_head(Op::exp, a); }
Expr log(const Expr& a) { return apply_head(Op::log, a); }
Expr sin(const Expr& a) { return apply_head(Op::sin, a); }
Expr cos(const Expr& a) { return apply_head(Op::cos, a); }

// Printer ------------------------------------------------------------------

namespace {

int precedence(const Expr& e) {
    switch (e.op()) {
        case Op::add:
        case Op::sub: return 1;
        case Op::mul:
        case Op::div: return 2;
        case Op::neg: return 3;
        case Op::pow: return 4;
        case Op::constant: {
            const cplx v = e.value();
            if (v.imag() == 0.0) return v.real() < 0 || std::signbit(v.real()) ? 3 : 5;
            if (v.real() == 0.0) return v.imag() < 0 ? 3 : 5;
            return 5;
        }
        default: return 5;
    }
}

void print(const Expr& e, int min_prec, std::string& out);

void print_raw(const Expr& e, std::string& out) {
    switch (e.op()) {
        case Op::constant: out += format_cplx(e.value()); break;
        case Op::variable: out += e.name(); break;
        case Op::add:
            print(e.lhs(), 1, out);
            out += " + ";
            print(e.rhs(), 2, out);
            break;
        case Op::sub:
            print(e.lhs(), 1, out);
            out += " - ";
            print(e.rhs(), 2, out);
            break;
        case Op::mul:
            print(e.lhs(), 2, out);
            out += "*";
            print(e.rhs(), 3, out);
            break;
        case Op::div:
            print(e.lhs(), 2, out);
            out += "/";
            print(e.rhs(), 3, out);
            break;
        case Op::neg:
            out += "-";
            print(e.lhs(), 3, out);
            break;
        case Op::pow:
            print(e.lhs(), 5, out);
            out += "^";
            if (e.exponent() < 0)
                out += "(" + std::to_string(e.exponent()) + ")";
            else
                out += std::to_string(e.exponent());
            break;
        default:
            out += head_name(e.op());
            out += "(";
            print(e.lhs(), 0, out);
            out += ")";
    }
}

void print(const Expr& e, int min_prec, std::string& out) {
    if (precedence(e) < min_prec) {
        out += "(";
        print_raw(e, out);
        out += ")";
    } else {
        print_raw(e, out);
    }
}

}  // namespace

std::string Expr::to_string() const {
    std::string out;
    print(*this, 0, out);
    return out;
}

// Tokenizer / parser -------------------------------------------------------

namespace detail {

std::vector<Token> tokenize(std::string_view text, bool derivations) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        Token t;
        t.pos = i;
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < text.size() &&
                                                            std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            std::size_t j = i;
            bool integral = true;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            if (j < text.size() && text[j] == '.') {
                integral = false;
                ++j;
                while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            }
            if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
                if (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
                    integral = false;
                    j = k;
                    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
                }
            }
            double v = 0.0;
            auto res = std::from_chars(text.data() + i, text.data() + j, v);
            if (res.ec != std::errc()) throw ParseError("malformed number", 1, i + 1);
            t.kind = Tok::number;
            if (j < text.size() && text[j] == 'i' && !(j + 1 < text.size() && ident_char(text[j + 1]))) {
                t.value = cplx(0.0, v);
                integral = false;
                ++j;
            } else {
                t.value = cplx(v, 0.0);
            }
            t.integral = integral;
            t.text = std::string(text.substr(i, j - i));
            if (j < text.size() && ident_char(text[j]))
                throw ParseError("unexpected character '" + std::string(1, text[j]) + "' after number", 1, j + 1);
            i = j;
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < text.size() && ident_char(text[j])) ++j;
            std::string word(text.substr(i, j - i));
            if (derivations && word == "d" && j + 1 < text.size() && text[j] == '/' && text[j + 1] == 'd') {
                std::size_t k = j + 2;
                std::size_t start = k;
                while (k < text.size() && ident_char(text[k])) ++k;
                if (k == start) throw ParseError("expected coordinate after 'd/d'", 1, k + 1);
                t.kind = Tok::derivation;
                t.text = std::string(text.substr(start, k - start));
                i = k;
            } else {
                t.kind = Tok::ident;
                t.text = std::move(word);
                i = j;
            }
        } else {
            switch (c) {
                case '+': t.kind = Tok::plus; break;
                case '-': t.kind = Tok::minus; break;
                case '*': t.kind = Tok::star; break;
                case '/': t.kind = Tok::slash; break;
                case '^': t.kind = Tok::caret; break;
                case '(': t.kind = Tok::lparen; break;
                case ')': t.kind = Tok::rparen; break;
                case ',': t.kind = Tok::comma; break;
                default: throw ParseError("unexpected character '" + std::string(1, c) + "'", 1, i + 1);
            }
            t.text = std::string(1, c);
            ++i;
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::end;
    end.pos = text.size();
    out.push_back(end);
    return out;
}

Parser::Parser(std::vector<Token> tokens, std::span<const std::string> vars, std::size_t line,
               std::size_t column_offset)
    : tokens_(std::move(tokens)), vars_(vars), line_(line), column_offset_(column_offset) {}

Token Parser::next() {
    Token t = tokens_[index_];
    if (t.kind != Tok::end) ++index_;
    return t;
}

void Parser::fail(const std::string& msg, std::size_t pos) const {
    throw ParseError(msg, line_, column_offset_ + pos + 1);
}

void Parser::expect(Tok k, std::string_view what) {
    if (!at(k)) fail("expected " + std::string(what), peek().pos);
    next();
}

Expr Parser::expression() {
    Expr e = term();
    while (at(Tok::plus) || at(Tok::minus)) {
        const bool plus = next().kind == Tok::plus;
        Expr r = term();
        e = plus ? e + r : e - r;
    }
    return e;
}

Expr Parser::term() {
    Expr e = unary();
    while (at(Tok::star) || at(Tok::slash)) {
        const bool star = next().kind == Tok::star;
        Expr r = unary();
        e = star ? e * r : e / r;
    }
    return e;
}

Expr Parser::unary() {
    if (at(Tok::minus)) {
        next();
        return -unary();
    }
    if (at(Tok::plus)) {
        next();
        return unary();
    }
    return power();
}

int Parser::exponent() {
    bool paren = false;
    if (at(Tok::lparen)) {
        next();
        paren = true;
    }
    int sign = 1;
    if (at(Tok::minus)) {
        next();
        sign = -1;
    }
    const Token t = peek();
    if (t.kind != Tok::number || !t.integral) fail("exponent must be an integer", t.pos);
    next();
    if (paren) expect(Tok::rparen, "')'");
    return sign * static_cast<int>(t.value.real());
}

Expr Parser::power() {
    Expr base = primary();
    if (at(Tok::caret)) {
        next();
        return pow(base, exponent());
    }
    return base;
}

Expr Parser::primary() {
    const Token t = peek();
    switch (t.kind) {
        case Tok::number: next(); return Expr::constant(t.value);
        case Tok::lparen: {
            next();
            Expr e = expression();
            expect(Tok::rparen, "')'");
            return e;
        }
        case Tok::ident: {
            next();
            Op head = Op::constant;
            if (t.text == "exp") head = Op::exp;
            else if (t.text == "log") head = Op::log;
            else if (t.text == "sin") head = Op::sin;
            else if (t.text == "cos") head = Op::cos;
            if (head != Op::constant) {
                if (!at(Tok::lparen)) fail("function '" + t.text + "' needs an argument", t.pos);
                next();
                Expr arg = expression();
                expect(Tok::rparen, "')'");
                return apply_head(head, arg);
            }
            if (std::find(vars_.begin(), vars_.end(), t.text) != vars_.end()) return Expr::variable(t.text);
            if (t.text == "pi") return Expr::constant(std::numbers::pi);
            fail("undeclared variable '" + t.text + "'", t.pos);
        }
        case Tok::end: fail("unexpected end of input", t.pos);
        default: fail("unexpected '" + t.text + "'", t.pos);
    }
}

}  // namespace detail

Expr parse_expr(std::string_view text, std::span<const std::string> vars) {
    detail::Parser p(detail::tokenize(text, false), vars);
    Expr e = p.expression();
    if (!p.at(detail::Tok::end)) p.fail("unexpected '" + p.peek().text + "'", p.peek().pos);
    return e;
}

// Differentiation -----------------------------------------------------------

Expr diff(const Expr& e, std::string_view var) {
    switch (e.op()) {
        case Op::constant: return Expr();
        case Op::variable: return Expr::constant(e.name() == var ? 1.0 : 0.0);
        case Op::add: return diff(e.lhs(), var) + diff(e.rhs(), var);
        case Op::sub: return diff(e.lhs(), var) - diff(e.rhs(), var);
        case Op::neg: return -diff(e.lhs(), var);
        case Op::mul: return diff(e.lhs(), var) * e.rhs() + e.lhs() * diff(e.rhs(), var);
        case Op::div: {
            const Expr& a = e.lhs();
            const Expr& b = e.rhs();
            const Expr da = diff(a, var);
            const Expr db = diff(b, var);
            if (db.is_zero()) return da / b;
            return (da * b - a * db) / pow(b, 2);
        }
        case Op::pow: {
            const int n = e.exponent();
            return Expr::constant(static_cast<double>(n)) * pow(e.lhs(), n - 1) * diff(e.lhs(), var);
        }
        case Op::exp: return e * diff(e.lhs(), var);
        case Op::log: return diff(e.lhs(), var) / e.lhs();
        case Op::sin: return cos(e.lhs()) * diff(e.lhs(), var);
        case Op::cos: return -(sin(e.lhs()) * diff(e.lhs(), var));
    }
    return Expr();
}

// Evaluation -----------------------------------------------------------------

void Env::bind(std::string name, cplx value) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) {
            values_[i] = value;
            return;
        }
    }
    names_.push_back(std::move(name));
    values_.push_back(value);
}

const cplx* Env::find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return &values_[i];
    return nullptr;
}

cplx evaluate(const Expr& e, const Env& env, Field field) {
    switch (e.op()) {
        case Op::constant: return e.value();
        case Op::variable: {
            const cplx* v = env.find(e.name());
            if (!v) throw DomainError("unbound variable", e.name());
            return *v;
        }
        case Op::add: return evaluate(e.lhs(), env, field) + evaluate(e.rhs(), env, field);
        case Op::sub: return evaluate(e.lhs(), env, field) - evaluate(e.rhs(), env, field);
        case Op::mul: return evaluate(e.lhs(), env, field) * evaluate(e.rhs(), env, field);
        case Op::div: {
            const cplx d = evaluate(e.rhs(), env, field);
            if (d == cplx(0.0, 0.0)) throw DomainError("division by zero", e.to_string());
            return evaluate(e.lhs(), env, field) / d;
        }
        case Op::neg: return -evaluate(e.lhs(), env, field);
        case Op::pow: {
            const cplx b = evaluate(e.lhs(), env, field);
            if (b == cplx(0.0, 0.0) && e.exponent() < 0) throw DomainError("zero to a negative power", e.to_string());
            return int_power(b, e.exponent());
        }
        case Op::exp: return std::exp(evaluate(e.lhs(), env, field));
        case Op::sin: return std::sin(evaluate(e.lhs(), env, field));
        case Op::cos: return std::cos(evaluate(e.lhs(), env, field));
        case Op::log: {
            const cplx a = evaluate(e.lhs(), env, field);
            if (a == cplx(0.0, 0.0)) throw DomainError("logarithm of zero", e.to_string());
            if (field == Field::real) {
                if (a.real() < 0.0) throw DomainError("logarithm of a negative number", e.to_string());
                return cplx(std::log(a.real()), 0.0);
            }
            return std::log(a);
        }
    }
    return {};
}

Scalar eval_expr(const Expr& e, const std::map<std::string, Scalar>& point) {
    Env env;
    std::optional<Field> field;
    for (const auto& [name, s] : point) {
        if (field && *field != s.field()) throw DomainMismatch("point mixes real and complex scalars");
        field = s.field();
        env.bind(name, s.value());
    }
    const Field f = field.value_or(has_imaginary_constant(e) ? Field::complex : Field::real);
    const cplx v = evaluate(e, env, f);
    if (f == Field::real) return Scalar(cplx(v.real(), 0.0), Field::real);
    return Scalar(v, Field::complex);
}

Expr substitute_vars(const Expr& e, const std::map<std::string, Expr>& images) {
    switch (e.op()) {
        case Op::constant: return e;
        case Op::variable: {
            auto it = images.find(e.name());
            return it == images.end() ? e : it->second;
        }
        case Op::add: return substitute_vars(e.lhs(), images) + substitute_vars(e.rhs(), images);
        case Op::sub: return substitute_vars(e.lhs(), images) - substitute_vars(e.rhs(), images);
        case Op::mul: return substitute_vars(e.lhs(), images) * substitute_vars(e.rhs(), images);
        case Op::div: return substitute_vars(e.lhs(), images) / substitute_vars(e.rhs(), images);
        case Op::neg: return -substitute_vars(e.lhs(), images);
        case Op::pow: return pow(substitute_vars(e.lhs(), images), e.exponent());
        default: return apply_head(e.op(), substitute_vars(e.lhs(), images));
    }
}

namespace {

void collect_vars(const Expr& e, std::set<std::string>& out) {
    if (e.op() == Op::variable) {
        out.insert(e.name());
        return;
    }
    if (e.op() == Op::constant) return;
    collect_vars(e.lhs(), out);
    if (binary(e.op())) collect_vars(e.rhs(), out);
}

}  // namespace

std::set<std::string> free_variables(const Expr& e) {
    std::set<std::string> out;
    collect_vars(e, out);
    return out;
}

bool has_imaginary_constant(const Expr& e) {
    if (e.op() == Op::constant) return e.value().imag() != 0.0;
    if (e.op() == Op::variable) return false;
    if (has_imaginary_constant(e.lhs())) return true;
    return binary(e.op()) && has_imaginary_constant(e.rhs());
}

// Polynomial form ---------------------------------------------------------------

namespace {

void prune(Polynomial& p) {
    std::erase_if(p, [](const auto& kv) { return kv.second == cplx(0.0, 0.0); });
}

Polynomial poly_mul(const Polynomial& a, const Polynomial& b) {
    Polynomial out;
    for (const auto& [ea, ca] : a)
        for (const auto& [eb, cb] : b) {
            std::vector<int> e(ea.size());
            for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
            out[e] += ca * cb;
        }
    prune(out);
    return out;
}

std::optional<Polynomial> to_poly(const Expr& e, std::span<const std::string> vars) {
    const std::vector<int> zero(vars.size(), 0);
    switch (e.op()) {
        case Op::constant: {
            Polynomial p;
            if (!e.is_zero()) p[zero] = e.value();
            return p;
        }
        case Op::variable: {
            auto it = std::find(vars.begin(), vars.end(), e.name());
            if (it == vars.end()) return std::nullopt;
            std::vector<int> ex = zero;
            ex[static_cast<std::size_t>(it - vars.begin())] = 1;
            return Polynomial{{ex, cplx(1.0, 0.0)}};
        }
        case Op::add:
        case Op::sub: {
            auto a = to_poly(e.lhs(), vars);
            auto b = to_poly(e.rhs(), vars);
            if (!a || !b) return std::nullopt;
            const double s = e.op() == Op::add ? 1.0 : -1.0;
            for (const auto& [ex, c] : *b) (*a)[ex] += s * c;
            prune(*a);
            return a;
        }
        case Op::neg: {
            auto a = to_poly(e.lhs(), vars);
            if (!a) return std::nullopt;
            for (auto& kv : *a) kv.second = -kv.second;
            return a;
        }
        case Op::mul: {
            auto a = to_poly(e.lhs(), vars);
            auto b = to_poly(e.rhs(), vars);
            if (!a || !b) return std::nullopt;
            return poly_mul(*a, *b);
        }
        case Op::div: {
            if (!e.rhs().is_constant() || e.rhs().is_zero()) return std::nullopt;
            auto a = to_poly(e.lhs(), vars);
            if (!a) return std::nullopt;
            for (auto& kv : *a) kv.second /= e.rhs().value();
            return a;
        }
        case Op::pow: {
            if (e.exponent() < 0) return std::nullopt;
            auto a = to_poly(e.lhs(), vars);
            if (!a) return std::nullopt;
            Polynomial r{{zero, cplx(1.0, 0.0)}};
            for (int k = 0; k < e.exponent(); ++k) r = poly_mul(r, *a);
            return r;
        }
        default: return std::nullopt;
    }
}

}  // namespace

std::optional<Polynomial> to_polynomial(const Expr& e, std::span<const std::string> vars) {
    return to_poly(e, vars);
}

Expr from_polynomial(const Polynomial& p, std::span<const std::string> vars) {
    Expr out;
    for (const auto& [exps, c] : p) {
        if (c == cplx{}) continue;
        Expr term = Expr::constant(c);
        for (std::size_t v = 0; v < vars.size(); ++v)
            if (exps[v] != 0) term = term * pow(Expr::variable(vars[v]), exps[v]);
        out = out + term;
    }
    return out;
}

Expr normalize_polynomial(const Expr& e, std::span<const std::string> vars) {
    if (e.op() == Op::constant || e.op() == Op::variable) return e;
    if (auto p = to_poly(e, vars)) return from_polynomial(*p, vars);
    return e;
}

}  // namespace superflow
