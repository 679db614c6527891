#include "superflow/grassmann.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <functional>

#include "superflow/detail/expr_parser.hpp"

namespace superflow {

std::string to_string(Parity p) { return p == Parity::even ? "even" : "odd"; }

MultiIndex MultiIndex::from_indices(std::span<const int> idx) {
    std::uint32_t bits = 0;
    for (int j : idx) bits |= 1u << j;
    return MultiIndex(bits);
}

std::vector<int> MultiIndex::indices() const {
    std::vector<int> out;
    for (std::uint32_t b = bits_; b; b &= b - 1) out.push_back(std::countr_zero(b));
    return out;
}

int merge_sign(MultiIndex a, MultiIndex b) {
    int swaps = 0;
    for (std::uint32_t bb = b.bits(); bb; bb &= bb - 1) {
        const int j = std::countr_zero(bb);
        swaps += std::popcount(a.bits() >> (j + 1));
    }
    return (swaps & 1) ? -1 : 1;
}

// SuperDomain ----------------------------------------------------------------

SuperDomain::SuperDomain(std::vector<std::string> even, std::vector<std::string> odd, Field field,
                         std::string excluded_locus)
    : even_(std::move(even)), odd_(std::move(odd)), field_(field), excluded_(std::move(excluded_locus)) {
    std::vector<std::string> all = all_coordinates();
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
        throw Error("coordinate names of a superdomain must be distinct");
    if (odd_.size() > 24) throw Error("too many odd coordinates");
    // `name=value` pairs separated by commas, whitespace or "and".
    std::string text = excluded_;
    std::replace(text.begin(), text.end(), ',', ' ');
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        std::size_t end = pos;
        while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
        const std::string item = text.substr(pos, end - pos);
        pos = end;
        if (item.empty() || item == "and") continue;
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos) throw Error("excluded locus entries must read name=value, got '" + item + "'");
        const auto idx = even_index(item.substr(0, eq));
        if (!idx) throw Error("excluded locus names unknown even coordinate '" + item.substr(0, eq) + "'");
        const Expr v = parse_expr(item.substr(eq + 1), {});
        excluded_points_.emplace_back(*idx, evaluate(v, Env{}, Field::complex));
    }
}

double SuperDomain::distance_to_excluded(std::span<const cplx> point) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& [i, v] : excluded_points_) d = std::min(d, std::abs(point[static_cast<std::size_t>(i)] - v));
    return d;
}

double SuperDomain::distance_to_excluded(std::span<const cplx> a, std::span<const cplx> b) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& [i, v] : excluded_points_) {
        const cplx p = a[static_cast<std::size_t>(i)], q = b[static_cast<std::size_t>(i)];
        const cplx dir = q - p;
        const double len2 = std::norm(dir);
        const double s = len2 > 0.0 ? std::clamp(std::real((v - p) * std::conj(dir)) / len2, 0.0, 1.0) : 0.0;
        d = std::min(d, std::abs(p + s * dir - v));
    }
    return d;
}

std::optional<int> SuperDomain::even_index(std::string_view name) const {
    for (std::size_t i = 0; i < even_.size(); ++i)
        if (even_[i] == name) return static_cast<int>(i);
    return std::nullopt;
}

std::optional<int> SuperDomain::odd_index(std::string_view name) const {
    for (std::size_t i = 0; i < odd_.size(); ++i)
        if (odd_[i] == name) return static_cast<int>(i);
    return std::nullopt;
}

std::vector<std::string> SuperDomain::all_coordinates() const {
    std::vector<std::string> all = even_;
    all.insert(all.end(), odd_.begin(), odd_.end());
    return all;
}

DomainPtr make_domain(std::vector<std::string> even, std::vector<std::string> odd, Field field,
                      std::string excluded_locus) {
    return std::make_shared<const SuperDomain>(std::move(even), std::move(odd), field, std::move(excluded_locus));
}

// GrassmannNumber --------------------------------------------------------------

GrassmannNumber::GrassmannNumber(int generators)
    : n_(generators), coeffs_(std::size_t{1} << generators, cplx{}) {}

GrassmannNumber GrassmannNumber::soul() const {
    GrassmannNumber s = *this;
    if (!s.coeffs_.empty()) s.coeffs_[0] = 0.0;
    return s;
}

double GrassmannNumber::norm() const {
    double m = 0.0;
    for (const cplx& c : coeffs_) m = std::max(m, std::abs(c));
    return m;
}

GrassmannNumber& GrassmannNumber::operator+=(const GrassmannNumber& o) {
    if (n_ != o.n_) throw DomainMismatch("Grassmann numbers over different generator counts");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
}

GrassmannNumber& GrassmannNumber::operator-=(const GrassmannNumber& o) {
    if (n_ != o.n_) throw DomainMismatch("Grassmann numbers over different generator counts");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
}

GrassmannNumber& GrassmannNumber::operator*=(cplx s) {
    for (cplx& c : coeffs_) c *= s;
    return *this;
}

GrassmannNumber operator*(const GrassmannNumber& a, const GrassmannNumber& b) {
    if (a.n_ != b.n_) throw DomainMismatch("Grassmann numbers over different generator counts");
    GrassmannNumber out(a.n_);
    const std::uint32_t size = static_cast<std::uint32_t>(a.coeffs_.size());
    for (std::uint32_t i = 0; i < size; ++i) {
        if (a.coeffs_[i] == cplx{}) continue;
        for (std::uint32_t j = 0; j < size; ++j) {
            if ((i & j) || b.coeffs_[j] == cplx{}) continue;
            out.coeffs_[i | j] += static_cast<double>(merge_sign(MultiIndex(i), MultiIndex(j))) * a.coeffs_[i] * b.coeffs_[j];
        }
    }
    return out;
}

namespace {

std::string monomial_name(MultiIndex I, std::span<const std::string> names) {
    std::string s;
    for (int j : I.indices()) {
        if (!s.empty()) s += "*";
        s += j < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(j)] : "g" + std::to_string(j);
    }
    return s;
}

void append_term(std::string& out, std::string term) {
    if (out.empty()) {
        out = std::move(term);
    } else if (!term.empty() && term[0] == '-') {
        out += " - " + term.substr(1);
    } else {
        out += " + " + term;
    }
}

}  // namespace

std::string GrassmannNumber::to_string(std::span<const std::string> names) const {
    std::string out;
    for (std::uint32_t i = 0; i < coeffs_.size(); ++i) {
        if (coeffs_[i] == cplx{}) continue;
        std::string c = format_cplx(coeffs_[i]);
        if (i == 0)
            append_term(out, c);
        else if (coeffs_[i] == cplx(1.0, 0.0))
            append_term(out, monomial_name(MultiIndex(i), names));
        else if (coeffs_[i] == cplx(-1.0, 0.0))
            append_term(out, "-" + monomial_name(MultiIndex(i), names));
        else
            append_term(out, c + "*" + monomial_name(MultiIndex(i), names));
    }
    return out.empty() ? "0" : out;
}

// SuperFunction ----------------------------------------------------------------

namespace {

void require_same_domain(const DomainPtr& a, const DomainPtr& b) {
    if (a == b) return;
    if (!a || !b || !(*a == *b)) throw DomainMismatch("superfunctions live on different domains");
}

}  // namespace

SuperFunction::SuperFunction(DomainPtr domain) : domain_(std::move(domain)) {}

SuperFunction::SuperFunction(DomainPtr domain, Expr body) : domain_(std::move(domain)) {
    add_term(MultiIndex(), body);
}

SuperFunction SuperFunction::constant(DomainPtr domain, cplx v) {
    return SuperFunction(std::move(domain), Expr::constant(v));
}

SuperFunction SuperFunction::even_coordinate(DomainPtr domain, std::string_view name) {
    if (!domain->even_index(name)) throw Error("unknown even coordinate '" + std::string(name) + "'");
    return SuperFunction(std::move(domain), Expr::variable(std::string(name)));
}

SuperFunction SuperFunction::odd_coordinate(DomainPtr domain, int j) {
    return monomial(std::move(domain), MultiIndex::single(j), Expr::constant(1.0));
}

SuperFunction SuperFunction::monomial(DomainPtr domain, MultiIndex I, Expr coefficient) {
    SuperFunction f(std::move(domain));
    f.add_term(I, coefficient);
    return f;
}

Expr SuperFunction::coefficient(MultiIndex I) const {
    auto it = terms_.find(I);
    return it == terms_.end() ? Expr() : it->second;
}

void SuperFunction::add_term(MultiIndex I, const Expr& e) {
    if (e.is_zero()) return;
    const std::span<const std::string> vars =
        domain_ ? std::span<const std::string>(domain_->even()) : std::span<const std::string>();
    auto it = terms_.find(I);
    if (it == terms_.end()) {
        Expr n = normalize_polynomial(e, vars);
        if (!n.is_zero()) terms_.emplace(I, std::move(n));
        return;
    }
    it->second = normalize_polynomial(it->second + e, vars);
    if (it->second.is_zero()) terms_.erase(it);
}

SuperFunction SuperFunction::soul() const {
    SuperFunction s = *this;
    s.terms_.erase(MultiIndex());
    return s;
}

std::optional<Parity> SuperFunction::parity() const {
    if (terms_.empty()) return Parity::even;
    const Parity p = terms_.begin()->first.parity();
    for (const auto& [I, e] : terms_)
        if (I.parity() != p) return std::nullopt;
    return p;
}

bool SuperFunction::is_homogeneous(Parity p) const {
    return std::all_of(terms_.begin(), terms_.end(), [p](const auto& kv) { return kv.first.parity() == p; });
}

SuperFunction SuperFunction::part(Parity p) const {
    SuperFunction out(domain_);
    for (const auto& [I, e] : terms_)
        if (I.parity() == p) out.terms_.emplace(I, e);
    return out;
}

SuperFunction& SuperFunction::operator+=(const SuperFunction& o) {
    if (!domain_) domain_ = o.domain_;
    require_same_domain(domain_, o.domain_);
    for (const auto& [I, e] : o.terms_) add_term(I, e);
    return *this;
}

SuperFunction& SuperFunction::operator-=(const SuperFunction& o) {
    if (!domain_) domain_ = o.domain_;
    require_same_domain(domain_, o.domain_);
    for (const auto& [I, e] : o.terms_) add_term(I, -e);
    return *this;
}

SuperFunction operator-(const SuperFunction& a) {
    SuperFunction out(a.domain_);
    for (const auto& [I, e] : a.terms_) out.terms_.emplace(I, -e);
    return out;
}

SuperFunction operator*(const Expr& s, const SuperFunction& f) {
    SuperFunction out(f.domain_);
    for (const auto& [I, e] : f.terms_) out.add_term(I, s * e);
    return out;
}

std::string SuperFunction::to_string() const {
    std::string out;
    const std::vector<std::string> names = domain_ ? domain_->odd() : std::vector<std::string>{};
    for (const auto& [I, e] : terms_) {
        if (I.empty()) {
            append_term(out, e.to_string());
            continue;
        }
        const std::string mono = monomial_name(I, names);
        if (e.is_one()) {
            append_term(out, mono);
        } else if (e.is_constant() && e.value() == cplx(-1.0, 0.0)) {
            append_term(out, "-" + mono);
        } else {
            std::string c = e.to_string();
            if (e.op() == Op::add || e.op() == Op::sub) c = "(" + c + ")";
            append_term(out, c + "*" + mono);
        }
    }
    return out.empty() ? "0" : out;
}

SuperFunction gr_mul(const SuperFunction& f, const SuperFunction& g) {
    require_same_domain(f.domain(), g.domain());
    SuperFunction out(f.domain() ? f.domain() : g.domain());
    for (const auto& [I, a] : f.terms())
        for (const auto& [J, b] : g.terms()) {
            if (I.bits() & J.bits()) continue;
            const int s = merge_sign(I, J);
            Expr c = a * b;
            out.add_term(MultiIndex(I.bits() | J.bits()), s < 0 ? -c : c);
        }
    return out;
}

SuperFunction operator*(const SuperFunction& f, const SuperFunction& g) { return gr_mul(f, g); }

SuperFunction odd_partial(const SuperFunction& f, int j) {
    if (j < 0 || j >= f.domain()->odd_dim()) throw Error("odd index out of range");
    SuperFunction out(f.domain());
    for (const auto& [I, e] : f.terms()) {
        if (!I.contains(j)) continue;
        const MultiIndex rest(I.bits() & ~(1u << j));
        out.add_term(rest, left_derivative_sign(I, j) < 0 ? -e : e);
    }
    return out;
}

SuperFunction even_partial(const SuperFunction& f, int i) {
    if (i < 0 || i >= f.domain()->even_dim()) throw Error("even index out of range");
    const std::string& var = f.domain()->even()[static_cast<std::size_t>(i)];
    SuperFunction out(f.domain());
    for (const auto& [I, e] : f.terms()) out.add_term(I, diff(e, var));
    return out;
}

// Substitution -------------------------------------------------------------------

SuperFunction compose_expr(const Expr& g, std::span<const std::string> vars, std::span<const SuperFunction> images,
                           const DomainPtr& target) {
    if (vars.size() != images.size()) throw Error("compose_expr: arity mismatch");
    std::map<std::string, Expr> bodies;
    std::vector<SuperFunction> souls;
    for (std::size_t v = 0; v < vars.size(); ++v) {
        require_same_domain(images[v].domain() ? images[v].domain() : target, target);
        if (!images[v].is_homogeneous(Parity::even))
            throw ParityError("image of even variable '" + vars[v] + "' is not even");
        bodies[vars[v]] = images[v].body();
        souls.push_back(images[v].soul());
    }
    SuperFunction result(target);
    // Sum over multi-indices α of (1/α!) ∂^α g(body) · soul^α; terminates by nilpotency.
    std::function<void(std::size_t, const Expr&, const SuperFunction&, double)> rec =
        [&](std::size_t v, const Expr& deriv, const SuperFunction& prod, double factorial) {
            if (v == vars.size()) {
                Expr c = substitute_vars(deriv, bodies);
                if (factorial != 1.0) c = c / Expr::constant(factorial);
                result += c * prod;
                return;
            }
            Expr d = deriv;
            SuperFunction p = prod;
            double fact = factorial;
            for (int k = 0;; ++k) {
                rec(v + 1, d, p, fact);
                if (souls[v].is_zero()) break;
                p = gr_mul(p, souls[v]);
                if (p.is_zero()) break;
                d = diff(d, vars[v]);
                fact *= static_cast<double>(k + 1);
            }
        };
    rec(0, g, SuperFunction::constant(target, 1.0), 1.0);
    return result;
}

SuperFunction substitute(const SuperFunction& f, const Substitution& images, const DomainPtr& target) {
    const SuperDomain& src = *f.domain();
    auto image_of = [&](const std::string& name) -> SuperFunction {
        auto it = images.find(name);
        if (it != images.end()) {
            require_same_domain(it->second.domain() ? it->second.domain() : target, target);
            return it->second;
        }
        if (target->even_index(name)) return SuperFunction::even_coordinate(target, name);
        if (auto j = target->odd_index(name)) return SuperFunction::odd_coordinate(target, *j);
        throw Error("no image for coordinate '" + name + "'");
    };
    std::vector<SuperFunction> even_images;
    for (const auto& name : src.even()) {
        SuperFunction im = image_of(name);
        if (!im.is_homogeneous(Parity::even)) throw ParityError("image of even coordinate '" + name + "' is not even");
        even_images.push_back(std::move(im));
    }
    std::vector<SuperFunction> odd_images;
    for (const auto& name : src.odd()) {
        SuperFunction im = image_of(name);
        if (!im.is_homogeneous(Parity::odd) || im.is_zero()) {
            if (!im.is_homogeneous(Parity::odd)) throw ParityError("image of odd coordinate '" + name + "' is not odd");
        }
        odd_images.push_back(std::move(im));
    }
    std::map<std::uint32_t, SuperFunction> odd_products;
    auto odd_product = [&](MultiIndex I) -> const SuperFunction& {
        auto it = odd_products.find(I.bits());
        if (it != odd_products.end()) return it->second;
        SuperFunction p = SuperFunction::constant(target, 1.0);
        for (int j : I.indices()) p = gr_mul(p, odd_images[static_cast<std::size_t>(j)]);
        return odd_products.emplace(I.bits(), std::move(p)).first->second;
    };
    SuperFunction result(target);
    for (const auto& [I, e] : f.terms()) {
        SuperFunction c = compose_expr(e, src.even(), even_images, target);
        result += gr_mul(c, odd_product(I));
    }
    return result;
}

// Lifting expressions into the superalgebra ------------------------------------------------

namespace {

SuperFunction apply_unary(const Expr& g, const SuperFunction& arg, const DomainPtr& domain) {
    static const std::vector<std::string> u{"__u"};
    if (!arg.is_homogeneous(Parity::even))
        throw ParityError("argument '" + arg.to_string() + "' of a function or denominator is not even");
    const SuperFunction images[] = {arg};
    return compose_expr(g, u, images, domain);
}

}  // namespace

SuperFunction lift(const Expr& e, const DomainPtr& domain) {
    switch (e.op()) {
        case Op::constant: return SuperFunction::constant(domain, e.value());
        case Op::variable: {
            if (domain->even_index(e.name())) return SuperFunction::even_coordinate(domain, e.name());
            if (auto j = domain->odd_index(e.name())) return SuperFunction::odd_coordinate(domain, *j);
            throw Error("unknown coordinate '" + e.name() + "'");
        }
        case Op::add: return lift(e.lhs(), domain) + lift(e.rhs(), domain);
        case Op::sub: return lift(e.lhs(), domain) - lift(e.rhs(), domain);
        case Op::neg: return -lift(e.lhs(), domain);
        case Op::mul: return gr_mul(lift(e.lhs(), domain), lift(e.rhs(), domain));
        case Op::div: {
            SuperFunction den = lift(e.rhs(), domain);
            SuperFunction num = lift(e.lhs(), domain);
            if (den.soul().is_zero()) return (Expr::constant(1.0) / den.body()) * num;
            const Expr u = Expr::variable("__u");
            return gr_mul(num, apply_unary(Expr::constant(1.0) / u, den, domain));
        }
        case Op::pow: {
            SuperFunction base = lift(e.lhs(), domain);
            if (base.soul().is_zero()) return SuperFunction(domain, pow(base.body(), e.exponent()));
            if (e.exponent() < 0) {
                const Expr u = Expr::variable("__u");
                return apply_unary(pow(u, e.exponent()), base, domain);
            }
            SuperFunction r = SuperFunction::constant(domain, 1.0);
            for (int k = 0; k < e.exponent(); ++k) r = gr_mul(r, base);
            return r;
        }
        default: {
            SuperFunction arg = lift(e.lhs(), domain);
            if (arg.soul().is_zero()) return SuperFunction(domain, apply_head(e.op(), arg.body()));
            return apply_unary(apply_head(e.op(), Expr::variable("__u")), arg, domain);
        }
    }
}

SuperFunction parse_superfunction(std::string_view text, const DomainPtr& domain) {
    const std::vector<std::string> names = domain->all_coordinates();
    return lift(parse_expr(text, names), domain);
}

// Evaluation ----------------------------------------------------------------------------

GrassmannNumber eval_superfunction(const SuperFunction& f, std::span<const cplx> even_point) {
    const SuperDomain& d = *f.domain();
    if (static_cast<int>(even_point.size()) != d.even_dim()) throw Error("point has the wrong dimension");
    Env env;
    for (int i = 0; i < d.even_dim(); ++i) env.bind(d.even()[static_cast<std::size_t>(i)], even_point[static_cast<std::size_t>(i)]);
    GrassmannNumber out(d.odd_dim());
    for (const auto& [I, e] : f.terms()) out[I] = evaluate(e, env, d.field());
    return out;
}

GrassmannNumber eval_superfunction(const SuperFunction& f, const std::map<std::string, Scalar>& point) {
    std::vector<cplx> p;
    for (const auto& name : f.domain()->even()) {
        auto it = point.find(name);
        if (it == point.end()) throw Error("no value for coordinate '" + name + "'");
        if (it->second.field() != f.domain()->field()) throw DomainMismatch("point field does not match domain");
        p.push_back(it->second.value());
    }
    return eval_superfunction(f, p);
}

SuperFunction embed(const SuperFunction& f, const DomainPtr& target, int odd_offset) {
    if (f.domain()->even() != target->even()) throw DomainMismatch("embed: even coordinates differ");
    SuperFunction out(target);
    for (const auto& [I, e] : f.terms()) out.add_term(MultiIndex(I.bits() << odd_offset), e);
    return out;
}

// Equality policy ---------------------------------------------------------------------------

namespace {

double halton(std::uint64_t index, unsigned base) {
    double f = 1.0;
    double r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

constexpr std::array<unsigned, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

std::vector<std::vector<cplx>> sample_points(const SuperDomain& domain, int count, std::uint64_t seed) {
    const int m = domain.even_dim();
    if (m == 0) return {std::vector<cplx>{}};
    const bool complex = domain.field() == Field::complex;
    const std::size_t dims = static_cast<std::size_t>(complex ? 2 * m : m);
    if (dims > kPrimes.size()) throw Error("too many even coordinates for the sampler");
    std::vector<std::vector<cplx>> out;
    for (int k = 0; k < count; ++k) {
        const std::uint64_t index = 1 + seed * 7919 + static_cast<std::uint64_t>(k);
        std::vector<cplx> p(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            const std::size_t di = static_cast<std::size_t>(complex ? 2 * i : i);
            const double re = 4.0 * halton(index, kPrimes[di]) - 2.0;
            const double im = complex ? 4.0 * halton(index, kPrimes[di + 1]) - 2.0 : 0.0;
            p[static_cast<std::size_t>(i)] = cplx(re, im);
        }
        out.push_back(std::move(p));
    }
    return out;
}

EqualityResult compare(const SuperFunction& a, const SuperFunction& b, const EqualityPolicy& policy) {
    const DomainPtr domain = a.domain() ? a.domain() : b.domain();
    require_same_domain(domain, b.domain() ? b.domain() : domain);
    const SuperFunction d = a - b;
    EqualityResult r;
    bool polynomial = true;
    for (const auto& [I, e] : d.terms()) {
        auto p = to_polynomial(e, domain->even());
        if (!p) {
            polynomial = false;
            break;
        }
        for (const auto& [ex, c] : *p) r.residual = std::max(r.residual, std::abs(c));
    }
    if (polynomial) {
        r.exact = true;
        r.equal = d.is_zero() || r.residual == 0.0;
        return r;
    }
    r.residual = 0.0;
    int used = 0;
    for (const auto& p : sample_points(*domain, 4 * policy.samples, policy.seed)) {
        if (used >= policy.samples) break;
        GrassmannNumber ga, gb;
        try {
            ga = eval_superfunction(a, p);
            gb = eval_superfunction(b, p);
        } catch (const DomainError&) {
            continue;
        }
        ++used;
        const auto ca = ga.coefficients();
        const auto cb = gb.coefficients();
        for (std::size_t i = 0; i < ca.size(); ++i) {
            const double scale = 1.0 + std::max(std::abs(ca[i]), std::abs(cb[i]));
            const double dev = std::abs(ca[i] - cb[i]) / scale;
            if (!std::isfinite(dev)) continue;
            if (dev > r.residual) {
                r.residual = dev;
                r.witness = p;
            }
        }
    }
    if (used == 0) throw DomainError("no admissible sample point", domain->excluded_locus());
    r.equal = r.residual <= policy.tolerance;
    return r;
}

}  // namespace superflow
