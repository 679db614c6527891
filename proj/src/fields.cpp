#include "superflow/fields.hpp"

#include <algorithm>
#include <cmath>

#include "superflow/detail/expr_parser.hpp"

namespace superflow {

namespace {

void require_same(const DomainPtr& a, const DomainPtr& b) {
    if (a != b && !(*a == *b)) throw DomainMismatch("vector fields live on different domains");
}

}  // namespace

SuperVectorField::SuperVectorField(DomainPtr domain)
    : domain_(std::move(domain)),
      even_(static_cast<std::size_t>(domain_->even_dim()), SuperFunction(domain_)),
      odd_(static_cast<std::size_t>(domain_->odd_dim()), SuperFunction(domain_)) {}

SuperVectorField::SuperVectorField(DomainPtr domain, std::vector<SuperFunction> even_coeffs,
                                   std::vector<SuperFunction> odd_coeffs)
    : domain_(std::move(domain)), even_(std::move(even_coeffs)), odd_(std::move(odd_coeffs)) {
    if (static_cast<int>(even_.size()) != domain_->even_dim() || static_cast<int>(odd_.size()) != domain_->odd_dim())
        throw Error("vector field needs one coefficient per coordinate");
}

SuperVectorField SuperVectorField::coordinate(DomainPtr domain, std::string_view name) {
    SuperVectorField X(domain);
    X.set_coeff(name, SuperFunction::constant(domain, 1.0));
    return X;
}

const SuperFunction& SuperVectorField::coeff(int k) const {
    const int m = static_cast<int>(even_.size());
    return k < m ? even_[static_cast<std::size_t>(k)] : odd_[static_cast<std::size_t>(k - m)];
}

const SuperFunction& SuperVectorField::coeff(std::string_view name) const {
    if (auto i = domain_->even_index(name)) return even_[static_cast<std::size_t>(*i)];
    if (auto j = domain_->odd_index(name)) return odd_[static_cast<std::size_t>(*j)];
    throw Error("unknown coordinate '" + std::string(name) + "'");
}

void SuperVectorField::set_coeff(std::string_view name, SuperFunction f) {
    if (auto i = domain_->even_index(name)) {
        even_[static_cast<std::size_t>(*i)] = std::move(f);
        return;
    }
    if (auto j = domain_->odd_index(name)) {
        odd_[static_cast<std::size_t>(*j)] = std::move(f);
        return;
    }
    throw Error("unknown coordinate '" + std::string(name) + "'");
}

bool SuperVectorField::is_homogeneous(Parity p) const {
    const Parity shifted = p + Parity::odd;
    return std::all_of(even_.begin(), even_.end(), [p](const SuperFunction& a) { return a.is_homogeneous(p); }) &&
           std::all_of(odd_.begin(), odd_.end(), [shifted](const SuperFunction& b) { return b.is_homogeneous(shifted); });
}

std::optional<Parity> SuperVectorField::parity() const {
    if (is_homogeneous(Parity::even)) return Parity::even;
    if (is_homogeneous(Parity::odd)) return Parity::odd;
    return std::nullopt;
}

SuperVectorField SuperVectorField::part(Parity p) const {
    SuperVectorField out(domain_);
    for (std::size_t i = 0; i < even_.size(); ++i) out.even_[i] = even_[i].part(p);
    for (std::size_t j = 0; j < odd_.size(); ++j) out.odd_[j] = odd_[j].part(p + Parity::odd);
    return out;
}

bool SuperVectorField::is_zero() const {
    return std::all_of(even_.begin(), even_.end(), [](const SuperFunction& a) { return a.is_zero(); }) &&
           std::all_of(odd_.begin(), odd_.end(), [](const SuperFunction& b) { return b.is_zero(); });
}

SuperVectorField& SuperVectorField::operator+=(const SuperVectorField& o) {
    require_same(domain_, o.domain_);
    for (std::size_t i = 0; i < even_.size(); ++i) even_[i] += o.even_[i];
    for (std::size_t j = 0; j < odd_.size(); ++j) odd_[j] += o.odd_[j];
    return *this;
}

SuperVectorField& SuperVectorField::operator-=(const SuperVectorField& o) {
    require_same(domain_, o.domain_);
    for (std::size_t i = 0; i < even_.size(); ++i) even_[i] -= o.even_[i];
    for (std::size_t j = 0; j < odd_.size(); ++j) odd_[j] -= o.odd_[j];
    return *this;
}

SuperVectorField operator*(const SuperFunction& f, const SuperVectorField& X) {
    SuperVectorField out(X.domain_);
    for (std::size_t i = 0; i < X.even_.size(); ++i) out.even_[i] = gr_mul(f, X.even_[i]);
    for (std::size_t j = 0; j < X.odd_.size(); ++j) out.odd_[j] = gr_mul(f, X.odd_[j]);
    return out;
}

SuperVectorField operator*(cplx s, const SuperVectorField& X) {
    return SuperFunction::constant(X.domain_, s) * X;
}

std::string SuperVectorField::to_string() const {
    std::string out;
    const std::vector<std::string> names = domain_->all_coordinates();
    for (int k = 0; k < coordinate_count(); ++k) {
        const SuperFunction& c = coeff(k);
        if (c.is_zero()) continue;
        const std::string d = "d/d" + names[static_cast<std::size_t>(k)];
        std::string term;
        const std::string s = c.to_string();
        if (s == "1")
            term = d;
        else if (s == "-1")
            term = "-" + d;
        else if (s.find(' ') != std::string::npos)
            term = "(" + s + ") " + d;
        else
            term = s + " " + d;
        if (out.empty())
            out = term;
        else if (term[0] == '-')
            out += " - " + term.substr(1);
        else
            out += " + " + term;
    }
    return out.empty() ? "0" : out;
}

SuperFunction apply(const SuperVectorField& X, const SuperFunction& f) {
    require_same(X.domain(), f.domain());
    SuperFunction out(X.domain());
    const int m = X.domain()->even_dim();
    const int n = X.domain()->odd_dim();
    for (int i = 0; i < m; ++i)
        if (!X.even_coeff(i).is_zero()) out += gr_mul(X.even_coeff(i), even_partial(f, i));
    for (int j = 0; j < n; ++j)
        if (!X.odd_coeff(j).is_zero()) out += gr_mul(X.odd_coeff(j), odd_partial(f, j));
    return out;
}

SuperVectorField bracket(const SuperVectorField& X, const SuperVectorField& Y) {
    require_same(X.domain(), Y.domain());
    SuperVectorField out(X.domain());
    for (Parity px : {Parity::even, Parity::odd}) {
        const SuperVectorField Xp = X.part(px);
        if (Xp.is_zero()) continue;
        for (Parity py : {Parity::even, Parity::odd}) {
            const SuperVectorField Yp = Y.part(py);
            if (Yp.is_zero()) continue;
            const double sign = koszul_sign(px, py);
            std::vector<SuperFunction> even, odd;
            for (int k = 0; k < X.coordinate_count(); ++k) {
                SuperFunction c = apply(Xp, Yp.coeff(k));
                SuperFunction back = apply(Yp, Xp.coeff(k));
                if (sign > 0)
                    c -= back;
                else
                    c += back;
                (k < X.domain()->even_dim() ? even : odd).push_back(std::move(c));
            }
            out += SuperVectorField(X.domain(), std::move(even), std::move(odd));
        }
    }
    return out;
}

SuperVectorField reduced_field(const SuperVectorField& X) {
    const DomainPtr& d = X.domain();
    DomainPtr reduced = make_domain(d->even(), {}, d->field(), d->excluded_locus());
    std::vector<SuperFunction> even;
    for (int i = 0; i < d->even_dim(); ++i) even.emplace_back(reduced, X.even_coeff(i).body());
    return SuperVectorField(reduced, std::move(even), {});
}

SuperVectorField parse_vector_field(std::string_view text, const DomainPtr& domain) {
    using detail::Tok;
    const std::vector<std::string> names = domain->all_coordinates();
    detail::Parser p(detail::tokenize(text, true), names);
    SuperVectorField X(domain);
    bool first = true;
    while (true) {
        double sign = 1.0;
        if (p.at(Tok::plus) || p.at(Tok::minus)) {
            sign = p.next().kind == Tok::minus ? -1.0 : 1.0;
        } else if (!first) {
            p.fail("expected '+' or '-' between vector field terms", p.peek().pos);
        }
        Expr coef = Expr::constant(1.0);
        if (!p.at(Tok::derivation)) coef = p.expression();
        if (first && p.at(Tok::end) && coef.is_zero()) return X;
        if (!p.at(Tok::derivation)) p.fail("expected 'd/d<coordinate>'", p.peek().pos);
        const detail::Token d = p.next();
        if (!domain->even_index(d.text) && !domain->odd_index(d.text))
            p.fail("unknown coordinate '" + d.text + "'", d.pos);
        SuperFunction c = lift(sign < 0 ? -coef : coef, domain);
        X.set_coeff(d.text, X.coeff(d.text) + c);
        first = false;
        if (p.at(Tok::end)) break;
    }
    return X;
}

EqualityResult compare(const SuperVectorField& X, const SuperVectorField& Y, const EqualityPolicy& policy) {
    require_same(X.domain(), Y.domain());
    EqualityResult worst;
    worst.exact = true;
    for (int k = 0; k < X.coordinate_count(); ++k) {
        EqualityResult r = compare(X.coeff(k), Y.coeff(k), policy);
        worst.equal = worst.equal && r.equal;
        worst.exact = worst.exact && r.exact;
        if (r.residual > worst.residual || (worst.witness.empty() && !r.witness.empty())) {
            worst.residual = std::max(worst.residual, r.residual);
            if (!r.witness.empty()) worst.witness = r.witness;
        }
    }
    return worst;
}

// LieSuperAlgebra -------------------------------------------------------------------

LieSuperAlgebra::LieSuperAlgebra(std::vector<BasisElement> basis, Field field)
    : basis_(std::move(basis)), constants_(basis_.size() * basis_.size() * basis_.size()), field_(field) {}

std::optional<int> LieSuperAlgebra::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < basis_.size(); ++i)
        if (basis_[i].name == name) return static_cast<int>(i);
    return std::nullopt;
}

std::vector<int> LieSuperAlgebra::even_indices() const {
    std::vector<int> out;
    for (int i = 0; i < dim(); ++i)
        if (element(i).parity == Parity::even) out.push_back(i);
    return out;
}

std::vector<int> LieSuperAlgebra::odd_indices() const {
    std::vector<int> out;
    for (int i = 0; i < dim(); ++i)
        if (element(i).parity == Parity::odd) out.push_back(i);
    return out;
}

std::size_t LieSuperAlgebra::idx(int i, int j, int k) const {
    const std::size_t n = basis_.size();
    return (static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)) * n + static_cast<std::size_t>(k);
}

cplx LieSuperAlgebra::structure_constant(int i, int j, int k) const { return constants_[idx(i, j, k)]; }

void LieSuperAlgebra::set_bracket(int i, int j, const std::vector<cplx>& coeffs) {
    if (static_cast<int>(coeffs.size()) != dim()) throw Error("bracket needs one coefficient per basis element");
    for (int k = 0; k < dim(); ++k) constants_[idx(i, j, k)] = coeffs[static_cast<std::size_t>(k)];
}

void LieSuperAlgebra::set_bracket_graded(int i, int j, const std::vector<cplx>& coeffs) {
    set_bracket(i, j, coeffs);
    const double s = -static_cast<double>(koszul_sign(element(i).parity, element(j).parity));
    std::vector<cplx> swapped(coeffs.size());
    for (std::size_t k = 0; k < coeffs.size(); ++k) swapped[k] = s * coeffs[k];
    set_bracket(j, i, swapped);
}

CheckReport check_algebra(const LieSuperAlgebra& g, double tolerance) {
    CheckReport report;
    const int n = g.dim();
    auto parity = [&](int i) { return g.element(i).parity; };
    auto name = [&](int i) { return g.element(i).name; };

    double anti = 0.0;
    std::string anti_witness;
    double par = 0.0;
    std::string par_witness;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const cplx cij = g.structure_constant(i, j, k);
                const cplx cji = g.structure_constant(j, i, k);
                const double dev = std::abs(cij + static_cast<double>(koszul_sign(parity(i), parity(j))) * cji);
                if (dev > tolerance && dev > anti) {
                    anti = dev;
                    anti_witness = "[" + name(i) + "," + name(j) + "] has " + format_cplx(cij) + "*" + name(k) +
                                   " but [" + name(j) + "," + name(i) + "] has " + format_cplx(cji) + "*" + name(k);
                }
                if (parity(k) != parity(i) + parity(j) && std::abs(cij) > tolerance && std::abs(cij) > par) {
                    par = std::abs(cij);
                    par_witness = "[" + name(i) + "," + name(j) + "] has a component along " + name(k) +
                                  " of the wrong parity";
                }
            }
    report.add("graded antisymmetry", anti_witness.empty(), anti, anti_witness);
    report.add("parity consistency", par_witness.empty(), par, par_witness);

    // (−1)^{|i||k|}[e_i,[e_j,e_k]] + (−1)^{|j||i|}[e_j,[e_k,e_i]] + (−1)^{|k||j|}[e_k,[e_i,e_j]] = 0
    auto nested = [&](int a, int b, int c, int m) {
        cplx s = 0.0;
        for (int l = 0; l < n; ++l) s += g.structure_constant(b, c, l) * g.structure_constant(a, l, m);
        return s;
    };
    double jac = 0.0;
    std::string jac_witness;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int m = 0; m < n; ++m) {
                    const cplx total = static_cast<double>(koszul_sign(parity(i), parity(k))) * nested(i, j, k, m) +
                                       static_cast<double>(koszul_sign(parity(j), parity(i))) * nested(j, k, i, m) +
                                       static_cast<double>(koszul_sign(parity(k), parity(j))) * nested(k, i, j, m);
                    if (std::abs(total) > tolerance && std::abs(total) > jac) {
                        jac = std::abs(total);
                        jac_witness = "(" + name(i) + "," + name(j) + "," + name(k) + ") along " + name(m);
                    }
                }
    report.add("super Jacobi", jac_witness.empty(), jac, jac_witness);
    return report;
}

void InfinitesimalAction::validate() const {
    if (static_cast<int>(images.size()) != algebra.dim()) throw Error("λ needs one image per basis element");
    for (int i = 0; i < algebra.dim(); ++i) {
        const SuperVectorField& X = images[static_cast<std::size_t>(i)];
        if (!X.is_zero() && !X.is_homogeneous(algebra.element(i).parity))
            throw ParityError("image of " + to_string(algebra.element(i).parity) + " basis element '" +
                              algebra.element(i).name + "' is not " + to_string(algebra.element(i).parity));
    }
}

SuperVectorField InfinitesimalAction::image_of(const std::vector<cplx>& coeffs) const {
    SuperVectorField out(domain);
    for (std::size_t k = 0; k < coeffs.size(); ++k)
        if (coeffs[k] != cplx{}) out += coeffs[k] * images[k];
    return out;
}

CheckReport check_homomorphism(const InfinitesimalAction& lambda, const EqualityPolicy& policy) {
    CheckReport report;
    const CheckReport alg = check_algebra(lambda.algebra);
    if (!alg.pass()) {
        const Check* f = alg.first_failure();
        report.add("algebra axioms", false, f->residual, f->name + ": " + f->witness);
        return report;
    }
    lambda.validate();
    const LieSuperAlgebra& g = lambda.algebra;
    const int n = g.dim();
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            std::vector<cplx> c(static_cast<std::size_t>(n));
            for (int k = 0; k < n; ++k) c[static_cast<std::size_t>(k)] = g.structure_constant(i, j, k);
            const SuperVectorField lhs = bracket(lambda.images[static_cast<std::size_t>(i)],
                                                 lambda.images[static_cast<std::size_t>(j)]);
            const SuperVectorField rhs = lambda.image_of(c);
            const EqualityResult r = compare(lhs, rhs, policy);
            std::string witness;
            if (!r.equal) {
                witness = "residual " + (lhs - rhs).to_string();
                if (!r.witness.empty()) {
                    witness += " at (";
                    for (std::size_t q = 0; q < r.witness.size(); ++q)
                        witness += (q ? "," : "") + format_cplx(r.witness[q]);
                    witness += ")";
                }
            }
            report.add("[" + g.element(i).name + "," + g.element(j).name + "]", r.equal, r.residual, witness);
        }
    return report;
}

std::vector<std::vector<cplx>> support_sample(const InfinitesimalAction& lambda,
                                              const std::vector<std::vector<cplx>>& grid, double threshold) {
    std::vector<SuperVectorField> reduced;
    for (int i : lambda.algebra.even_indices()) reduced.push_back(reduced_field(lambda.images[static_cast<std::size_t>(i)]));
    std::vector<std::vector<cplx>> out;
    for (const auto& p : grid) {
        double norm = 0.0;
        for (const auto& X : reduced)
            for (int k = 0; k < X.coordinate_count(); ++k) {
                try {
                    norm = std::max(norm, std::abs(eval_superfunction(X.coeff(k), p).body()));
                } catch (const DomainError&) {
                }
            }
        if (norm > threshold) out.push_back(p);
    }
    return out;
}

}  // namespace superflow
