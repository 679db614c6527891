#include "superflow/jet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace superflow {

namespace {

int merge_sign_fast(std::uint32_t I, std::uint32_t J) {
    int s = 0;
    for (std::uint32_t t = J; t != 0; t &= t - 1) s += std::popcount(I >> (std::countr_zero(t) + 1));
    return (s & 1) ? -1 : 1;
}

template <class Key, class Value, class Make>
std::shared_ptr<const Value> cached(const Key& key, Make make) {
    static std::mutex mutex;
    static std::map<Key, std::shared_ptr<const Value>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto v = make();
    cache.emplace(key, v);
    return v;
}

void exponents_of_degree(int m, int d, std::vector<int>& cur, int pos, std::vector<std::vector<int>>& out) {
    if (pos == m - 1) {
        cur[static_cast<std::size_t>(pos)] = d;
        out.push_back(cur);
        return;
    }
    for (int k = d; k >= 0; --k) {
        cur[static_cast<std::size_t>(pos)] = k;
        exponents_of_degree(m, d - k, cur, pos + 1, out);
    }
}

}  // namespace

// MonomialTable ---------------------------------------------------------------------

MonomialTable::MonomialTable(int variables, int order) : m_(variables), order_(order) {
    if (variables < 0 || order < 0) throw Error("invalid monomial table");
    if (m_ == 0) {
        exps_.emplace_back();
    } else {
        std::vector<int> cur(static_cast<std::size_t>(m_), 0);
        for (int d = 0; d <= order_; ++d) exponents_of_degree(m_, d, cur, 0, exps_);
    }
    for (const auto& e : exps_) {
        int deg = 0;
        double fact = 1.0;
        for (int a : e) {
            deg += a;
            for (int k = 2; k <= a; ++k) fact *= k;
        }
        degree_.push_back(deg);
        factorial_.push_back(fact);
    }
    const int n = count();
    product_.assign(static_cast<std::size_t>(n * n), -1);
    std::vector<int> sum(static_cast<std::size_t>(m_));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (degree(a) + degree(b) > order_) continue;
            for (int i = 0; i < m_; ++i)
                sum[static_cast<std::size_t>(i)] = exponents(a)[static_cast<std::size_t>(i)] + exponents(b)[static_cast<std::size_t>(i)];
            product_[static_cast<std::size_t>(a * n + b)] = index_of(sum);
        }
}

std::shared_ptr<const MonomialTable> MonomialTable::get(int variables, int order) {
    return cached<std::pair<int, int>, MonomialTable>(
        {variables, order}, [&] { return std::make_shared<const MonomialTable>(variables, order); });
}

int MonomialTable::index_of(std::span<const int> exps) const {
    int deg = 0;
    for (int a : exps) deg += a;
    if (deg > order_) return -1;
    const auto it = std::lower_bound(exps_.begin(), exps_.end(), exps, [this](const std::vector<int>& x, std::span<const int> y) {
        int dx = 0, dy = 0;
        for (int a : x) dx += a;
        for (int a : y) dy += a;
        if (dx != dy) return dx < dy;
        // Within a degree the table is lexicographically decreasing.
        return std::lexicographical_compare(y.begin(), y.end(), x.begin(), x.end());
    });
    if (it == exps_.end() || !std::equal(it->begin(), it->end(), exps.begin(), exps.end()))
        throw Error("monomial lookup failed");
    return static_cast<int>(it - exps_.begin());
}

// JetLayout --------------------------------------------------------------------------

JetLayout::JetLayout(int even_dim, int order, int generators)
    : monomials_(MonomialTable::get(even_dim, order)), generators_(generators) {
    if (generators < 0 || generators > 20) throw Error("unsupported number of Grassmann generators in a jet");
}

std::shared_ptr<const JetLayout> JetLayout::get(int even_dim, int order, int generators) {
    return cached<std::tuple<int, int, int>, JetLayout>({even_dim, order, generators}, [&] {
        return std::make_shared<const JetLayout>(even_dim, order, generators);
    });
}

// Jet --------------------------------------------------------------------------------

Jet::Jet(LayoutPtr layout) : layout_(std::move(layout)), c_(layout_->size()) {}

Jet Jet::constant(LayoutPtr layout, cplx v) {
    Jet j(std::move(layout));
    j.c_[0] = v;
    return j;
}

Jet Jet::displacement(LayoutPtr layout, int i) {
    Jet j(std::move(layout));
    if (j.layout_->order() == 0) return j;
    std::vector<int> e(static_cast<std::size_t>(j.layout_->even_dim()), 0);
    e[static_cast<std::size_t>(i)] = 1;
    j.at(j.layout_->monomials().index_of(e), MultiIndex()) = 1.0;
    return j;
}

Jet Jet::generator(LayoutPtr layout, int k) {
    Jet j(std::move(layout));
    if (k < 0 || k >= j.layout_->generators()) throw Error("generator index out of range");
    j.at(0, MultiIndex::single(k)) = 1.0;
    return j;
}

double Jet::norm() const {
    double n = 0.0;
    for (const cplx& v : c_) n = std::max(n, std::abs(v));
    return n;
}

bool Jet::is_finite() const {
    return std::all_of(c_.begin(), c_.end(), [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

Jet& Jet::operator+=(const Jet& o) {
    if (layout_ != o.layout_) throw Error("jet layouts differ");
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    if (layout_ != o.layout_) throw Error("jet layouts differ");
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
}

Jet& Jet::operator*=(cplx s) {
    for (cplx& v : c_) v *= s;
    return *this;
}

void Jet::axpy(cplx s, const Jet& o) {
    if (layout_ != o.layout_) throw Error("jet layouts differ");
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += s * o.c_[k];
}

Jet operator*(const Jet& a, const Jet& b) {
    if (a.layout_ != b.layout_) throw Error("jet layouts differ");
    const JetLayout& L = *a.layout_;
    const MonomialTable& T = L.monomials();
    const std::uint32_t G = static_cast<std::uint32_t>(L.grassmann_size());
    const std::uint32_t mask = G - 1;
    Jet out(a.layout_);
    const int n = T.count();
    for (int ma = 0; ma < n; ++ma) {
        const cplx* pa = &a.c_[static_cast<std::size_t>(ma) * G];
        bool any = false;
        for (std::uint32_t I = 0; I < G && !any; ++I) any = pa[I] != cplx{};
        if (!any) continue;
        for (int mb = 0; mb < n; ++mb) {
            const int mc = T.product(ma, mb);
            if (mc < 0) continue;
            const cplx* pb = &b.c_[static_cast<std::size_t>(mb) * G];
            cplx* pc = &out.c_[static_cast<std::size_t>(mc) * G];
            for (std::uint32_t I = 0; I < G; ++I) {
                const cplx x = pa[I];
                if (x == cplx{}) continue;
                const std::uint32_t comp = ~I & mask;
                for (std::uint32_t J = comp;; J = (J - 1) & comp) {
                    const cplx y = pb[J];
                    if (y != cplx{}) {
                        const cplx v = x * y;
                        pc[I | J] += merge_sign_fast(I, J) < 0 ? -v : v;
                    }
                    if (J == 0) break;
                }
            }
        }
    }
    return out;
}

Jet Jet::truncated(const LayoutPtr& layout) const {
    return embedded(layout, 0);
}

Jet Jet::embedded(const LayoutPtr& layout, int shift) const {
    if (layout->even_dim() != layout_->even_dim() || layout_->generators() + shift > layout->generators())
        throw Error("jet does not embed into the requested layout");
    Jet out(layout);
    const int n = std::min(layout->monomial_count(), layout_->monomial_count());
    const std::uint32_t G = static_cast<std::uint32_t>(layout_->grassmann_size());
    for (int m = 0; m < n; ++m)
        for (std::uint32_t I = 0; I < G; ++I) out.at(m, MultiIndex(I << shift)) = at(m, MultiIndex(I));
    return out;
}

Jet Jet::even_derivative(int i) const {
    Jet out(layout_);
    const MonomialTable& T = layout_->monomials();
    const std::uint32_t G = static_cast<std::uint32_t>(layout_->grassmann_size());
    for (int m = 0; m < T.count(); ++m) {
        std::vector<int> e = T.exponents(m);
        const int a = e[static_cast<std::size_t>(i)];
        if (a == 0) continue;
        --e[static_cast<std::size_t>(i)];
        const int target = T.index_of(e);
        for (std::uint32_t I = 0; I < G; ++I) out.at(target, MultiIndex(I)) += static_cast<double>(a) * at(m, MultiIndex(I));
    }
    return out;
}

Jet Jet::odd_derivative(int k) const {
    Jet out(layout_);
    const std::uint32_t G = static_cast<std::uint32_t>(layout_->grassmann_size());
    for (int m = 0; m < layout_->monomial_count(); ++m)
        for (std::uint32_t I = 0; I < G; ++I) {
            const MultiIndex mi(I);
            if (!mi.contains(k)) continue;
            const cplx v = at(m, mi);
            out.at(m, MultiIndex(I & ~(1u << k))) += left_derivative_sign(mi, k) < 0 ? -v : v;
        }
    return out;
}

GrassmannNumber Jet::value() const {
    GrassmannNumber g(layout_->generators());
    for (std::uint32_t I = 0; I < layout_->grassmann_size(); ++I) g[MultiIndex(I)] = at(0, MultiIndex(I));
    return g;
}

std::string Jet::to_string(std::span<const std::string> dnames, std::span<const std::string> gnames) const {
    std::string out;
    const MonomialTable& T = layout_->monomials();
    for (int m = 0; m < T.count(); ++m)
        for (std::uint32_t I = 0; I < layout_->grassmann_size(); ++I) {
            cplx v = at(m, MultiIndex(I));
            if (std::abs(v) <= 1e-14) continue;
            if (std::abs(v.imag()) <= 1e-14) v.imag(0.0);
            if (std::abs(v.real()) <= 1e-14) v.real(0.0);
            std::string factors;
            for (int i = 0; i < T.variables(); ++i) {
                const int a = T.exponents(m)[static_cast<std::size_t>(i)];
                if (a == 0) continue;
                if (!factors.empty()) factors += "*";
                factors += dnames[static_cast<std::size_t>(i)];
                if (a > 1) factors += "^" + std::to_string(a);
            }
            for (int j : MultiIndex(I).indices()) {
                if (!factors.empty()) factors += "*";
                factors += gnames[static_cast<std::size_t>(j)];
            }
            std::string coef = format_cplx(v);
            std::string term;
            if (factors.empty())
                term = coef;
            else if (coef == "1")
                term = factors;
            else if (coef == "-1")
                term = "-" + factors;
            else
                term = coef + "*" + factors;
            if (out.empty())
                out = term;
            else if (term[0] == '-')
                out += " - " + term.substr(1);
            else
                out += " + " + term;
        }
    return out.empty() ? "0" : out;
}

// JetSuperMap ------------------------------------------------------------------------

JetSuperMap JetSuperMap::identity(DomainPtr domain, std::vector<cplx> base, int order,
                                  std::vector<std::string> parameters) {
    if (static_cast<int>(base.size()) != domain->even_dim()) throw Error("base point has the wrong dimension");
    JetSuperMap map;
    const int P = static_cast<int>(parameters.size());
    const LayoutPtr layout = JetLayout::get(domain->even_dim(), order, P + domain->odd_dim());
    for (int i = 0; i < domain->even_dim(); ++i)
        map.components.push_back(Jet::constant(layout, base[static_cast<std::size_t>(i)]) + Jet::displacement(layout, i));
    for (int j = 0; j < domain->odd_dim(); ++j) map.components.push_back(Jet::generator(layout, P + j));
    if (map.components.empty()) map.components.push_back(Jet(layout));
    map.domain = std::move(domain);
    map.parameters = std::move(parameters);
    map.base = std::move(base);
    return map;
}

std::vector<std::string> JetSuperMap::generator_names() const {
    std::vector<std::string> names = parameters;
    names.insert(names.end(), domain->odd().begin(), domain->odd().end());
    return names;
}

std::vector<cplx> JetSuperMap::image_point() const {
    std::vector<cplx> q;
    for (int i = 0; i < domain->even_dim(); ++i) q.push_back(components[static_cast<std::size_t>(i)].scalar_part());
    return q;
}

JetSuperMap JetSuperMap::truncated(int order) const {
    JetSuperMap out = *this;
    const LayoutPtr layout = JetLayout::get(domain->even_dim(), order, this->layout()->generators());
    for (Jet& c : out.components) c = c.truncated(layout);
    return out;
}

double JetSuperMap::distance(const JetSuperMap& o) const {
    if (components.size() != o.components.size() || layout() != o.layout())
        throw Error("germs with different shapes cannot be compared");
    double d = 0.0;
    for (std::size_t k = 0; k < components.size(); ++k) d = std::max(d, (components[k] - o.components[k]).norm());
    return d;
}

double JetSuperMap::distance_to_identity() const {
    return distance(identity(domain, base, order(), parameters));
}

std::string JetSuperMap::to_string() const {
    std::vector<std::string> dnames;
    for (const auto& n : domain->even()) dnames.push_back("d" + n);
    const std::vector<std::string> gnames = generator_names();
    const std::vector<std::string> coords = domain->all_coordinates();
    std::string out;
    for (std::size_t k = 0; k < coords.size(); ++k) {
        if (k) out += "\n";
        out += coords[k] + " -> " + components[k].to_string(dnames, gnames);
    }
    return out;
}

// JetPullback ------------------------------------------------------------------------

JetPullback::JetPullback(LayoutPtr layout, std::vector<cplx> point, std::vector<Jet> displacements,
                         std::vector<Jet> odd_images, int power_order)
    : layout_(std::move(layout)), point_(std::move(point)), odd_images_(std::move(odd_images)) {
    const int m = static_cast<int>(displacements.size());
    if (m != layout_->even_dim()) throw Error("displacement count differs from the jet dimension");
    powers_table_ = MonomialTable::get(m, power_order);
    const MonomialTable& T = *powers_table_;
    powers_.reserve(static_cast<std::size_t>(T.count()));
    powers_.push_back(Jet::constant(layout_, 1.0));
    for (int a = 1; a < T.count(); ++a) {
        std::vector<int> e = T.exponents(a);
        int i = 0;
        while (e[static_cast<std::size_t>(i)] == 0) ++i;
        --e[static_cast<std::size_t>(i)];
        powers_.push_back(powers_[static_cast<std::size_t>(T.index_of(e))] * displacements[static_cast<std::size_t>(i)]);
    }
    const std::size_t G = std::size_t{1} << odd_images_.size();
    odd_products_.reserve(G);
    odd_products_.push_back(Jet::constant(layout_, 1.0));
    for (std::size_t bits = 1; bits < G; ++bits) {
        const int hi = 31 - std::countl_zero(static_cast<std::uint32_t>(bits));
        odd_products_.push_back(odd_products_[bits & ~(std::size_t{1} << hi)] * odd_images_[static_cast<std::size_t>(hi)]);
    }
}

namespace {

std::vector<Jet> displacement_images(const JetSuperMap& map) {
    std::vector<Jet> out;
    for (int i = 0; i < map.domain->even_dim(); ++i) {
        Jet n = map.components[static_cast<std::size_t>(i)];
        n.at(0, MultiIndex()) = 0.0;
        out.push_back(std::move(n));
    }
    return out;
}

std::vector<Jet> odd_component_images(const JetSuperMap& map) {
    const int m = map.domain->even_dim();
    return {map.components.begin() + m, map.components.begin() + m + map.domain->odd_dim()};
}

}  // namespace

JetPullback::JetPullback(const JetSuperMap& map, int power_order)
    : JetPullback(map.layout(), map.image_point(), displacement_images(map), odd_component_images(map),
                  power_order < 0 ? required_order(map.layout()) : power_order) {}

// CompiledSuperFunction ------------------------------------------------------------

CompiledSuperFunction::CompiledSuperFunction(const SuperFunction& f, int order) : domain_(f.domain()), order_(order) {
    const std::vector<std::string>& vars = domain_->even();
    const MonomialTable& T = *MonomialTable::get(static_cast<int>(vars.size()), order);
    for (const auto& [I, e] : f.terms()) {
        Term term{I, {}};
        std::vector<Expr> d(static_cast<std::size_t>(T.count()));
        d[0] = e;
        for (int a = 1; a < T.count(); ++a) {
            std::vector<int> ex = T.exponents(a);
            int i = 0;
            while (ex[static_cast<std::size_t>(i)] == 0) ++i;
            const int ai = ex[static_cast<std::size_t>(i)];
            --ex[static_cast<std::size_t>(i)];
            const Expr& prev = d[static_cast<std::size_t>(T.index_of(ex))];
            if (prev.is_zero()) continue;
            Expr de = diff(prev, vars[static_cast<std::size_t>(i)]);
            if (ai > 1) de = de / Expr::constant(static_cast<double>(ai));
            d[static_cast<std::size_t>(a)] = normalize_polynomial(de, vars);
        }
        for (int a = 0; a < T.count(); ++a)
            if (!d[static_cast<std::size_t>(a)].is_zero()) term.taylor.emplace_back(a, d[static_cast<std::size_t>(a)]);
        terms_.push_back(std::move(term));
    }
}

Jet CompiledSuperFunction::pullback(const JetPullback& ctx) const {
    if (ctx.power_order() > order_) throw Error("compiled superfunction has too low an order for this pullback");
    if (ctx.odd_count() != domain_->odd_dim()) throw Error("pullback has the wrong number of odd images");
    Env env;
    for (std::size_t i = 0; i < domain_->even().size(); ++i) env.bind(domain_->even()[i], ctx.point()[i]);
    const int limit = ctx.power_table().count();
    Jet out(ctx.layout());
    for (const Term& t : terms_) {
        Jet s(ctx.layout());
        for (const auto& [mono, e] : t.taylor) {
            if (mono >= limit) break;
            const cplx v = evaluate(e, env, domain_->field());
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw DomainError("non-finite coefficient value", e.to_string());
            s.axpy(v, ctx.power(mono));
        }
        if (t.index.empty())
            out += s;
        else
            out += s * ctx.odd_product(t.index);
    }
    return out;
}

Jet pullback(const Jet& f, const JetPullback& ctx) {
    const JetLayout& L = *f.layout();
    if (L.order() > ctx.power_order()) throw Error("pullback context has too low an order for this jet");
    if (L.generators() != ctx.odd_count()) throw Error("pullback has the wrong number of odd images");
    Jet out(ctx.layout());
    for (std::uint32_t I = 0; I < L.grassmann_size(); ++I) {
        Jet s(ctx.layout());
        bool any = false;
        for (int m = 0; m < L.monomial_count(); ++m) {
            const cplx v = f.at(m, MultiIndex(I));
            if (v == cplx{}) continue;
            s.axpy(v, ctx.power(m));
            any = true;
        }
        if (!any) continue;
        if (I == 0)
            out += s;
        else
            out += s * ctx.odd_product(MultiIndex(I));
    }
    return out;
}

JetSuperMap compose(const JetSuperMap& outer, const JetSuperMap& inner) {
    if (!(*outer.domain == *inner.domain)) throw DomainMismatch("composed germs live on different domains");
    const std::vector<cplx> q = inner.image_point();
    for (std::size_t i = 0; i < q.size(); ++i)
        if (std::abs(outer.base[i] - q[i]) > 1e-8 * (1.0 + std::abs(q[i])))
            throw Error("outer germ is not expanded at the image point of the inner germ");
    const int g_in = inner.layout()->generators();
    const int order = std::min(inner.order(), outer.order() - g_in / 2);
    if (order < 0) throw Error("outer germ order too low to compose");
    std::vector<std::string> params = outer.parameters;
    for (const auto& p : inner.parameters) {
        if (std::find(params.begin(), params.end(), p) != params.end())
            throw Error("composed germs share the parameter name '" + p + "'");
        params.push_back(p);
    }
    const int P_out = outer.parameter_count();
    const int m = inner.domain->even_dim();
    const LayoutPtr R = JetLayout::get(m, order, P_out + g_in);
    std::vector<Jet> comps;
    for (const Jet& c : inner.components) comps.push_back(c.embedded(R, P_out));
    std::vector<Jet> N;
    for (int i = 0; i < m; ++i) {
        Jet n = comps[static_cast<std::size_t>(i)];
        n.at(0, MultiIndex()) = 0.0;
        N.push_back(std::move(n));
    }
    std::vector<Jet> odd;
    for (int k = 0; k < P_out; ++k) odd.push_back(Jet::generator(R, k));
    for (int j = 0; j < inner.domain->odd_dim(); ++j) odd.push_back(comps[static_cast<std::size_t>(m + j)]);
    const JetPullback ctx(R, q, std::move(N), std::move(odd), outer.order());
    JetSuperMap out;
    out.domain = inner.domain;
    out.parameters = std::move(params);
    out.base = inner.base;
    for (int k = 0; k < m + inner.domain->odd_dim(); ++k)
        out.components.push_back(pullback(outer.components[static_cast<std::size_t>(k)], ctx));
    if (out.components.empty()) out.components.push_back(Jet(R));
    return out;
}

JetSuperMap substitute_parameters(const JetSuperMap& map, std::vector<std::string> new_parameters,
                                  const std::vector<Jet>& images, const LayoutPtr& layout) {
    if (static_cast<int>(images.size()) != map.parameter_count()) throw Error("one image per parameter is required");
    const int P = static_cast<int>(new_parameters.size());
    if (layout->generators() != P + map.domain->odd_dim()) throw Error("layout does not match the new parameters");
    std::vector<Jet> N;
    for (int i = 0; i < map.domain->even_dim(); ++i) N.push_back(Jet::displacement(layout, i));
    std::vector<Jet> odd = images;
    for (int j = 0; j < map.domain->odd_dim(); ++j) odd.push_back(Jet::generator(layout, P + j));
    const JetPullback ctx(layout, map.base, std::move(N), std::move(odd), map.order());
    JetSuperMap out;
    out.domain = map.domain;
    out.parameters = std::move(new_parameters);
    out.base = map.base;
    for (const Jet& c : map.components) out.components.push_back(pullback(c, ctx));
    return out;
}

Jet taylor_jet(const CompiledSuperFunction& f, std::span<const cplx> base, const LayoutPtr& layout) {
    std::vector<Jet> N;
    for (int i = 0; i < layout->even_dim(); ++i) N.push_back(Jet::displacement(layout, i));
    const int shift = layout->generators() - f.odd_count();
    if (shift < 0) throw Error("layout has fewer generators than the superfunction has odd coordinates");
    std::vector<Jet> odd;
    for (int j = 0; j < f.odd_count(); ++j) odd.push_back(Jet::generator(layout, shift + j));
    const JetPullback ctx(layout, std::vector<cplx>(base.begin(), base.end()), std::move(N), std::move(odd),
                          layout->order());
    return f.pullback(ctx);
}

CompiledField::CompiledField(const SuperVectorField& X, int order) {
    for (int k = 0; k < X.coordinate_count(); ++k) coefficients.emplace_back(X.coeff(k), order);
}

}  // namespace superflow
