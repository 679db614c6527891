#include "superflow/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

namespace superflow {

void FlowConfig::validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw Error("step size must be positive");
    if (jet_order < 0 || jet_order > 4) throw Error("jet order must lie in 0..4");
}

DomainExitError::DomainExitError(const std::string& what, std::string subexpression, cplx time)
    : DomainError(what, std::move(subexpression)), time_(time) {}

PreconditionError::PreconditionError(const std::string& what, std::string witness)
    : Error(what), witness_(std::move(witness)) {}

namespace {

bool is_real_field(const DomainPtr& d) { return d->field() == Field::real; }

void require_real_if_needed(const DomainPtr& d, cplx v, const char* what) {
    if (is_real_field(d) && std::abs(v.imag()) > 1e-14)
        throw Error(std::string(what) + " must be real on a real superdomain");
}

void require_even(const SuperVectorField& X, const std::string& name) {
    if (!X.is_homogeneous(Parity::even)) throw ParityError("field " + name + " is not even");
}

std::string point_string(std::span<const cplx> p) {
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + format_cplx(p[i]);
    return s + ")";
}

/// d/dt y = Σ_k ξ_k(t) y*(X_k(c)) for the state y (components of a jet map).
class SegmentRhs {
public:
    SegmentRhs(const DomainPtr& domain, const LayoutPtr& layout, const FieldSegment& seg)
        : domain_(domain), layout_(layout), coefficients_(seg.coefficients) {
        const int K = JetPullback::required_order(layout);
        for (const auto& X : seg.fields) fields_.emplace_back(X, K);
        if (coefficients_.size() != fields_.size()) throw Error("one coefficient per field is required");
    }

    std::vector<Jet> operator()(double t, const std::vector<Jet>& y) const {
        const int m = domain_->even_dim();
        const int n = domain_->odd_dim();
        std::vector<cplx> q;
        std::vector<Jet> N;
        for (int i = 0; i < m; ++i) {
            const cplx v = y[static_cast<std::size_t>(i)].scalar_part();
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw DomainExitError("flow body diverged", domain_->even()[static_cast<std::size_t>(i)], t);
            q.push_back(v);
            Jet d = y[static_cast<std::size_t>(i)];
            d.at(0, MultiIndex()) = 0.0;
            N.push_back(std::move(d));
        }
        std::vector<Jet> odd(y.begin() + m, y.begin() + m + n);
        std::vector<Jet> out(y.size(), Jet(layout_));
        Env env;
        env.bind("t", t);
        try {
            const JetPullback ctx(layout_, q, std::move(N), std::move(odd), JetPullback::required_order(layout_));
            for (std::size_t k = 0; k < fields_.size(); ++k) {
                const cplx xi = evaluate(coefficients_[k], env, Field::complex);
                if (xi == cplx{}) continue;
                require_real_if_needed(domain_, xi, "path coefficient");
                for (std::size_t c = 0; c < y.size(); ++c) {
                    const CompiledSuperFunction& f = fields_[k].coefficients[c];
                    if (f.is_zero()) continue;
                    out[c].axpy(xi, f.pullback(ctx));
                }
            }
        } catch (const DomainExitError&) {
            throw;
        } catch (const DomainError& e) {
            throw DomainExitError(std::string("flow left the domain at ") + point_string(q) + ": " + e.what(),
                                  e.subexpression(), t);
        }
        return out;
    }

private:
    DomainPtr domain_;
    LayoutPtr layout_;
    std::vector<Expr> coefficients_;
    std::vector<CompiledField> fields_;
};

std::vector<Jet> add_scaled(const std::vector<Jet>& y, double h, const std::vector<Jet>& k) {
    std::vector<Jet> out = y;
    for (std::size_t c = 0; c < out.size(); ++c) out[c].axpy(h, k[c]);
    return out;
}

}  // namespace

JetSuperMap integrate_segments(JetSuperMap start, const std::vector<FieldSegment>& segments, double step) {
    if (!(step > 0.0)) throw Error("step size must be positive");
    const std::size_t count = static_cast<std::size_t>(start.domain->even_dim() + start.domain->odd_dim());
    for (const FieldSegment& seg : segments) {
        if (seg.t1 == seg.t0) continue;
        for (std::size_t k = 0; k < seg.fields.size(); ++k) require_even(seg.fields[k], "#" + std::to_string(k + 1));
        const SegmentRhs rhs(start.domain, start.layout(), seg);
        const double span = seg.t1 - seg.t0;
        const long steps = std::max(1L, static_cast<long>(std::ceil(std::abs(span) / step - 1e-9)));
        const double h = span / static_cast<double>(steps);
        std::vector<Jet> y(start.components.begin(), start.components.begin() + static_cast<std::ptrdiff_t>(count));
        // Compensation terms of the Kahan-summed state.
        std::vector<Jet> carry;
        for (const Jet& c : y) carry.emplace_back(c.layout());
        const std::size_t m = static_cast<std::size_t>(start.domain->even_dim());
        std::vector<cplx> before(m), after(m);
        for (long s = 0; s < steps; ++s) {
            const double t = seg.t0 + h * static_cast<double>(s);
            const std::vector<Jet> k1 = rhs(t, y);
            const std::vector<Jet> k2 = rhs(t + 0.5 * h, add_scaled(y, 0.5 * h, k1));
            const std::vector<Jet> k3 = rhs(t + 0.5 * h, add_scaled(y, 0.5 * h, k2));
            const std::vector<Jet> k4 = rhs(t + h, add_scaled(y, h, k3));
            for (std::size_t i = 0; i < m; ++i) before[i] = y[i].scalar_part();
            for (std::size_t c = 0; c < y.size(); ++c) {
                Jet incr = k1[c] * (h / 6.0);
                incr.axpy(h / 3.0, k2[c]);
                incr.axpy(h / 3.0, k3[c]);
                incr.axpy(h / 6.0, k4[c]);
                std::span<cplx> yc = y[c].coefficients(), cc = carry[c].coefficients();
                std::span<const cplx> ic = std::as_const(incr).coefficients();
                for (std::size_t k = 0; k < yc.size(); ++k) {
                    const cplx v = ic[k] - cc[k];
                    const cplx sum = yc[k] + v;
                    cc[k] = (sum - yc[k]) - v;
                    yc[k] = sum;
                }
            }
            for (std::size_t i = 0; i < m; ++i) after[i] = y[i].scalar_part();
            if (start.domain->distance_to_excluded(before, after) <= 1e-9)
                throw DomainExitError("flow body reached the excluded locus", start.domain->excluded_locus(), t + h);
        }
        for (std::size_t c = 0; c < count; ++c) start.components[c] = std::move(y[c]);
    }
    return start;
}

namespace {

FieldSegment scaled_segment(const SuperVectorField& X, cplx t) {
    return FieldSegment{{X}, {Expr::constant(t)}, 0.0, 1.0};
}

}  // namespace

JetSuperMap flow_sequence(JetSuperMap start, const std::vector<SuperVectorField>& Xs, std::span<const cplx> times,
                          double step) {
    if (times.size() != Xs.size()) throw Error("one time per field is required");
    for (std::size_t k = Xs.size(); k-- > 0;) {
        const cplx t = times[k];
        require_real_if_needed(start.domain, t, "flow time");
        if (t == cplx{}) continue;
        // s ∈ [0,1] with field t·X; the step in t stays at `step`.
        start = integrate_segments(std::move(start), {scaled_segment(Xs[k], t)}, step / std::abs(t));
    }
    return start;
}

JetSuperMap flow_even(const SuperVectorField& X, cplx t, std::vector<cplx> base, const FlowConfig& cfg) {
    cfg.validate();
    require_even(X, "X");
    for (cplx b : base) require_real_if_needed(X.domain(), b, "base point");
    const cplx times[] = {t};
    return flow_sequence(JetSuperMap::identity(X.domain(), std::move(base), cfg.jet_order), {X}, times, cfg.step);
}

JetSuperMap flow_time_dependent(const std::vector<FieldSegment>& segments, std::vector<cplx> base,
                                const FlowConfig& cfg) {
    cfg.validate();
    if (segments.empty() || segments.front().fields.empty()) throw Error("time-dependent flow needs a field");
    const DomainPtr domain = segments.front().fields.front().domain();
    for (cplx b : base) require_real_if_needed(domain, b, "base point");
    for (std::size_t s = 1; s < segments.size(); ++s)
        if (std::abs(segments[s].t0 - segments[s - 1].t1) > 1e-12) throw Error("path segments must be contiguous");
    return integrate_segments(JetSuperMap::identity(domain, std::move(base), cfg.jet_order), segments, cfg.step);
}

// Odd exponential ------------------------------------------------------------------

namespace {

SuperVectorField embed_field(const SuperVectorField& Y, const DomainPtr& extended, int shift) {
    std::vector<SuperFunction> even, odd;
    for (int i = 0; i < Y.domain()->even_dim(); ++i) even.push_back(embed(Y.even_coeff(i), extended, shift));
    for (int j = 0; j < shift; ++j) odd.emplace_back(extended);
    for (int j = 0; j < Y.domain()->odd_dim(); ++j) odd.push_back(embed(Y.odd_coeff(j), extended, shift));
    return SuperVectorField(extended, std::move(even), std::move(odd));
}

std::vector<std::string> fresh_names(const SuperDomain& d, const std::string& stem, std::size_t count) {
    std::vector<std::string> out;
    const std::vector<std::string> taken = d.all_coordinates();
    for (std::size_t j = 0; j < count; ++j) {
        std::string name = stem + std::to_string(j + 1);
        while (std::find(taken.begin(), taken.end(), name) != taken.end()) name += "_";
        out.push_back(name);
    }
    return out;
}

void require_commuting(const std::vector<SuperVectorField>& fields, const std::vector<std::string>& names,
                       const EqualityPolicy& policy) {
    for (std::size_t i = 0; i < fields.size(); ++i)
        for (std::size_t j = i; j < fields.size(); ++j) {
            const SuperVectorField b = bracket(fields[i], fields[j]);
            if (b.is_zero()) continue;
            const EqualityResult r = compare(b, SuperVectorField(fields[i].domain()), policy);
            if (!r.equal)
                throw PreconditionError("fields " + names[i] + " and " + names[j] + " do not super-commute",
                                        "[" + names[i] + "," + names[j] + "] = " + b.to_string());
        }
}

/// Terms free of the first `params` odd coordinates, moved to `target`.
SuperFunction at_zero_parameters(const SuperFunction& f, int params, const DomainPtr& target,
                                 const std::map<std::string, Expr>& even_zero = {}) {
    SuperFunction out(target);
    const std::uint32_t mask = (1u << params) - 1u;
    for (const auto& [I, e] : f.terms()) {
        if (I.bits() & mask) continue;
        out.add_term(MultiIndex(I.bits() >> params), even_zero.empty() ? e : substitute_vars(e, even_zero));
    }
    return out;
}

}  // namespace

OddExponential odd_exponential(const std::vector<SuperVectorField>& Ys, const EqualityPolicy& policy,
                               std::vector<std::string> parameter_names) {
    if (Ys.empty()) throw Error("odd exponential needs at least one odd field");
    const DomainPtr& d = Ys.front().domain();
    std::vector<std::string> ynames;
    for (std::size_t j = 0; j < Ys.size(); ++j) {
        ynames.push_back("Y" + std::to_string(j + 1));
        if (!(*Ys[j].domain() == *d)) throw DomainMismatch("odd fields live on different domains");
        if (!Ys[j].is_homogeneous(Parity::odd)) throw ParityError("field " + ynames.back() + " is not odd");
    }
    require_commuting(Ys, ynames, policy);
    const int n = static_cast<int>(Ys.size());
    if (parameter_names.empty()) parameter_names = fresh_names(*d, "tau", Ys.size());
    if (static_cast<int>(parameter_names.size()) != n) throw Error("one parameter name per odd field is required");
    std::vector<std::string> odd = parameter_names;
    odd.insert(odd.end(), d->odd().begin(), d->odd().end());
    OddExponential out;
    out.extended = make_domain(d->even(), odd, d->field(), d->excluded_locus());
    out.parameters = parameter_names;
    SuperVectorField Z(out.extended);
    for (int j = 0; j < n; ++j)
        Z += SuperFunction::odd_coordinate(out.extended, j) * embed_field(Ys[static_cast<std::size_t>(j)], out.extended, n);
    for (const auto& c : d->all_coordinates()) {
        SuperFunction term = d->even_index(c) ? SuperFunction::even_coordinate(out.extended, c)
                                              : SuperFunction::odd_coordinate(out.extended, *out.extended->odd_index(c));
        SuperFunction sum = term;
        for (int k = 1; k <= n; ++k) {
            term = Expr::constant(1.0 / k) * apply(Z, term);
            if (term.is_zero()) break;
            sum += term;
        }
        out.components.push_back(std::move(sum));
    }
    return out;
}

std::vector<SuperFunction> compose_odd_exponentials(const OddExponential& outer, const OddExponential& inner) {
    const int ns = static_cast<int>(outer.parameters.size());
    const int nt = static_cast<int>(inner.parameters.size());
    const SuperDomain& e = *inner.extended;
    std::vector<std::string> odd = outer.parameters;
    odd.insert(odd.end(), e.odd().begin(), e.odd().end());
    const DomainPtr target = make_domain(e.even(), odd, e.field(), e.excluded_locus());
    const std::vector<std::string> coords = outer.extended->all_coordinates();
    Substitution images;
    const int m = e.even_dim();
    std::size_t k = 0;
    for (const auto& c : coords) {
        if (outer.extended->odd_index(c) && *outer.extended->odd_index(c) < ns) continue;
        images[c] = embed(inner.components[k++], target, ns);
    }
    (void)m;
    (void)nt;
    std::vector<SuperFunction> out;
    for (const auto& f : outer.components) out.push_back(substitute(f, images, target));
    return out;
}

// LocalAction ------------------------------------------------------------------------

LocalAction::LocalAction(std::vector<SuperVectorField> Xs, std::vector<SuperVectorField> Ys, const EqualityPolicy& policy)
    : Xs_(std::move(Xs)), Ys_(std::move(Ys)) {
    if (Xs_.empty() && Ys_.empty()) throw Error("a local action needs at least one generator");
    domain_ = Xs_.empty() ? Ys_.front().domain() : Xs_.front().domain();
    std::vector<SuperVectorField> all;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < Xs_.size(); ++i) {
        names.push_back("X" + std::to_string(i + 1));
        if (!(*Xs_[i].domain() == *domain_)) throw DomainMismatch("generators live on different domains");
        require_even(Xs_[i], names.back());
        all.push_back(Xs_[i]);
    }
    for (std::size_t j = 0; j < Ys_.size(); ++j) {
        names.push_back("Y" + std::to_string(j + 1));
        if (!(*Ys_[j].domain() == *domain_)) throw DomainMismatch("generators live on different domains");
        if (!Ys_[j].is_homogeneous(Parity::odd)) throw ParityError("field " + names.back() + " is not odd");
        all.push_back(Ys_[j]);
    }
    require_commuting(all, names, policy);
    if (!Ys_.empty()) exp_ = odd_exponential(Ys_, policy);
}

JetSuperMap LocalAction::pullback(std::span<const cplx> times, std::span<const cplx> base, int order, double step,
                                  std::vector<std::string> parameter_names) const {
    if (static_cast<int>(times.size()) != even_count()) throw Error("one time per even generator is required");
    std::vector<cplx> p(base.begin(), base.end());
    for (cplx b : p) require_real_if_needed(domain_, b, "base point");
    const int n = odd_count();
    if (n == 0) return flow_sequence(JetSuperMap::identity(domain_, std::move(p), order), Xs_, times, step);
    if (parameter_names.empty()) parameter_names = exp_.parameters;
    if (static_cast<int>(parameter_names.size()) != n) throw Error("one parameter name per odd generator is required");
    const int g = n + domain_->odd_dim();
    const int beta_order = order + g / 2;
    const JetSuperMap beta = flow_sequence(JetSuperMap::identity(domain_, p, beta_order), Xs_, times, step);
    const LayoutPtr A = JetLayout::get(domain_->even_dim(), order, g);
    JetSuperMap alpha;
    alpha.domain = domain_;
    alpha.parameters = std::move(parameter_names);
    alpha.base = p;
    for (const SuperFunction& c : exp_.components) alpha.components.push_back(taylor_jet(CompiledSuperFunction(c, order), p, A));
    return compose(beta, alpha);
}

SuperVectorField LocalAction::induced_infinitesimal(int direction) const {
    if (direction < 0 || direction >= even_count() + odd_count()) throw Error("parameter direction out of range");
    SuperVectorField out(domain_);
    const std::vector<std::string> coords = domain_->all_coordinates();
    if (direction < even_count()) {
        const SuperVectorField& X = Xs_[static_cast<std::size_t>(direction)];
        for (const auto& c : coords) {
            const SuperFunction cf = domain_->even_index(c) ? SuperFunction::even_coordinate(domain_, c)
                                                            : SuperFunction::odd_coordinate(domain_, *domain_->odd_index(c));
            // Right-hand side of the flow equation at the identity germ.
            out.set_coeff(c, substitute(apply(X, cf), {}, domain_));
        }
        return out;
    }
    const int j = direction - even_count();
    for (std::size_t k = 0; k < coords.size(); ++k)
        out.set_coeff(coords[k], at_zero_parameters(odd_partial(exp_.components[k], j), odd_count(), domain_));
    return out;
}

SuperVectorField induced_infinitesimal(const SymbolicAction& action, int direction) {
    const int me = static_cast<int>(action.even_parameters.size());
    const int mo = static_cast<int>(action.odd_parameters.size());
    if (direction < 0 || direction >= me + mo) throw Error("parameter direction out of range");
    std::map<std::string, Expr> zero;
    for (const auto& t : action.even_parameters) zero[t] = Expr();
    SuperVectorField out(action.manifold);
    const std::vector<std::string> coords = action.manifold->all_coordinates();
    for (std::size_t k = 0; k < coords.size(); ++k) {
        const SuperFunction& f = action.pullbacks[k];
        const SuperFunction d = direction < me ? even_partial(f, *action.total->even_index(action.even_parameters[static_cast<std::size_t>(direction)]))
                                               : odd_partial(f, direction - me);
        const SuperFunction reduced = at_zero_parameters(d, mo, action.total, zero);
        SuperFunction moved(action.manifold);
        for (const auto& [I, e] : reduced.terms()) moved.add_term(I, e);
        out.set_coeff(coords[k], moved);
    }
    return out;
}

// Checks -----------------------------------------------------------------------------

std::vector<std::vector<cplx>> admissible_points(const SuperDomain& domain, int count, std::uint64_t seed,
                                                 double margin) {
    std::vector<std::vector<cplx>> out;
    for (auto& p : sample_points(domain, 20 * count, seed)) {
        if (static_cast<int>(out.size()) >= count) break;
        if (domain.distance_to_excluded(p) >= margin) out.push_back(std::move(p));
    }
    return out;
}

namespace {

/// Portable uniform numbers in [−1, 1] from a fixed-seed generator.
class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : rng_(seed * 0x9E3779B97F4A7C15ull + 17) {}
    double operator()() { return 2.0 * static_cast<double>(rng_() >> 11) * 0x1.0p-53 - 1.0; }

private:
    std::mt19937_64 rng_;
};

std::vector<cplx> sample_times(Uniform& u, int m, Field field, double scale) {
    std::vector<cplx> t;
    for (int i = 0; i < m; ++i) {
        if (field == Field::real)
            t.emplace_back(scale * u(), 0.0);
        else
            t.emplace_back(scale * M_SQRT1_2 * u(), scale * M_SQRT1_2 * u());
    }
    return t;
}

std::vector<std::string> names(const std::string& stem, int n) {
    std::vector<std::string> out;
    for (int j = 0; j < n; ++j) out.push_back(stem + std::to_string(j + 1));
    return out;
}

struct Worst {
    double value = 0.0;
    std::string witness;
    void update(double v, const std::string& w) {
        if (v > value || (std::isnan(v) && witness.empty())) {
            value = v;
            witness = w;
        }
    }
};

double jet_distance(const std::vector<Jet>& a, const std::vector<Jet>& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, (a[k] - b[k]).norm());
    return d;
}

double jets_norm(const std::vector<Jet>& a) {
    double d = 0.0;
    for (const Jet& j : a) d = std::max(d, j.norm());
    return d;
}

}  // namespace

CheckReport check_action_property(const LocalAction& action, const ActionCheckOptions& opt,
                                  const LocalAction* composition) {
    const LocalAction& comp = composition ? *composition : action;
    if (!(*comp.domain() == *action.domain()) || comp.even_count() != action.even_count() ||
        comp.odd_count() != action.odd_count())
        throw Error("composition evaluator must match the action's shape");
    const DomainPtr& d = action.domain();
    const int m = action.even_count();
    const int n = action.odd_count();
    const int J = opt.jet_order;
    const int g = n + d->odd_dim();
    const std::vector<std::string> sigma = names("sigma", n), tau = names("tau", n), rho = names("rho", n);
    std::vector<std::string> sigma_tau = sigma;
    sigma_tau.insert(sigma_tau.end(), tau.begin(), tau.end());
    const LayoutPtr both = JetLayout::get(d->even_dim(), J, 2 * n + d->odd_dim());
    std::vector<Jet> rho_images;
    for (int j = 0; j < n; ++j) rho_images.push_back(Jet::generator(both, j) + Jet::generator(both, n + j));

    std::vector<CompiledField> x_fields, y_fields;
    const int K = J + g / 2;
    for (const auto& X : action.even_generators()) x_fields.emplace_back(X, K);
    for (const auto& Y : action.odd_generators()) y_fields.emplace_back(Y, K);

    Worst identity, semigroup;
    std::vector<Worst> t_deriv(static_cast<std::size_t>(m)), tau_deriv(static_cast<std::size_t>(n));
    Uniform u(opt.seed);
    int used = 0, skipped = 0;
    const double h = 1e-5;
    for (const auto& p : admissible_points(*d, opt.samples, opt.seed, opt.margin)) {
        const std::vector<cplx> s = sample_times(u, m, d->field(), opt.time_scale);
        const std::vector<cplx> t = sample_times(u, m, d->field(), opt.time_scale);
        const std::string where = "s=" + point_string(s) + " t=" + point_string(t) + " p=" + point_string(p);
        try {
            const JetSuperMap inner = action.pullback(t, p, J, opt.step, tau);
            const JetSuperMap outer = comp.pullback(s, inner.image_point(), J + g / 2, opt.step, sigma);
            const JetSuperMap rhs = compose(outer, inner);
            std::vector<cplx> st(static_cast<std::size_t>(m));
            for (int i = 0; i < m; ++i) st[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i)] + t[static_cast<std::size_t>(i)];
            const JetSuperMap lhs =
                substitute_parameters(action.pullback(st, p, J, opt.step, rho), sigma_tau, rho_images, both);
            semigroup.update(lhs.distance(rhs), where);

            const std::vector<cplx> zero(static_cast<std::size_t>(m));
            const JetSuperMap at0 = action.pullback(zero, p, J, opt.step, tau);
            const LayoutPtr plain = JetLayout::get(d->even_dim(), J, d->odd_dim());
            const JetSuperMap id0 = substitute_parameters(at0, {}, std::vector<Jet>(static_cast<std::size_t>(n), Jet(plain)), plain);
            identity.update(id0.distance_to_identity(), "p=" + point_string(p));

            const JetPullback ctx(inner);
            for (int i = 0; i < m; ++i) {
                std::vector<cplx> tp = t, tm = t;
                tp[static_cast<std::size_t>(i)] += h;
                tm[static_cast<std::size_t>(i)] -= h;
                const JetSuperMap fp = action.pullback(tp, p, J, opt.step, tau);
                const JetSuperMap fm = action.pullback(tm, p, J, opt.step, tau);
                std::vector<Jet> fd, exact;
                for (std::size_t c = 0; c < inner.components.size(); ++c) {
                    fd.push_back((fp.components[c] - fm.components[c]) * (1.0 / (2 * h)));
                    exact.push_back(x_fields[static_cast<std::size_t>(i)].coefficients[c].pullback(ctx));
                }
                t_deriv[static_cast<std::size_t>(i)].update(jet_distance(fd, exact) / (1.0 + jets_norm(exact)), where);
            }
            for (int j = 0; j < n; ++j) {
                std::vector<Jet> lhs_j, rhs_j;
                for (std::size_t c = 0; c < inner.components.size(); ++c) {
                    lhs_j.push_back(inner.components[c].odd_derivative(j));
                    rhs_j.push_back(y_fields[static_cast<std::size_t>(j)].coefficients[c].pullback(ctx));
                }
                tau_deriv[static_cast<std::size_t>(j)].update(jet_distance(lhs_j, rhs_j), where);
            }
            ++used;
        } catch (const DomainError&) {
            ++skipped;
        }
    }
    CheckReport report;
    if (used == 0) {
        report.add("admissible samples", false, 0.0, "every sample left the domain");
        return report;
    }
    report.add("identity at 0", identity.value <= opt.tolerance, identity.value,
               identity.value <= opt.tolerance ? "" : identity.witness);
    report.add("semigroup", semigroup.value <= opt.tolerance, semigroup.value,
               semigroup.value <= opt.tolerance ? "" : semigroup.witness);
    for (int i = 0; i < m; ++i) {
        const Worst& w = t_deriv[static_cast<std::size_t>(i)];
        const bool ok = w.value <= opt.derivative_tolerance;
        report.add("t-derivative X" + std::to_string(i + 1), ok, w.value, ok ? "" : w.witness);
    }
    for (int j = 0; j < n; ++j) {
        const Worst& w = tau_deriv[static_cast<std::size_t>(j)];
        const bool ok = w.value <= opt.tolerance;
        report.add("tau-derivative Y" + std::to_string(j + 1), ok, w.value, ok ? "" : w.witness);
    }
    if (skipped > 0) report.add("samples skipped after leaving the domain", true, static_cast<double>(skipped));
    return report;
}

CheckReport check_flows_commute(const SuperVectorField& X, const SuperVectorField& Y, const ActionCheckOptions& opt) {
    require_even(X, "X");
    require_even(Y, "Y");
    CheckReport report;
    const EqualityResult br = compare(bracket(X, Y), SuperVectorField(X.domain()));
    report.add("[X,Y] = 0", br.equal, br.residual, br.equal ? "" : bracket(X, Y).to_string());
    const DomainPtr& d = X.domain();
    Uniform u(opt.seed);
    Worst worst;
    int used = 0;
    for (const auto& p : admissible_points(*d, opt.samples, opt.seed, opt.margin)) {
        const std::vector<cplx> st = sample_times(u, 2, d->field(), opt.time_scale);
        const cplx t = st[0], s = st[1];
        try {
            const JetSuperMap id = JetSuperMap::identity(d, p, opt.jet_order);
            const cplx ts[] = {t, s};
            const cplx stimes[] = {s, t};
            const JetSuperMap a = flow_sequence(id, {X, Y}, ts, opt.step);
            const JetSuperMap b = flow_sequence(id, {Y, X}, stimes, opt.step);
            worst.update(a.distance(b), "s=" + format_cplx(s) + " t=" + format_cplx(t) + " p=" + point_string(p));
            ++used;
        } catch (const DomainError&) {
        }
    }
    if (used == 0) {
        report.add("admissible samples", false, 0.0, "every sample left the domain");
        return report;
    }
    const bool ok = worst.value <= opt.tolerance;
    report.add("flows commute", ok, worst.value, ok ? "" : worst.witness);
    return report;
}

Jet apply_field_to_jet(const SuperVectorField& X, const Jet& f, std::span<const cplx> base) {
    const LayoutPtr& L = f.layout();
    const DomainPtr& d = X.domain();
    const int P = L->generators() - d->odd_dim();
    if (P < 0) throw Error("jet has fewer generators than the field's domain has odd coordinates");
    Jet out(L);
    for (int i = 0; i < d->even_dim(); ++i) {
        if (X.even_coeff(i).is_zero()) continue;
        out += taylor_jet(CompiledSuperFunction(X.even_coeff(i), L->order()), base, L) * f.even_derivative(i);
    }
    for (int j = 0; j < d->odd_dim(); ++j) {
        if (X.odd_coeff(j).is_zero()) continue;
        out += taylor_jet(CompiledSuperFunction(X.odd_coeff(j), L->order()), base, L) * f.odd_derivative(P + j);
    }
    return out;
}

CheckReport pushforward_derivative_check(const SuperVectorField& X, const SuperVectorField& Y, std::vector<cplx> base,
                                         double h, double tolerance) {
    require_even(Y, "Y");
    const DomainPtr& d = X.domain();
    const int L = d->odd_dim() / 2;
    const double step = h / 10.0;
    // ((φ^Y_t)_*X)(c) at p = φ_{−t}*(X(φ_t*(c))).
    auto pushed = [&](double t) {
        const JetSuperMap back = flow_even(Y, -t, base, FlowConfig{step, 0});
        const std::vector<cplx> q = back.image_point();
        const JetSuperMap fwd = flow_even(Y, t, q, FlowConfig{step, std::min(4, L + 1)});
        const LayoutPtr lower = JetLayout::get(d->even_dim(), L, d->odd_dim());
        const JetPullback ctx(back, L);
        std::vector<Jet> out;
        for (const Jet& c : fwd.components) out.push_back(pullback(apply_field_to_jet(X, c, q).truncated(lower), ctx));
        return out;
    };
    const std::vector<Jet> plus = pushed(h), minus = pushed(-h);
    const SuperVectorField B = bracket(X, Y);
    const LayoutPtr L0 = JetLayout::get(d->even_dim(), 0, d->odd_dim());
    CheckReport report;
    const std::vector<std::string> coords = d->all_coordinates();
    double worst = 0.0;
    std::string witness;
    for (std::size_t k = 0; k < coords.size(); ++k) {
        const Jet fd = (plus[k] - minus[k]) * (1.0 / (2 * h));
        const Jet exact = taylor_jet(CompiledSuperFunction(B.coeff(static_cast<int>(k)), 0), base, L0);
        const double dev = (fd - exact).norm();
        if (dev > worst) {
            worst = dev;
            witness = "component " + coords[k] + " at " + point_string(base);
        }
    }
    const bool ok = worst <= tolerance;
    report.add("d/dt (phi^Y_t)_* X = [X,Y]", ok, worst, ok ? "" : witness);
    return report;
}

}  // namespace superflow
