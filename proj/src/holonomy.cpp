#include "superflow/holonomy.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace superflow {

namespace {

std::string point_string(std::span<const cplx> p) {
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + format_cplx(p[i]);
    return s + ")";
}

Expr shifted(const Expr& e, double shift) {
    if (shift == 0.0) return e;
    return substitute_vars(e, {{"t", Expr::variable("t") - Expr::constant(shift)}});
}

}  // namespace

void GroupPath::validate(const LieSuperAlgebra& algebra) const {
    if (segments.empty()) throw Error("path '" + name + "' has no segments");
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const PathSegment& seg = segments[s];
        if (static_cast<int>(seg.xi.size()) != algebra.dim())
            throw Error("path '" + name + "': segment needs one coefficient per basis element");
        if (!(seg.t1 >= seg.t0)) throw Error("path '" + name + "': segment end precedes its start");
        if (s && std::abs(seg.t0 - segments[s - 1].t1) > 1e-12)
            throw Error("path '" + name + "': segments are not contiguous");
        for (int k : algebra.odd_indices())
            if (!seg.xi[static_cast<std::size_t>(k)].is_zero())
                throw ParityError("path '" + name + "': odd direction " + algebra.element(k).name +
                                  " has a nonzero coefficient");
        for (const Expr& e : seg.xi)
            for (const auto& v : free_variables(e))
                if (v != "t") throw Error("path '" + name + "': coefficient uses unknown variable " + v);
    }
}

GroupPath concatenate(const GroupPath& first, const GroupPath& second) {
    GroupPath out = first;
    out.name = first.name + "*" + second.name;
    const double shift = first.end() - second.start();
    for (const PathSegment& seg : second.segments) {
        PathSegment moved{{}, seg.t0 + shift, seg.t1 + shift};
        for (const Expr& e : seg.xi) moved.xi.push_back(shifted(e, shift));
        out.segments.push_back(std::move(moved));
    }
    out.closure_tolerance = std::max(first.closure_tolerance, second.closure_tolerance);
    if (first.winding_note && second.winding_note) out.winding_note = *first.winding_note + *second.winding_note;
    return out;
}

GroupPath constant_loop(const LieSuperAlgebra& algebra, std::vector<cplx> base) {
    GroupPath out;
    out.name = "constant";
    out.base = std::move(base);
    out.segments.push_back(PathSegment{std::vector<Expr>(static_cast<std::size_t>(algebra.dim())), 0.0, 1.0});
    out.winding_note = 0;
    return out;
}

JetSuperMap transport(const InfinitesimalAction& lambda, const GroupPath& path, const FlowConfig& cfg) {
    path.validate(lambda.algebra);
    if (static_cast<int>(path.base.size()) != lambda.domain->even_dim())
        throw Error("path '" + path.name + "': base point has the wrong dimension");
    std::vector<FieldSegment> segments;
    for (const PathSegment& seg : path.segments) {
        FieldSegment fs;
        fs.t0 = seg.t0;
        fs.t1 = seg.t1;
        for (int k : lambda.algebra.even_indices()) {
            const Expr& xi = seg.xi[static_cast<std::size_t>(k)];
            if (xi.is_zero()) continue;
            fs.fields.push_back(lambda.images[static_cast<std::size_t>(k)]);
            fs.coefficients.push_back(xi);
        }
        if (fs.fields.empty()) {
            // ξ ≡ 0 on this segment: keep the time range without a field.
            fs.fields.push_back(SuperVectorField(lambda.domain));
            fs.coefficients.push_back(Expr());
        }
        segments.push_back(std::move(fs));
    }
    cfg.validate();
    for (cplx b : path.base)
        if (lambda.domain->field() == Field::real && std::abs(b.imag()) > 1e-14)
            throw Error("base point must be real on a real superdomain");
    return integrate_segments(JetSuperMap::identity(lambda.domain, path.base, cfg.jet_order), segments, cfg.step);
}

HolonomyGerm holonomy(const InfinitesimalAction& lambda, const GroupPath& loop, const FlowConfig& cfg) {
    cfg.validate();
    const int J = cfg.jet_order;
    FlowConfig wide = cfg;
    wide.jet_order = J + 1;
    HolonomyGerm out;
    out.loop = loop.name;
    out.full = transport(lambda, loop, wide);
    const JetSuperMap id = JetSuperMap::identity(lambda.domain, loop.base, J + 1);
    const LayoutPtr& L = out.full.layout();
    const int m = lambda.domain->even_dim();
    for (int i = 0; i < m; ++i)
        for (int mono = 0; mono < L->monomial_count(); ++mono) {
            const cplx d = out.full.components[static_cast<std::size_t>(i)].at(mono, MultiIndex()) -
                           id.components[static_cast<std::size_t>(i)].at(mono, MultiIndex());
            out.return_residual = std::max(out.return_residual, std::abs(d));
        }
    if (out.return_residual > loop.closure_tolerance)
        throw NotALoopError("path '" + loop.name + "' does not close in the leaf: body residual " +
                                format_cplx(out.return_residual),
                            out.return_residual);
    double top = 0.0;
    for (std::size_t c = 0; c < out.full.components.size(); ++c) {
        const Jet diff = out.full.components[c] - id.components[c];
        for (int mono = 0; mono < L->monomial_count(); ++mono) {
            if (L->monomials().degree(mono) != J + 1) continue;
            for (std::size_t I = 0; I < L->grassmann_size(); ++I)
                top = std::max(top, std::abs(diff.at(mono, MultiIndex(static_cast<std::uint32_t>(I)))));
        }
    }
    if (top > 1e-9)
        out.warnings.push_back("holonomy of loop '" + loop.name + "' has terms of order " + std::to_string(J + 1) +
                               " (size " + format_cplx(top) + ") beyond the reported order " + std::to_string(J));
    out.germ = out.full.truncated(J);
    return out;
}

CheckReport homotopy_invariance_check(const InfinitesimalAction& lambda, const std::vector<GroupPath>& family,
                                      const FlowConfig& cfg, double tolerance) {
    CheckReport report;
    if (family.size() < 2) {
        report.add("loop family", false, 0.0, "at least two loops are required");
        return report;
    }
    const HolonomyGerm ref = holonomy(lambda, family.front(), cfg);
    for (std::size_t k = 1; k < family.size(); ++k) {
        const HolonomyGerm g = holonomy(lambda, family[k], cfg);
        const double d = g.germ.distance(ref.germ);
        const bool ok = d <= tolerance;
        report.add(family.front().name + " ~ " + family[k].name, ok, d, ok ? "" : "loop " + family[k].name);
    }
    return report;
}

CheckReport homomorphism_check(const InfinitesimalAction& lambda, const GroupPath& first, const GroupPath& second,
                               const FlowConfig& cfg, double tolerance) {
    CheckReport report;
    const HolonomyGerm g1 = holonomy(lambda, first, cfg);
    const HolonomyGerm g2 = holonomy(lambda, second, cfg);
    const HolonomyGerm g12 = holonomy(lambda, concatenate(first, second), cfg);
    // Both germs live at the base point; the body of g1 returns there up to
    // the closure tolerance.
    JetSuperMap outer = g2.full;
    outer.base = g1.full.image_point();
    const JetSuperMap composed = compose(outer, g1.full);
    const double d = composed.distance(g12.full.truncated(composed.order()));
    const bool ok = d <= tolerance;
    report.add("germ(" + first.name + "*" + second.name + ") = germ(" + second.name + ") o germ(" + first.name + ")", ok,
               d, ok ? "" : "loops " + first.name + ", " + second.name);
    const HolonomyGerm c = holonomy(lambda, constant_loop(lambda.algebra, first.base), cfg);
    const double dc = c.deviation_from_identity();
    report.add("germ(constant) = identity", dc <= tolerance, dc, dc <= tolerance ? "" : "constant loop at " + point_string(first.base));
    return report;
}

CheckReport verify_example_embedding(const Expr& alpha, const Expr& primitive, const EmbeddingOptions& opt) {
    const DomainPtr d = make_domain({"z"}, {"theta1", "theta2"}, Field::complex);
    const SuperFunction a = lift(alpha, d);
    const EqualityResult prim = compare(lift(diff(primitive, "z"), d), a);
    if (!prim.equal)
        throw Error("A is not a primitive of alpha (residual " + format_cplx(prim.residual) + ")");
    CheckReport report;
    report.add("A' = alpha", true, prim.residual);

    const SuperFunction t12 = gr_mul(SuperFunction::odd_coordinate(d, 0), SuperFunction::odd_coordinate(d, 1));
    SuperVectorField X(d);
    X.set_coeff("z", SuperFunction::constant(d, 1.0) + gr_mul(a, t12));
    const SuperVectorField T = SuperVectorField::coordinate(d, "z");
    const std::vector<SuperFunction> iota{SuperFunction::even_coordinate(d, "z") - gr_mul(lift(primitive, d), t12),
                                          SuperFunction::odd_coordinate(d, 0), SuperFunction::odd_coordinate(d, 1)};
    const int J = opt.jet_order;
    std::vector<CompiledSuperFunction> iota_c;
    for (const auto& f : iota) iota_c.emplace_back(f, J + 1);
    auto iota_jet = [&](std::vector<cplx> p, int order) {
        JetSuperMap m;
        m.domain = d;
        m.base = p;
        const LayoutPtr L = JetLayout::get(1, order, 2);
        for (const auto& f : iota_c) m.components.push_back(taylor_jet(f, p, L));
        return m;
    };

    std::mt19937_64 rng(opt.seed * 0x9E3779B97F4A7C15ull + 29);
    auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    double worst = 0.0;
    std::string witness;
    for (int k = 0; k < opt.samples; ++k) {
        const double r = 0.5 + 1.5 * uniform();
        const cplx z0 = std::polar(r, 2.0 * M_PI * uniform());
        const cplx t = std::polar(0.4 * r * uniform(), 2.0 * M_PI * uniform());
        const JetSuperMap flow = flow_even(X, t, {z0}, FlowConfig{opt.step, J});
        const JetSuperMap lhs = compose(iota_jet(flow.image_point(), J + 1), flow);
        const JetSuperMap iota0 = iota_jet({z0}, J);
        const JetSuperMap shift = flow_even(T, t, iota0.image_point(), FlowConfig{opt.step, J + 1});
        const JetSuperMap rhs = compose(shift, iota0);
        const double dev = lhs.distance(rhs);
        if (dev > worst || std::isnan(dev)) {
            worst = dev;
            witness = "t=" + format_cplx(t) + " z=" + format_cplx(z0);
        }
    }
    const bool ok = worst <= opt.tolerance;
    report.add("intertwining", ok, worst, ok ? "" : witness);
    return report;
}

}  // namespace superflow
