#include "superflow/commands.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

#include "superflow/distribution.hpp"
#include "superflow/dynamics.hpp"
#include "superflow/holonomy.hpp"

namespace superflow {

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{
        "check-algebra", "check-homomorphism", "bracket",   "reduced",  "involutive",
        "flow",          "odd-exp",            "local-action", "check-action", "transport",
        "holonomy",      "homotopy-check",     "verdict",   "verify-embedding", "support"};
    return names;
}

namespace {

struct Context {
    const Scenario& sc;
    const CommandOptions& opt;
    CommandResult& out;

    double step() const { return opt.step.value_or(sc.config.step.value_or(1e-3)); }
    int jet(int fallback) const { return opt.jet_order.value_or(sc.config.jet_order.value_or(fallback)); }
    int samples(int fallback = 100) const { return opt.samples.value_or(sc.config.samples.value_or(fallback)); }
    std::uint64_t seed() const { return opt.seed.value_or(sc.config.seed.value_or(0)); }

    const InfinitesimalAction& action() const {
        if (!sc.action) throw Error("scenario '" + sc.name + "' defines no infinitesimal action (lambda clauses)");
        return *sc.action;
    }

    void snapshot(int jet_order, int sample_count) {
        out.config = ConfigSnapshot{step(), jet_order, sample_count, seed()};
    }
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<cplx> parse_base(const std::string& text, const SuperDomain& d) {
    std::vector<cplx> p(static_cast<std::size_t>(d.even_dim()));
    std::vector<bool> seen(p.size(), false);
    for (const std::string& item : split(text, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Error("--base expects k=v items, got '" + item + "'");
        const auto idx = d.even_index(item.substr(0, eq));
        if (!idx) throw Error("--base names unknown even coordinate '" + item.substr(0, eq) + "'");
        p[static_cast<std::size_t>(*idx)] = evaluate(parse_expr(item.substr(eq + 1), {}), Env{}, Field::complex);
        seen[static_cast<std::size_t>(*idx)] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw Error("--base must assign every even coordinate");
    return p;
}

std::vector<cplx> base_point(const Context& cx) {
    if (cx.opt.base) return parse_base(*cx.opt.base, *cx.sc.domain);
    if (cx.sc.domain->even_dim() == 0) return {};
    if (!cx.sc.loops.empty()) return cx.sc.loops.front().base;
    throw Error("this command needs --base");
}

/// --field NAME names a field list or a basis element; `list:k` picks entry k
/// (1-based).
std::vector<SuperVectorField> selected_fields(const Context& cx, std::vector<std::string>* names = nullptr) {
    const std::string& f = *cx.opt.field;
    std::string list = f;
    std::optional<std::size_t> pick;
    if (const auto colon = f.find(':'); colon != std::string::npos) {
        list = f.substr(0, colon);
        pick = static_cast<std::size_t>(std::stoul(f.substr(colon + 1)));
    }
    if (const auto* fl = cx.sc.find_fields(list)) {
        if (pick) {
            if (*pick < 1 || *pick > fl->size()) throw Error("field index out of range in '" + f + "'");
            if (names) *names = {f};
            return {(*fl)[*pick - 1]};
        }
        if (names)
            for (std::size_t k = 0; k < fl->size(); ++k) names->push_back(fl->size() == 1 ? list : list + ":" + std::to_string(k + 1));
        return *fl;
    }
    if (cx.sc.action)
        if (const auto idx = cx.sc.algebra.index_of(f)) {
            if (names) *names = {f};
            return {cx.sc.action->images[static_cast<std::size_t>(*idx)]};
        }
    throw Error("no field list or basis element named '" + f + "'");
}

void split_by_parity(const std::vector<SuperVectorField>& fs, std::vector<SuperVectorField>& even,
                     std::vector<SuperVectorField>& odd) {
    for (const auto& X : fs) {
        const auto p = X.parity();
        if (!p) throw ParityError("field " + X.to_string() + " is not homogeneous");
        (*p == Parity::odd ? odd : even).push_back(X);
    }
}

void generators(const Context& cx, std::vector<SuperVectorField>& even, std::vector<SuperVectorField>& odd) {
    if (cx.opt.field) return split_by_parity(selected_fields(cx), even, odd);
    const InfinitesimalAction& a = cx.action();
    for (int k : a.algebra.even_indices()) even.push_back(a.images[static_cast<std::size_t>(k)]);
    for (int k : a.algebra.odd_indices()) odd.push_back(a.images[static_cast<std::size_t>(k)]);
}

GermReport germ_report(const JetSuperMap& m, const std::string& label, bool trivial) {
    GermReport g;
    g.loop = label;
    g.generator_names = m.generator_names();
    g.trivial = trivial;
    const LayoutPtr& L = m.layout();
    const auto coords = m.domain->all_coordinates();
    for (std::size_t c = 0; c < m.components.size(); ++c) {
        std::vector<GermTerm> terms;
        for (int mono = 0; mono < L->monomial_count(); ++mono)
            for (std::size_t I = 0; I < L->grassmann_size(); ++I) {
                const cplx v = m.components[c].at(mono, MultiIndex(static_cast<std::uint32_t>(I)));
                if (std::abs(v) <= 1e-12) continue;
                GermTerm t{L->monomials().exponents(mono), {}, v};
                for (int k = 0; k < L->generators(); ++k)
                    if (I >> k & 1u) t.generators.push_back(k);
                terms.push_back(std::move(t));
            }
        g.components.emplace_back(coords[c], std::move(terms));
    }
    return g;
}

void add_germ_lines(CommandResult& out, const std::string& header, const JetSuperMap& m) {
    out.output.push_back(header);
    std::istringstream lines(m.to_string());
    std::string line;
    while (std::getline(lines, line)) out.output.push_back("  " + line);
}

std::vector<const GroupPath*> selected_loops(const Context& cx) {
    std::vector<const GroupPath*> loops;
    if (cx.opt.loop) {
        for (const std::string& n : split(*cx.opt.loop, ',')) {
            const GroupPath* l = cx.sc.find_loop(n);
            if (!l) throw Error("scenario '" + cx.sc.name + "' has no loop named '" + n + "'");
            loops.push_back(l);
        }
    } else {
        for (const auto& l : cx.sc.loops) loops.push_back(&l);
    }
    if (loops.empty()) throw Error("scenario '" + cx.sc.name + "' declares no loops");
    return loops;
}

// Commands ---------------------------------------------------------------------------

void cmd_check_algebra(Context& cx) {
    if (!cx.sc.has_algebra) throw Error("scenario '" + cx.sc.name + "' declares no algebra");
    cx.snapshot(0, 0);
    cx.out.report = check_algebra(cx.sc.algebra);
}

void cmd_check_homomorphism(Context& cx) {
    cx.snapshot(0, cx.samples());
    cx.out.report = check_homomorphism(cx.action(), EqualityPolicy{cx.samples(), 1e-9, cx.seed()});
}

void cmd_bracket(Context& cx) {
    cx.snapshot(0, 0);
    std::vector<std::string> names;
    std::vector<SuperVectorField> fs;
    if (cx.opt.field) {
        fs = selected_fields(cx, &names);
        if (fs.size() > 1) {
            names.clear();
            for (std::size_t k = 0; k < fs.size(); ++k) names.push_back("X" + std::to_string(k + 1));
        } else {
            names = {"X"};
        }
    } else {
        const InfinitesimalAction& a = cx.action();
        fs = a.images;
        for (const auto& b : a.algebra.basis()) names.push_back("lambda(" + b.name + ")");
    }
    for (std::size_t i = 0; i < fs.size(); ++i)
        for (std::size_t j = i; j < fs.size(); ++j)
            cx.out.output.push_back("[" + names[i] + "," + names[j] + "] = " + bracket(fs[i], fs[j]).to_string());
}

void cmd_reduced(Context& cx) {
    const InfinitesimalAction& a = cx.action();
    cx.snapshot(0, cx.samples());
    const std::vector<int> even = a.algebra.even_indices();
    std::vector<BasisElement> basis;
    for (int k : even) basis.push_back(a.algebra.element(k));
    LieSuperAlgebra g0(basis, a.algebra.field());
    for (std::size_t i = 0; i < even.size(); ++i)
        for (std::size_t j = i; j < even.size(); ++j) {
            std::vector<cplx> c;
            for (int k : even) c.push_back(a.algebra.structure_constant(even[i], even[j], k));
            g0.set_bracket_graded(static_cast<int>(i), static_cast<int>(j), c);
        }
    InfinitesimalAction reduced{g0, nullptr, {}};
    for (int k : even) {
        reduced.images.push_back(reduced_field(a.images[static_cast<std::size_t>(k)]));
        cx.out.output.push_back("reduced lambda(" + a.algebra.element(k).name + ") = " + reduced.images.back().to_string());
    }
    if (even.empty()) return;
    reduced.domain = reduced.images.front().domain();
    cx.out.report.append(check_homomorphism(reduced, EqualityPolicy{cx.samples(), 1e-9, cx.seed()}), "reduced ");
}

void cmd_involutive(Context& cx) {
    cx.snapshot(0, cx.samples());
    std::vector<std::string> names;
    const DistributionSpec spec = cx.opt.field ? DistributionSpec::raw(selected_fields(cx, &names), names)
                                               : DistributionSpec::from_action(cx.action());
    cx.out.report = involutivity_check(spec, InvolutivityOptions{cx.samples(), cx.seed(), 1e-8});
    if (cx.out.report.pass()) cx.out.output.push_back("consistent with involutive at the sampled points");
    for (const auto& p : sample_points(*spec.domain(), 1, cx.seed())) {
        try {
            std::string at;
            for (std::size_t i = 0; i < p.size(); ++i) at += (i ? ", " : "") + format_cplx(p[i]);
            cx.out.output.push_back("pointwise rank " + std::to_string(pointwise_rank(spec, p)) + " at (" + at + ")");
        } catch (const DomainError&) {
        }
    }
}

void cmd_flow(Context& cx) {
    const int J = cx.jet(0);
    cx.snapshot(J, 0);
    SuperVectorField X;
    std::string label;
    if (cx.opt.field) {
        std::vector<std::string> names;
        const auto fs = selected_fields(cx, &names);
        if (fs.size() != 1) throw Error("flow needs a single field; use list:k");
        X = fs.front();
        label = names.front();
    } else {
        const InfinitesimalAction& a = cx.action();
        const auto even = a.algebra.even_indices();
        if (even.empty()) throw Error("the algebra has no even basis element to flow along");
        X = a.images[static_cast<std::size_t>(even.front())];
        label = "lambda(" + a.algebra.element(even.front()).name + ")";
    }
    const cplx t = cx.opt.t.value_or(1.0);
    try {
        const JetSuperMap m = flow_even(X, t, base_point(cx), FlowConfig{cx.step(), J});
        add_germ_lines(cx.out, "flow of " + label + " at t=" + format_cplx(t) + ":", m);
        cx.out.germs.push_back(germ_report(m, "flow", false));
    } catch (const DomainExitError& e) {
        cx.out.report.add("flow stays in the domain", false, 0.0,
                          "exit at t=" + format_cplx(e.time()) + ": " + e.what());
    }
}

void cmd_odd_exp(Context& cx) {
    cx.snapshot(0, cx.samples());
    std::vector<SuperVectorField> even, odd;
    if (cx.opt.field)
        odd = selected_fields(cx);
    else
        generators(cx, even, odd);
    try {
        const OddExponential e = odd_exponential(odd, EqualityPolicy{cx.samples(), 1e-9, cx.seed()});
        const auto coords = odd.front().domain()->all_coordinates();
        for (std::size_t k = 0; k < coords.size(); ++k)
            cx.out.output.push_back(coords[k] + " -> " + e.components[k].to_string());
    } catch (const PreconditionError& e) {
        cx.out.report.add("odd fields super-commute", false, 0.0, e.witness());
    }
}

std::optional<LocalAction> local_action(Context& cx) {
    std::vector<SuperVectorField> even, odd;
    generators(cx, even, odd);
    try {
        return LocalAction(even, odd, EqualityPolicy{cx.samples(), 1e-9, cx.seed()});
    } catch (const PreconditionError& e) {
        cx.out.report.add("generators super-commute", false, 0.0, e.witness());
        return std::nullopt;
    }
}

void cmd_local_action(Context& cx) {
    const int J = cx.jet(1);
    cx.snapshot(J, 0);
    const auto act = local_action(cx);
    if (!act) return;
    const cplx t = cx.opt.t.value_or(1.0);
    const std::vector<cplx> times(static_cast<std::size_t>(act->even_count()), t);
    try {
        const JetSuperMap m = act->pullback(times, base_point(cx), J, cx.step());
        add_germ_lines(cx.out, "local action at t=" + format_cplx(t) + ":", m);
        cx.out.germs.push_back(germ_report(m, "local-action", false));
    } catch (const DomainExitError& e) {
        cx.out.report.add("flow stays in the domain", false, 0.0, "exit at t=" + format_cplx(e.time()) + ": " + e.what());
    }
}

void cmd_check_action(Context& cx) {
    const int J = cx.jet(2);
    cx.snapshot(J, cx.samples());
    const auto act = local_action(cx);
    if (!act) return;
    ActionCheckOptions o;
    o.samples = cx.samples();
    o.seed = cx.seed();
    o.jet_order = J;
    o.step = cx.step();
    cx.out.report = check_action_property(*act, o);
}

void cmd_transport(Context& cx) {
    const int J = cx.jet(2);
    cx.snapshot(J, 0);
    const auto loops = selected_loops(cx);
    for (const GroupPath* l : loops) {
        try {
            const JetSuperMap m = transport(cx.action(), *l, FlowConfig{cx.step(), J});
            add_germ_lines(cx.out, "transport along " + l->name + ":", m);
            cx.out.germs.push_back(germ_report(m, l->name, false));
        } catch (const DomainExitError& e) {
            cx.out.report.add("path " + l->name + " stays in the domain", false, 0.0,
                              "loop " + l->name + " exits at t=" + format_cplx(e.time()));
        }
    }
}

void cmd_holonomy(Context& cx) {
    const int J = cx.jet(2);
    cx.snapshot(J, 0);
    for (const GroupPath* l : selected_loops(cx)) {
        try {
            const HolonomyGerm g = holonomy(cx.action(), *l, FlowConfig{cx.step(), J});
            cx.out.report.add("loop " + l->name + " closes", true, g.return_residual);
            add_germ_lines(cx.out, "holonomy of " + l->name + (g.is_trivial() ? " (trivial):" : ":"), g.germ);
            cx.out.germs.push_back(germ_report(g.germ, l->name, g.is_trivial()));
            cx.out.warnings.insert(cx.out.warnings.end(), g.warnings.begin(), g.warnings.end());
        } catch (const NotALoopError& e) {
            cx.out.report.add("loop " + l->name + " closes", false, e.residual(), "loop " + l->name);
        } catch (const DomainExitError& e) {
            cx.out.report.add("loop " + l->name + " closes", false, 0.0,
                              "loop " + l->name + " exits the domain at t=" + format_cplx(e.time()));
        }
    }
}

void cmd_homotopy(Context& cx) {
    const int J = cx.jet(2);
    cx.snapshot(J, 0);
    std::vector<std::vector<GroupPath>> families;
    if (cx.opt.loop) {
        std::vector<GroupPath> fam;
        for (const GroupPath* l : selected_loops(cx)) fam.push_back(*l);
        families.push_back(std::move(fam));
    } else {
        std::map<int, std::vector<GroupPath>> by_winding;
        for (const auto& l : cx.sc.loops)
            if (l.winding_note) by_winding[*l.winding_note].push_back(l);
        for (auto& [w, fam] : by_winding)
            if (fam.size() > 1) families.push_back(std::move(fam));
    }
    if (families.empty()) throw Error("no loop family with two or more members (use --loop a,b)");
    for (const auto& fam : families)
        cx.out.report.append(homotopy_invariance_check(cx.action(), fam, FlowConfig{cx.step(), J}));
}

void cmd_verdict(Context& cx) {
    const int J = cx.jet(2);
    cx.snapshot(J, 0);
    VerdictInput in;
    in.flags = cx.sc.flags;
    if (cx.opt.flags) apply_flag_assignments(in.flags, *cx.opt.flags);
    for (const GroupPath* l : selected_loops(cx)) {
        in.germs.push_back(holonomy(cx.action(), *l, FlowConfig{cx.step(), J}));
        const HolonomyGerm& g = in.germs.back();
        cx.out.output.push_back("loop " + l->name + ": " + (g.is_trivial() ? "trivial" : "nontrivial") +
                                " holonomy (deviation " + format_cplx(g.deviation_from_identity()) + ")");
        cx.out.warnings.insert(cx.out.warnings.end(), g.warnings.begin(), g.warnings.end());
    }
    cx.out.output.push_back("verdict is conditional on the declared loops generating the leaf fundamental groups");
    cx.out.verdict = globalizability_verdict(in);
}

void cmd_verify_embedding(Context& cx) {
    const InfinitesimalAction& a = cx.action();
    const SuperDomain& d = *a.domain;
    const auto even = a.algebra.even_indices();
    if (d.even_dim() != 1 || d.odd_dim() != 2 || d.field() != Field::complex || even.size() != 1)
        throw Error("verify-embedding needs a complex scenario on C^{1|2} with one even basis element");
    if (!cx.sc.primitive) throw Error("scenario '" + cx.sc.name + "' declares no primitive A of alpha");
    const SuperVectorField& X = a.images[static_cast<std::size_t>(even.front())];
    const SuperFunction& c = X.even_coeff(0);
    const SuperFunction t12 =
        gr_mul(SuperFunction::odd_coordinate(a.domain, 0), SuperFunction::odd_coordinate(a.domain, 1));
    const Expr alpha = c.coefficient(MultiIndex(0b11));
    const SuperFunction expected = SuperFunction::constant(a.domain, 1.0) + gr_mul(lift(alpha, a.domain), t12);
    if (!compare(c, expected).equal || !X.odd_coeff(0).is_zero() || !X.odd_coeff(1).is_zero())
        throw Error("lambda image is not of the form (1 + alpha(z)*theta1*theta2) d/dz");
    const std::string var = d.even().front();
    const Expr alpha_z = var == "z" ? alpha : substitute_vars(alpha, {{var, Expr::variable("z")}});
    const Expr prim_z = var == "z" ? *cx.sc.primitive : substitute_vars(*cx.sc.primitive, {{var, Expr::variable("z")}});
    EmbeddingOptions o;
    o.samples = cx.samples(50);
    o.seed = cx.seed();
    o.step = cx.step();
    o.jet_order = cx.jet(2);
    cx.snapshot(o.jet_order, o.samples);
    cx.out.output.push_back("alpha = " + alpha_z.to_string() + ", A = " + prim_z.to_string());
    cx.out.report = verify_example_embedding(alpha_z, prim_z, o);
}

void cmd_support(Context& cx) {
    const InfinitesimalAction& a = cx.action();
    cx.snapshot(0, cx.samples());
    std::vector<std::vector<cplx>> grid;
    for (auto& p : sample_points(*a.domain, cx.samples(), cx.seed()))
        if (a.domain->distance_to_excluded(p) > 1e-3) grid.push_back(std::move(p));
    const auto sup = support_sample(a, grid);
    cx.out.output.push_back("support points: " + std::to_string(sup.size()) + " of " + std::to_string(grid.size()));
    for (std::size_t k = 0; k < std::min<std::size_t>(sup.size(), 10); ++k) {
        std::string at;
        for (std::size_t i = 0; i < sup[k].size(); ++i) at += (i ? ", " : "") + format_cplx(sup[k][i]);
        cx.out.output.push_back("  (" + at + ")");
    }
}

nlohmann::ordered_json cplx_json(cplx v) { return {{"re", v.real()}, {"im", v.imag()}}; }

}  // namespace

CommandResult run_command(const std::string& command, const Scenario& scenario, const CommandOptions& options) {
    CommandResult out;
    out.command = command;
    out.scenario = scenario.name;
    Context cx{scenario, options, out};
    using Handler = void (*)(Context&);
    static const std::map<std::string, Handler> handlers{
        {"check-algebra", cmd_check_algebra}, {"check-homomorphism", cmd_check_homomorphism},
        {"bracket", cmd_bracket},             {"reduced", cmd_reduced},
        {"involutive", cmd_involutive},       {"flow", cmd_flow},
        {"odd-exp", cmd_odd_exp},             {"local-action", cmd_local_action},
        {"check-action", cmd_check_action},   {"transport", cmd_transport},
        {"holonomy", cmd_holonomy},           {"homotopy-check", cmd_homotopy},
        {"verdict", cmd_verdict},             {"verify-embedding", cmd_verify_embedding},
        {"support", cmd_support}};
    const auto it = handlers.find(command);
    if (it == handlers.end()) throw Error("unknown command '" + command + "'");
    it->second(cx);
    if (out.verdict)
        out.exit_code = out.verdict->kind == VerdictKind::inconclusive ? 3 : 0;
    else
        out.exit_code = out.report.pass() ? 0 : 1;
    return out;
}

std::string to_json(const CommandResult& r) {
    nlohmann::ordered_json j;
    j["command"] = r.command;
    j["scenario"] = r.scenario;
    j["status"] = r.exit_code == 0 ? "pass" : r.exit_code == 3 ? "inconclusive" : "fail";
    j["checks"] = nlohmann::ordered_json::array();
    for (const Check& c : r.report.checks)
        j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"residual", c.residual}, {"witness", c.witness}});
    if (r.verdict)
        j["verdict"] = {{"kind", to_string(r.verdict->kind)},
                        {"rule", r.verdict->rule},
                        {"condition", r.verdict->condition},
                        {"witness", r.verdict->witness}};
    if (!r.germs.empty()) {
        j["germs"] = nlohmann::ordered_json::array();
        for (const GermReport& g : r.germs) {
            nlohmann::ordered_json gj{{"loop", g.loop}, {"trivial", g.trivial}, {"generators", g.generator_names}};
            gj["components"] = nlohmann::ordered_json::array();
            for (const auto& [name, terms] : g.components) {
                nlohmann::ordered_json tj = nlohmann::ordered_json::array();
                for (const GermTerm& t : terms)
                    tj.push_back({{"exponents", t.exponents}, {"generators", t.generators}, {"value", cplx_json(t.value)}});
                gj["components"].push_back({{"coordinate", name}, {"terms", tj}});
            }
            j["germs"].push_back(gj);
        }
    }
    j["output"] = r.output;
    j["warnings"] = r.warnings;
    j["config"] = {{"step", r.config.step}, {"jet_order", r.config.jet_order}, {"samples", r.config.samples},
                   {"seed", r.config.seed}};
    return j.dump(2) + "\n";
}

std::string to_text(const CommandResult& r) {
    std::ostringstream s;
    s << r.command << " " << r.scenario << "\n";
    for (const std::string& line : r.output) s << line << "\n";
    for (const Check& c : r.report.checks) {
        s << (c.pass ? "PASS " : "FAIL ") << c.name << "  residual " << c.residual;
        if (!c.witness.empty()) s << "  witness: " << c.witness;
        s << "\n";
    }
    if (r.verdict) {
        s << "verdict: " << to_string(r.verdict->kind) << "\n  rule: " << r.verdict->rule
          << "\n  condition: " << r.verdict->condition << "\n";
        if (!r.verdict->witness.empty()) s << "  witness: " << r.verdict->witness << "\n";
    }
    for (const std::string& w : r.warnings) s << "warning: " << w << "\n";
    s << "config: step=" << r.config.step << " jet=" << r.config.jet_order << " samples=" << r.config.samples
      << " seed=" << r.config.seed << "\n";
    s << "status: " << (r.exit_code == 0 ? "pass" : r.exit_code == 3 ? "inconclusive" : "fail") << "\n";
    return s.str();
}

}  // namespace superflow
