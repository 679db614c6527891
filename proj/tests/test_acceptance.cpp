// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "superflow/commands.hpp"
#include "superflow/distribution.hpp"

using namespace superflow;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

/// Value of the germ term with the given generator set in `coordinate`,
/// at zero displacement.
cplx germ_term(const GermReport& g, const std::string& coordinate, const std::vector<int>& generators) {
    for (const auto& [name, terms] : g.components)
        if (name == coordinate)
            for (const GermTerm& t : terms)
                if (t.generators == generators && std::all_of(t.exponents.begin(), t.exponents.end(), [](int e) { return e == 0; }))
                    return t.value;
    return 0.0;
}

// 1 -----------------------------------------------------------------------------------

void circle_holonomy() {
    const Scenario sc = load_scenario("s1-example");
    const std::pair<std::string, int> loops[] = {{"k1", 1}, {"k2", 2}, {"km1", -1}};
    double worst = 0.0, slowest = 0.0;
    bool shape = true;
    for (const auto& [name, k] : loops) {
        CommandOptions o;
        o.loop = name;
        o.step = 1e-3;
        const auto t0 = Clock::now();
        const CommandResult r = run_command("holonomy", sc, o);
        slowest = std::max(slowest, seconds_since(t0));
        const GermReport& g = r.germs.at(0);
        worst = std::max(worst, std::abs(germ_term(g, "theta2", {0}) - 2.0 * M_PI * k));
        shape = shape && r.exit_code == 0 && std::abs(germ_term(g, "theta2", {1}) - 1.0) < 1e-12 &&
                std::abs(germ_term(g, "theta1", {0}) - 1.0) < 1e-12 && std::abs(germ_term(g, "theta1", {1})) < 1e-12;
    }
    report(1, shape && worst <= 1e-6 && slowest < 5.0,
           "S1 holonomy k=1,2,-1: max |c - 2 pi k| = " + num(worst) + ", slowest loop " + num(slowest) + " s");
}

// 2 -----------------------------------------------------------------------------------

void plane_holonomy() {
    CommandOptions o;
    o.loop = "unit";
    o.step = 1e-3;
    const CommandResult a = run_command("holonomy", load_scenario("c-example"), o);
    const cplx c = germ_term(a.germs.at(0), "z", {0, 1});
    const double err = std::abs(c - cplx(0.0, 2.0 * M_PI));
    const CommandResult b = run_command("holonomy", load_scenario("c-example:1/z^2"), o);
    const double triv = std::abs(germ_term(b.germs.at(0), "z", {0, 1}));
    report(2, a.exit_code == 0 && b.exit_code == 0 && err <= 1e-6 && triv <= 1e-6,
           "C holonomy: |c - 2 pi i| = " + num(err) + " for 1/z, |c| = " + num(triv) + " for 1/z^2");
}

// 3 -----------------------------------------------------------------------------------

void verdicts() {
    auto verdict = [](const std::string& scenario, std::optional<std::string> flags = std::nullopt) {
        CommandOptions o;
        o.flags = std::move(flags);
        return run_command("verdict", load_scenario(scenario), o);
    };
    bool ok = true;
    std::string detail;
    const CommandResult a = verdict("c-example");
    ok = ok && a.verdict->kind == VerdictKind::not_globalizable && a.exit_code == 0;
    detail += "1/z " + to_string(a.verdict->kind);
    for (const std::string alpha : {"z", "0", "1/z^2"}) {
        const CommandResult r = verdict("c-example:" + alpha, "reduced_global=true");
        ok = ok && r.verdict->kind == VerdictKind::globalizable;
        detail += ", " + alpha + " " + to_string(r.verdict->kind);
    }
    const CommandResult g = verdict("c-example:z", "reduced_global=false,simply_connected=true,global_flow_generators=true");
    ok = ok && g.verdict->kind == VerdictKind::global;
    detail += ", z with simply connected + global flows " + to_string(g.verdict->kind);
    report(3, ok, "verdicts: " + detail);
}

// 4 -----------------------------------------------------------------------------------

void flow_oracle() {
    const DomainPtr d = make_domain({"z"}, {"theta1", "theta2"}, Field::complex, "z=0");
    const SuperVectorField X = parse_vector_field("(1 + (1/z)*theta1*theta2) d/dz", d);
    // Closed form: z + t + (log(z + t) - log z) theta1 theta2 at z = 1, t = 1.
    auto error = [&](double h) {
        const GrassmannNumber v = flow_even(X, 1.0, {1.0}, FlowConfig{h, 0}).components[0].value();
        return std::max(std::abs(v.body() - 2.0), std::abs(v[MultiIndex(0b11)] - std::log(2.0)));
    };
    const double e = error(1e-3), coarse = error(0.1), fine = error(0.05);
    const double ratio = coarse / fine;
    report(4, e <= 1e-7 && ratio >= 12.0,
           "flow of X_alpha: error " + num(e) + " at h=1e-3, step-halving ratio " + num(ratio));
}

// 5 -----------------------------------------------------------------------------------

void translation_action() {
    const DomainPtr d = make_domain({"x"}, {"theta"}, Field::real);
    const SuperVectorField X = parse_vector_field("d/dx", d), Y = parse_vector_field("d/dtheta", d);
    const LocalAction act({X}, {Y});
    ActionCheckOptions o;
    o.samples = 100;
    const CheckReport r = check_action_property(act, o);
    double dev = 0.0;
    for (const Check& c : r.checks)
        if (c.name == "identity at 0" || c.name == "semigroup") dev = std::max(dev, c.residual);
    const EqualityResult ex = compare(act.induced_infinitesimal(0), X);
    const EqualityResult ey = compare(act.induced_infinitesimal(1), Y);
    const double coeff = std::max(ex.residual, ey.residual);
    report(5, r.pass() && dev <= 1e-9 && ex.equal && ey.equal && coeff <= 1e-10,
           "translation action on R^{1|1}: sup deviation " + num(dev) + ", generator residual " + num(coeff));
}

// 6 -----------------------------------------------------------------------------------

void involutivity() {
    const Scenario s1 = load_scenario("s1-example");
    const CheckReport bad = involutivity_check(DistributionSpec::raw(*s1.find_fields("noninv"), {"X"}));
    const bool flagged = !bad.pass() && bad.checks.front().witness.find("[X,X] = 2*theta2 d/dtheta2") == 0;

    const std::string extra[] = {
        "scalar real\nmanifold even x odd theta\nalgebra\nbasis H parity even\nbasis Q parity odd\n"
        "bracket [Q,Q] = 2*H\nlambda H = d/dx\nlambda Q = d/dtheta + theta d/dx\n",
        "scalar real\nmanifold even x\nalgebra\nbasis a parity even\nbasis b parity even\nbracket [a,b] = -b\n"
        "lambda a = x d/dx\nlambda b = d/dx\n",
        "scalar real\nmanifold even x odd theta1 theta2\nalgebra\nbasis e parity even\nbasis q parity odd\n"
        "lambda e = x d/dx + theta1 d/dtheta1\nlambda q = x d/dtheta1\n"};
    std::vector<Scenario> scs{s1, load_scenario("c-example")};
    for (const std::string alpha : {"1/z^2", "z", "0", "1", "2*z"}) scs.push_back(load_scenario("c-example:" + alpha));
    for (const auto& t : extra) scs.push_back(parse_scenario(t));
    bool all = true;
    double worst = 0.0;
    int tested = 0;
    for (const Scenario& sc : scs) {
        if (!check_homomorphism(*sc.action).pass()) continue;
        ++tested;
        const CheckReport r = involutivity_check(DistributionSpec::from_action(*sc.action), InvolutivityOptions{100, 0, 1e-8});
        all = all && r.pass();
        for (const Check& c : r.checks) worst = std::max(worst, c.residual);
    }
    report(6, flagged && all && worst <= 1e-8 && tested == static_cast<int>(scs.size()),
           std::string("counterexample ") + (flagged ? "flagged with [X,X] = 2*theta2 d/dtheta2" : "not flagged") +
               ", " + std::to_string(tested) + " homomorphisms involutive, worst residual " + num(worst));
}

// 7 -----------------------------------------------------------------------------------

DomainPtr prop_domain() {
    static const DomainPtr d = make_domain({"x", "y"}, {"theta1", "theta2"}, Field::real);
    return d;
}

Expr random_poly(std::mt19937& rng) {
    std::uniform_int_distribution<int> c(-3, 3), e(0, 2);
    Expr out;
    for (int k = 0; k < 3; ++k)
        out = out + Expr::constant(c(rng)) * pow(Expr::variable("x"), e(rng)) * pow(Expr::variable("y"), e(rng));
    return out;
}

Parity random_parity(std::mt19937& rng) { return std::bernoulli_distribution(0.5)(rng) ? Parity::odd : Parity::even; }

SuperFunction random_sf(std::mt19937& rng, Parity p) {
    SuperFunction f(prop_domain());
    for (std::uint32_t bits = 0; bits < 4; ++bits)
        if (MultiIndex(bits).parity() == p) f.add_term(MultiIndex(bits), random_poly(rng));
    return f;
}

SuperVectorField random_field(std::mt19937& rng, Parity p) {
    SuperVectorField X(prop_domain());
    for (const auto& n : prop_domain()->even()) X.set_coeff(n, random_sf(rng, p));
    for (const auto& n : prop_domain()->odd()) X.set_coeff(n, random_sf(rng, p + Parity::odd));
    return X;
}

struct Suite {
    std::string name;
    int instances = 0;
    double worst = 0.0;
    bool ok = true;
};

Suite bracket_suite(std::mt19937& rng) {
    Suite s{"antisymmetry+Jacobi"};
    const SuperVectorField zero(prop_domain());
    for (; s.instances < 100; ++s.instances) {
        const Parity p[3] = {random_parity(rng), random_parity(rng), random_parity(rng)};
        const SuperVectorField X = random_field(rng, p[0]), Y = random_field(rng, p[1]), Z = random_field(rng, p[2]);
        const EqualityResult anti = compare(bracket(X, Y) + static_cast<double>(koszul_sign(p[0], p[1])) * bracket(Y, X), zero);
        auto term = [&](const SuperVectorField& a, const SuperVectorField& b, const SuperVectorField& c, Parity pa,
                        Parity pc) { return static_cast<double>(koszul_sign(pa, pc)) * bracket(a, bracket(b, c)); };
        const EqualityResult jac =
            compare(term(X, Y, Z, p[0], p[2]) + term(Y, Z, X, p[1], p[0]) + term(Z, X, Y, p[2], p[1]), zero);
        s.worst = std::max({s.worst, anti.residual, jac.residual});
        s.ok = s.ok && anti.equal && jac.equal;
    }
    s.ok = s.ok && s.worst <= 1e-10;
    return s;
}

Suite leibniz_suite(std::mt19937& rng) {
    Suite s{"Leibniz"};
    for (; s.instances < 100; ++s.instances) {
        const Parity px = random_parity(rng), pf = random_parity(rng);
        const SuperVectorField X = random_field(rng, px);
        const SuperFunction f = random_sf(rng, pf), g = random_sf(rng, random_parity(rng));
        SuperFunction rhs = apply(X, f) * g;
        const SuperFunction second = f * apply(X, g);
        if (koszul_sign(px, pf) > 0)
            rhs += second;
        else
            rhs -= second;
        const EqualityResult r = compare(apply(X, f * g), rhs);
        s.worst = std::max(s.worst, r.residual);
        s.ok = s.ok && r.equal;
    }
    s.ok = s.ok && s.worst <= 1e-10;
    return s;
}

/// Families {c1 d/dtheta1 + c2 d/dtheta3, theta2 a(x) d/dx + c3 d/dtheta3,
/// theta2 b(x) d/dx} super-commute pairwise for polynomial a, b.
Suite group_law_suite(std::mt19937& rng) {
    Suite s{"odd-exponential group law"};
    const DomainPtr d = make_domain({"x"}, {"theta1", "theta2", "theta3"}, Field::real);
    std::uniform_int_distribution<int> c(-3, 3), e(0, 2);
    auto poly = [&] {
        return std::to_string(c(rng)) + " + " + std::to_string(c(rng)) + "*x^" + std::to_string(e(rng) + 1);
    };
    for (; s.instances < 100; ++s.instances) {
        std::vector<SuperVectorField> Ys{
            parse_vector_field(std::to_string(c(rng)) + " d/dtheta1 + " + std::to_string(c(rng)) + " d/dtheta3", d),
            parse_vector_field("theta2*(" + poly() + ") d/dx + " + std::to_string(c(rng)) + " d/dtheta3", d)};
        if (s.instances % 2) Ys.push_back(parse_vector_field("theta2*(" + poly() + ") d/dx", d));
        const std::size_t n = Ys.size();
        std::vector<std::string> sig, tau, rho, target_odd;
        for (std::size_t j = 1; j <= n; ++j) {
            sig.push_back("sigma" + std::to_string(j));
            tau.push_back("tau" + std::to_string(j));
            rho.push_back("rho" + std::to_string(j));
        }
        const OddExponential es = odd_exponential(Ys, {}, sig), et = odd_exponential(Ys, {}, tau),
                             er = odd_exponential(Ys, {}, rho);
        const std::vector<SuperFunction> st = compose_odd_exponentials(es, et);
        const DomainPtr target = st.front().domain();
        Substitution sum;
        for (std::size_t j = 0; j < n; ++j)
            sum[rho[j]] = parse_superfunction(sig[j] + " + " + tau[j], target);
        for (std::size_t k = 0; k < st.size(); ++k) {
            const EqualityResult r = compare(st[k], substitute(er.components[k], sum, target));
            s.ok = s.ok && r.equal && r.exact;
            s.worst = std::max(s.worst, r.residual);
        }
    }
    s.ok = s.ok && s.worst == 0.0;
    return s;
}

Suite semigroup_suite(std::mt19937& rng) {
    Suite s{"flow semigroup"};
    const DomainPtr d = make_domain({"x"}, {"theta1", "theta2"}, Field::real);
    std::uniform_real_distribution<double> u(-1.0, 1.0), half(-0.5, 0.5);
    auto c = [&] { return "(" + num(u(rng)) + ")"; };
    for (; s.instances < 100; ++s.instances) {
        const SuperVectorField X = parse_vector_field("(" + c() + " + " + c() + "*x + theta1*theta2*(" + c() + " + " + c() +
                                                          "*x^2)) d/dx + " + c() + "*theta2 d/dtheta1 + " + c() +
                                                          "*x*theta1 d/dtheta2",
                                                      d);
        const double x0 = u(rng), a = half(rng), b = half(rng);
        const JetSuperMap whole = flow_even(X, a + b, {x0}, FlowConfig{1e-3, 0});
        const JetSuperMap inner = flow_even(X, b, {x0}, FlowConfig{1e-3, 0});
        const JetSuperMap outer = flow_even(X, a, inner.image_point(), FlowConfig{1e-3, 1});
        const double dev = compose(outer, inner).distance(whole);
        s.worst = std::max(s.worst, dev);
    }
    s.ok = s.worst <= 1e-6;
    return s;
}

Suite homotopy_suite(std::mt19937& rng) {
    Suite s{"homotopy invariance"};
    const std::string alphas[] = {"1/z", "1/z^2", "z", "1/z + 3*z^2", "2/z - 1/z^3"};
    std::map<std::string, std::pair<Scenario, HolonomyGerm>> refs;
    for (const std::string& a : alphas) {
        Scenario sc = load_scenario("c-example:" + a);
        HolonomyGerm g = holonomy(*sc.action, *sc.find_loop("unit"), FlowConfig{1e-3, 2});
        refs.emplace(a, std::make_pair(std::move(sc), std::move(g)));
    }
    std::uniform_real_distribution<double> amp(-0.3, 0.3);
    std::uniform_int_distribution<int> freq(1, 4), pick(0, 4);
    const std::string tv[] = {"t"};
    for (; s.instances < 100; ++s.instances) {
        const auto& [sc, ref] = refs.at(alphas[pick(rng)]);
        // z(t) = e^{it}(1 + a sin(kt) + i b sin(mt)) winds once around 0 and
        // starts at 1; ξ = z'(t).
        const std::string z = "exp(1i*t)*(1 + (" + num(amp(rng)) + ")*sin(" + std::to_string(freq(rng)) + "*t) + 1i*(" +
                              num(amp(rng)) + ")*sin(" + std::to_string(freq(rng)) + "*t))";
        GroupPath loop{"deformed", {PathSegment{{diff(parse_expr(z, tv), "t")}, 0.0, 2.0 * M_PI}}, {1.0}, 1e-6, 1};
        const HolonomyGerm g = holonomy(*sc.action, loop, FlowConfig{1e-3, 2});
        s.worst = std::max(s.worst, g.germ.distance(ref.germ));
    }
    s.ok = s.worst <= 1e-5;
    return s;
}

Suite determinism_suite(std::mt19937& rng) {
    Suite s{"transport step halving"};
    const Scenario sc = load_scenario("c-example");
    std::uniform_real_distribution<double> amp(-0.25, 0.25);
    std::uniform_int_distribution<int> freq(1, 5);
    const std::string tv[] = {"t"};
    for (; s.instances < 100; ++s.instances) {
        const std::string xi = "(" + num(amp(rng)) + ") + (" + num(amp(rng)) + ")*1i + ((" + num(amp(rng)) + ") + (" +
                               num(amp(rng)) + ")*1i)*cos(" + std::to_string(freq(rng)) + "*t)";
        const GroupPath p{"p", {PathSegment{{parse_expr(xi, tv)}, 0.0, 1.0}}, {1.0}, 1e-6, std::nullopt};
        const JetSuperMap a = transport(*sc.action, p, FlowConfig{1e-3, 2});
        const JetSuperMap b = transport(*sc.action, p, FlowConfig{5e-4, 2});
        s.worst = std::max(s.worst, a.distance(b));
    }
    s.ok = s.worst <= 1e-7;
    return s;
}

void property_suites() {
    const auto t0 = Clock::now();
    std::mt19937 rng(2024);
    const Suite suites[] = {bracket_suite(rng),   leibniz_suite(rng),  group_law_suite(rng),
                            semigroup_suite(rng), homotopy_suite(rng), determinism_suite(rng)};
    const double secs = seconds_since(t0);
    bool ok = secs < 60.0;
    std::string detail;
    for (const Suite& s : suites) {
        ok = ok && s.ok && s.instances >= 100;
        detail += (detail.empty() ? "" : "; ") + s.name + " " + std::to_string(s.instances) + " worst " + num(s.worst) +
                  (s.ok ? "" : " (failed)");
    }
    report(7, ok, detail + "; total " + num(secs) + " s");
}

// 8 -----------------------------------------------------------------------------------

void embedding() {
    bool ok = true;
    double worst = 0.0;
    for (const std::string alpha : {"0", "1", "2*z"}) {
        CommandOptions o;
        o.samples = 50;
        const CommandResult r = run_command("verify-embedding", load_scenario("c-example:" + alpha), o);
        ok = ok && r.exit_code == 0 && r.config.samples == 50;
        for (const Check& c : r.report.checks) worst = std::max(worst, c.residual);
    }
    report(8, ok && worst <= 1e-6, "embedding intertwining for alpha in {0, 1, 2z}: worst deviation " + num(worst));
}

}  // namespace

int main() {
    const std::function<void()> criteria[] = {circle_holonomy,    plane_holonomy,  verdicts,        flow_oracle,
                                              translation_action, involutivity,    property_suites, embedding};
    for (std::size_t k = 0; k < std::size(criteria); ++k) {
        try {
            criteria[k]();
        } catch (const std::exception& e) {
            report(static_cast<int>(k + 1), false, std::string("threw: ") + e.what());
        }
    }
    return failures == 0 ? 0 : 1;
}
