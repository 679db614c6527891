#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "superflow/distribution.hpp"
#include "superflow/holonomy.hpp"
#include "superflow/scenario.hpp"
#include "superflow/verdict.hpp"

using namespace superflow;

namespace {

const MultiIndex t1(0b01), t12(0b11);

const Scenario& s1() {
    static const Scenario sc = load_scenario("s1-example");
    return sc;
}

Scenario c_example(const std::string& alpha = "1/z") { return load_scenario("c-example:" + alpha); }

HolonomyGerm hol(const Scenario& sc, const std::string& loop, FlowConfig cfg = FlowConfig{1e-3, 2}) {
    return holonomy(*sc.action, *sc.find_loop(loop), cfg);
}

/// θ₁ coefficient of the θ₂ component at the base point.
cplx s1_coefficient(const HolonomyGerm& g) { return g.germ.components[1].value()[t1]; }

/// θ₁θ₂ coefficient of the z component at the base point.
cplx c_coefficient(const HolonomyGerm& g) { return g.germ.components[0].value()[t12]; }

GroupPath path(const std::string& name, const std::string& xi, double t0, double t1, std::vector<cplx> base) {
    const std::string tv[] = {"t"};
    return GroupPath{name, {PathSegment{{parse_expr(xi, tv)}, t0, t1}}, std::move(base), 1e-6, std::nullopt};
}

/// Composite Simpson rule on [a, b] with n (even) panels.
cplx simpson(const std::function<cplx(double)>& f, double a, double b, int n) {
    const double h = (b - a) / n;
    cplx s = f(a) + f(b);
    for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return s * h / 3.0;
}

}  // namespace

TEST(Holonomy, CircleWindings) {
    const double tau = 2.0 * M_PI;
    EXPECT_NEAR(std::abs(s1_coefficient(hol(s1(), "k1")) - tau), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(s1_coefficient(hol(s1(), "k2")) - 2.0 * tau), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(s1_coefficient(hol(s1(), "km1")) + tau), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(s1_coefficient(hol(s1(), "reparam")) - tau), 0.0, 1e-9);
    EXPECT_TRUE(hol(s1(), "constant").is_trivial(1e-14));
    const HolonomyGerm g = hol(s1(), "k1");
    EXPECT_NEAR(std::abs(g.germ.components[1].value()[MultiIndex(0b10)] - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(g.germ.components[0].value()[t1] - 1.0), 0.0, 1e-12);
    EXPECT_TRUE(g.warnings.empty());
}

TEST(Holonomy, CircleIsLinearInWinding) {
    for (int k = -3; k <= 3; ++k) {
        GroupPath loop = path("k", std::to_string(k), 0.0, 2.0 * M_PI, {});
        EXPECT_NEAR(std::abs(s1_coefficient(holonomy(*s1().action, loop, FlowConfig{1e-3, 2})) - 2.0 * M_PI * k),
                    0.0, 1e-9);
    }
}

TEST(Holonomy, PuncturedPlane) {
    const Scenario c = c_example();
    const HolonomyGerm g = hol(c, "unit");
    EXPECT_NEAR(std::abs(c_coefficient(g) - cplx(0.0, 2.0 * M_PI)), 0.0, 1e-9);
    EXPECT_LE(g.return_residual, 1e-12);
    EXPECT_TRUE(g.warnings.empty());
    EXPECT_NEAR(std::abs(c_coefficient(hol(c, "twice")) - cplx(0.0, 4.0 * M_PI)), 0.0, 1e-9);
    EXPECT_LE(std::abs(c_coefficient(hol(c_example("1/z^2"), "unit"))), 1e-9);
    EXPECT_TRUE(hol(c_example("1/z^2"), "unit").is_trivial());
    EXPECT_TRUE(hol(c_example("z"), "wobble").is_trivial());
    EXPECT_FALSE(hol(c, "wobble").is_trivial());
}

TEST(Holonomy, NonClosedPathIsRejected) {
    const Scenario c = c_example();
    const GroupPath open = path("open", "1", 0.0, 1.0, {1.0});
    try {
        holonomy(*c.action, open, FlowConfig{1e-3, 2});
        FAIL() << "expected NotALoopError";
    } catch (const NotALoopError& e) {
        EXPECT_NEAR(e.residual(), 1.0, 1e-12);
    }
}

TEST(Holonomy, PathThroughThePuncture) {
    const Scenario c = c_example();
    EXPECT_THROW(transport(*c.action, path("hit", "-1", 0.0, 2.0, {1.0}), FlowConfig{1e-3, 0}), DomainExitError);
}

TEST(Holonomy, TruncationWarning) {
    // λ(e) = (iz + zθ₁θ₂)∂/∂z along ξ ≡ 1 on [0, 2π] has holonomy
    // z ↦ z + 2πzθ₁θ₂, whose first-order term exceeds a J = 0 germ.
    const DomainPtr d = make_domain({"z"}, {"theta1", "theta2"}, Field::complex, "z=0");
    LieSuperAlgebra g({{"e", Parity::even}}, Field::complex);
    const InfinitesimalAction lam{g, d, {parse_vector_field("(1i*z + z*theta1*theta2) d/dz", d)}};
    const GroupPath loop = path("circle", "1", 0.0, 2.0 * M_PI, {1.0});
    const HolonomyGerm h0 = holonomy(lam, loop, FlowConfig{1e-3, 0});
    EXPECT_EQ(h0.warnings.size(), 1u);
    EXPECT_NEAR(std::abs(c_coefficient(h0) - 2.0 * M_PI), 0.0, 1e-9);
    const HolonomyGerm h1 = holonomy(lam, loop, FlowConfig{1e-3, 1});
    EXPECT_TRUE(h1.warnings.empty());
    EXPECT_NEAR(std::abs(h1.germ.components[0].at(1, t12) - 2.0 * M_PI), 0.0, 1e-9);
}

TEST(Holonomy, HomotopyInvariance) {
    const Scenario c = c_example();
    const std::vector<GroupPath> fam{*c.find_loop("unit"), *c.find_loop("ellipse05"), *c.find_loop("ellipse09"),
                                     *c.find_loop("wobble")};
    const CheckReport r = homotopy_invariance_check(*c.action, fam, FlowConfig{1e-3, 2});
    EXPECT_TRUE(r.pass());
    EXPECT_EQ(r.checks.size(), 3u);
    const CheckReport bad = homotopy_invariance_check(*c.action, {fam[0], *c.find_loop("twice")}, FlowConfig{1e-3, 2});
    EXPECT_FALSE(bad.pass());
    EXPECT_EQ(bad.checks.front().witness, "loop twice");
}

TEST(Holonomy, HomomorphismProperty) {
    const Scenario c = c_example();
    EXPECT_TRUE(homomorphism_check(*c.action, *c.find_loop("unit"), *c.find_loop("wobble"), FlowConfig{1e-3, 2}).pass());
    EXPECT_TRUE(homomorphism_check(*s1().action, *s1().find_loop("k1"), *s1().find_loop("km1"), FlowConfig{1e-3, 2}).pass());
    const GroupPath both = concatenate(*c.find_loop("unit"), *c.find_loop("unit"));
    EXPECT_NEAR(std::abs(c_coefficient(holonomy(*c.action, both, FlowConfig{1e-3, 2})) - cplx(0.0, 4.0 * M_PI)), 0.0,
                1e-9);
    EXPECT_EQ(both.winding_note, 2);
}

TEST(Holonomy, TransportIsDeterministicUnderStepHalving) {
    const Scenario c = c_example();
    for (const std::string& loop : {"unit", "wobble", "ellipse05"}) {
        const JetSuperMap a = transport(*c.action, *c.find_loop(loop), FlowConfig{1e-3, 2});
        const JetSuperMap b = transport(*c.action, *c.find_loop(loop), FlowConfig{5e-4, 2});
        EXPECT_LE(a.distance(b), 1e-7) << loop;
    }
}

TEST(Holonomy, TransportMatchesQuadratureOracle) {
    // Body: z(t) = z0 + ∫ξ. Nilpotent part: c(t) = ∫ ξ(s) α(z(s)) ds.
    const Scenario c = c_example();
    const cplx i(0.0, 1.0);
    auto xi = [&](double t) { return 0.3 * i + 0.2 * std::cos(3.0 * t); };
    auto z = [&](double t) { return 1.0 + 0.3 * i * t + 0.2 * std::sin(3.0 * t) / 3.0; };
    const GroupPath p = path("p", "0.3i + 0.2*cos(3*t)", 0.0, 2.0, {1.0});
    const JetSuperMap m = transport(*c.action, p, FlowConfig{1e-3, 0});
    const GrassmannNumber v = m.components[0].value();
    EXPECT_NEAR(std::abs(v.body() - z(2.0)), 0.0, 1e-10);
    const cplx want = simpson([&](double t) { return xi(t) / z(t); }, 0.0, 2.0, 4000);
    EXPECT_NEAR(std::abs(v[t12] - want), 0.0, 1e-8);
}

TEST(Holonomy, ConstantLoopAndValidation) {
    const Scenario c = c_example();
    const GroupPath k = constant_loop(c.algebra, {1.0});
    EXPECT_TRUE(holonomy(*c.action, k, FlowConfig{1e-3, 2}).is_trivial(1e-15));
    GroupPath gap = *c.find_loop("unit");
    gap.segments.push_back(PathSegment{{Expr()}, 7.0, 8.0});
    EXPECT_THROW(gap.validate(c.algebra), Error);
}

TEST(Involutivity, CounterexampleIsFlagged) {
    const auto& fs = *s1().find_fields("noninv");
    const CheckReport r = involutivity_check(DistributionSpec::raw(fs, {"X"}));
    ASSERT_FALSE(r.pass());
    EXPECT_NE(r.checks.front().witness.find("[X,X] = 2*theta2 d/dtheta2"), std::string::npos)
        << r.checks.front().witness;
}

TEST(Involutivity, ActionsPassingHomomorphismAreInvolutive) {
    const std::string extra[] = {
        "scalar real\nmanifold even x odd theta\nalgebra\nbasis H parity even\nbasis Q parity odd\n"
        "bracket [Q,Q] = 2*H\nlambda H = d/dx\nlambda Q = d/dtheta + theta d/dx\n",
        "scalar real\nmanifold even x\nalgebra\nbasis a parity even\nbasis b parity even\nbracket [a,b] = -b\n"
        "lambda a = x d/dx\nlambda b = d/dx\n"};
    std::vector<Scenario> scs{s1(), c_example(), c_example("1/z^2"), c_example("z"), c_example("0")};
    for (const auto& t : extra) scs.push_back(parse_scenario(t));
    for (const Scenario& sc : scs) {
        ASSERT_TRUE(check_homomorphism(*sc.action).pass()) << sc.name;
        const CheckReport r = involutivity_check(DistributionSpec::from_action(*sc.action));
        EXPECT_TRUE(r.pass()) << sc.name;
        for (const Check& ch : r.checks) EXPECT_LE(ch.residual, 1e-8);
    }
}

TEST(Involutivity, NonHomomorphismIsNotInvolutive) {
    // Declared abelian but the images do not commute.
    const Scenario sc = parse_scenario(
        "scalar real\nmanifold even x\nalgebra\nbasis a parity even\nbasis b parity even\n"
        "lambda a = x d/dx\nlambda b = d/dx\n");
    EXPECT_FALSE(check_homomorphism(*sc.action).pass());
    EXPECT_FALSE(involutivity_check(DistributionSpec::from_action(*sc.action)).pass());
}

TEST(Involutivity, PointwiseRank) {
    const Scenario c = c_example();
    const std::vector<cplx> p{1.0};
    EXPECT_EQ(pointwise_rank(DistributionSpec::from_action(*c.action), p), 1);
}

TEST(Verdict, ExampleVerdicts) {
    auto verdict = [](const Scenario& sc, const std::string& flags = "") {
        VerdictInput in;
        in.flags = sc.flags;
        apply_flag_assignments(in.flags, flags);
        for (const auto& l : sc.loops) in.germs.push_back(holonomy(*sc.action, l, FlowConfig{1e-3, 2}));
        return globalizability_verdict(in);
    };
    const Verdict a = verdict(c_example());
    EXPECT_EQ(a.kind, VerdictKind::not_globalizable);
    EXPECT_EQ(a.rule.substr(0, 3), "(a)");
    EXPECT_FALSE(a.witness.empty());
    for (const std::string& alpha : {"z", "0", "1/z^2"}) EXPECT_EQ(verdict(c_example(alpha)).kind, VerdictKind::globalizable);
    EXPECT_EQ(verdict(c_example("z"), "simply_connected=true").kind, VerdictKind::global);
    const Verdict c = verdict(c_example("0"), "reduced_global=false simply_connected=true global_flow_generators=true");
    EXPECT_EQ(c.kind, VerdictKind::global);
    EXPECT_EQ(c.rule.substr(0, 3), "(c)");
    EXPECT_EQ(verdict(c_example("0"), "reduced_global=false").kind, VerdictKind::inconclusive);
    EXPECT_EQ(verdict(s1()).kind, VerdictKind::not_globalizable);
    EXPECT_THROW(verdict(c_example(), "simply_connected=true global_flow_generators=true"), ContradictionError);
}

TEST(Embedding, IntertwiningForPrimitives) {
    const std::string zv[] = {"z"};
    const std::pair<std::string, std::string> cases[] = {{"0", "0"}, {"1", "z"}, {"2*z", "z^2"}};
    for (const auto& [alpha, prim] : cases) {
        const CheckReport r = verify_example_embedding(parse_expr(alpha, zv), parse_expr(prim, zv));
        EXPECT_TRUE(r.pass()) << alpha;
        for (const Check& c : r.checks) EXPECT_LE(c.residual, 1e-6);
    }
    EXPECT_THROW(verify_example_embedding(parse_expr("2*z", zv), parse_expr("z^2 + z", zv)), Error);
}

TEST(Embedding, PrimitiveMismatchIsRejected) {
    const std::string zv[] = {"z"};
    EXPECT_THROW(verify_example_embedding(parse_expr("1/z", zv), parse_expr("0", zv)), Error);
}
