#include <gtest/gtest.h>

#include <cmath>

#include <json.hpp>

#include "superflow/commands.hpp"

using namespace superflow;

namespace {

CommandResult run(const std::string& cmd, const std::string& scenario, CommandOptions opt = {}) {
    return run_command(cmd, load_scenario(scenario), opt);
}

template <class F>
ScenarioError scenario_error(F&& f) {
    try {
        f();
    } catch (const ScenarioError& e) {
        return e;
    }
    ADD_FAILURE() << "expected ScenarioError";
    return ScenarioError("", 0, 0);
}

}  // namespace

TEST(Scenario, BuiltinsParse) {
    const Scenario s1 = load_scenario("s1-example");
    EXPECT_EQ(s1.domain->even_dim(), 0);
    EXPECT_EQ(s1.domain->odd_dim(), 2);
    ASSERT_EQ(s1.algebra.dim(), 1);
    EXPECT_EQ(s1.algebra.element(0).parity, Parity::even);
    EXPECT_EQ(s1.action->images[0].to_string(), "theta1 d/dtheta2");
    EXPECT_EQ(s1.loops.size(), 5u);

    const Scenario c = load_scenario("c-example");
    EXPECT_EQ(c.field, Field::complex);
    EXPECT_EQ(c.domain->even_dim(), 1);
    EXPECT_EQ(c.domain->odd_dim(), 2);
    const std::vector<cplx> origin{0.0};
    EXPECT_LE(c.domain->distance_to_excluded(origin), 0.0);
    EXPECT_FALSE(c.primitive.has_value());
    EXPECT_TRUE(load_scenario("c-example:z").primitive.has_value());
}

TEST(Scenario, SemanticErrors) {
    const ScenarioError odd_even = scenario_error([] {
        parse_scenario("scalar real\nmanifold even x odd theta\nalgebra\nbasis Q parity odd\nlambda Q = x d/dx\n");
    });
    EXPECT_EQ(odd_even.line(), 5u);
    EXPECT_NE(std::string(odd_even.what()).find("is not odd"), std::string::npos) << odd_even.what();

    const ScenarioError unknown = scenario_error([] {
        parse_scenario("scalar real\nmanifold even x\nalgebra\nbasis a parity even\nlambda b = d/dx\n");
    });
    EXPECT_EQ(unknown.line(), 5u);

    const ScenarioError dup = scenario_error([] {
        parse_scenario("scalar real\nmanifold even x\nalgebra\nbasis a parity even\nbasis a parity even\n");
    });
    EXPECT_EQ(dup.line(), 5u);
}

TEST(Scenario, SyntaxErrorsCarryLineAndColumn) {
    const ScenarioError e = scenario_error([] { parse_scenario("scalar real\nmanifold even x\nfrobnicate 3\n"); });
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 1u);
    const ScenarioError f = scenario_error([] { parse_scenario("scalar quaternion\n"); });
    EXPECT_EQ(f.line(), 1u);
    EXPECT_GT(f.column(), 1u);
}

TEST(Scenario, FlagAssignments) {
    VerdictFlags f;
    apply_flag_assignments(f, "simply_connected=true, support_compact=true");
    EXPECT_TRUE(f.group_simply_connected);
    EXPECT_TRUE(f.support_relatively_compact);
    EXPECT_FALSE(f.reduced_action_global);
    EXPECT_THROW(apply_flag_assignments(f, "bogus=true"), Error);
}

TEST(Commands, HolonomyJsonCarriesCoefficient) {
    CommandOptions o;
    o.loop = "k1";
    const CommandResult r = run("holonomy", "s1-example", o);
    EXPECT_EQ(r.exit_code, 0);
    const auto j = nlohmann::json::parse(to_json(r));
    EXPECT_EQ(j["status"], "pass");
    bool found = false;
    for (const auto& comp : j["germs"][0]["components"])
        if (comp["coordinate"] == "theta2")
            for (const auto& t : comp["terms"])
                if (t["generators"] == nlohmann::json::array({0})) {
                    EXPECT_NEAR(t["value"]["re"].get<double>(), 2.0 * M_PI, 1e-6);
                    found = true;
                }
    EXPECT_TRUE(found);
}

TEST(Commands, VerdictAndExitCodes) {
    const CommandResult a = run("verdict", "c-example");
    ASSERT_TRUE(a.verdict.has_value());
    EXPECT_EQ(a.verdict->kind, VerdictKind::not_globalizable);
    EXPECT_EQ(a.exit_code, 0);
    CommandOptions o;
    o.flags = "reduced_global=false";
    o.loop = "unit";
    const CommandResult b = run("verdict", "c-example:0", o);
    EXPECT_EQ(b.verdict->kind, VerdictKind::inconclusive);
    EXPECT_EQ(b.exit_code, 3);
    o.flags = "simply_connected=true global_flow_generators=true";
    EXPECT_THROW(run("verdict", "c-example", o), ContradictionError);
}

TEST(Commands, BracketOfCounterexample) {
    CommandOptions o;
    o.field = "noninv";
    const CommandResult r = run("bracket", "s1-example", o);
    ASSERT_EQ(r.output.size(), 1u);
    EXPECT_EQ(r.output[0], "[X,X] = 2*theta2 d/dtheta2");
}

TEST(Commands, FailuresCarryWitnesses) {
    CommandOptions o;
    o.field = "noninv";
    const CommandResult r = run("involutive", "s1-example", o);
    EXPECT_EQ(r.exit_code, 1);
    for (const Check& c : r.report.checks)
        if (!c.pass) EXPECT_FALSE(c.witness.empty());

    CommandOptions f;
    f.t = 2.0;
    f.base = "z=-1";
    const CommandResult exit = run("flow", "c-example", f);
    EXPECT_EQ(exit.exit_code, 1);
    EXPECT_NE(exit.report.checks.front().witness.find("t=0.5"), std::string::npos);
}

TEST(Commands, UnknownInputsThrow) {
    EXPECT_THROW(run("frobnicate", "s1-example"), Error);
    EXPECT_THROW(load_scenario("no-such-scenario"), Error);
    CommandOptions o;
    o.loop = "missing";
    EXPECT_THROW(run("holonomy", "s1-example", o), Error);
}

TEST(Commands, JsonIsByteIdentical) {
    for (const std::string& cmd : {"holonomy", "check-action", "involutive", "verify-embedding", "homotopy-check"}) {
        const std::string sc = cmd == "verify-embedding" ? "c-example:2*z" : "c-example";
        CommandOptions o;
        o.samples = 20;
        o.seed = 7;
        const std::string a = to_json(run(cmd, sc, o)), b = to_json(run(cmd, sc, o));
        EXPECT_EQ(a, b) << cmd;
        EXPECT_TRUE(nlohmann::json::accept(a));
    }
}

TEST(Commands, EveryCommandRunsOnABuiltin) {
    for (const std::string& cmd : command_names()) {
        const std::string sc = cmd == "verify-embedding" ? "c-example:1" : "c-example";
        CommandOptions o;
        o.samples = 10;
        if (cmd == "odd-exp") {
            const CommandResult r = run_command(
                cmd, parse_scenario("scalar real\nmanifold even x odd theta\nalgebra\nbasis Q parity odd\n"
                                    "lambda Q = d/dtheta\n"),
                o);
            EXPECT_EQ(r.exit_code, 0);
            continue;
        }
        const CommandResult r = run(cmd, sc, o);
        EXPECT_TRUE(r.exit_code == 0) << cmd << "\n" << to_text(r);
    }
}
