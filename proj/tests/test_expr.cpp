#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "superflow/expr.hpp"

using namespace superflow;

namespace {

const std::vector<std::string> kXZ = {"x", "z"};

Expr px(const std::string& s) { return parse_expr(s, kXZ); }

cplx at(const Expr& e, cplx x, Field f = Field::real) {
    Env env;
    env.bind("x", x);
    env.bind("z", x);
    return evaluate(e, env, f);
}

}  // namespace

TEST(Expr, ParsesAndFolds) {
    EXPECT_EQ(px("1 + (1/z)*1").to_string(), "1 + 1/z");
    EXPECT_NO_THROW(px("sin(x)^2 + cos(x)^2"));
    EXPECT_EQ(px("0*x + 1*z").to_string(), "z");
    EXPECT_EQ(px("2 + 3").to_string(), "5");
}

TEST(Expr, UndeclaredVariableIsRejected) {
    std::vector<std::string> vars = {"x"};
    try {
        parse_expr("sin(y)", vars);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 1u);
        EXPECT_EQ(e.column(), 5u);
        EXPECT_NE(std::string(e.what()).find("y"), std::string::npos);
    }
}

TEST(Expr, SyntaxErrorsCarryPosition) {
    try {
        px("1 + * z");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.column(), 5u);
    }
    EXPECT_THROW(px("(x"), ParseError);
    EXPECT_THROW(px("x^y"), ParseError);
    EXPECT_THROW(px("tan(x)"), ParseError);
}

TEST(Expr, Derivatives) {
    EXPECT_EQ(diff(px("sin(x)"), "x"), px("cos(x)"));
    EXPECT_EQ(diff(px("z^3"), "z"), px("3*z^2"));
    EXPECT_NEAR(std::abs(at(diff(px("log(z)"), "z"), 2.0) - 0.5), 0.0, 1e-15);
    EXPECT_TRUE(diff(px("sin(x)"), "z").is_zero());
}

TEST(Expr, Evaluation) {
    std::map<std::string, Scalar> p{{"z", Scalar(2.0)}};
    EXPECT_DOUBLE_EQ(eval_expr(px("1/z"), p).re(), 0.5);
    std::map<std::string, Scalar> q{{"x", Scalar(1.0)}};
    EXPECT_NEAR(eval_expr(px("exp(x)"), q).re(), 2.718281828459045, 1e-12);
    std::map<std::string, Scalar> zero{{"z", Scalar(0.0)}};
    try {
        eval_expr(px("1 + 1/z"), zero);
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_EQ(e.subexpression(), "1/z");
    }
    EXPECT_THROW(eval_expr(px("log(z)"), zero), DomainError);
}

TEST(Expr, RealLogOfNegativeIsDomainError) {
    std::map<std::string, Scalar> p{{"x", Scalar(-1.0)}};
    EXPECT_THROW(eval_expr(px("log(x)"), p), DomainError);
    std::map<std::string, Scalar> c{{"x", Scalar::complex({-1.0, 0.0})}};
    EXPECT_NEAR(eval_expr(px("log(x)"), c).im(), M_PI, 1e-15);
}

TEST(Expr, MixedFieldsRejected) {
    std::map<std::string, Scalar> p{{"x", Scalar(1.0)}, {"z", Scalar::complex({0.0, 1.0})}};
    EXPECT_THROW(eval_expr(px("x + z"), p), Error);
    EXPECT_THROW(Scalar(1.0) + Scalar::complex({1.0, 0.0}), Error);
}

TEST(Expr, ImaginaryLiterals) {
    const Expr e = px("2i*z + 1.5");
    std::map<std::string, Scalar> p{{"z", Scalar::complex({1.0, 0.0})}};
    const Scalar v = eval_expr(e, p);
    EXPECT_DOUBLE_EQ(v.re(), 1.5);
    EXPECT_DOUBLE_EQ(v.im(), 2.0);
    EXPECT_EQ(parse_expr(e.to_string(), kXZ), e);
}

TEST(Expr, PrintParseRoundTrip) {
    const char* cases[] = {"1 + 1/z",         "-x^2",           "(-2)^3",         "x^(-2)",
                           "-(x + z)*z",      "x - (z - 1)",    "x/(z*x)",        "exp(-x)*log(z)",
                           "sin(x)^2 + cos(x)^2", "(x + 1)^3/(z - 2)", "2*pi*x",  "-1/z^2",
                           "1.5e-7*x - 3i",   "-(-x)"};
    for (const char* c : cases) {
        const Expr e = px(c);
        EXPECT_EQ(px(e.to_string()), e) << c << " -> " << e.to_string();
    }
}

namespace {

Expr random_expr(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
    switch (pick(rng)) {
        case 0: return Expr::variable("x");
        case 1: return Expr::constant(std::uniform_int_distribution<int>(-3, 3)(rng) * 0.5 + 0.25);
        case 2: return random_expr(rng, depth - 1) + random_expr(rng, depth - 1);
        case 3: return random_expr(rng, depth - 1) - random_expr(rng, depth - 1);
        case 4: return random_expr(rng, depth - 1) * random_expr(rng, depth - 1);
        case 5: return random_expr(rng, depth - 1) / (Expr::constant(3.0) + pow(random_expr(rng, depth - 1), 2));
        case 6: return pow(random_expr(rng, depth - 1), std::uniform_int_distribution<int>(-2, 3)(rng));
        case 7: return exp(random_expr(rng, depth - 1) * Expr::constant(0.3));
        case 8: return sin(random_expr(rng, depth - 1));
        default: return cos(random_expr(rng, depth - 1)) + log(Expr::constant(2.0) + pow(random_expr(rng, depth - 1), 2));
    }
}

}  // namespace

TEST(ExprProperty, RandomPrintParseRoundTrip) {
    std::mt19937 rng(7);
    for (int k = 0; k < 300; ++k) {
        const Expr e = random_expr(rng, 4);
        EXPECT_EQ(px(e.to_string()), e) << e.to_string();
    }
}

TEST(ExprProperty, DerivativeMatchesFiniteDifference) {
    // Every function head, 200 points each.
    const char* cases[] = {"exp(x)", "log(x)", "sin(x)", "cos(x)", "x^3 - 2/x", "sin(x)*exp(-x^2)/(1 + x^2)",
                           "log(x^2 + 1)*cos(3*x)"};
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (const char* c : cases) {
        const Expr e = px(c);
        const Expr d = diff(e, "x");
        for (int k = 0; k < 200; ++k) {
            const double x = u(rng);
            const double h = 1e-6;
            const cplx fd = (at(e, x + h) - at(e, x - h)) / (2 * h);
            const cplx exact = at(d, x);
            EXPECT_LE(std::abs(fd - exact), 1e-5 * (1 + std::abs(exact))) << c << " at " << x;
        }
    }
}

TEST(Expr, Polynomials) {
    const auto p = to_polynomial(px("(x + z)^2 - 2*x*z"), kXZ);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->size(), 2u);
    EXPECT_EQ(p->at({2, 0}), cplx(1.0));
    EXPECT_FALSE(to_polynomial(px("1/z"), kXZ));
    EXPECT_TRUE(to_polynomial(px("x/2"), kXZ));
}
