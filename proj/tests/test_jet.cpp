#include <gtest/gtest.h>

#include <cmath>

#include "superflow/jet.hpp"

using namespace superflow;

namespace {

DomainPtr r12() { return make_domain({"x"}, {"theta1", "theta2"}, Field::real); }
DomainPtr r22() { return make_domain({"x", "y"}, {"theta1", "theta2"}, Field::real); }

SuperFunction sf(std::string_view s, const DomainPtr& d) { return parse_superfunction(s, d); }

JetSuperMap jet_of(const DomainPtr& d, const std::vector<SuperFunction>& comps, std::vector<cplx> base, int order) {
    JetSuperMap out;
    out.domain = d;
    out.base = base;
    const LayoutPtr L = JetLayout::get(d->even_dim(), order, d->odd_dim());
    for (const auto& c : comps) out.components.push_back(taylor_jet(CompiledSuperFunction(c, order), base, L));
    return out;
}

Substitution images_of(const DomainPtr& d, const std::vector<SuperFunction>& comps) {
    Substitution s;
    const auto names = d->all_coordinates();
    for (std::size_t k = 0; k < names.size(); ++k) s[names[k]] = comps[k];
    return s;
}

double max_diff(const Jet& a, const Jet& b) { return (a - b).norm(); }

}  // namespace

TEST(Jet, MonomialTablePrefixAndProducts) {
    const auto lo = MonomialTable::get(2, 2);
    const auto hi = MonomialTable::get(2, 4);
    ASSERT_EQ(lo->count(), 6);
    ASSERT_EQ(hi->count(), 15);
    for (int k = 0; k < lo->count(); ++k) EXPECT_EQ(lo->exponents(k), hi->exponents(k));
    for (int a = 0; a < hi->count(); ++a)
        for (int b = 0; b < hi->count(); ++b) {
            const int p = hi->product(a, b);
            if (hi->degree(a) + hi->degree(b) > 4) {
                EXPECT_EQ(p, -1);
                continue;
            }
            std::vector<int> sum = hi->exponents(a);
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += hi->exponents(b)[i];
            EXPECT_EQ(hi->exponents(p), sum);
        }
}

TEST(Jet, TaylorCoefficientsOfSine) {
    const DomainPtr d = make_domain({"x"}, {}, Field::real);
    const LayoutPtr L = JetLayout::get(1, 4, 0);
    const Jet j = taylor_jet(CompiledSuperFunction(sf("sin(x)", d), 4), std::vector<cplx>{0.3}, L);
    const double derivs[] = {std::sin(0.3), std::cos(0.3), -std::sin(0.3), -std::cos(0.3), std::sin(0.3)};
    double fact = 1.0;
    for (int k = 0; k <= 4; ++k) {
        if (k) fact *= k;
        const int idx = L->monomials().index_of(std::vector<int>{k});
        EXPECT_NEAR(j.at(idx, MultiIndex()).real(), derivs[k] / fact, 1e-14) << k;
    }
}

TEST(Jet, GradedProductMatchesSuperFunctionProduct) {
    const DomainPtr d = r12();
    const SuperFunction f = sf("x + theta1 + x^2*theta2", d);
    const SuperFunction g = sf("exp(x)*theta2 + 3*theta1*theta2 + 1", d);
    const std::vector<cplx> p{0.7};
    const LayoutPtr L = JetLayout::get(1, 3, 2);
    const Jet jf = taylor_jet(CompiledSuperFunction(f, 3), p, L);
    const Jet jg = taylor_jet(CompiledSuperFunction(g, 3), p, L);
    const Jet jfg = taylor_jet(CompiledSuperFunction(gr_mul(f, g), 3), p, L);
    EXPECT_LT(max_diff(jf * jg, jfg), 1e-12);
}

TEST(Jet, PullbackMatchesSymbolicSubstitution) {
    const DomainPtr d = r22();
    const std::vector<SuperFunction> psi{sf("0.5 + x + y*theta1*theta2 + x^2", d), sf("y - x*y + sin(x)*theta1*theta2", d),
                                         sf("theta1 + x*theta2", d), sf("(1+y)*theta2 + x*y*theta1", d)};
    const SuperFunction f = sf("exp(x)*y + log(1+y^2)*theta1 + x*y*theta1*theta2 + cos(y)*theta2", d);
    const std::vector<cplx> p{0.2, -0.4};
    for (int J = 0; J <= 3; ++J) {
        const JetSuperMap map = jet_of(d, psi, p, J);
        const JetPullback ctx(map);
        const Jet got = CompiledSuperFunction(f, JetPullback::required_order(map.layout())).pullback(ctx);
        const SuperFunction oracle = substitute(f, images_of(d, psi), d);
        const Jet want = taylor_jet(CompiledSuperFunction(oracle, J), p, map.layout());
        EXPECT_LT(max_diff(got, want), 1e-11) << "order " << J;
    }
}

TEST(Jet, ComposeMatchesSymbolicComposition) {
    const DomainPtr d = r12();
    const std::vector<SuperFunction> inner{sf("1 + 2*x + x*theta1*theta2", d), sf("theta1 + x*theta2", d),
                                           sf("exp(x)*theta2", d)};
    const std::vector<SuperFunction> outer{sf("x^3 + log(x)*theta1*theta2", d), sf("x*theta1 + theta2", d),
                                           sf("theta2 - x^2*theta1", d)};
    const std::vector<cplx> p{0.3};
    const int J = 3;
    const JetSuperMap ji = jet_of(d, inner, p, J);
    const JetSuperMap jo = jet_of(d, outer, ji.image_point(), J + 1);
    const JetSuperMap c = compose(jo, ji);
    ASSERT_EQ(c.order(), J);
    std::vector<SuperFunction> both;
    for (const auto& o : outer) both.push_back(substitute(o, images_of(d, inner), d));
    EXPECT_LT(c.distance(jet_of(d, both, p, J)), 1e-11);
}

TEST(Jet, ComposeWithIdentityAndOrderRule) {
    const DomainPtr d = r12();
    const std::vector<SuperFunction> psi{sf("2 + x + x^2*theta1*theta2", d), sf("theta1 + theta2", d), sf("x*theta2", d)};
    const JetSuperMap m = jet_of(d, psi, {0.5}, 2);
    const JetSuperMap id = JetSuperMap::identity(d, m.image_point(), 3);
    EXPECT_LT(compose(id, m).distance(m), 1e-14);
    const JetSuperMap low = jet_of(d, psi, {0.5}, 2);
    EXPECT_EQ(compose(JetSuperMap::identity(d, m.image_point(), 2), low).order(), 1);
    EXPECT_THROW(compose(JetSuperMap::identity(d, {7.0}, 3), m), Error);
}

TEST(Jet, EvenOrdersAgreeOnLowerCoefficients) {
    const DomainPtr d = r12();
    const SuperFunction f = sf("exp(x)*theta1 + x^4 + theta1*theta2/x", d);
    const std::vector<cplx> p{1.3};
    const Jet lo = taylor_jet(CompiledSuperFunction(f, 1), p, JetLayout::get(1, 1, 2));
    const Jet hi = taylor_jet(CompiledSuperFunction(f, 4), p, JetLayout::get(1, 4, 2));
    EXPECT_LT(max_diff(hi.truncated(lo.layout()), lo), 1e-14);
}

TEST(Jet, OddDerivativeFollowsLeftConvention) {
    const DomainPtr d = r12();
    const LayoutPtr L = JetLayout::get(1, 1, 2);
    const Jet t1 = Jet::generator(L, 0), t2 = Jet::generator(L, 1);
    const Jet prod = t1 * t2;
    EXPECT_LT(max_diff(prod.odd_derivative(0), t2), 1e-15);
    EXPECT_LT(max_diff(prod.odd_derivative(1), t1 * cplx{-1.0}), 1e-15);
}

TEST(Jet, SubstituteParametersShiftsGenerators) {
    const DomainPtr d = make_domain({"x"}, {"theta"}, Field::real);
    JetSuperMap m = JetSuperMap::identity(d, {1.0}, 1, {"tau"});
    const LayoutPtr L = m.layout();
    m.components[1] += Jet::generator(L, 0);  // θ ↦ θ + τ
    const LayoutPtr two = JetLayout::get(1, 1, 3);
    const Jet rho = Jet::generator(two, 0) + Jet::generator(two, 1);
    const JetSuperMap s = substitute_parameters(m, {"sigma", "tau"}, {rho}, two);
    const Jet want = Jet::generator(two, 0) + Jet::generator(two, 1) + Jet::generator(two, 2);
    EXPECT_LT(max_diff(s.components[1], want), 1e-15);
}

TEST(Jet, DomainErrorOnPoleAtBase) {
    const DomainPtr d = r12();
    const JetSuperMap id = JetSuperMap::identity(d, {0.0}, 1);
    EXPECT_THROW(CompiledSuperFunction(sf("1/x", d), 2).pullback(JetPullback(id)), DomainError);
}
