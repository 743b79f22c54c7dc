#include "varexp/fields.hpp"

#include <gtest/gtest.h>

using namespace varexp;

namespace {

ExponentField constant_exponents(const Mesh& m, double p, double q, double r, std::optional<double> mm = std::nullopt) {
    std::optional<FieldExpr> m_expr;
    if (mm) m_expr = FieldExpr::constant(*mm);
    return ExponentField::sample(m, FieldExpr::constant(p), FieldExpr::constant(q), FieldExpr::constant(r), m_expr);
}

}  // namespace

TEST(FieldExpr, ParsesAffineForms) {
    EXPECT_EQ(parse_field("3"), FieldExpr::constant(3.0));
    EXPECT_EQ(parse_field("2.5 + 0.4*z"), FieldExpr::affine(2.5, 0.4));
    EXPECT_EQ(parse_field("2.5+0.4*x"), FieldExpr::affine(2.5, 0.4));
    EXPECT_EQ(parse_field("-1e-2*x + 2"), FieldExpr::affine(2.0, -0.01));
    EXPECT_EQ(parse_field("2 + 0.1*x - 0.2*y"), FieldExpr::affine(2.0, 0.1, -0.2));
    EXPECT_EQ(parse_field("table(1, 2.5, 3)"), FieldExpr::nodal({1.0, 2.5, 3.0}));
}

TEST(FieldExpr, RejectsGarbage) {
    for (const char* bad : {"", "2 +", "x*x", "3 + 2*w", "table(1,,2)", "abc"})
        EXPECT_THROW(parse_field(bad), std::invalid_argument) << bad;
}

TEST(FieldExpr, RenderRoundTrips) {
    for (const FieldExpr& f : {FieldExpr::constant(-0.125), FieldExpr::affine(2.5, 0.4), FieldExpr::affine(2.0, -0.1, 1e-3),
                               FieldExpr::nodal({0.5, 0.25, -0.5})})
        EXPECT_EQ(parse_field(render_field(f)), f) << render_field(f);
}

TEST(FieldExpr, AffineSamplesAtNodesAndMidpoints) {
    const Mesh m = build_mesh(1, 4);
    const SampledField s = sample(parse_field("2.5 + 0.4*z"), m);
    EXPECT_DOUBLE_EQ(s.nodes[0], 2.5);
    EXPECT_DOUBLE_EQ(s.nodes[4], 2.9);
    EXPECT_DOUBLE_EQ(s.midpoints[0], 2.5 + 0.4 * 0.125);
    EXPECT_DOUBLE_EQ(s.min(), 2.5);
    EXPECT_DOUBLE_EQ(s.max(), 2.9);
}

TEST(FieldExpr, NodalTableMustMatchMesh) {
    const Mesh m = build_mesh(1, 4);
    EXPECT_THROW(sample(FieldExpr::nodal({1.0, 2.0}), m), std::invalid_argument);
    const SampledField s = sample(FieldExpr::nodal({0, 1, 2, 3, 4}), m);
    EXPECT_DOUBLE_EQ(s.midpoints[1], 1.5);
}

TEST(Hypotheses, ReferenceInstancePasses) {
    const Mesh m = build_mesh(1, 50);
    const auto rep = check_H0(constant_exponents(m, 3, 2, 4), Potential::sample(m, FieldExpr::constant(0.0)), &m);
    EXPECT_TRUE(rep.passed()) << rep.to_text();
}

TEST(Hypotheses, ConcaveExponentAboveGrowthIsRejected) {
    const Mesh m = build_mesh(1, 50);
    const auto rep = check_H0(constant_exponents(m, 3, 3.5, 4), Potential::sample(m, FieldExpr::constant(0.0)), &m);
    EXPECT_FALSE(rep.passed());
    ASSERT_NE(rep.find("q_+ < p_-"), nullptr);
    EXPECT_FALSE(rep.find("q_+ < p_-")->passed);
    EXPECT_NE(rep.to_text().find("q_+ < p_-"), std::string::npos);
}

TEST(Hypotheses, VariableExponentWindowCountsExtrema) {
    const Mesh m = build_mesh(1, 50);
    // q ranges up to 2.6 while p starts at 2.5
    const auto exps = ExponentField::sample(m, parse_field("2.5 + 0.4*z"), parse_field("2 + 0.6*z"), FieldExpr::constant(4.0));
    const auto rep = check_H0(exps, Potential::sample(m, FieldExpr::constant(0.0)), &m);
    EXPECT_FALSE(rep.find("q_+ < p_-")->passed);
    EXPECT_LT(rep.find("q_+ < p_-")->worst_slack, 0.0);
}

TEST(Hypotheses, CriticalExponentIn2D) {
    EXPECT_DOUBLE_EQ(critical_exponent(1.5, 2), 6.0);
    EXPECT_TRUE(std::isinf(critical_exponent(3.0, 2)));
    EXPECT_TRUE(std::isinf(critical_exponent(1.5, 1)));
    const Mesh m = build_mesh(2, 4);
    const auto rep = check_H0(constant_exponents(m, 1.5, 1.2, 7.0), Potential::sample(m, FieldExpr::constant(0.0)), &m);
    EXPECT_FALSE(rep.find("r < p*")->passed);
    const auto ok = check_H0(constant_exponents(m, 1.5, 1.2, 5.0), Potential::sample(m, FieldExpr::constant(0.0)), &m);
    EXPECT_TRUE(ok.passed()) << ok.to_text();
}

TEST(Hypotheses, PotentialSupNorm) {
    const Mesh m = build_mesh(1, 4);
    const Potential pot = Potential::sample(m, FieldExpr::nodal({0.5, 0.25, 0.0, -0.25, -0.5}));
    EXPECT_DOUBLE_EQ(pot.sup_norm, 0.5);
}

TEST(Nonlinearity, BuiltinsAndPrimitives) {
    const LocalExponents z{3.0, 2.0, 4.0, 3.0, 3.0};
    const Nonlinearity f1 = Nonlinearity::builtin_f1(2.0);
    EXPECT_DOUBLE_EQ(f1.f(z, 2.0), 16.0);
    EXPECT_DOUBLE_EQ(f1.F(z, 2.0), 8.0);
    EXPECT_EQ(f1.f(z, -1.0), 0.0);
    const Nonlinearity f2 = Nonlinearity::builtin_f2();
    EXPECT_DOUBLE_EQ(f2.f(z, 0.5), 0.125);
    EXPECT_DOUBLE_EQ(f2.f(z, 2.0), 4.0 + 4.0);
    // F is continuous at x = 1
    EXPECT_NEAR(f2.F(z, 1.0 + 1e-12), f2.F(z, 1.0), 1e-11);
    EXPECT_NEAR(f2.F(z, 2.0), 0.25 + 7.0 / 3.0 + 7.0 / 3.0, 1e-14);
}

TEST(Nonlinearity, TabulatedInterpolatesFromOrigin) {
    const auto t = Nonlinearity::tabulated({{1.0, 2.0}, {3.0, 2.0}, {4.0, 6.0}});
    const LocalExponents z{3.0, 2.0, 4.0, 3.0, 3.0};
    EXPECT_DOUBLE_EQ(t.f(z, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(t.f(z, 2.0), 2.0);
    EXPECT_DOUBLE_EQ(t.f(z, 3.5), 4.0);
    // areas 1 on [0,1], 4 on [1,3], 1.5 on [3,3.5]
    EXPECT_NEAR(t.F(z, 3.5), 1.0 + 4.0 + 1.5, 1e-10);
    EXPECT_THROW(t.f(z, 4.5), std::domain_error);
    EXPECT_THROW(Nonlinearity::tabulated({{1.0, 1.0}, {0.5, 1.0}}), std::invalid_argument);
    EXPECT_THROW(Nonlinearity::tabulated({{1.0, -1.0}}), std::invalid_argument);
}

TEST(Nonlinearity, GrowthChecksOnPowerReaction) {
    const Mesh m = build_mesh(1, 20);
    const auto rep = check_growth_hypotheses(Nonlinearity::builtin_f1(), constant_exponents(m, 3, 2, 4),
                                             Potential::sample(m, FieldExpr::constant(0.0)));
    EXPECT_TRUE(rep.passed()) << rep.to_text();
    EXPECT_EQ(rep.find("growth cap"), nullptr);
}

TEST(Nonlinearity, GrowthCapIsChecked) {
    const Mesh m = build_mesh(1, 20);
    const auto exps = constant_exponents(m, 3, 2, 4);
    const auto pot = Potential::sample(m, FieldExpr::constant(0.0));
    // f1 = x^3 <= a (1 + x^3) holds for a = 1
    EXPECT_TRUE(check_growth_hypotheses(Nonlinearity::builtin_f1(), exps, pot, GrowthGrid::standard(), 1.0)
                    .find("growth cap")->passed);
    EXPECT_FALSE(check_growth_hypotheses(Nonlinearity::builtin_f1(), exps, pot, GrowthGrid::standard(), 0.5)
                     .find("growth cap")->passed);
}

TEST(Nonlinearity, SecondBuiltinWithEqualExponentsFailsTheSlopeCheck) {
    // with m = p the function e is constant above 1, so its slope cannot dominate C x^{p-1}
    const Mesh m = build_mesh(1, 20);
    const auto exps = constant_exponents(m, 3, 2, 4, 3.0);
    const auto rep = check_growth_hypotheses(Nonlinearity::builtin_f2(), exps, Potential::sample(m, FieldExpr::constant(0.0)));
    ASSERT_NE(rep.find("e' >= C x^(p-1)"), nullptr);
    EXPECT_FALSE(rep.find("e' >= C x^(p-1)")->passed);
}

TEST(Nonlinearity, SecondBuiltinNeedsMatchingExponents) {
    const Mesh m = build_mesh(1, 20);
    EXPECT_NO_THROW(require_compatible(Nonlinearity::builtin_f2(), constant_exponents(m, 3, 2, 4, 3.0)));
    EXPECT_THROW(require_compatible(Nonlinearity::builtin_f2(), constant_exponents(m, 3, 2, 4, 2.5)), std::invalid_argument);
    EXPECT_THROW(require_compatible(Nonlinearity::builtin_f2(), constant_exponents(m, 3, 2, 4)), std::invalid_argument);
}

TEST(Nonlinearity, TabulatedBeyondTableFailsGrowthChecks) {
    const Mesh m = build_mesh(1, 20);
    const auto rep = check_growth_hypotheses(Nonlinearity::tabulated({{1.0, 1.0}, {2.0, 8.0}}), constant_exponents(m, 3, 2, 4),
                                             Potential::sample(m, FieldExpr::constant(0.0)));
    EXPECT_FALSE(rep.passed());
}
