#include "varexp/bifurcation.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace varexp;

namespace {

ProblemSpec reference(double lambda, int res = 100) {
    static std::map<int, std::shared_ptr<const Mesh>> meshes;
    auto& mesh = meshes[res];
    if (!mesh) mesh = std::make_shared<const Mesh>(build_mesh(1, res));
    auto exps = ExponentField::sample(*mesh, FieldExpr::constant(3), FieldExpr::constant(2), FieldExpr::constant(4));
    return ProblemSpec::create(mesh, exps, Potential::sample(*mesh, FieldExpr::constant(0.0)), Nonlinearity::builtin_f1(), lambda);
}

SolveAtOptions quick() {
    SolveAtOptions o;
    o.multistarts = 4;
    return o;
}

}  // namespace

TEST(SolveAt, TwoSolutionsForSmallLambda) {
    const LambdaRecord rec = solve_at(reference(0.05), quick());
    ASSERT_EQ(rec.status, Status::two_or_more);
    ASSERT_TRUE(rec.auxiliary.has_value());
    ASSERT_TRUE(rec.minimal.has_value());
    const auto& low = rec.solutions[0];
    const auto& high = rec.solutions[1];
    EXPECT_EQ(low.origin, "minimizer");
    EXPECT_EQ(high.origin, "mountain-pass");
    EXPECT_LT(low.energy, 0.0);
    EXPECT_GT(high.energy, 0.0);
    EXPECT_GT(sup_norm(high.values - low.values), 1e-5);
    for (const auto& s : rec.solutions) {
        EXPECT_LE(s.residual, 1e-6);
        EXPECT_GE((s.values - rec.auxiliary->values).minCoeff(), -1e-6);
    }
    EXPECT_GE((low.values - rec.minimal->values).minCoeff(), -1e-6);
}

TEST(SolveAt, NoSolutionsFarAboveThreshold) {
    const LambdaRecord rec = solve_at(reference(10.0 * oracle::frozen::threshold), quick());
    EXPECT_EQ(rec.status, Status::none);
    EXPECT_TRUE(rec.solutions.empty());
    EXPECT_FALSE(rec.diagnostics.empty());
}

TEST(Ordering, CorruptedRecordIsReported) {
    BifurcationDiagram d;
    for (double lambda : {0.5, 2.0}) d.records.push_back(solve_at(reference(lambda), quick()));
    const Mesh& mesh = *reference(1.0).mesh;
    EXPECT_TRUE(check_ordering(d, mesh).passed());
    for (auto& s : d.records[1].solutions) s.values *= 0.5;
    const OrderingReport rep = check_ordering(d, mesh);
    EXPECT_FALSE(rep.passed());
}

TEST(Ordering, SolutionsAfterAnEmptyRecordAreAViolation) {
    const LambdaRecord good = solve_at(reference(0.5), quick());
    LambdaRecord empty;
    empty.lambda = 1.0;
    LambdaRecord late = good;
    late.lambda = 2.0;
    BifurcationDiagram d;
    d.records = {good, empty, late};
    EXPECT_FALSE(check_ordering(d, *reference(1.0).mesh).passed());
}

TEST(Sweep, SmallGridStaysInTheMultiplicityRegime) {
    // the threshold of this family is near 190, so all four values have two solutions
    const auto d = sweep({0.01, 0.1, 1.0, 10.0}, reference(1.0), quick(), {2, true, 1e-3});
    ASSERT_EQ(d.records.size(), 4u);
    for (const auto& r : d.records) EXPECT_EQ(r.status, Status::two_or_more) << r.lambda;
    EXPECT_FALSE(d.lambda_star.has_value());
    EXPECT_TRUE(d.ordering.passed());
    EXPECT_EQ(d.provenance.resolution, 100);
}

TEST(Sweep, GridValidation) {
    EXPECT_THROW(sweep({}, reference(1.0)), std::invalid_argument);
    EXPECT_THROW(sweep({1.0, 0.5}, reference(1.0)), std::invalid_argument);
}

TEST(LambdaStar, BisectionBracketsTheThreshold) {
    const ProblemSpec s = reference(1.0);
    const LambdaStar ls = estimate_lambda_star(150.0, 250.0, 1e-3, s, quick());
    EXPECT_LE(ls.hi - ls.lo, 1e-3);
    EXPECT_NEAR(ls.estimate, oracle::frozen::threshold, 0.05 * oracle::frozen::threshold);
    EXPECT_FALSE(solve_at(s.with_lambda(ls.estimate - 1e-3), quick()).solutions.empty());
}

TEST(LambdaStar, RejectsInvertedBracket) {
    EXPECT_THROW(estimate_lambda_star(250.0, 150.0, 1e-3, reference(1.0)), std::invalid_argument);
    EXPECT_THROW(estimate_lambda_star(1000.0, 2000.0, 1e-3, reference(1.0)), std::runtime_error);
}
