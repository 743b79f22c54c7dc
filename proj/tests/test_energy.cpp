#include "varexp/energy.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace varexp;

namespace {

ProblemSpec make_problem(int dim, int res, const char* p, const char* q, const char* r, FieldExpr xi, double lambda = 0.7) {
    auto mesh = std::make_shared<const Mesh>(build_mesh(dim, res));
    auto exps = ExponentField::sample(*mesh, parse_field(p), parse_field(q), parse_field(r));
    auto pot = Potential::sample(*mesh, std::move(xi));
    return ProblemSpec::create(mesh, std::move(exps), std::move(pot), Nonlinearity::builtin_f1(), lambda);
}

Vector random_interior(const Mesh& m, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    Vector u(static_cast<Eigen::Index>(m.node_count()));
    for (auto& x : u) x = d(rng);
    return apply_dirichlet(u, m);
}

double relative_error(const Vector& analytic, const Vector& fd) {
    return (analytic - fd).cwiseAbs().maxCoeff() / std::max(analytic.cwiseAbs().maxCoeff(), 1e-12);
}

void expect_gradient_matches(const EnergyFn& E, const Mesh& m, const Vector& u, const std::string& what) {
    Vector g;
    E(u, &g);
    const Vector fd = oracle::fd_gradient([&](const Vector& x) { return E(x, nullptr); }, u, m.boundary);
    EXPECT_LT(relative_error(g, fd), 1e-6) << what;
}

}  // namespace

TEST(Energy, CreateValidates) {
    auto mesh = std::make_shared<const Mesh>(build_mesh(1, 10));
    auto good = ExponentField::sample(*mesh, FieldExpr::constant(3), FieldExpr::constant(2), FieldExpr::constant(4));
    auto pot = Potential::sample(*mesh, FieldExpr::constant(0.5));
    EXPECT_THROW(ProblemSpec::create(mesh, good, pot, Nonlinearity::builtin_f1(), 1.0, 0.4), std::invalid_argument);
    EXPECT_THROW(ProblemSpec::create(mesh, good, pot, Nonlinearity::builtin_f1(), -1.0), std::invalid_argument);
    auto bad = ExponentField::sample(*mesh, FieldExpr::constant(3), FieldExpr::constant(3.5), FieldExpr::constant(4));
    EXPECT_THROW(ProblemSpec::create(mesh, bad, pot, Nonlinearity::builtin_f1(), 1.0), std::invalid_argument);
    const auto spec = ProblemSpec::create(mesh, good, pot, Nonlinearity::builtin_f1(), 1.0);
    EXPECT_DOUBLE_EQ(spec.theta, 1.5);
}

TEST(Energy, PhiHatByHandOnHatFunction) {
    const ProblemSpec s = make_problem(1, 4, "3", "2", "4", FieldExpr::constant(0.5), 0.3);
    Vector u = Vector::Zero(5);
    u[2] = 2.0;
    // two cells of slope +-8 of width 1/4, one interior node of weight 1/4
    const double expected = 2 * 0.25 * std::pow(8.0, 3) / 3 + 0.25 * (0.5 / 3 * 8.0 - 0.3 / 2 * 4.0 - 16.0 / 4.0);
    EXPECT_NEAR(energy_phi_hat(u, s), expected, 1e-12);
    // a negative value only feels the gradient, xi and theta terms
    const double neg = 2 * 0.25 * std::pow(8.0, 3) / 3 + 0.25 * (0.5 + s.theta) / 3 * 8.0;
    EXPECT_NEAR(energy_phi_hat(-u, s), neg, 1e-12);
    EXPECT_EQ(energy_phi_hat(Vector::Zero(5), s), 0.0);
}

TEST(Energy, GammaUsesAbsolutePotential) {
    const ProblemSpec s = make_problem(1, 4, "3", "2", "4", FieldExpr::constant(-0.5), 0.3);
    Vector u = Vector::Zero(5);
    u[2] = 2.0;
    const double expected = 2 * 0.25 * std::pow(8.0, 3) / 3 + 0.25 * (0.5 / 3 * 8.0 - 0.3 / 2 * 4.0);
    EXPECT_NEAR(energy_gamma(u, s), expected, 1e-12);
}

TEST(Energy, GradientsMatchFiniteDifferences) {
    std::mt19937_64 rng(17);
    const std::vector<ProblemSpec> specs = {
        make_problem(1, 30, "3", "2", "4", FieldExpr::constant(0.0)),
        make_problem(1, 30, "2.5 + 0.4*z", "1.5 + 0.2*z", "3.5 + z", FieldExpr::affine(0.5, -1.0)),
        make_problem(2, 5, "2.2 + 0.3*x", "1.4 + 0.1*y", "3 + 0.5*x", FieldExpr::affine(-0.3, 0.2, 0.4)),
    };
    for (const auto& s : specs) {
        const Mesh& m = *s.mesh;
        const Vector base = random_interior(m, rng, 0.5, 1.5);
        const Vector lower = 0.3 * base, upper = 2.0 * base;
        const std::vector<std::pair<std::string, EnergyFn>> energies = {
            {"phi_hat", make_phi_hat(s)},
            {"gamma", make_gamma(s)},
            {"g_mu", make_truncated(s, build_truncation(TruncationKind::g_mu, std::nullopt, upper, s, 0.4))},
            {"beta", make_truncated(s, build_truncation(TruncationKind::beta, std::nullopt, upper, s))},
            {"k_lambda", make_truncated(s, build_truncation(TruncationKind::k_lambda, lower, upper, s))},
            {"k_hat", make_truncated(s, build_truncation(TruncationKind::k_hat, lower, std::nullopt, s))},
        };
        for (const auto& [name, E] : energies)
            for (int k = 0; k < 3; ++k) expect_gradient_matches(E, m, random_interior(m, rng, -0.5, 3.0), name);
    }
}

TEST(Energy, OperatorIsMonotone) {
    std::mt19937_64 rng(19);
    for (int dim : {1, 2}) {
        const ProblemSpec s = make_problem(dim, dim == 1 ? 50 : 6, "1.6 + 0.8*x", "1.2", "3", FieldExpr::constant(0.0));
        for (int k = 0; k < 20; ++k) {
            const Vector u = random_interior(*s.mesh, rng, -2, 2), v = random_interior(*s.mesh, rng, -2, 2);
            EXPECT_GE((operator_A_apply(u, s) - operator_A_apply(v, s)).dot(u - v), -1e-12);
        }
    }
}

TEST(Energy, PairingWithItselfIsTheGradientModular) {
    const ProblemSpec s = make_problem(1, 8, "3", "2", "4", FieldExpr::constant(0.0));
    const Vector u = interpolate(*s.mesh, [](const Point& z) { return std::sin(M_PI * z[0]); });
    // <A(u), u> = int |Du|^p for a homogeneous operator
    double rho = 0.0;
    for (std::size_t e = 0; e < s.mesh->element_count(); ++e) rho += s.mesh->measures[e] * std::pow(std::abs(element_gradient(*s.mesh, u, e)[0]), 3.0);
    EXPECT_NEAR(operator_A_apply(u, s).dot(u), rho, 1e-12 * rho);
}

TEST(Truncation, BoundsAreChecked) {
    const ProblemSpec s = make_problem(1, 10, "3", "2", "4", FieldExpr::constant(0.0));
    const Vector one = apply_dirichlet(Vector::Ones(11), *s.mesh);
    EXPECT_THROW(build_truncation(TruncationKind::k_hat, std::nullopt, std::nullopt, s), std::invalid_argument);
    EXPECT_THROW(build_truncation(TruncationKind::g_mu, one, std::nullopt, s), std::invalid_argument);
    EXPECT_THROW(build_truncation(TruncationKind::k_lambda, 2.0 * one, one, s), std::invalid_argument);
    EXPECT_THROW(build_truncation(TruncationKind::beta, std::nullopt, one, s, 0.5), std::invalid_argument);
    EXPECT_NO_THROW(build_truncation(TruncationKind::k_lambda, one, 2.0 * one, s));
}

TEST(Truncation, ReactionIsFrozenOutsideTheBand) {
    const ProblemSpec s = make_problem(1, 10, "3", "2", "4", FieldExpr::constant(0.0), 0.5);
    const Vector lower = apply_dirichlet(Vector::Constant(11, 0.5), *s.mesh);
    const Vector upper = apply_dirichlet(Vector::Constant(11, 2.0), *s.mesh);
    const auto tp = build_truncation(TruncationKind::k_lambda, lower, upper, s);
    auto full = [&](double x) { return 0.5 * x + x * x * x + s.theta * x * x; };
    EXPECT_DOUBLE_EQ(truncated_reaction(tp, s, 3, 0.1), full(0.5));
    EXPECT_DOUBLE_EQ(truncated_reaction(tp, s, 3, -4.0), full(0.5));
    EXPECT_DOUBLE_EQ(truncated_reaction(tp, s, 3, 1.0), full(1.0));
    EXPECT_DOUBLE_EQ(truncated_reaction(tp, s, 3, 7.0), full(2.0));
    const auto beta = build_truncation(TruncationKind::beta, std::nullopt, upper, s);
    EXPECT_DOUBLE_EQ(truncated_reaction(beta, s, 3, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(truncated_reaction(beta, s, 3, 9.0), 0.5 * 2.0);
    EXPECT_EQ(truncated_reaction(beta, s, 3, -1.0), 0.0);
}

TEST(Truncation, KHatAgreesWithPhiHatAboveTheLowerBoundUpToAConstant) {
    const ProblemSpec s = make_problem(1, 20, "3", "2", "4", FieldExpr::constant(0.0), 0.5);
    const Vector lower = apply_dirichlet(Vector::Constant(21, 0.2), *s.mesh);
    const auto tp = build_truncation(TruncationKind::k_hat, lower, std::nullopt, s);
    std::mt19937_64 rng(23);
    const Vector u = lower + random_interior(*s.mesh, rng, 0.1, 2.0);
    const Vector v = lower + random_interior(*s.mesh, rng, 0.1, 2.0);
    // above the bound the truncated reaction equals the full one, so the energies differ by a u-independent constant
    EXPECT_NEAR(energy_truncated(u, s, tp) - energy_phi_hat(u, s), energy_truncated(v, s, tp) - energy_phi_hat(v, s), 1e-10);
    const Vector gu = grad_truncated(u, s, tp), gp = grad_phi_hat(u, s);
    EXPECT_LT((gu - gp).cwiseAbs().maxCoeff(), 1e-12);
}
