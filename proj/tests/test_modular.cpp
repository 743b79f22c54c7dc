#include "varexp/modular.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace varexp;

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST(Luxemburg, LinearFunctionWithAffineExponent) {
    const Mesh m = build_mesh(1, 100);
    const Vector u = interpolate(m, [](const Point& z) { return z[0]; });
    const SampledField p = sample(parse_field("2 + z"), m);
    EXPECT_NEAR(luxemburg_norm(u, p, m), oracle::frozen::luxemburg_z_res100, 1e-10);
    // the quadrature error against the continuum is O(h^2)
    EXPECT_NEAR(luxemburg_norm(u, p, m), oracle::frozen::luxemburg_z_continuum, 5e-5);
}

TEST(Luxemburg, ConstantFunctionHasItsOwnValueAsNorm) {
    const Mesh m = build_mesh(1, 40);
    const SampledField p = sample(parse_field("2 + z"), m);
    EXPECT_NEAR(luxemburg_norm(Vector::Constant(41, 1.0), p, m), 1.0, 1e-11);
    EXPECT_NEAR(luxemburg_norm(Vector::Constant(41, 0.3), p, m), 0.3, 1e-11);
}

TEST(Luxemburg, ZeroFunction) {
    const Mesh m = build_mesh(1, 10);
    EXPECT_EQ(luxemburg_norm(Vector::Zero(11), sample(FieldExpr::constant(2.0), m), m), 0.0);
}

TEST(Luxemburg, ConstantExponentMatchesClassicalNorm) {
    const Mesh m = build_mesh(1, 64);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (double pe : {1.3, 2.0, 3.7}) {
        Vector u(65);
        for (auto& x : u) x = d(rng);
        const double expected = oracle::lp_norm_1d(to_std(u), pe);
        EXPECT_NEAR(luxemburg_norm(u, sample(FieldExpr::constant(pe), m), m), expected, 1e-10 * expected) << pe;
    }
}

TEST(Luxemburg, AgreesWithIndependentBisection) {
    const Mesh m = build_mesh(1, 30);
    const SampledField p = sample(parse_field("1.5 + 2*z"), m);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-5.0, 5.0);
    for (int k = 0; k < 10; ++k) {
        Vector u(31);
        for (auto& x : u) x = d(rng);
        const double expected = oracle::luxemburg_1d(to_std(u), to_std(p.nodes));
        EXPECT_NEAR(luxemburg_norm(u, p, m), expected, 1e-10 * expected);
    }
}

TEST(Luxemburg, Homogeneity) {
    const Mesh m = build_mesh(2, 8);
    const SampledField p = sample(parse_field("2 + 0.5*x + 0.3*y"), m);
    const Vector u = interpolate(m, [](const Point& z) { return std::sin(4 * z[0]) * std::cos(3 * z[1]); });
    const double base = luxemburg_norm(u, p, m);
    for (double c : {-3.0, 0.01, 250.0}) EXPECT_NEAR(luxemburg_norm(c * u, p, m), std::abs(c) * base, 1e-10 * std::abs(c) * base);
}

TEST(Luxemburg, GradientNormForConstantExponent) {
    const Mesh m = build_mesh(1, 50);
    const Vector u = interpolate(m, [](const Point& z) { return z[0] * (1.0 - z[0]); });
    // slopes on cell k are 1 - (2k+1) h
    double s = 0.0;
    for (int k = 0; k < 50; ++k) s += std::pow(std::abs(1.0 - (2 * k + 1) / 50.0), 3.0) / 50.0;
    EXPECT_NEAR(gradient_norm(u, sample(FieldExpr::constant(3.0), m), m), std::cbrt(s), 1e-11);
}

TEST(Modular, RelationsHoldOnRandomFunctions) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-1.0, 1.0), scale(-3.0, 3.0);
    for (int dim : {1, 2}) {
        const Mesh m = build_mesh(dim, dim == 1 ? 60 : 8);
        for (const char* expr : {"2.5", "1.5 + 1.5*x", "2 + 0.5*x - 0.3*y"}) {
            const SampledField p = sample(parse_field(expr), m);
            for (int k = 0; k < 10; ++k) {
                Vector u(static_cast<Eigen::Index>(m.node_count()));
                for (auto& x : u) x = d(rng) * std::pow(10.0, scale(rng));
                const auto rep = check_modular_norm_relations(u, p, m);
                EXPECT_TRUE(rep.passed()) << expr << "\n" << rep.to_text();
            }
        }
    }
}

TEST(Modular, NormOneIffModularOne) {
    const Mesh m = build_mesh(1, 20);
    const SampledField p = sample(parse_field("2 + z"), m);
    const Vector u = interpolate(m, [](const Point& z) { return 1.0 + z[0]; });
    const double n = luxemburg_norm(u, p, m);
    EXPECT_NEAR(modular_rho(u / n, p, m), 1.0, 1e-10);
}
