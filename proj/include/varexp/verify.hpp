#pragma once

#include "varexp/bifurcation.hpp"
#include "varexp/config.hpp"
#include "varexp/energy.hpp"
#include "varexp/modular.hpp"
#include "varexp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace varexp {

struct SuiteResult {
    std::string name;
    bool passed = true;
    bool skipped = false;
    /// Worst observed value of the suite's statistic, next to its bound.
    double worst = 0.0;
    double bound = 0.0;
    std::string detail;
};

/// Random interior-supported function with values in [lo, hi].
inline Vector random_nodal(const Mesh& mesh, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Vector u(static_cast<Eigen::Index>(mesh.node_count()));
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = dist(rng);
    return apply_dirichlet(std::move(u), mesh);
}

/// The 1D constant-exponent instance behind a configuration, if it has one.
inline std::optional<ShootingInstance> shooting_instance(const RunConfig& c, double lambda) {
    auto constant = [](const FieldExpr& f) { return f.kind == FieldExpr::Kind::constant; };
    if (c.dimension != 1 || !constant(c.p) || !constant(c.q) || !constant(c.r) || !constant(c.xi)) return std::nullopt;
    if (c.m && !constant(*c.m)) return std::nullopt;
    ShootingInstance inst;
    inst.p = c.p.c0;
    inst.q = c.q.c0;
    inst.r = c.r.c0;
    inst.m = c.m ? c.m->c0 : c.p.c0;
    inst.xi = c.xi.c0;
    inst.lambda = lambda;
    inst.nonlinearity = make_nonlinearity(c);
    return inst;
}

inline SuiteResult suite_modular(const ProblemSpec& spec, std::uint64_t seed, int samples = 50) {
    SuiteResult s{"modular relations", true, false, 0.0, -1e-10, {}};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> scale(-3.0, 2.0);
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
        const Vector u = random_nodal(*spec.mesh, rng, -1.0, 1.0) * std::pow(10.0, scale(rng));
        const ValidationReport rep = check_modular_norm_relations(u, spec.exponents.p, *spec.mesh);
        for (const auto& e : rep.entries) worst = std::min(worst, e.worst_slack);
        if (!rep.passed() && s.passed) {
            s.passed = false;
            s.detail = rep.to_text();
        }
    }
    s.worst = worst;
    return s;
}

inline SuiteResult suite_monotonicity(const ProblemSpec& spec, std::uint64_t seed, int pairs = 50) {
    SuiteResult s{"operator monotonicity", true, false, 0.0, -1e-12, {}};
    std::mt19937_64 rng(seed + 1);
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < pairs; ++k) {
        // odd pairs are close, where the pairing is smallest
        const Vector u = random_nodal(*spec.mesh, rng, -2.0, 2.0), w = random_nodal(*spec.mesh, rng, -2.0, 2.0);
        const Vector v = k % 2 ? Vector(u + 1e-4 * w) : w;
        worst = std::min(worst, (operator_A_apply(u, spec) - operator_A_apply(v, spec)).dot(u - v));
    }
    s.worst = worst;
    s.passed = worst >= s.bound;
    return s;
}

/**
 * @brief Directional central differences against the analytic gradients of
 * phi-hat, gamma and the four truncated energies; relative error < 1e-6.
 */
inline SuiteResult suite_gradients(const ProblemSpec& spec, std::uint64_t seed, int points = 5) {
    SuiteResult s{"gradient exactness", true, false, 0.0, 1e-6, {}};
    std::mt19937_64 rng(seed + 2);
    const Mesh& mesh = *spec.mesh;
    const Vector base = random_nodal(mesh, rng, 0.5, 1.5);
    const Vector lower = 0.3 * base, upper = 2.0 * base;
    std::vector<std::pair<std::string, EnergyFn>> energies = {
        {"phi_hat", make_phi_hat(spec)},
        {"gamma", make_gamma(spec)},
        {"g_mu", make_truncated(spec, build_truncation(TruncationKind::g_mu, std::nullopt, upper, spec, spec.lambda))},
        {"beta", make_truncated(spec, build_truncation(TruncationKind::beta, std::nullopt, upper, spec))},
        {"k_lambda", make_truncated(spec, build_truncation(TruncationKind::k_lambda, lower, upper, spec))},
        {"k_hat", make_truncated(spec, build_truncation(TruncationKind::k_hat, lower, std::nullopt, spec))},
    };
    for (const auto& [name, E] : energies) {
        for (int k = 0; k < points; ++k) {
            const Vector u = random_nodal(mesh, rng, -0.5, 3.0);
            const Vector d = random_nodal(mesh, rng, -1.0, 1.0);
            Vector g;
            E(u, &g);
            const double h = 1e-6;
            const double fd = (E(u + h * d, nullptr) - E(u - h * d, nullptr)) / (2.0 * h);
            const double an = g.dot(d);
            const double err = std::abs(fd - an) / std::max(std::abs(an), 1e-8);
            if (err > s.worst) {
                s.worst = err;
                s.detail = "worst: " + name;
            }
        }
    }
    s.passed = s.worst < s.bound;
    return s;
}

/// Multi-start agreement of the auxiliary solve and nodewise monotonicity in lambda.
inline SuiteResult suite_auxiliary(const ProblemSpec& spec, const SolveAtOptions& opts, const std::vector<double>& grid) {
    SuiteResult s{"auxiliary uniqueness and monotonicity", true, false, 0.0, 1e-6, {}};
    SolveOptions o = opts.solve;
    o.tolerance = std::min(o.tolerance, opts.auxiliary_tolerance);
    o.trace = nullptr;
    std::optional<Vector> prev;
    for (const double lambda : grid) {
        const AuxiliaryResult aux = solve_auxiliary(spec.with_lambda(lambda), o, opts.multistarts);
        s.worst = std::max(s.worst, aux.max_deviation);
        if (!aux.result.ok() || !aux.unique) {
            s.passed = false;
            s.detail += "lambda=" + format_double(lambda) + ": " + aux.result.message + "; ";
        }
        if (prev && (aux.result.solution - *prev).minCoeff() < -1e-8) {
            s.passed = false;
            s.detail += "u-bar decreases at lambda=" + format_double(lambda) + "; ";
        }
        prev = aux.result.solution;
    }
    return s;
}

/**
 * @brief FEM versus shooting oracle at one lambda (1D constant exponents).
 *
 * Every FEM solution and u-bar must lie within `tol` (sup norm) of an
 * oracle trajectory sampled to the mesh.
 */
inline SuiteResult suite_oracle(const RunConfig& config, const ProblemSpec& spec, const LambdaRecord& rec, double tol,
                                int threads = 1) {
    SuiteResult s{"oracle agreement", true, false, 0.0, tol, {}};
    auto inst = shooting_instance(config, spec.lambda);
    if (!inst) {
        s.skipped = true;
        s.detail = "needs a 1D constant-exponent problem";
        return s;
    }
    SlopeScan scan;
    scan.threads = threads;
    const int res = spec.mesh->resolution;
    auto closest = [&](const Vector& u, const std::vector<OracleSolution>& sols) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& o : sols) best = std::min(best, sup_norm(sample_to_mesh(o.trajectory, res) - u));
        return best;
    };
    const auto sols = enumerate_solutions_1d(*inst, scan);
    for (const auto& e : rec.solutions) {
        const double d = closest(e.values, sols);
        s.worst = std::max(s.worst, d);
        if (!(d <= tol)) s.detail += e.origin + " solution off by " + format_double(d) + "; ";
    }
    if (rec.auxiliary) {
        inst->auxiliary = true;
        const double d = closest(rec.auxiliary->values, enumerate_solutions_1d(*inst, scan));
        s.worst = std::max(s.worst, d);
        if (!(d <= tol)) s.detail += "u-bar off by " + format_double(d) + "; ";
    }
    if (rec.solutions.empty()) s.detail += "no FEM solutions to compare; ";
    s.detail += std::to_string(sols.size()) + " oracle solutions";
    s.passed = s.worst <= tol && !rec.solutions.empty();
    return s;
}

inline std::string render_suites(const std::vector<SuiteResult>& suites) {
    std::ostringstream os;
    std::size_t width = 5;
    for (const auto& s : suites) width = std::max(width, s.name.size());
    for (const auto& s : suites) {
        const char* tag = s.skipped ? "SKIP" : s.passed ? "PASS" : "FAIL";
        os << tag << "  " << s.name << std::string(width - s.name.size() + 2, ' ') << "worst " << format_double(s.worst)
           << " (bound " << format_double(s.bound) << ")";
        if (!s.detail.empty()) os << "  " << s.detail;
        os << "\n";
    }
    return os.str();
}

}  // namespace varexp
