#pragma once

#include "varexp/energy.hpp"
#include "varexp/modular.hpp"
#include "varexp/parallel.hpp"
#include "varexp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace varexp {

enum class Status { two_or_more, one, none };

inline std::string to_string(Status s) {
    switch (s) {
    case Status::two_or_more: return "two-or-more";
    case Status::one: return "one";
    case Status::none: return "none";
    }
    return {};
}

/// A catalogued nodal function with its diagnostics.
struct SolutionEntry {
    Vector values;
    /// phi-hat for solutions, gamma for the auxiliary solution.
    double energy = 0.0;
    /// |Du|_{p(z)}.
    double norm = 0.0;
    double sup = 0.0;
    /// Dual norm of the gradient of the energy the entry is a critical point of.
    double residual = 0.0;
    /// "minimizer", "mountain-pass", "minimal" or "auxiliary".
    std::string origin;
};

struct LambdaRecord {
    double lambda = 0.0;
    /// Verified, pairwise distinct positive solutions.
    std::vector<SolutionEntry> solutions;
    std::optional<SolutionEntry> auxiliary;
    std::optional<SolutionEntry> minimal;
    Status status = Status::none;
    /// Largest multi-start deviation of the auxiliary solve.
    double auxiliary_deviation = 0.0;
    bool auxiliary_unique = true;
    /// Small-lambda ridge radius t0 from the mountain-pass geometry.
    double ridge_hint = 0.0;
    std::vector<std::string> diagnostics;
};

struct SolveAtOptions {
    SolveOptions solve;
    MountainPassOptions mountain;
    /// Random restarts of the auxiliary solve (uniqueness surrogate).
    int multistarts = 20;
    /// Tolerance of the auxiliary solve; tighter than `solve` so restarts agree to 1e-6.
    double auxiliary_tolerance = 1e-10;
    /// The truncated minimization starts from (1 + bump) u-bar.
    double bump = 0.1;
    bool run_mountain_pass = true;
    bool run_minimal = true;
    /// Residual bound (dual norm) that certifies a solution.
    double certificate = 1e-6;
    /// Solutions closer than this in sup norm are the same solution.
    double dedupe = 1e-5;
};

inline SolutionEntry make_entry(const Vector& u, const ProblemSpec& spec, std::string origin) {
    SolutionEntry e;
    e.values = u;
    e.energy = energy_phi_hat(u, spec);
    e.norm = gradient_norm(u, spec.exponents.p, *spec.mesh);
    e.sup = sup_norm(u);
    e.residual = residual_check(u, spec);
    e.origin = std::move(origin);
    return e;
}

/**
 * @brief Catalogues positive solutions at spec.lambda.
 *
 * Pipeline: auxiliary solve for u-bar; minimization of the k_hat truncated
 * energy from (1 + bump) u-bar, giving u0; mountain pass of the same energy
 * between u0 and a far point on the ray through u0, giving u-hat; residual
 * certification against phi-hat; minimal solution below the smallest
 * verified solution; dedupe. Divergence of the truncated minimization
 * (energy unbounded below) leaves the record with status none.
 */
inline LambdaRecord solve_at(const ProblemSpec& spec, const SolveAtOptions& opts = {}) {
    LambdaRecord rec;
    rec.lambda = spec.lambda;
    rec.ridge_hint = ridge_radius_hint(spec);
    const Metric& metric = *spec.metric;

    SolveOptions aux_opts = opts.solve;
    aux_opts.tolerance = std::min(opts.solve.tolerance, opts.auxiliary_tolerance);
    aux_opts.trace = nullptr;
    const AuxiliaryResult aux = solve_auxiliary(spec, aux_opts, opts.multistarts);
    rec.auxiliary_deviation = aux.max_deviation;
    rec.auxiliary_unique = aux.unique;
    if (!aux.unique) rec.diagnostics.push_back("auxiliary multi-start disagreement " + format_double(aux.max_deviation));
    if (!aux.result.ok()) {
        rec.diagnostics.push_back("auxiliary solve failed: " + aux.result.message);
        return rec;
    }
    const Vector& ubar = aux.result.solution;
    {
        SolutionEntry e;
        e.values = ubar;
        e.energy = aux.result.energy;
        e.norm = gradient_norm(ubar, spec.exponents.p, *spec.mesh);
        e.sup = sup_norm(ubar);
        e.residual = aux.result.gradient_norm;
        e.origin = "auxiliary";
        rec.auxiliary = std::move(e);
    }

    const TruncatedProblem tp = build_truncation(TruncationKind::k_hat, ubar, std::nullopt, spec);
    const EnergyFn tau = make_truncated(spec, tp);
    std::vector<std::pair<Vector, std::string>> candidates;

    const SolveResult low = minimize(tau, metric, (1.0 + opts.bump) * ubar, opts.solve);
    if (!low.ok()) {
        rec.diagnostics.push_back("truncated minimization: " + low.message);
    } else {
        candidates.emplace_back(low.solution, "minimizer");
        if (opts.run_mountain_pass) {
            const auto far = find_far_point(tau, low.solution, std::min(-1.0, low.energy - 1.0));
            if (!far) {
                rec.diagnostics.push_back("no far point along the ray through u0");
            } else {
                const SolveResult mp = mountain_pass(tau, metric, low.solution, *far, opts.solve, opts.mountain);
                if (!mp.ok()) {
                    rec.diagnostics.push_back("mountain pass: " + mp.message);
                } else {
                    candidates.emplace_back(mp.solution, "mountain-pass");
                    const double norm = gradient_norm(mp.solution, spec.exponents.p, *spec.mesh);
                    if (norm < 1e-3 * rec.ridge_hint)
                        rec.diagnostics.push_back("mountain-pass solution norm " + format_double(norm) +
                                                  " is far below the ridge radius hint " + format_double(rec.ridge_hint));
                }
            }
        }
    }

    auto admit = [&](const Vector& u, const std::string& origin) -> bool {
        const double res = residual_check(u, spec);
        if (!(res <= opts.certificate)) {
            rec.diagnostics.push_back(origin + " rejected: residual " + format_double(res));
            return false;
        }
        if (!is_positive(u) || !(sup_norm(u) > 1e-12)) {
            rec.diagnostics.push_back(origin + " rejected: not a nontrivial positive function");
            return false;
        }
        for (const auto& s : rec.solutions)
            if (sup_norm(s.values - u) <= opts.dedupe) return true;
        if ((u - ubar).minCoeff() < -1e-6) rec.diagnostics.push_back(origin + " solution dips below u-bar");
        rec.solutions.push_back(make_entry(u, spec, origin));
        return true;
    };
    for (const auto& [u, origin] : candidates) admit(u, origin);

    if (opts.run_minimal && !rec.solutions.empty()) {
        const auto smallest = std::min_element(rec.solutions.begin(), rec.solutions.end(),
                                               [](const auto& a, const auto& b) { return a.sup < b.sup; });
        const SolveResult ms = minimal_solution(spec, smallest->values, ubar, opts.solve);
        if (!ms.message.empty()) rec.diagnostics.push_back("minimal solution: " + ms.message);
        if (ms.ok() && admit(ms.solution, "minimal")) rec.minimal = make_entry(ms.solution, spec, "minimal");
    }

    rec.status = rec.solutions.size() >= 2 ? Status::two_or_more
                 : rec.solutions.size() == 1 ? Status::one
                                             : Status::none;
    return rec;
}

struct LambdaStar {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int bisections = 0;
};

/**
 * @brief Bisection on "solve_at finds a verified solution" between lo
 * (solutions) and hi (none) down to width `tol`. This is the numerical
 * existence threshold.
 *
 * The predicate skips the mountain pass, the minimal solution and the
 * auxiliary restarts. If an endpoint disagrees with its expected outcome
 * the predicate is retried once with a doubled iteration cap.
 */
inline LambdaStar estimate_lambda_star(double lo, double hi, double tol, const ProblemSpec& spec,
                                       const SolveAtOptions& opts = {}) {
    if (!(lo > 0.0 && hi > lo)) throw std::invalid_argument("lambda* bracket must satisfy 0 < lo < hi");
    if (!(tol > 0.0)) throw std::invalid_argument("lambda* tolerance must be positive");
    SolveAtOptions pred = opts;
    pred.run_mountain_pass = false;
    pred.run_minimal = false;
    pred.multistarts = 0;
    pred.solve.trace = nullptr;
    auto exists = [&](double lambda, const SolveAtOptions& o) { return !solve_at(spec.with_lambda(lambda), o).solutions.empty(); };

    if (!exists(lo, pred) || exists(hi, pred)) {
        SolveAtOptions retry = pred;
        retry.solve.max_iterations *= 2;
        if (!exists(lo, retry)) throw std::runtime_error("lambda* bisection: no solution at the lower end " + format_double(lo));
        if (exists(hi, retry)) throw std::runtime_error("lambda* bisection: solutions at the upper end " + format_double(hi));
        pred = retry;
    }
    LambdaStar out;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (exists(mid, pred) ? lo : hi) = mid;
        ++out.bisections;
    }
    out.lo = lo;
    out.hi = hi;
    out.estimate = 0.5 * (lo + hi);
    return out;
}

struct OrderingReport {
    std::vector<std::string> violations;
    bool passed() const { return violations.empty(); }
};

struct Provenance {
    int dimension = 1;
    int resolution = 0;
    std::uint64_t seed = 0;
    double tolerance = 0.0;
    double certificate = 0.0;
    int multistarts = 0;
    int path_points = 0;
};

struct BifurcationDiagram {
    std::vector<LambdaRecord> records;
    std::optional<LambdaStar> lambda_star;
    Provenance provenance;
    OrderingReport ordering;
};

/**
 * @brief Ordering structure of a diagram.
 *
 * Checks every solution against u-bar (tol 1e-6); u-bar nondecreasing in
 * lambda (tol 1e-8); for consecutive records with solutions, some pair
 * u_mu <= u_lambda with a strictly positive gap at every interior node, and
 * the same strict gap between minimal solutions; once a record has no
 * solution, no later record has one.
 */
inline OrderingReport check_ordering(const BifurcationDiagram& diagram, const Mesh& mesh) {
    OrderingReport rep;
    auto strictly_below = [&](const Vector& a, const Vector& b) {
        for (std::size_t i = 0; i < mesh.node_count(); ++i)
            if (!mesh.boundary[i] && !(b[static_cast<Eigen::Index>(i)] - a[static_cast<Eigen::Index>(i)] > 0.0)) return false;
        return true;
    };
    const LambdaRecord* prev = nullptr;
    bool seen_none = false;
    for (const auto& rec : diagram.records) {
        const std::string tag = "lambda=" + format_double(rec.lambda);
        if (rec.solutions.empty()) {
            seen_none = true;
            continue;
        }
        if (seen_none) rep.violations.push_back(tag + ": solutions found after a lambda without solutions");
        if (rec.auxiliary)
            for (const auto& s : rec.solutions)
                if ((s.values - rec.auxiliary->values).minCoeff() < -1e-6)
                    rep.violations.push_back(tag + ": " + s.origin + " solution below u-bar");
        if (prev) {
            const std::string pair = "lambda " + format_double(prev->lambda) + " -> " + format_double(rec.lambda);
            if (prev->auxiliary && rec.auxiliary && (rec.auxiliary->values - prev->auxiliary->values).minCoeff() < -1e-8)
                rep.violations.push_back(pair + ": u-bar decreases");
            bool ordered_pair = false;
            for (const auto& a : prev->solutions)
                for (const auto& b : rec.solutions) ordered_pair = ordered_pair || strictly_below(a.values, b.values);
            if (!ordered_pair) rep.violations.push_back(pair + ": no strictly ordered solution pair");
            if (prev->minimal && rec.minimal && !strictly_below(prev->minimal->values, rec.minimal->values))
                rep.violations.push_back(pair + ": minimal solutions not strictly increasing");
        }
        prev = &rec;
    }
    return rep;
}

struct SweepOptions {
    int threads = 1;
    bool estimate_lambda_star = true;
    double lambda_tolerance = 1e-3;
};

/**
 * @brief solve_at over an increasing grid, merged in lambda order.
 *
 * Per-lambda solves are independent and use the same seed, so the
 * diagram does not depend on the thread count. When the grid crosses from
 * solutions to none, lambda* is bisected inside that step.
 */
inline BifurcationDiagram sweep(const std::vector<double>& grid, const ProblemSpec& spec, const SolveAtOptions& opts = {},
                                const SweepOptions& sweep_opts = {}) {
    if (grid.empty()) throw std::invalid_argument("lambda grid is empty");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] > 0.0)) throw std::invalid_argument("lambda grid values must be positive");
        if (k && !(grid[k] > grid[k - 1])) throw std::invalid_argument("lambda grid must be strictly increasing");
    }
    BifurcationDiagram d;
    d.records.resize(grid.size());
    SolveAtOptions local = opts;
    local.solve.trace = nullptr;
    detail::parallel_for(static_cast<int>(grid.size()), sweep_opts.threads, [&](int k) {
        d.records[static_cast<std::size_t>(k)] = solve_at(spec.with_lambda(grid[static_cast<std::size_t>(k)]), local);
    });
    d.provenance = {spec.mesh->dimension, spec.mesh->resolution, opts.solve.seed,      opts.solve.tolerance,
                    opts.certificate,     opts.multistarts,      opts.mountain.path_points};
    if (sweep_opts.estimate_lambda_star) {
        for (std::size_t k = 1; k < d.records.size(); ++k) {
            if (!d.records[k - 1].solutions.empty() && d.records[k].solutions.empty()) {
                try {
                    d.lambda_star = estimate_lambda_star(grid[k - 1], grid[k], sweep_opts.lambda_tolerance, spec, local);
                } catch (const std::runtime_error& err) {
                    d.records[k].diagnostics.push_back(std::string("lambda* bisection skipped: ") + err.what());
                }
                break;
            }
        }
    }
    d.ordering = check_ordering(d, *spec.mesh);
    return d;
}

}  // namespace varexp
