#pragma once

#include "varexp/bifurcation.hpp"
#include "varexp/config.hpp"
#include "varexp/io.hpp"
#include "varexp/oracle.hpp"
#include "varexp/verify.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

namespace varexp {

/// Command-line overrides shared by all subcommands.
struct CommandContext {
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    /// 0 picks the hardware concurrency.
    int threads = 1;
    std::ostream* log = &std::cerr;
};

namespace detail {

inline int resolve_threads(int threads) {
    if (threads > 0) return threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

inline RunConfig apply_context(RunConfig c, const CommandContext& ctx) {
    if (ctx.out) c.directory = ctx.out->string();
    if (ctx.seed) c.seed = *ctx.seed;
    return c;
}

inline std::filesystem::path prepare_directory(const RunConfig& c) {
    const std::filesystem::path dir(c.directory);
    std::filesystem::create_directories(dir);
    const auto probe = dir / ".write-probe";
    {
        std::ofstream os(probe);
        if (!os) throw std::runtime_error("output directory " + dir.string() + " is not writable");
    }
    std::filesystem::remove(probe);
    return dir;
}

inline Provenance provenance_of(const RunConfig& c) {
    return {c.dimension, c.resolution, c.seed, c.tolerance, c.certificate, c.multistarts, c.path_points};
}

}  // namespace detail

/**
 * @brief Solves at [problem] lambda; writes record.json, solution_<k>.csv,
 * auxiliary.csv, minimal.csv and, with [output] trace, trace.csv.
 *
 * Status none is a valid answer. Exit 1 only when the auxiliary solve fails.
 */
inline int cmd_solve(RunConfig config, const CommandContext& ctx = {}) {
    config = detail::apply_context(std::move(config), ctx);
    if (!config.lambda) throw ConfigError("solve needs [problem] lambda");
    const auto dir = detail::prepare_directory(config);
    const ProblemSpec spec = make_spec(config, *config.lambda);
    SolveAtOptions opts = make_solve_at_options(config);
    std::optional<std::ofstream> trace;
    if (config.trace) {
        trace.emplace(open_output(dir / "trace.csv"));
        *trace << "iteration,energy,gradient_norm\n";
        opts.solve.trace = [&trace](int it, double e, double g) {
            *trace << it << ',' << format_double(e) << ',' << format_double(g) << '\n';
        };
    }
    const LambdaRecord rec = solve_at(spec, opts);
    write_json(dir / "record.json", record_document(rec, detail::provenance_of(config)));
    for (std::size_t k = 0; k < rec.solutions.size(); ++k)
        write_nodal_csv(dir / ("solution_" + std::to_string(k) + ".csv"), *spec.mesh, rec.solutions[k].values);
    if (rec.auxiliary) write_nodal_csv(dir / "auxiliary.csv", *spec.mesh, rec.auxiliary->values);
    if (rec.minimal) write_nodal_csv(dir / "minimal.csv", *spec.mesh, rec.minimal->values);

    *ctx.log << "lambda " << format_double(rec.lambda) << ": " << to_string(rec.status) << " (" << rec.solutions.size()
             << " solutions)\n";
    for (const auto& s : rec.solutions)
        *ctx.log << "  " << s.origin << "  energy " << format_double(s.energy) << "  sup " << format_double(s.sup)
                 << "  residual " << format_double(s.residual) << "\n";
    for (const auto& d : rec.diagnostics) *ctx.log << "  note: " << d << "\n";
    return rec.auxiliary ? 0 : 1;
}

/**
 * @brief Sweeps [sweep] lambdas; writes diagram.json and summary.csv.
 *
 * Exit 1 when any auxiliary solve fails; ordering violations are reported
 * in the outputs but are findings, not failures.
 */
inline int cmd_sweep(RunConfig config, const CommandContext& ctx = {}) {
    config = detail::apply_context(std::move(config), ctx);
    if (config.lambdas.empty()) throw ConfigError("sweep needs [sweep] lambdas");
    const auto dir = detail::prepare_directory(config);
    const ProblemSpec spec = make_spec(config, config.lambdas.front());
    const SweepOptions so{detail::resolve_threads(ctx.threads), config.lambda_star, config.lambda_tolerance};
    const BifurcationDiagram d = sweep(config.lambdas, spec, make_solve_at_options(config), so);
    write_json(dir / "diagram.json", to_json(d));
    {
        auto os = open_output(dir / "summary.csv");
        write_summary_csv(os, d);
    }
    bool ok = true;
    for (const auto& r : d.records) {
        ok = ok && r.auxiliary.has_value();
        *ctx.log << "lambda " << format_double(r.lambda) << ": " << to_string(r.status) << "\n";
    }
    if (d.lambda_star)
        *ctx.log << "numerical existence threshold " << format_double(d.lambda_star->estimate) << " in ["
                 << format_double(d.lambda_star->lo) << ", " << format_double(d.lambda_star->hi) << "]\n";
    for (const auto& v : d.ordering.violations) *ctx.log << "ordering: " << v << "\n";
    return ok ? 0 : 1;
}

/**
 * @brief Property suites on the configured problem; prints a table and
 * writes verify.json. Exit 0 iff no suite fails.
 *
 * The suites run at [problem] lambda, else the first [sweep] lambda, else
 * 0.05. The oracle bound 2e-3 holds at resolution 400 and is scaled by
 * (400/resolution)^2 on coarser meshes, the P1 error rate.
 */
inline int cmd_verify(RunConfig config, const CommandContext& ctx = {}) {
    config = detail::apply_context(std::move(config), ctx);
    const auto dir = detail::prepare_directory(config);
    const double lambda = config.lambda ? *config.lambda : config.lambdas.empty() ? 0.05 : config.lambdas.front();
    const ProblemSpec spec = make_spec(config, lambda);
    const SolveAtOptions opts = make_solve_at_options(config);
    const int threads = detail::resolve_threads(ctx.threads);

    std::vector<SuiteResult> suites;
    suites.push_back(suite_modular(spec, config.seed));
    suites.push_back(suite_monotonicity(spec, config.seed));
    suites.push_back(suite_gradients(spec, config.seed));
    suites.push_back(suite_auxiliary(spec, opts, {0.5 * lambda, lambda, 2.0 * lambda}));
    const LambdaRecord rec = solve_at(spec, opts);
    {
        SuiteResult s{"multiplicity at lambda", rec.status == Status::two_or_more, false,
                      static_cast<double>(rec.solutions.size()), 2.0, to_string(rec.status)};
        suites.push_back(s);
    }
    const double oracle_tol = 2e-3 * std::max(1.0, std::pow(400.0 / config.resolution, 2));
    suites.push_back(suite_oracle(config, spec, rec, oracle_tol, threads));

    bool ok = true;
    Json j;
    j["schema_version"] = schema_version;
    j["kind"] = "verify";
    j["lambda"] = lambda;
    j["suites"] = Json::array();
    for (const auto& s : suites) {
        ok = ok && (s.passed || s.skipped);
        j["suites"].push_back({{"name", s.name},
                               {"result", s.skipped ? "skip" : s.passed ? "pass" : "fail"},
                               {"worst", s.worst},
                               {"bound", s.bound},
                               {"detail", s.detail}});
    }
    j["passed"] = ok;
    write_json(dir / "verify.json", j);
    std::cout << render_suites(suites);
    return ok ? 0 : 1;
}

/**
 * @brief Shooting oracle at [problem] lambda (1D constant exponents);
 * writes oracle.json, oracle_<k>.csv and oracle_auxiliary.csv. With
 * [sweep] lambda_star and a grid whose ends straddle the threshold, the
 * oracle threshold is bisected as well.
 */
inline int cmd_oracle(RunConfig config, const CommandContext& ctx = {}) {
    config = detail::apply_context(std::move(config), ctx);
    if (!config.lambda) throw ConfigError("oracle needs [problem] lambda");
    auto inst = shooting_instance(config, *config.lambda);
    if (!inst) throw ConfigError("oracle needs dimension 1 and constant p, q, r, m and xi");
    const auto dir = detail::prepare_directory(config);
    SlopeScan scan;
    scan.threads = detail::resolve_threads(ctx.threads);

    const auto sols = enumerate_solutions_1d(*inst, scan);
    ShootingInstance aux = *inst;
    aux.auxiliary = true;
    const auto aux_sols = enumerate_solutions_1d(aux, scan);

    Json j;
    j["schema_version"] = schema_version;
    j["kind"] = "oracle";
    j["lambda"] = *config.lambda;
    j["step"] = inst->h;
    auto listing = [](const std::vector<OracleSolution>& v) {
        Json a = Json::array();
        for (const auto& s : v) a.push_back({{"slope", s.slope}, {"sup", s.sup}});
        return a;
    };
    j["solutions"] = listing(sols);
    j["auxiliary"] = listing(aux_sols);
    j["threshold"] = nullptr;
    if (config.lambda_star && config.lambdas.size() >= 2) {
        try {
            const OracleThreshold t = oracle_threshold(*inst, config.lambdas.front(), config.lambdas.back(),
                                                       config.lambda_tolerance / config.lambdas.back(), scan);
            j["threshold"] = {{"estimate", t.estimate}, {"bracket", {t.lo, t.hi}}};
            *ctx.log << "oracle threshold " << format_double(t.estimate) << "\n";
        } catch (const std::invalid_argument& err) {
            *ctx.log << "oracle threshold skipped: " << err.what() << "\n";
        }
    }
    write_json(dir / "oracle.json", j);
    for (std::size_t k = 0; k < sols.size(); ++k) {
        auto os = open_output(dir / ("oracle_" + std::to_string(k) + ".csv"));
        write_trajectory_csv(os, sols[k].trajectory);
    }
    if (!aux_sols.empty()) {
        auto os = open_output(dir / "oracle_auxiliary.csv");
        write_trajectory_csv(os, aux_sols.front().trajectory);
    }
    *ctx.log << sols.size() << " positive solutions, " << aux_sols.size() << " auxiliary\n";
    for (const auto& s : sols)
        *ctx.log << "  slope " << format_double(s.slope) << "  sup " << format_double(s.sup) << "\n";
    return 0;
}

}  // namespace varexp
