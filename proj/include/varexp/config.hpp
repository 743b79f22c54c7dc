#pragma once

#include "varexp/bifurcation.hpp"
#include "varexp/energy.hpp"
#include "varexp/fields.hpp"
#include "varexp/format.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace varexp {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * @brief Everything a run needs, before sampling onto a mesh.
 *
 * Text format: INI sections [problem], [mesh], [solver], [sweep], [output]
 * with `key = value` lines. Full-line comments start with `#` or `;`.
 * Lists are comma separated; the tabulated nonlinearity is `x:f` pairs.
 */
struct RunConfig {
    // [problem]
    FieldExpr p = FieldExpr::constant(3.0);
    FieldExpr q = FieldExpr::constant(2.0);
    FieldExpr r = FieldExpr::constant(4.0);
    std::optional<FieldExpr> m;
    FieldExpr xi = FieldExpr::constant(0.0);
    NonlinearityKind nonlinearity = NonlinearityKind::f1;
    double coefficient = 1.0;
    std::vector<std::pair<double, double>> table;
    std::optional<double> lambda;
    std::optional<double> theta;
    std::optional<double> growth_cap;

    // [mesh]
    int dimension = 1;
    int resolution = 200;

    // [solver]
    double tolerance = 1e-8;
    int max_iterations = 20000;
    double armijo_c1 = 1e-4;
    double backtrack = 0.5;
    int memory = 10;
    std::uint64_t seed = 0;
    int multistarts = 20;
    double auxiliary_tolerance = 1e-10;
    int path_points = 41;
    int deformation_sweeps = 40;
    double bump = 0.1;
    double certificate = 1e-6;
    double dedupe = 1e-5;
    double divergence_bound = 1e6;

    // [sweep]
    std::vector<double> lambdas;
    bool lambda_star = true;
    double lambda_tolerance = 1e-3;

    // [output]
    std::string directory = "out";
    bool trace = false;

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string render_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out;
}

inline std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(parse_double(cell));
    return out;
}

inline long long parse_integer(const std::string& text) {
    const double v = parse_double(text);
    if (v != std::floor(v) || std::abs(v) > 9e15) throw std::invalid_argument("expected an integer, got '" + text + "'");
    return static_cast<long long>(v);
}

inline bool parse_bool(std::string text) {
    text = std::string(trim(text));
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw std::invalid_argument("expected true or false, got '" + text + "'");
}

inline NonlinearityKind parse_kind(const std::string& text) {
    const auto t = trim(text);
    if (t == "f1") return NonlinearityKind::f1;
    if (t == "f2") return NonlinearityKind::f2;
    if (t == "tabulated") return NonlinearityKind::tabulated;
    throw std::invalid_argument("unknown nonlinearity '" + std::string(t) + "' (expected f1, f2 or tabulated)");
}

inline std::vector<std::pair<double, double>> parse_table(const std::string& text) {
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(text);
    for (std::string cell; std::getline(ss, cell, ',');) {
        const auto colon = cell.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("table entries are x:f pairs, got '" + cell + "'");
        out.emplace_back(parse_double(cell.substr(0, colon)), parse_double(cell.substr(colon + 1)));
    }
    return out;
}

}  // namespace detail

/// Canonical text; parse_config(render_config(c)) == c.
inline std::string render_config(const RunConfig& c) {
    std::ostringstream os;
    os << "[problem]\n";
    os << "p = " << render_field(c.p) << "\n";
    os << "q = " << render_field(c.q) << "\n";
    os << "r = " << render_field(c.r) << "\n";
    if (c.m) os << "m = " << render_field(*c.m) << "\n";
    os << "xi = " << render_field(c.xi) << "\n";
    os << "nonlinearity = " << to_string(c.nonlinearity) << "\n";
    os << "coefficient = " << format_double(c.coefficient) << "\n";
    if (!c.table.empty()) {
        os << "table = ";
        for (std::size_t i = 0; i < c.table.size(); ++i)
            os << (i ? ", " : "") << format_double(c.table[i].first) << ":" << format_double(c.table[i].second);
        os << "\n";
    }
    if (c.lambda) os << "lambda = " << format_double(*c.lambda) << "\n";
    if (c.theta) os << "theta = " << format_double(*c.theta) << "\n";
    if (c.growth_cap) os << "growth_cap = " << format_double(*c.growth_cap) << "\n";
    os << "\n[mesh]\n";
    os << "dimension = " << c.dimension << "\n";
    os << "resolution = " << c.resolution << "\n";
    os << "\n[solver]\n";
    os << "tolerance = " << format_double(c.tolerance) << "\n";
    os << "max_iterations = " << c.max_iterations << "\n";
    os << "armijo_c1 = " << format_double(c.armijo_c1) << "\n";
    os << "backtrack = " << format_double(c.backtrack) << "\n";
    os << "memory = " << c.memory << "\n";
    os << "seed = " << c.seed << "\n";
    os << "multistarts = " << c.multistarts << "\n";
    os << "auxiliary_tolerance = " << format_double(c.auxiliary_tolerance) << "\n";
    os << "path_points = " << c.path_points << "\n";
    os << "deformation_sweeps = " << c.deformation_sweeps << "\n";
    os << "bump = " << format_double(c.bump) << "\n";
    os << "certificate = " << format_double(c.certificate) << "\n";
    os << "dedupe = " << format_double(c.dedupe) << "\n";
    os << "divergence_bound = " << format_double(c.divergence_bound) << "\n";
    os << "\n[sweep]\n";
    if (!c.lambdas.empty()) os << "lambdas = " << detail::render_list(c.lambdas) << "\n";
    os << "lambda_star = " << (c.lambda_star ? "true" : "false") << "\n";
    os << "lambda_tolerance = " << format_double(c.lambda_tolerance) << "\n";
    os << "\n[output]\n";
    os << "directory = " << c.directory << "\n";
    os << "trace = " << (c.trace ? "true" : "false") << "\n";
    return os.str();
}

inline std::shared_ptr<const Mesh> make_mesh(const RunConfig& c) {
    return std::make_shared<const Mesh>(build_mesh(c.dimension, c.resolution));
}

inline Nonlinearity make_nonlinearity(const RunConfig& c) {
    switch (c.nonlinearity) {
    case NonlinearityKind::f1: return Nonlinearity::builtin_f1(c.coefficient);
    case NonlinearityKind::f2: return Nonlinearity::builtin_f2(c.coefficient);
    case NonlinearityKind::tabulated: return Nonlinearity::tabulated(c.table);
    }
    throw std::logic_error("unknown nonlinearity kind");
}

inline ExponentField make_exponents(const RunConfig& c, const Mesh& mesh) {
    return ExponentField::sample(mesh, c.p, c.q, c.r, c.m);
}

/// Samples the configuration onto its mesh and validates it as a problem at `lambda`.
inline ProblemSpec make_spec(const RunConfig& c, double lambda, std::shared_ptr<const Mesh> mesh = nullptr) {
    if (!mesh) mesh = make_mesh(c);
    ExponentField exps = make_exponents(c, *mesh);
    Potential pot = Potential::sample(*mesh, c.xi);
    return ProblemSpec::create(mesh, std::move(exps), std::move(pot), make_nonlinearity(c), lambda, c.theta);
}

inline SolveAtOptions make_solve_at_options(const RunConfig& c) {
    SolveAtOptions o;
    o.solve.tolerance = c.tolerance;
    o.solve.max_iterations = c.max_iterations;
    o.solve.sufficient_decrease = c.armijo_c1;
    o.solve.backtrack = c.backtrack;
    o.solve.memory = c.memory;
    o.solve.seed = c.seed;
    o.solve.divergence_bound = c.divergence_bound;
    o.multistarts = c.multistarts;
    o.auxiliary_tolerance = c.auxiliary_tolerance;
    o.mountain.path_points = c.path_points;
    o.mountain.deformation_sweeps = c.deformation_sweeps;
    o.bump = c.bump;
    o.certificate = c.certificate;
    o.dedupe = c.dedupe;
    return o;
}

/**
 * @brief Parses and validates a configuration.
 *
 * Unknown sections or keys, malformed values and a failing exponent chain
 * are errors; the chain failure message carries the validation report.
 */
inline RunConfig parse_config(const std::string& text) {
    // strip full-line comments; the INI reader only knows ';'
    std::string cleaned;
    {
        std::istringstream in(text);
        for (std::string line; std::getline(in, line);) {
            const auto t = trim(line);
            if (!t.empty() && (t.front() == '#' || t.front() == ';')) continue;
            cleaned += line + "\n";
        }
    }
    boost::property_tree::ptree tree;
    try {
        std::istringstream in(cleaned);
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& err) {
        throw ConfigError("config syntax error at line " + std::to_string(err.line()) + ": " + err.message());
    }

    RunConfig c;
    using Setter = void (*)(RunConfig&, const std::string&);
    static const std::map<std::string, std::map<std::string, Setter>> keys = {
        {"problem",
         {{"p", [](RunConfig& c, const std::string& v) { c.p = parse_field(v); }},
          {"q", [](RunConfig& c, const std::string& v) { c.q = parse_field(v); }},
          {"r", [](RunConfig& c, const std::string& v) { c.r = parse_field(v); }},
          {"m", [](RunConfig& c, const std::string& v) { c.m = parse_field(v); }},
          {"xi", [](RunConfig& c, const std::string& v) { c.xi = parse_field(v); }},
          {"nonlinearity", [](RunConfig& c, const std::string& v) { c.nonlinearity = detail::parse_kind(v); }},
          {"coefficient", [](RunConfig& c, const std::string& v) { c.coefficient = parse_double(v); }},
          {"table", [](RunConfig& c, const std::string& v) { c.table = detail::parse_table(v); }},
          {"lambda", [](RunConfig& c, const std::string& v) { c.lambda = parse_double(v); }},
          {"theta", [](RunConfig& c, const std::string& v) { c.theta = parse_double(v); }},
          {"growth_cap", [](RunConfig& c, const std::string& v) { c.growth_cap = parse_double(v); }}}},
        {"mesh",
         {{"dimension", [](RunConfig& c, const std::string& v) { c.dimension = static_cast<int>(detail::parse_integer(v)); }},
          {"resolution", [](RunConfig& c, const std::string& v) { c.resolution = static_cast<int>(detail::parse_integer(v)); }}}},
        {"solver",
         {{"tolerance", [](RunConfig& c, const std::string& v) { c.tolerance = parse_double(v); }},
          {"max_iterations", [](RunConfig& c, const std::string& v) { c.max_iterations = static_cast<int>(detail::parse_integer(v)); }},
          {"armijo_c1", [](RunConfig& c, const std::string& v) { c.armijo_c1 = parse_double(v); }},
          {"backtrack", [](RunConfig& c, const std::string& v) { c.backtrack = parse_double(v); }},
          {"memory", [](RunConfig& c, const std::string& v) { c.memory = static_cast<int>(detail::parse_integer(v)); }},
          {"seed", [](RunConfig& c, const std::string& v) { c.seed = std::stoull(std::string(trim(v))); }},
          {"multistarts", [](RunConfig& c, const std::string& v) { c.multistarts = static_cast<int>(detail::parse_integer(v)); }},
          {"auxiliary_tolerance", [](RunConfig& c, const std::string& v) { c.auxiliary_tolerance = parse_double(v); }},
          {"path_points", [](RunConfig& c, const std::string& v) { c.path_points = static_cast<int>(detail::parse_integer(v)); }},
          {"deformation_sweeps",
           [](RunConfig& c, const std::string& v) { c.deformation_sweeps = static_cast<int>(detail::parse_integer(v)); }},
          {"bump", [](RunConfig& c, const std::string& v) { c.bump = parse_double(v); }},
          {"certificate", [](RunConfig& c, const std::string& v) { c.certificate = parse_double(v); }},
          {"dedupe", [](RunConfig& c, const std::string& v) { c.dedupe = parse_double(v); }},
          {"divergence_bound", [](RunConfig& c, const std::string& v) { c.divergence_bound = parse_double(v); }}}},
        {"sweep",
         {{"lambdas", [](RunConfig& c, const std::string& v) { c.lambdas = detail::parse_list(v); }},
          {"lambda_star", [](RunConfig& c, const std::string& v) { c.lambda_star = detail::parse_bool(v); }},
          {"lambda_tolerance", [](RunConfig& c, const std::string& v) { c.lambda_tolerance = parse_double(v); }}}},
        {"output",
         {{"directory", [](RunConfig& c, const std::string& v) { c.directory = std::string(trim(v)); }},
          {"trace", [](RunConfig& c, const std::string& v) { c.trace = detail::parse_bool(v); }}}},
    };

    std::set<std::string> seen;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' is outside any section");
        const auto sec = keys.find(section);
        if (sec == keys.end()) throw ConfigError("unknown section [" + section + "]");
        for (const auto& [key, value] : body) {
            const auto setter = sec->second.find(key);
            if (setter == sec->second.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
            try {
                setter->second(c, value.data());
            } catch (const std::exception& err) {
                throw ConfigError("[" + section + "] " + key + ": " + err.what());
            }
            seen.insert(section + "." + key);
        }
    }
    for (const char* required : {"problem.p", "problem.q", "problem.r"})
        if (!seen.count(required)) throw ConfigError(std::string("missing required key ") + required);

    // validation that needs the mesh
    try {
        const auto mesh = make_mesh(c);
        const ExponentField exps = make_exponents(c, *mesh);
        const Potential pot = Potential::sample(*mesh, c.xi);
        const ValidationReport h0 = check_H0(exps, pot, mesh.get());
        if (!h0.passed()) {
            std::string names;
            for (const auto& n : h0.failures()) names += (names.empty() ? "" : ", ") + n;
            throw ConfigError("exponent hypotheses violated (" + names + "):\n" + h0.to_text());
        }
        require_compatible(make_nonlinearity(c), exps);
        if (c.theta && !(*c.theta > pot.sup_norm)) throw ConfigError("theta must exceed |xi|_inf");
        if (c.lambda && !(*c.lambda > 0.0)) throw ConfigError("lambda must be positive");
        make_solve_at_options(c).solve.validate();
        if (c.multistarts < 0 || c.path_points < 3 || c.deformation_sweeps < 0)
            throw ConfigError("multistarts, path_points and deformation_sweeps out of range");
        for (std::size_t k = 0; k < c.lambdas.size(); ++k)
            if (!(c.lambdas[k] > 0.0) || (k && !(c.lambdas[k] > c.lambdas[k - 1])))
                throw ConfigError("sweep lambdas must be positive and strictly increasing");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& err) {
        throw ConfigError(err.what());
    }
    return c;
}

}  // namespace varexp
