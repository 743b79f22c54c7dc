#pragma once

#include "varexp/bifurcation.hpp"
#include "varexp/format.hpp"
#include "varexp/mesh.hpp"
#include "varexp/oracle.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace varexp {

using Json = nlohmann::ordered_json;

/// Bumped whenever a JSON layout changes.
inline constexpr int schema_version = 1;

inline Json to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline Json to_json(const SolutionEntry& e, bool with_values = true) {
    Json j;
    j["origin"] = e.origin;
    j["energy"] = e.energy;
    j["norm"] = e.norm;
    j["sup"] = e.sup;
    j["residual"] = e.residual;
    if (with_values) j["values"] = to_json(e.values);
    return j;
}

inline Json to_json(const LambdaRecord& r, bool with_values = true) {
    Json j;
    j["lambda"] = r.lambda;
    j["status"] = to_string(r.status);
    j["count"] = r.solutions.size();
    j["solutions"] = Json::array();
    for (const auto& s : r.solutions) j["solutions"].push_back(to_json(s, with_values));
    j["auxiliary"] = r.auxiliary ? to_json(*r.auxiliary, with_values) : Json(nullptr);
    j["minimal"] = r.minimal ? to_json(*r.minimal, with_values) : Json(nullptr);
    j["auxiliary_deviation"] = r.auxiliary_deviation;
    j["auxiliary_unique"] = r.auxiliary_unique;
    j["ridge_hint"] = r.ridge_hint;
    j["diagnostics"] = r.diagnostics;
    return j;
}

inline Json to_json(const Provenance& p) {
    Json j;
    j["dimension"] = p.dimension;
    j["resolution"] = p.resolution;
    j["seed"] = p.seed;
    j["tolerance"] = p.tolerance;
    j["certificate"] = p.certificate;
    j["multistarts"] = p.multistarts;
    j["path_points"] = p.path_points;
    return j;
}

inline Json to_json(const BifurcationDiagram& d) {
    Json j;
    j["schema_version"] = schema_version;
    j["kind"] = "bifurcation_diagram";
    j["provenance"] = to_json(d.provenance);
    if (d.lambda_star) {
        j["lambda_star"] = {{"label", "numerical existence threshold"},
                            {"estimate", d.lambda_star->estimate},
                            {"bracket", {d.lambda_star->lo, d.lambda_star->hi}},
                            {"bisections", d.lambda_star->bisections}};
    } else {
        j["lambda_star"] = nullptr;
    }
    j["ordering"] = {{"passed", d.ordering.passed()}, {"violations", d.ordering.violations}};
    j["records"] = Json::array();
    for (const auto& r : d.records) j["records"].push_back(to_json(r));
    return j;
}

inline Json record_document(const LambdaRecord& r, const Provenance& p) {
    Json j;
    j["schema_version"] = schema_version;
    j["kind"] = "lambda_record";
    j["provenance"] = to_json(p);
    j["record"] = to_json(r);
    return j;
}

namespace detail {

inline std::string csv_value(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace detail

/**
 * @brief One row per lambda:
 * lambda,status,count,minimal_norm,minimal_sup,energy_low,energy_high,auxiliary_sup.
 *
 * energy_low and energy_high are the smallest and largest phi-hat among the
 * solutions; empty cells mean "not available". A trailing comment line
 * carries the lambda* estimate and bracket when one was computed.
 */
inline void write_summary_csv(std::ostream& os, const BifurcationDiagram& d) {
    os << "lambda,status,count,minimal_norm,minimal_sup,energy_low,energy_high,auxiliary_sup\n";
    for (const auto& r : d.records) {
        std::optional<double> lo, hi;
        for (const auto& s : r.solutions) {
            lo = lo ? std::min(*lo, s.energy) : s.energy;
            hi = hi ? std::max(*hi, s.energy) : s.energy;
        }
        os << format_double(r.lambda) << ',' << to_string(r.status) << ',' << r.solutions.size() << ','
           << detail::csv_value(r.minimal ? std::optional(r.minimal->norm) : std::nullopt) << ','
           << detail::csv_value(r.minimal ? std::optional(r.minimal->sup) : std::nullopt) << ',' << detail::csv_value(lo)
           << ',' << detail::csv_value(hi) << ','
           << detail::csv_value(r.auxiliary ? std::optional(r.auxiliary->sup) : std::nullopt) << '\n';
    }
    if (d.lambda_star)
        os << "# lambda_star_estimate=" << format_double(d.lambda_star->estimate)
           << ",bracket_lo=" << format_double(d.lambda_star->lo) << ",bracket_hi=" << format_double(d.lambda_star->hi)
           << '\n';
}

/// Trajectory in the nodal CSV layout (node,x,value) on the uniform grid z = k h.
inline void write_trajectory_csv(std::ostream& os, const std::vector<double>& trajectory) {
    const std::size_t n = trajectory.size() - 1;
    os << "node,x,value\n";
    for (std::size_t k = 0; k <= n; ++k)
        os << k << ',' << format_double(static_cast<double>(k) / static_cast<double>(n)) << ','
           << format_double(trajectory[k]) << '\n';
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    auto os = open_output(path);
    os << text;
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline void write_nodal_csv(const std::filesystem::path& path, const Mesh& mesh, const Vector& u) {
    auto os = open_output(path);
    write_nodal_csv(os, mesh, u);
}

}  // namespace varexp
