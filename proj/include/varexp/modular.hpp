#pragma once

#include "varexp/fields.hpp"
#include "varexp/mesh.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace varexp {

/// rho(u) = sum_i w_i |u_i|^{p_i}, exponents taken at the nodes.
inline double modular_rho(const Vector& u, const SampledField& p, const Mesh& mesh) {
    require_conforming(mesh, u);
    double s = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (u[i] != 0.0) s += mesh.lumped_weights[i] * std::pow(std::abs(u[i]), p.nodes[i]);
    return s;
}

/// rho-hat(Du) = sum_e |e| |Du_e|^{p(mid_e)}.
inline double modular_rho_grad(const Vector& u, const SampledField& p, const Mesh& mesh) {
    require_conforming(mesh, u);
    double s = 0.0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Point g = element_gradient(mesh, u, e);
        const double norm = std::hypot(g[0], g[1]);
        if (norm != 0.0) s += mesh.measures[e] * std::pow(norm, p.midpoints[static_cast<Eigen::Index>(e)]);
    }
    return s;
}

/**
 * @brief Root t > 0 of rho(u/t) = 1 given the map t -> rho(u/t).
 *
 * Brackets by doubling or halving from `seed`, then bisects to relative
 * width 1e-12 (at most 200 steps). Returns 0 when the modular vanishes.
 */
inline double luxemburg_norm(const std::function<double(double)>& scaled_modular, double seed = 1.0) {
    if (!(seed > 0.0) || !std::isfinite(seed)) throw std::invalid_argument("Luxemburg seed must be positive");
    const double at_seed = scaled_modular(seed);
    if (!std::isfinite(at_seed)) throw std::domain_error("modular is not finite at the seed scale");
    if (at_seed == 0.0) return 0.0;

    double lo = seed, hi = seed;
    if (at_seed > 1.0) {
        while (scaled_modular(hi) > 1.0) {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        while (scaled_modular(lo) <= 1.0) {
            hi = lo;
            lo *= 0.5;
            if (lo < 1e-300) return lo;
        }
    }
    // invariant: rho(u/lo) > 1 >= rho(u/hi)
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (scaled_modular(mid) > 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Luxemburg norm of u in L^{p(z)}.
inline double luxemburg_norm(const Vector& u, const SampledField& p, const Mesh& mesh) {
    const double seed = std::max(sup_norm(u), 1e-300);
    return luxemburg_norm([&](double t) { return modular_rho(u / t, p, mesh); }, seed);
}

/// The norm |u| = |Du|_{p(z)} used throughout the solver.
inline double gradient_norm(const Vector& u, const SampledField& p, const Mesh& mesh) {
    double seed = 0.0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Point g = element_gradient(mesh, u, e);
        seed = std::max(seed, std::hypot(g[0], g[1]));
    }
    return luxemburg_norm([&](double t) { return modular_rho_grad(u / t, p, mesh); }, std::max(seed, 1e-300));
}

namespace detail {

/// Relations between a modular value and its norm, with exponent range [lo, hi].
inline void modular_relations(ValidationReport& report, const std::string& tag, double norm, double modular,
                              double p_lo, double p_hi) {
    // same side of 1
    const double side = (norm - 1.0) * (modular - 1.0);
    const bool equal_one = std::abs(norm - 1.0) <= 1e-12 ? std::abs(modular - 1.0) <= 1e-10 : true;
    report.entries.push_back({tag + ": norm vs 1 matches modular vs 1", side >= -1e-10 && equal_one, side, "",
                              "norm = " + format_double(norm) + ", modular = " + format_double(modular)});

    const double small_exp = norm <= 1.0 ? p_hi : p_lo;
    const double large_exp = norm <= 1.0 ? p_lo : p_hi;
    const double lower = std::pow(norm, small_exp), upper = std::pow(norm, large_exp);
    const double lower_slack = lower > 0.0 ? (modular - lower) / lower : modular;
    const double upper_slack = upper > 0.0 ? (upper - modular) / upper : -modular;
    report.entries.push_back({tag + ": lower power bound", lower_slack >= -1e-10, lower_slack, "",
                              "norm^" + format_double(small_exp) + " <= modular"});
    report.entries.push_back({tag + ": upper power bound", upper_slack >= -1e-10, upper_slack, "",
                              "modular <= norm^" + format_double(large_exp)});
}

}  // namespace detail

/**
 * @brief Evaluates the norm-modular relations for u and Du.
 *
 * For each of (rho, |u|_{p(z)}) and (rho-hat, |Du|_{p(z)}): the norm and the
 * modular lie on the same side of 1, and min(|u|^{p_-}, |u|^{p_+}) <= modular
 * <= max(...). Exponent extrema are the discrete ones the quadratures use
 * (nodes for rho, midpoints for rho-hat). Slacks are relative.
 */
inline ValidationReport check_modular_norm_relations(const Vector& u, const SampledField& p, const Mesh& mesh) {
    ValidationReport report;
    const double norm = luxemburg_norm(u, p, mesh);
    detail::modular_relations(report, "rho", norm, modular_rho(u, p, mesh), p.nodes.minCoeff(), p.nodes.maxCoeff());
    const double gnorm = gradient_norm(u, p, mesh);
    detail::modular_relations(report, "rho-hat", gnorm, modular_rho_grad(u, p, mesh), p.midpoints.minCoeff(),
                              p.midpoints.maxCoeff());
    return report;
}

}  // namespace varexp
