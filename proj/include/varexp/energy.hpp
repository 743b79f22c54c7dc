#pragma once

#include "varexp/fields.hpp"
#include "varexp/mesh.hpp"
#include "varexp/metric.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace varexp {

/**
 * @brief Data of the Dirichlet problem
 *   -div(|Du|^{p-2} Du) + xi |u|^{p-2} u = lambda u^{q-1} + f(z,u),  u = 0 on the boundary.
 *
 * Construct through create(), which validates the exponent chain, the
 * nonlinearity and the penalty theta > |xi|_inf. The mesh and its stiffness
 * factorization are shared between copies.
 */
struct ProblemSpec {
    std::shared_ptr<const Mesh> mesh;
    std::shared_ptr<const SobolevMetric> metric;
    ExponentField exponents;
    Potential potential;
    Nonlinearity nonlinearity;
    double lambda = 1.0;
    double theta = 1.0;

    static ProblemSpec create(std::shared_ptr<const Mesh> mesh, ExponentField exponents, Potential potential,
                              Nonlinearity nonlinearity, double lambda, std::optional<double> theta = std::nullopt,
                              std::shared_ptr<const SobolevMetric> metric = nullptr) {
        if (!mesh) throw std::invalid_argument("problem needs a mesh");
        ProblemSpec spec;
        spec.theta = theta.value_or(potential.sup_norm + 1.0);
        if (!(spec.theta > potential.sup_norm))
            throw std::invalid_argument("penalty theta must exceed |xi|_inf = " + format_double(potential.sup_norm));
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be positive");
        const ValidationReport h0 = check_H0(exponents, potential, mesh.get());
        if (!h0.passed()) throw std::invalid_argument("exponent hypotheses violated:\n" + h0.to_text());
        require_compatible(nonlinearity, exponents);
        spec.metric = metric ? std::move(metric) : std::make_shared<const SobolevMetric>(*mesh);
        spec.mesh = std::move(mesh);
        spec.exponents = std::move(exponents);
        spec.potential = std::move(potential);
        spec.nonlinearity = std::move(nonlinearity);
        spec.lambda = lambda;
        return spec;
    }

    ProblemSpec with_lambda(double value) const {
        if (!(value > 0.0) || !std::isfinite(value)) throw std::invalid_argument("lambda must be positive");
        ProblemSpec out = *this;
        out.lambda = value;
        return out;
    }

    double p_at(std::size_t i) const { return exponents.p.nodes[static_cast<Eigen::Index>(i)]; }
    double q_at(std::size_t i) const { return exponents.q.nodes[static_cast<Eigen::Index>(i)]; }
    double xi_at(std::size_t i) const { return potential.xi.nodes[static_cast<Eigen::Index>(i)]; }
};

/// Energy value, optionally writing the gradient into `grad` (same length as u).
using EnergyFn = std::function<double(const Vector& u, Vector* grad)>;

namespace detail {

/// sum_e |e| |Du|^p / p and, if requested, its gradient A(u).
inline double gradient_term(const Mesh& mesh, const Vector& p_mid, const Vector& u, Vector* grad) {
    double energy = 0.0;
    const int nv = mesh.vertices_per_element();
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Point g = element_gradient(mesh, u, e);
        const double s2 = g[0] * g[0] + g[1] * g[1];
        if (s2 == 0.0) continue;
        const double p = p_mid[static_cast<Eigen::Index>(e)];
        const double sp = std::pow(s2, 0.5 * p);
        energy += mesh.measures[e] * sp / p;
        if (grad) {
            const double coef = mesh.measures[e] * sp / s2;  // |e| |Du|^{p-2}
            const auto& el = mesh.elements[e];
            const auto& bg = mesh.basis_gradients[e];
            for (int a = 0; a < nv; ++a) (*grad)[el[a]] += coef * (g[0] * bg[a][0] + g[1] * bg[a][1]);
        }
    }
    return energy;
}

/**
 * Gradient term plus sum_i w_i h_i(u_i) over interior nodes, where
 * `local(i, x, deriv)` returns h_i(x) and stores h_i'(x).
 */
template <class Local>
double assemble(const ProblemSpec& spec, const Vector& u, Vector* grad, Local&& local) {
    const Mesh& mesh = *spec.mesh;
    require_conforming(mesh, u);
    if (grad) *grad = Vector::Zero(u.size());
    double energy = gradient_term(mesh, spec.exponents.p.midpoints, u, grad);
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        if (mesh.boundary[i]) continue;
        const auto k = static_cast<Eigen::Index>(i);
        double d = 0.0;
        energy += mesh.lumped_weights[k] * local(i, u[k], d);
        if (grad) (*grad)[k] += mesh.lumped_weights[k] * d;
    }
    if (grad)
        for (std::size_t i = 0; i < mesh.node_count(); ++i)
            if (mesh.boundary[i]) (*grad)[static_cast<Eigen::Index>(i)] = 0.0;
    return energy;
}

}  // namespace detail

/// <A(u), phi_i> for every hat function phi_i; boundary entries zero.
inline DualVector operator_A_apply(const Vector& u, const ProblemSpec& spec) {
    const Mesh& mesh = *spec.mesh;
    require_conforming(mesh, u);
    Vector grad = Vector::Zero(u.size());
    detail::gradient_term(mesh, spec.exponents.p.midpoints, u, &grad);
    return apply_dirichlet(std::move(grad), mesh);
}

/**
 * phi-hat(u) = int |Du|^p/p + int xi/p |u|^p + int theta/p (u^-)^p
 *              - lambda int (u^+)^q/q - int F(z,u^+).
 */
inline double phi_hat(const Vector& u, const ProblemSpec& spec, Vector* grad) {
    const double lambda = spec.lambda, theta = spec.theta;
    return detail::assemble(spec, u, grad, [&](std::size_t i, double x, double& d) {
        const double p = spec.p_at(i), q = spec.q_at(i), xi = spec.xi_at(i);
        const LocalExponents z = spec.exponents.at_node(i);
        const double xp = x > 0.0 ? x : 0.0, xm = x < 0.0 ? -x : 0.0;
        const double ax_p1 = std::pow(std::abs(x), p - 1.0);
        const double xm_p1 = std::pow(xm, p - 1.0), xp_q1 = std::pow(xp, q - 1.0);
        d = xi * (x >= 0.0 ? ax_p1 : -ax_p1) - theta * xm_p1 - lambda * xp_q1 - spec.nonlinearity.f(z, xp);
        return xi / p * ax_p1 * std::abs(x) + theta / p * xm_p1 * xm - lambda / q * xp_q1 * xp -
               spec.nonlinearity.F(z, xp);
    });
}

inline double energy_phi_hat(const Vector& u, const ProblemSpec& spec) { return phi_hat(u, spec, nullptr); }

inline DualVector grad_phi_hat(const Vector& u, const ProblemSpec& spec) {
    Vector g;
    phi_hat(u, spec, &g);
    return g;
}

/// gamma(u) = int |Du|^p/p + int |xi|/p |u|^p - lambda int (u^+)^q/q.
inline double gamma_energy(const Vector& u, const ProblemSpec& spec, Vector* grad) {
    const double lambda = spec.lambda;
    return detail::assemble(spec, u, grad, [&](std::size_t i, double x, double& d) {
        const double p = spec.p_at(i), q = spec.q_at(i), axi = std::abs(spec.xi_at(i));
        const double xp = x > 0.0 ? x : 0.0;
        const double ax_p1 = std::pow(std::abs(x), p - 1.0), xp_q1 = std::pow(xp, q - 1.0);
        d = axi * (x >= 0.0 ? ax_p1 : -ax_p1) - lambda * xp_q1;
        return axi / p * ax_p1 * std::abs(x) - lambda / q * xp_q1 * xp;
    });
}

inline double energy_gamma(const Vector& u, const ProblemSpec& spec) { return gamma_energy(u, spec, nullptr); }

inline DualVector grad_gamma(const Vector& u, const ProblemSpec& spec) {
    Vector g;
    gamma_energy(u, spec, &g);
    return g;
}

enum class TruncationKind { g_mu, beta, k_lambda, k_hat };

inline std::string to_string(TruncationKind k) {
    switch (k) {
    case TruncationKind::g_mu: return "g_mu";
    case TruncationKind::beta: return "beta";
    case TruncationKind::k_lambda: return "k_lambda";
    case TruncationKind::k_hat: return "k_hat";
    }
    return {};
}

/**
 * @brief A reaction frozen outside a band of bounding functions.
 *
 * - g_mu: mu (x^+)^{q-1} + f(x^+) + theta (x^+)^{p-1}, frozen above `upper`.
 * - beta: lambda (x^+)^{q-1}, frozen above `upper`; left side uses |xi|.
 * - k_lambda: lambda x^{q-1} + f(x) + theta x^{p-1}, frozen below `lower` and above `upper`.
 * - k_hat: as k_lambda with no upper bound.
 *
 * All kinds except beta pair the reaction with the shifted left side
 * (theta + xi)/p |u|^p.
 */
struct TruncatedProblem {
    TruncationKind kind = TruncationKind::k_hat;
    std::optional<Vector> lower;
    std::optional<Vector> upper;
    double parameter = 1.0;  // mu for g_mu, lambda otherwise
    double theta = 1.0;
};

inline TruncatedProblem build_truncation(TruncationKind kind, std::optional<Vector> lower, std::optional<Vector> upper,
                                         const ProblemSpec& spec, std::optional<double> mu = std::nullopt) {
    const bool needs_lower = kind == TruncationKind::k_lambda || kind == TruncationKind::k_hat;
    const bool needs_upper = kind != TruncationKind::k_hat;
    if (needs_lower && !lower) throw std::invalid_argument(to_string(kind) + " truncation needs a lower bound");
    if (needs_upper && !upper) throw std::invalid_argument(to_string(kind) + " truncation needs an upper bound");
    if (!needs_lower) lower.reset();
    if (!needs_upper) upper.reset();
    if (lower) require_conforming(*spec.mesh, *lower);
    if (upper) require_conforming(*spec.mesh, *upper);
    if (lower && upper && ((*upper - *lower).minCoeff() < 0.0))
        throw std::invalid_argument("truncation bounds not ordered: lower exceeds upper somewhere");
    if (mu && kind != TruncationKind::g_mu) throw std::invalid_argument("mu applies to the g_mu truncation only");
    const double parameter = mu.value_or(spec.lambda);
    if (!(parameter > 0.0)) throw std::invalid_argument("truncation parameter must be positive");
    return {kind, std::move(lower), std::move(upper), parameter, spec.theta};
}

namespace detail {

struct ReactionValue {
    double primitive;
    double value;
};

/// Untruncated reaction of the kind and its primitive from 0.
inline ReactionValue full_reaction(const TruncatedProblem& tp, const ProblemSpec& spec, std::size_t i, double x) {
    const double xp = x > 0.0 ? x : 0.0;
    const double p = spec.p_at(i), q = spec.q_at(i);
    const double xp_q1 = std::pow(xp, q - 1.0);
    ReactionValue out{tp.parameter * xp_q1 * xp / q, tp.parameter * xp_q1};
    if (tp.kind == TruncationKind::beta) return out;
    const LocalExponents z = spec.exponents.at_node(i);
    const double xp_p1 = std::pow(xp, p - 1.0);
    out.value += spec.nonlinearity.f(z, xp) + tp.theta * xp_p1;
    out.primitive += spec.nonlinearity.F(z, xp) + tp.theta * xp_p1 * xp / p;
    return out;
}

/// Truncated reaction and its primitive at node i.
inline ReactionValue truncated_reaction(const TruncatedProblem& tp, const ProblemSpec& spec, std::size_t i, double x) {
    const auto k = static_cast<Eigen::Index>(i);
    double shift = 0.0;
    if (tp.lower) {
        const double L = (*tp.lower)[k];
        const ReactionValue at_l = full_reaction(tp, spec, i, L);
        if (x <= L) return {at_l.value * x, at_l.value};
        shift = at_l.value * L - at_l.primitive;
    }
    if (!tp.upper || x <= (*tp.upper)[k]) {
        const ReactionValue r = full_reaction(tp, spec, i, x);
        return {shift + r.primitive, r.value};
    }
    const double U = (*tp.upper)[k];
    const ReactionValue at_u = full_reaction(tp, spec, i, U);
    return {shift + at_u.primitive + at_u.value * (x - U), at_u.value};
}

}  // namespace detail

/// Value of the truncated reaction at node i (for inspection and tests).
inline double truncated_reaction(const TruncatedProblem& tp, const ProblemSpec& spec, std::size_t i, double x) {
    return detail::truncated_reaction(tp, spec, i, x).value;
}

inline double truncated_energy(const Vector& u, const ProblemSpec& spec, const TruncatedProblem& tp, Vector* grad) {
    if (tp.lower) require_conforming(*spec.mesh, *tp.lower);
    if (tp.upper) require_conforming(*spec.mesh, *tp.upper);
    const bool shifted = tp.kind != TruncationKind::beta;
    return detail::assemble(spec, u, grad, [&](std::size_t i, double x, double& d) {
        const double p = spec.p_at(i);
        const double c = shifted ? tp.theta + spec.xi_at(i) : std::abs(spec.xi_at(i));
        const double ax_p1 = std::pow(std::abs(x), p - 1.0);
        const detail::ReactionValue r = detail::truncated_reaction(tp, spec, i, x);
        d = c * (x >= 0.0 ? ax_p1 : -ax_p1) - r.value;
        return c / p * ax_p1 * std::abs(x) - r.primitive;
    });
}

inline double energy_truncated(const Vector& u, const ProblemSpec& spec, const TruncatedProblem& tp) {
    return truncated_energy(u, spec, tp, nullptr);
}

inline DualVector grad_truncated(const Vector& u, const ProblemSpec& spec, const TruncatedProblem& tp) {
    Vector g;
    truncated_energy(u, spec, tp, &g);
    return g;
}

inline EnergyFn make_phi_hat(ProblemSpec spec) {
    return [spec = std::move(spec)](const Vector& u, Vector* g) { return phi_hat(u, spec, g); };
}

inline EnergyFn make_gamma(ProblemSpec spec) {
    return [spec = std::move(spec)](const Vector& u, Vector* g) { return gamma_energy(u, spec, g); };
}

inline EnergyFn make_truncated(ProblemSpec spec, TruncatedProblem tp) {
    return [spec = std::move(spec), tp = std::move(tp)](const Vector& u, Vector* g) {
        return truncated_energy(u, spec, tp, g);
    };
}

}  // namespace varexp
