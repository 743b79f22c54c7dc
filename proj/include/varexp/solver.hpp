#pragma once

#include "varexp/energy.hpp"
#include "varexp/metric.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace varexp {

struct SolveOptions {
    /// Stopping tolerance on the dual norm of the gradient.
    double tolerance = 1e-8;
    int max_iterations = 20000;
    /// Armijo sufficient-decrease constant.
    double sufficient_decrease = 1e-4;
    double backtrack = 0.5;
    std::uint64_t seed = 0;
    /// Number of L-BFGS correction pairs.
    int memory = 10;
    /// Iterates with a larger sup norm count as divergence.
    double divergence_bound = 1e6;
    /// Called once per iteration with (iteration, energy, gradient dual norm).
    std::function<void(int, double, double)> trace;

    void validate() const {
        if (!(tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
        if (max_iterations < 0) throw std::invalid_argument("max_iterations must be nonnegative");
        if (!(sufficient_decrease > 0.0 && sufficient_decrease < 0.5))
            throw std::invalid_argument("sufficient-decrease constant must lie in (0, 1/2)");
        if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("backtrack factor must lie in (0, 1)");
        if (memory < 0) throw std::invalid_argument("L-BFGS memory must be nonnegative");
        if (!(divergence_bound > 0.0)) throw std::invalid_argument("divergence bound must be positive");
    }
};

enum class Classification { minimizer, mountain_pass, failed };

inline std::string to_string(Classification c) {
    switch (c) {
    case Classification::minimizer: return "minimizer";
    case Classification::mountain_pass: return "mountain-pass";
    case Classification::failed: return "failed";
    }
    return {};
}

struct SolveResult {
    Vector solution;
    double energy = std::numeric_limits<double>::quiet_NaN();
    double gradient_norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    Classification classification = Classification::failed;
    bool positive = false;
    std::string message;

    bool ok() const { return classification != Classification::failed; }
};

inline bool is_positive(const Vector& u) { return u.size() > 0 && u.minCoeff() >= -1e-10; }

/// Custom stopping rule for minimize: (iterate, energy, gradient dual norm) -> done.
using ConvergenceTest = std::function<bool(const Vector&, double, double)>;

/**
 * @brief Preconditioned L-BFGS with Armijo backtracking.
 *
 * The initial inverse Hessian is a scaled metric Riesz map, so with a
 * SobolevMetric the first step is a discrete H^1 gradient step. When the
 * Armijo test fails only because the decrease is below roundoff, a trial
 * whose energy rises by at most 1e-12 |E| and whose directional derivative
 * satisfies |phi'(t)| <= (1 - 2 c1) |phi'(0)| is accepted instead, so the
 * energy sequence is nonincreasing up to that relative roundoff allowance.
 */
inline SolveResult minimize(const EnergyFn& energy, const Metric& metric, Vector x, const SolveOptions& opts,
                            const ConvergenceTest& converged = {}) {
    opts.validate();
    SolveResult res;
    Vector g;
    double E = energy(x, &g);
    if (!std::isfinite(E)) {
        res.solution = std::move(x);
        res.message = "energy is not finite at the starting point";
        return res;
    }
    double gn = metric.dual_norm(g);

    struct Pair {
        Vector s, y;
        double rho;
    };
    std::deque<Pair> history;
    const double c1 = opts.sufficient_decrease;
    double last_step = 0.0;  // metric norm of the previous accepted step

    int it = 0;
    for (;; ++it) {
        if (opts.trace) opts.trace(it, E, gn);
        if (converged ? converged(x, E, gn) : gn <= opts.tolerance) {
            res.classification = Classification::minimizer;
            break;
        }
        if (it >= opts.max_iterations) {
            res.message = "iteration cap reached";
            break;
        }

        // two-loop recursion
        Vector q = g;
        std::vector<double> alpha(history.size());
        for (std::size_t k = history.size(); k-- > 0;) {
            alpha[k] = history[k].rho * history[k].s.dot(q);
            q -= alpha[k] * history[k].y;
        }
        Vector d = metric.precondition(q);
        if (!history.empty()) {
            const Pair& last = history.back();
            d *= last.s.dot(last.y) / last.y.dot(metric.precondition(last.y));
        }
        for (std::size_t k = 0; k < history.size(); ++k) {
            const double beta = history[k].rho * history[k].y.dot(d);
            d += (alpha[k] - beta) * history[k].s;
        }
        d = -d;
        double slope = g.dot(d);
        bool steepest = history.empty();
        if (!(slope < 0.0) || !std::isfinite(slope)) {
            history.clear();
            d = -metric.precondition(g);
            slope = g.dot(d);
            steepest = true;
        }

        // steepest steps start at metric length max(1, 2 * last step), capped at t = 1
        double t = steepest ? std::min(1.0, std::max(1.0, 2.0 * last_step) / gn) : 1.0;
        Vector xn, gnew;
        double En = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls, t *= opts.backtrack) {
            xn = x + t * d;
            En = energy(xn, &gnew);
            if (!std::isfinite(En)) continue;
            if (En <= E + c1 * t * slope) {
                accepted = true;
                break;
            }
            if (En <= E + 1e-12 * std::abs(E) && std::abs(gnew.dot(d)) <= (1.0 - 2.0 * c1) * std::abs(slope)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!history.empty()) {
                history.clear();
                continue;
            }
            res.message = "line search failed";
            break;
        }

        Pair pair{xn - x, gnew - g, 0.0};
        last_step = metric.norm(pair.s);
        const double sy = pair.s.dot(pair.y);
        if (sy > 1e-300 && opts.memory > 0) {
            pair.rho = 1.0 / sy;
            history.push_back(std::move(pair));
            if (static_cast<int>(history.size()) > opts.memory) history.pop_front();
        }
        x = std::move(xn);
        g = std::move(gnew);
        E = En;
        gn = metric.dual_norm(g);
        if (sup_norm(x) > opts.divergence_bound) {
            res.message = "iterates diverged (sup norm above " + format_double(opts.divergence_bound) + ")";
            ++it;
            break;
        }
    }
    res.solution = std::move(x);
    res.energy = E;
    res.gradient_norm = gn;
    res.iterations = it;
    res.positive = is_positive(res.solution);
    return res;
}

struct MountainPassOptions {
    int path_points = 41;
    /// Path-deformation sweeps before the ray-minimax refinement takes over.
    int deformation_sweeps = 40;
};

namespace detail {

/// Moves interior path points to equal arc length (metric path norm), endpoints fixed.
inline void respread(std::vector<Vector>& path, const Metric& metric) {
    const std::size_t n = path.size();
    std::vector<double> arc(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) arc[k] = arc[k - 1] + metric.path_norm(path[k] - path[k - 1]);
    if (!(arc.back() > 0.0)) return;
    std::vector<Vector> out(n);
    out.front() = path.front();
    out.back() = path.back();
    std::size_t seg = 1;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double target = arc.back() * static_cast<double>(k) / static_cast<double>(n - 1);
        while (seg + 1 < n && arc[seg] < target) ++seg;
        const double len = arc[seg] - arc[seg - 1];
        const double w = len > 0.0 ? (target - arc[seg - 1]) / len : 0.0;
        out[k] = (1.0 - w) * path[seg - 1] + w * path[seg];
    }
    path = std::move(out);
}

/// Ray maximization state for J(v) = max_t E(u_low + t v/|v|).
struct RayState {
    Vector v;
    double t = 0.0;
    double energy = std::numeric_limits<double>::infinity();
    Vector point;
    Vector gradient;
    bool valid = false;
};

inline RayState maximize_on_ray(const EnergyFn& energy, const Metric& metric, const Vector& u_low, const Vector& v,
                                double t_guess) {
    RayState st;
    st.v = v;
    const double nv = metric.norm(v);
    if (!(nv > 0.0) || !std::isfinite(nv)) return st;
    const Vector vhat = v / nv;
    auto slope = [&](double t) {
        Vector gr;
        const double e = energy(u_low + t * vhat, &gr);
        return std::isfinite(e) ? gr.dot(vhat) : std::numeric_limits<double>::quiet_NaN();
    };

    double t = t_guess > 0.0 ? t_guess : nv;
    double h = slope(t);
    if (!std::isfinite(h)) return st;
    double a = t, b = t, ha = h, hb = h;
    if (h > 0.0) {
        for (int k = 0; k < 80 && hb > 0.0; ++k) {
            a = b, ha = hb;
            b *= 2.0;
            hb = slope(b);
            if (!std::isfinite(hb)) return st;
        }
        if (hb > 0.0) return st;
    } else {
        for (int k = 0; k < 80 && ha <= 0.0; ++k) {
            b = a, hb = ha;
            a *= 0.5;
            ha = slope(a);
            if (!std::isfinite(ha)) return st;
        }
        if (ha <= 0.0) return st;
    }
    std::uintmax_t max_iter = 200;
    auto tol = [](double lo, double hi) { return hi - lo <= 1e-13 * hi; };
    auto [lo, hi] = boost::math::tools::toms748_solve(slope, a, b, ha, hb, tol, max_iter);
    st.t = 0.5 * (lo + hi);
    st.point = u_low + st.t * vhat;
    st.energy = energy(st.point, &st.gradient);
    st.valid = std::isfinite(st.energy);
    return st;
}

}  // namespace detail

/**
 * @brief Saddle point between u_low and u_far.
 *
 * Path deformation first: the segment is discretized into `path_points`
 * points, the highest interior point takes a preconditioned Armijo descent
 * step and the path is re-spread by arc length. From the highest point the
 * search continues by minimizing J(v) = max_t E(u_low + t v/|v|) over
 * directions v with the same L-BFGS; its stationary points are critical
 * points of E at the ridge. Fails when the interior maximum drops to the
 * endpoint level (no ridge) or the refinement does not converge.
 */
inline SolveResult mountain_pass(const EnergyFn& energy, const Metric& metric, const Vector& u_low, const Vector& u_far,
                                 const SolveOptions& opts, const MountainPassOptions& mp = {}) {
    opts.validate();
    if (mp.path_points < 3) throw std::invalid_argument("mountain pass needs at least 3 path points");
    SolveResult res;
    const int P = mp.path_points;
    std::vector<Vector> path(static_cast<std::size_t>(P));
    for (int k = 0; k < P; ++k) {
        const double s = static_cast<double>(k) / (P - 1);
        path[static_cast<std::size_t>(k)] = (1.0 - s) * u_low + s * u_far;
    }
    const double e_low = energy(u_low, nullptr), e_far = energy(u_far, nullptr);
    const double floor_level = std::max(e_low, e_far);
    std::vector<double> levels(static_cast<std::size_t>(P));
    levels.front() = e_low;
    levels.back() = e_far;

    auto top = [&]() {
        for (std::size_t k = 1; k + 1 < path.size(); ++k) levels[k] = energy(path[k], nullptr);
        std::size_t j = 1;
        for (std::size_t k = 2; k + 1 < path.size(); ++k)
            if (levels[k] > levels[j]) j = k;
        return j;
    };

    int evaluations = 0;
    std::size_t j = top();
    for (int sweep = 0; sweep < mp.deformation_sweeps; ++sweep, j = top()) {
        if (!(levels[j] > floor_level)) {
            res.solution = path[j];
            res.energy = levels[j];
            res.message = "ridge collapsed: path maximum is not above the endpoints";
            return res;
        }
        Vector g;
        const double e = energy(path[j], &g);
        const double gn = metric.dual_norm(g);
        ++evaluations;
        if (opts.trace) opts.trace(sweep, e, gn);
        if (gn <= opts.tolerance) {
            res.solution = path[j];
            res.energy = e;
            res.gradient_norm = gn;
            res.iterations = sweep;
            res.classification = Classification::mountain_pass;
            res.positive = is_positive(res.solution);
            return res;
        }
        const Vector d = -metric.precondition(g);
        const double slope = g.dot(d);
        double t = std::min(1.0, 1.0 / gn);
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls, t *= opts.backtrack) {
            const Vector trial = path[j] + t * d;
            const double et = energy(trial, nullptr);
            if (std::isfinite(et) && et <= e + opts.sufficient_decrease * t * slope) {
                path[j] = trial;
                moved = true;
                break;
            }
        }
        if (!moved) break;
        detail::respread(path, metric);
    }
    if (!(levels[j] > floor_level)) {
        res.solution = path[j];
        res.energy = levels[j];
        res.message = "ridge collapsed: path maximum is not above the endpoints";
        return res;
    }

    // ray-minimax refinement from the highest path point
    detail::RayState cache;
    auto ray = [&](const Vector& v) -> const detail::RayState& {
        if (!(cache.valid && cache.v.size() == v.size() && cache.v == v))
            cache = detail::maximize_on_ray(energy, metric, u_low, v, cache.valid ? cache.t : 0.0);
        return cache;
    };
    EnergyFn J = [&](const Vector& v, Vector* grad) {
        const detail::RayState& st = ray(v);
        if (!st.valid) return std::numeric_limits<double>::infinity();
        if (grad) {
            const double nv = metric.norm(v);
            const Vector vhat = v / nv;
            *grad = (st.t / nv) * (st.gradient - vhat.dot(st.gradient) * metric.apply(vhat));
        }
        return st.energy;
    };
    ConvergenceTest at_ridge = [&](const Vector& v, double, double) {
        const detail::RayState& st = ray(v);
        return st.valid && metric.dual_norm(st.gradient) <= opts.tolerance;
    };
    SolveOptions inner = opts;
    inner.trace = nullptr;
    inner.divergence_bound = std::numeric_limits<double>::infinity();
    const SolveResult jr = minimize(J, metric, path[j] - u_low, inner, at_ridge);
    const detail::RayState& st = ray(jr.solution);
    res.iterations = mp.deformation_sweeps + jr.iterations;
    if (!st.valid) {
        res.solution = path[j];
        res.energy = levels[j];
        res.message = "ray maximization failed: " + jr.message;
        return res;
    }
    res.solution = st.point;
    res.energy = st.energy;
    res.gradient_norm = metric.dual_norm(st.gradient);
    res.positive = is_positive(res.solution);
    if (jr.ok() && res.gradient_norm <= opts.tolerance && res.energy >= floor_level) {
        res.classification = Classification::mountain_pass;
    } else {
        res.message = jr.ok() ? "ridge point below endpoint energies" : "refinement did not converge: " + jr.message;
    }
    return res;
}

/**
 * @brief Doubles t from 1 until energy(t * direction) < level.
 * Returns nothing if t would exceed 2^60.
 */
inline std::optional<Vector> find_far_point(const EnergyFn& energy, const Vector& direction, double level = -1.0) {
    double t = 1.0;
    for (int k = 0; k <= 60; ++k, t *= 2.0) {
        Vector candidate = t * direction;
        const double e = energy(candidate, nullptr);
        if (e < level) return candidate;
    }
    return std::nullopt;
}

/// Dual norm of the gradient of phi-hat; a solution certificate when <= 1e-6.
inline double residual_check(const Vector& u, const ProblemSpec& spec) {
    return spec.metric->dual_norm(grad_phi_hat(u, spec));
}

/// t0 = [lambda (p_+ - q_+)/(r_+ - p_+)]^{1/(r_+ - q_+)}, the small-lambda ridge radius.
inline double ridge_radius_hint(const ProblemSpec& spec) {
    const auto& e = spec.exponents;
    return std::pow(spec.lambda * (e.p_plus() - e.q_plus()) / (e.r_plus() - e.p_plus()),
                    1.0 / (e.r_plus() - e.q_plus()));
}

struct AuxiliaryResult {
    SolveResult result;
    /// Largest sup-norm distance between a multi-start result and the main solve.
    double max_deviation = 0.0;
    int starts = 0;
    bool unique = true;
};

/// Interior-positive random start: amplitude 10^U(-2,1) times U(0.25,1.25) per node.
inline Vector random_positive_start(const Mesh& mesh, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> expo(-2.0, 1.0), jitter(0.25, 1.25);
    const double amplitude = std::pow(10.0, expo(rng));
    Vector u(static_cast<Eigen::Index>(mesh.node_count()));
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = amplitude * jitter(rng);
    return apply_dirichlet(std::move(u), mesh);
}

/**
 * @brief Positive minimizer of gamma (the auxiliary problem), from the
 * constant 0.1, cross-checked against `starts` random positive starts.
 */
inline AuxiliaryResult solve_auxiliary(const ProblemSpec& spec, const SolveOptions& opts, int starts = 20) {
    const Mesh& mesh = *spec.mesh;
    const EnergyFn gamma = make_gamma(spec);
    AuxiliaryResult out;
    const Vector start = apply_dirichlet(Vector::Constant(static_cast<Eigen::Index>(mesh.node_count()), 0.1), mesh);
    out.result = minimize(gamma, *spec.metric, start, opts);
    if (!(out.result.energy < 0.0) && out.result.ok()) {
        out.result.classification = Classification::failed;
        out.result.message = "auxiliary minimizer is not below the zero level";
    }
    std::mt19937_64 rng(opts.seed);
    for (int k = 0; k < starts; ++k) {
        const SolveResult r = minimize(gamma, *spec.metric, random_positive_start(mesh, rng), opts);
        ++out.starts;
        if (!r.ok()) out.unique = false;
        out.max_deviation = std::max(out.max_deviation, sup_norm(r.solution - out.result.solution));
    }
    if (out.max_deviation > 1e-6) out.unique = false;
    if (!out.unique)
        out.result.message += (out.result.message.empty() ? "" : "; ") +
                              std::string("multi-start disagreement ") + format_double(out.max_deviation);
    return out;
}

/**
 * @brief Minimal positive solution below u_start.
 *
 * Repeatedly minimizes the g_mu truncation (mu = lambda) capped at the
 * current solution, starting from `lower` (u-bar), until successive
 * iterates differ by less than 1e-8 in sup norm.
 */
inline SolveResult minimal_solution(const ProblemSpec& spec, const Vector& u_start, const Vector& lower,
                                    const SolveOptions& opts) {
    Vector current = u_start;
    std::string message;
    int total = 0;
    for (int round = 0; round < 100; ++round) {
        const TruncatedProblem tp = build_truncation(TruncationKind::g_mu, std::nullopt, current, spec, spec.lambda);
        const SolveResult r = minimize(make_truncated(spec, tp), *spec.metric, lower.cwiseMin(current), opts);
        total += r.iterations;
        if (!r.ok()) {
            message = "truncated minimization failed (" + r.message + "); returning the last iterate";
            break;
        }
        const double change = sup_norm(r.solution - current);
        current = r.solution;
        if (change < 1e-8) break;
        if (round == 99) message = "iteration did not settle within 100 rounds";
    }
    SolveResult out;
    out.energy = energy_phi_hat(current, spec);
    out.gradient_norm = residual_check(current, spec);
    out.iterations = total;
    out.positive = is_positive(current);
    out.classification = out.gradient_norm <= std::max(opts.tolerance, 1e-6) ? Classification::minimizer
                                                                             : Classification::failed;
    out.solution = std::move(current);
    out.message = std::move(message);
    return out;
}

}  // namespace varexp
