#pragma once

#include "varexp/fields.hpp"
#include "varexp/mesh.hpp"
#include "varexp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace varexp {

/**
 * @brief A 1D constant-exponent instance for the shooting oracle.
 *
 * With `auxiliary` set the reaction is lambda u^{q-1} alone and the
 * potential enters as |xi|, which is the auxiliary problem.
 */
struct ShootingInstance {
    double p = 3.0;
    double q = 2.0;
    double r = 4.0;
    double m = 2.0;  // only used by f2
    double xi = 0.0;
    double lambda = 0.05;
    Nonlinearity nonlinearity;
    bool auxiliary = false;
    /// RK4 step; 1/h should be an integer.
    double h = 1e-4;

    void validate() const {
        if (!(1.0 < q && q < p && p < r)) throw std::invalid_argument("shooting instance needs 1 < q < p < r");
        if (!(h > 0.0) || h > 0.5) throw std::invalid_argument("shooting step must lie in (0, 1/2]");
        if (!(lambda > 0.0)) throw std::invalid_argument("shooting instance needs lambda > 0");
    }

    int steps() const { return std::max(1, static_cast<int>(std::lround(1.0 / h))); }

    /// Right-hand side w' = c |u|^{p-2} u - lambda (u^+)^{q-1} - f(u^+).
    double source(double u) const {
        const double c = auxiliary ? std::abs(xi) : xi;
        const double up = u > 0.0 ? u : 0.0;
        const double au = detail::power(std::abs(u), p - 1.0);
        double s = c * (u >= 0.0 ? au : -au) - lambda * detail::power(up, q - 1.0);
        if (!auxiliary) s -= nonlinearity.f(LocalExponents{p, q, r, m, p}, up);
        return s;
    }
};

struct ShotResult {
    /// u(1), or -(1 - z_c) when u reaches 0 at z_c < 1, or +inf on blow-up.
    double terminal = 0.0;
    bool crossed = false;
    double crossing = 1.0;
    bool blew_up = false;
    /// u at z = k h up to where the integration stopped.
    std::vector<double> u;
};

/**
 * @brief Integrates u' = sign(w)|w|^{1/(p-1)}, w' = source(u) from
 * u(0) = 0, w(0) = |s|^{p-2} s with fixed-step RK4.
 */
inline ShotResult shoot(const ShootingInstance& inst, double s) {
    inst.validate();
    ShotResult out;
    const int n = inst.steps();
    const double h = 1.0 / n;
    const double inv = 1.0 / (inst.p - 1.0);
    out.u.reserve(static_cast<std::size_t>(n) + 1);
    out.u.push_back(0.0);
    if (s == 0.0) {
        out.u.assign(static_cast<std::size_t>(n) + 1, 0.0);
        return out;
    }
    auto du = [inv](double w) { return w >= 0.0 ? detail::power(w, inv) : -detail::power(-w, inv); };
    double u = 0.0, w = (s >= 0.0 ? 1.0 : -1.0) * std::pow(std::abs(s), inst.p - 1.0);
    for (int k = 0; k < n; ++k) {
        const double k1u = du(w), k1w = inst.source(u);
        const double k2u = du(w + 0.5 * h * k1w), k2w = inst.source(u + 0.5 * h * k1u);
        const double k3u = du(w + 0.5 * h * k2w), k3w = inst.source(u + 0.5 * h * k2u);
        const double k4u = du(w + h * k3w), k4w = inst.source(u + h * k3u);
        const double un = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        const double wn = w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        if (!std::isfinite(un) || !std::isfinite(wn) || std::abs(un) > 1e12) {
            out.blew_up = true;
            out.terminal = std::numeric_limits<double>::infinity();
            return out;
        }
        out.u.push_back(un);
        if (un <= 0.0 && k + 1 < n && s > 0.0) {
            out.crossed = true;
            out.crossing = (k + u / (u - un)) * h;
            out.terminal = -(1.0 - out.crossing);
            return out;
        }
        u = un;
        w = wn;
    }
    out.terminal = out.u.back();
    return out;
}

struct SlopeScan {
    double s_min = 1e-3;
    double s_max = 1e3;
    int count = 2000;
    int threads = 1;
    /// Stop after this many verified solutions (0 = no limit).
    int max_solutions = 0;
};

struct OracleSolution {
    double slope = 0.0;
    double sup = 0.0;
    /// Values at z = k h, k = 0..1/h.
    std::vector<double> trajectory;
};

/// Samples a trajectory at the nodes of a uniform 1D mesh by linear interpolation.
inline Vector sample_to_mesh(const std::vector<double>& trajectory, int resolution) {
    const int n = static_cast<int>(trajectory.size()) - 1;
    Vector out(resolution + 1);
    for (int j = 0; j <= resolution; ++j) {
        const double pos = static_cast<double>(j) * n / resolution;
        const int k = std::min(static_cast<int>(std::floor(pos)), n - 1);
        const double w = pos - k;
        out[j] = (1.0 - w) * trajectory[static_cast<std::size_t>(k)] + w * trajectory[static_cast<std::size_t>(k) + 1];
    }
    out[0] = 0.0;
    out[resolution] = 0.0;
    return out;
}

/**
 * @brief Positive solutions from sign changes of the terminal value over a
 * log-spaced slope grid, each bisected to slope width 1e-10.
 *
 * A bracket is kept only if its final trajectory neither blows up nor
 * touches 0 before z = 1, and ends with |u(1)| <= 1e-6 max(1, sup u);
 * this discards the jumps between blow-up and early crossing.
 */
inline std::vector<OracleSolution> enumerate_solutions_1d(const ShootingInstance& inst, const SlopeScan& scan = {}) {
    inst.validate();
    if (!(scan.s_min > 0.0 && scan.s_max > scan.s_min && scan.count >= 2))
        throw std::invalid_argument("slope scan needs 0 < s_min < s_max and at least 2 samples");
    std::vector<double> slopes(static_cast<std::size_t>(scan.count)), terminal(slopes.size());
    for (int k = 0; k < scan.count; ++k)
        slopes[static_cast<std::size_t>(k)] =
            std::exp(std::log(scan.s_min) + (std::log(scan.s_max) - std::log(scan.s_min)) * k / (scan.count - 1));

    std::vector<OracleSolution> out;
    auto refine = [&](double lo, double hi, double tlo) -> std::optional<OracleSolution> {
        while (hi - lo > 1e-10) {
            const double mid = 0.5 * (lo + hi);
            const double tm = shoot(inst, mid).terminal;
            if ((tm > 0.0) == (tlo > 0.0)) lo = mid;
            else hi = mid;
        }
        const double s = 0.5 * (lo + hi);
        ShotResult shot = shoot(inst, s);
        if (shot.blew_up || shot.crossed) return std::nullopt;
        const double sup = *std::max_element(shot.u.begin(), shot.u.end());
        if (!(std::abs(shot.u.back()) <= 1e-6 * std::max(1.0, sup))) return std::nullopt;
        for (std::size_t k = 1; k + 1 < shot.u.size(); ++k)
            if (!(shot.u[k] > 0.0)) return std::nullopt;
        shot.u.back() = 0.0;
        return OracleSolution{s, sup, std::move(shot.u)};
    };

    if (scan.max_solutions > 0) {
        // sequential, so the scan can stop early
        double prev = shoot(inst, slopes[0]).terminal;
        for (std::size_t k = 1; k < slopes.size(); ++k) {
            const double cur = shoot(inst, slopes[k]).terminal;
            if ((prev > 0.0) != (cur > 0.0)) {
                if (auto sol = refine(slopes[k - 1], slopes[k], prev)) {
                    out.push_back(std::move(*sol));
                    if (static_cast<int>(out.size()) >= scan.max_solutions) return out;
                }
            }
            prev = cur;
        }
        return out;
    }

    detail::parallel_for(scan.count, scan.threads, [&](int k) {
        terminal[static_cast<std::size_t>(k)] = shoot(inst, slopes[static_cast<std::size_t>(k)]).terminal;
    });
    for (std::size_t k = 1; k < slopes.size(); ++k)
        if ((terminal[k - 1] > 0.0) != (terminal[k] > 0.0))
            if (auto sol = refine(slopes[k - 1], slopes[k], terminal[k - 1])) out.push_back(std::move(*sol));
    return out;
}

/// (u_h(1) - u_{h/2}(1)) / (u_{h/2}(1) - u_{h/4}(1)); about 16 for a fourth-order scheme.
inline double step_halving_ratio(ShootingInstance inst, double s, double h) {
    double v[3];
    for (int k = 0; k < 3; ++k) {
        inst.h = h / std::pow(2.0, k);
        const ShotResult shot = shoot(inst, s);
        if (shot.blew_up || shot.crossed) throw std::domain_error("step-halving trajectory must stay positive and bounded");
        v[k] = shot.terminal;
    }
    return (v[0] - v[1]) / (v[1] - v[2]);
}

struct OracleThreshold {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/**
 * @brief Bisection on "the scan finds a positive solution" over [lo, hi],
 * to relative bracket width `rel_tol`.
 */
inline OracleThreshold oracle_threshold(ShootingInstance inst, double lo, double hi, double rel_tol = 1e-4,
                                        SlopeScan scan = {}) {
    scan.max_solutions = 1;
    auto exists = [&](double lambda) {
        inst.lambda = lambda;
        return !enumerate_solutions_1d(inst, scan).empty();
    };
    if (!exists(lo)) throw std::invalid_argument("oracle threshold: no solution at the lower end");
    if (exists(hi)) throw std::invalid_argument("oracle threshold: solutions at the upper end");
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        (exists(mid) ? lo : hi) = mid;
    }
    return {0.5 * (lo + hi), lo, hi};
}

}  // namespace varexp
