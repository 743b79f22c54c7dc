#pragma once

#include "varexp/format.hpp"
#include "varexp/mesh.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace varexp {

namespace detail {

/// x^e for x >= 0, with shortcuts for the small integer and half-integer exponents common in tests.
inline double power(double x, double e) {
    if (e == 1.0) return x;
    if (e == 2.0) return x * x;
    if (e == 3.0) return x * x * x;
    if (e == 0.5) return std::sqrt(x);
    if (e == 1.5) return x * std::sqrt(x);
    return std::pow(x, e);
}

}  // namespace detail

/**
 * @brief A scalar field given as a constant, an affine function of the
 * coordinates, or a table of nodal values.
 *
 * Text form: `3`, `2.5 + 0.4*z` (z is an alias of x), `1 + 0.5*x - 0.25*y`,
 * or `table(v0, v1, ...)` with one value per mesh node.
 */
struct FieldExpr {
    enum class Kind { constant, affine, table };

    Kind kind = Kind::constant;
    double c0 = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    std::vector<double> table;

    static FieldExpr constant(double c) { return {Kind::constant, c, 0.0, 0.0, {}}; }
    static FieldExpr affine(double c0, double cx, double cy = 0.0) { return {Kind::affine, c0, cx, cy, {}}; }
    static FieldExpr nodal(std::vector<double> values) {
        return {Kind::table, 0.0, 0.0, 0.0, std::move(values)};
    }

    double at(const Point& z) const {
        if (kind == Kind::table) throw std::logic_error("a nodal table has no pointwise value off the mesh");
        return c0 + cx * z[0] + cy * z[1];
    }

    bool operator==(const FieldExpr&) const = default;
};

inline std::string render_field(const FieldExpr& f) {
    switch (f.kind) {
    case FieldExpr::Kind::constant:
        return format_double(f.c0);
    case FieldExpr::Kind::affine: {
        std::string out = format_double(f.c0) + " + " + format_double(f.cx) + "*x";
        if (f.cy != 0.0) out += " + " + format_double(f.cy) + "*y";
        return out;
    }
    case FieldExpr::Kind::table: {
        std::string out = "table(";
        for (std::size_t i = 0; i < f.table.size(); ++i) out += (i ? ", " : "") + format_double(f.table[i]);
        return out + ")";
    }
    }
    return {};
}

inline FieldExpr parse_field(std::string_view text) {
    text = trim(text);
    if (text.empty()) throw std::invalid_argument("empty field expression");

    if (text.rfind("table", 0) == 0) {
        auto open = text.find('('), close = text.rfind(')');
        if (open == std::string_view::npos || close == std::string_view::npos || close < open ||
            !trim(text.substr(close + 1)).empty())
            throw std::invalid_argument("malformed table expression '" + std::string(text) + "'");
        std::vector<double> values;
        std::string inner(text.substr(open + 1, close - open - 1));
        std::stringstream ss(inner);
        for (std::string cell; std::getline(ss, cell, ',');) values.push_back(parse_double(cell));
        if (values.empty()) throw std::invalid_argument("empty table expression");
        return FieldExpr::nodal(std::move(values));
    }

    // Affine: a sum of signed terms, each a number, `number*var` or `var*number`.
    FieldExpr out;
    bool has_var = false;
    std::size_t pos = 0;
    auto next_term = [&]() -> std::pair<double, std::string_view> {
        double sign = 1.0;
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '+' || text[pos] == '-')) {
            if (text[pos] == '-') sign = -sign;
            ++pos;
        }
        std::size_t end = pos;
        // a term ends at the next +/- that is not an exponent sign
        while (end < text.size()) {
            const char c = text[end];
            if ((c == '+' || c == '-') && end > pos && text[end - 1] != 'e' && text[end - 1] != 'E') break;
            ++end;
        }
        std::string_view term = trim(text.substr(pos, end - pos));
        pos = end;
        if (term.empty()) throw std::invalid_argument("malformed field expression '" + std::string(text) + "'");
        auto star = term.find('*');
        if (star == std::string_view::npos) {
            if (term == "x" || term == "y" || term == "z") return {sign, term};
            return {sign * parse_double(term), {}};
        }
        auto lhs = trim(term.substr(0, star)), rhs = trim(term.substr(star + 1));
        auto is_var = [](std::string_view v) { return v == "x" || v == "y" || v == "z"; };
        if (is_var(rhs)) return {sign * parse_double(lhs), rhs};
        if (is_var(lhs)) return {sign * parse_double(rhs), lhs};
        throw std::invalid_argument("unsupported term '" + std::string(term) + "' (only affine fields are allowed)");
    };
    while (pos < text.size()) {
        auto [coef, var] = next_term();
        if (var.empty()) {
            out.c0 += coef;
        } else {
            has_var = true;
            (var == "y" ? out.cy : out.cx) += coef;
        }
        while (pos < text.size() && text[pos] == ' ') ++pos;
    }
    out.kind = has_var ? FieldExpr::Kind::affine : FieldExpr::Kind::constant;
    return out;
}

/// A field sampled at the nodes and element midpoints of a mesh.
struct SampledField {
    Vector nodes;
    Vector midpoints;

    double min() const { return std::min(nodes.minCoeff(), midpoints.minCoeff()); }
    double max() const { return std::max(nodes.maxCoeff(), midpoints.maxCoeff()); }
};

inline SampledField sample(const FieldExpr& expr, const Mesh& mesh) {
    SampledField out;
    const auto n = static_cast<Eigen::Index>(mesh.node_count());
    out.nodes.resize(n);
    out.midpoints.resize(static_cast<Eigen::Index>(mesh.element_count()));
    if (expr.kind == FieldExpr::Kind::table) {
        if (expr.table.size() != mesh.node_count())
            throw std::invalid_argument("nodal table has " + std::to_string(expr.table.size()) + " values, mesh has " +
                                        std::to_string(mesh.node_count()) + " nodes");
        for (Eigen::Index i = 0; i < n; ++i) out.nodes[i] = expr.table[static_cast<std::size_t>(i)];
        for (std::size_t e = 0; e < mesh.element_count(); ++e) {
            double s = 0.0;
            for (int a = 0; a < mesh.vertices_per_element(); ++a) s += out.nodes[mesh.elements[e][a]];
            out.midpoints[static_cast<Eigen::Index>(e)] = s / mesh.vertices_per_element();
        }
    } else {
        for (Eigen::Index i = 0; i < n; ++i) out.nodes[i] = expr.at(mesh.nodes[static_cast<std::size_t>(i)]);
        for (std::size_t e = 0; e < mesh.element_count(); ++e)
            out.midpoints[static_cast<Eigen::Index>(e)] = expr.at(mesh.midpoints[e]);
    }
    if (!out.nodes.allFinite() || !out.midpoints.allFinite()) throw std::invalid_argument("field is not finite");
    return out;
}

/// Exponent values at one point, with the global p_+ needed by e(z,x).
struct LocalExponents {
    double p = 2.0;
    double q = 1.5;
    double r = 3.0;
    double m = 2.0;
    double p_plus = 2.0;
};

inline double critical_exponent(double p, int dimension) {
    return p < dimension ? dimension * p / (dimension - p) : std::numeric_limits<double>::infinity();
}

/**
 * @brief Exponents p, q, r (and m for the f2 nonlinearity) on a mesh.
 *
 * Extrema run over nodes and element midpoints together.
 */
struct ExponentField {
    FieldExpr p_expr, q_expr, r_expr;
    std::optional<FieldExpr> m_expr;
    SampledField p, q, r;
    std::optional<SampledField> m;
    int dimension = 1;

    static ExponentField sample(const Mesh& mesh, FieldExpr p, FieldExpr q, FieldExpr r,
                                std::optional<FieldExpr> m = std::nullopt) {
        ExponentField out;
        out.dimension = mesh.dimension;
        out.p = varexp::sample(p, mesh);
        out.q = varexp::sample(q, mesh);
        out.r = varexp::sample(r, mesh);
        if (m) out.m = varexp::sample(*m, mesh);
        out.p_expr = std::move(p);
        out.q_expr = std::move(q);
        out.r_expr = std::move(r);
        out.m_expr = std::move(m);
        return out;
    }

    double p_minus() const { return p.min(); }
    double p_plus() const { return p.max(); }
    double q_minus() const { return q.min(); }
    double q_plus() const { return q.max(); }
    double r_minus() const { return r.min(); }
    double r_plus() const { return r.max(); }

    LocalExponents at_node(std::size_t i) const {
        const auto k = static_cast<Eigen::Index>(i);
        return {p.nodes[k], q.nodes[k], r.nodes[k], m ? m->nodes[k] : 0.0, p_plus()};
    }

    /// Pointwise evaluation; not available for nodal tables.
    LocalExponents at(const Point& z) const {
        return {p_expr.at(z), q_expr.at(z), r_expr.at(z), m_expr ? m_expr->at(z) : 0.0, p_plus()};
    }
};

/// Potential xi; may change sign.
struct Potential {
    FieldExpr expr;
    SampledField xi;
    double sup_norm = 0.0;

    static Potential sample(const Mesh& mesh, FieldExpr expr) {
        Potential out;
        out.xi = varexp::sample(expr, mesh);
        out.sup_norm = varexp::sup_norm(out.xi.nodes);
        out.expr = std::move(expr);
        return out;
    }
};

enum class NonlinearityKind { f1, f2, tabulated };

inline std::string to_string(NonlinearityKind k) {
    switch (k) {
    case NonlinearityKind::f1: return "f1";
    case NonlinearityKind::f2: return "f2";
    case NonlinearityKind::tabulated: return "tabulated";
    }
    return {};
}

/**
 * @brief The superlinear reaction f(z,x), its primitive F and e = f x - p_+ F.
 *
 * - f1: C x^{r-1}.
 * - f2: C x^{r-1} on [0,1] and C (x^{p-1} + x^{m-1}) above 1, with r = p + m - 2.
 * - tabulated: piecewise linear through (0,0) and the given nodes, independent of z.
 *
 * f vanishes for x <= 0.
 */
class Nonlinearity {
public:
    Nonlinearity() : Nonlinearity(NonlinearityKind::f1, 1.0, {}) {}

    static Nonlinearity builtin_f1(double coefficient = 1.0) { return Nonlinearity(NonlinearityKind::f1, coefficient, {}); }
    static Nonlinearity builtin_f2(double coefficient = 1.0) { return Nonlinearity(NonlinearityKind::f2, coefficient, {}); }
    static Nonlinearity tabulated(std::vector<std::pair<double, double>> points) {
        return Nonlinearity(NonlinearityKind::tabulated, 1.0, std::move(points));
    }

    NonlinearityKind kind() const { return kind_; }
    double coefficient() const { return coefficient_; }
    const std::vector<std::pair<double, double>>& table() const { return table_; }

    double f(const LocalExponents& z, double x) const {
        if (!(x > 0.0)) return 0.0;
        switch (kind_) {
        case NonlinearityKind::f1:
            return coefficient_ * detail::power(x, z.r - 1.0);
        case NonlinearityKind::f2:
            return x <= 1.0 ? coefficient_ * detail::power(x, z.r - 1.0)
                            : coefficient_ * (detail::power(x, z.p - 1.0) + detail::power(x, z.m - 1.0));
        case NonlinearityKind::tabulated:
            return table_value(x);
        }
        return 0.0;
    }

    double F(const LocalExponents& z, double x) const {
        if (!(x > 0.0)) return 0.0;
        switch (kind_) {
        case NonlinearityKind::f1:
            return coefficient_ * detail::power(x, z.r) / z.r;
        case NonlinearityKind::f2:
            if (x <= 1.0) return coefficient_ * detail::power(x, z.r) / z.r;
            return coefficient_ / z.r +
                   coefficient_ * ((detail::power(x, z.p) - 1.0) / z.p + (detail::power(x, z.m) - 1.0) / z.m);
        case NonlinearityKind::tabulated:
            return table_primitive(x);
        }
        return 0.0;
    }

    double e(const LocalExponents& z, double x) const { return f(z, x) * x - z.p_plus * F(z, x); }

    /// Kind, coefficient and table; the cached primitives follow from these.
    bool operator==(const Nonlinearity& o) const {
        return kind_ == o.kind_ && coefficient_ == o.coefficient_ && table_ == o.table_;
    }

private:
    Nonlinearity(NonlinearityKind kind, double coefficient, std::vector<std::pair<double, double>> table)
        : kind_(kind), coefficient_(coefficient), table_(std::move(table)) {
        if (!(coefficient_ > 0.0) || !std::isfinite(coefficient_))
            throw std::invalid_argument("nonlinearity coefficient must be positive");
        if (kind_ != NonlinearityKind::tabulated) return;
        if (table_.empty()) throw std::invalid_argument("tabulated nonlinearity needs at least one node");
        double prev = 0.0;
        for (auto [x, v] : table_) {
            if (!(x > prev) || !std::isfinite(x)) throw std::invalid_argument("table abscissae must be positive and increasing");
            if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("table values must be finite and nonnegative");
            prev = x;
        }
        cumulative_.push_back(segment_integral(0.0, table_.front().first));
        for (std::size_t k = 1; k < table_.size(); ++k)
            cumulative_.push_back(cumulative_.back() + segment_integral(table_[k - 1].first, table_[k].first));
    }

    double table_value(double x) const {
        if (x > table_.back().first)
            throw std::domain_error("tabulated nonlinearity evaluated at x = " + format_double(x) +
                                    " beyond the last node " + format_double(table_.back().first));
        auto it = std::lower_bound(table_.begin(), table_.end(), x,
                                   [](const auto& node, double v) { return node.first < v; });
        const double x1 = it->first, f1 = it->second;
        const double x0 = it == table_.begin() ? 0.0 : std::prev(it)->first;
        const double f0 = it == table_.begin() ? 0.0 : std::prev(it)->second;
        return f0 + (f1 - f0) * (x - x0) / (x1 - x0);
    }

    double segment_integral(double a, double b) const {
        if (!(b > a)) return 0.0;
        auto fn = [this](double s) { return table_value(s); };
        return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(fn, a, b, 15, 1e-10);
    }

    double table_primitive(double x) const {
        if (x > table_.back().first) (void)table_value(x);  // raises the extrapolation error
        auto it = std::lower_bound(table_.begin(), table_.end(), x,
                                   [](const auto& node, double v) { return node.first < v; });
        const auto k = static_cast<std::size_t>(it - table_.begin());
        const double left = k == 0 ? 0.0 : table_[k - 1].first;
        const double base = k == 0 ? 0.0 : cumulative_[k - 1];
        return base + segment_integral(left, x);
    }

    NonlinearityKind kind_;
    double coefficient_;
    std::vector<std::pair<double, double>> table_;
    std::vector<double> cumulative_;
};

inline double eval_f(const Nonlinearity& nl, const LocalExponents& z, double x) { return nl.f(z, x); }
inline double eval_F(const Nonlinearity& nl, const LocalExponents& z, double x) { return nl.F(z, x); }

/// Checks the structural requirements of f2 (r = p + m - 2, m <= p) at every sample.
inline void require_compatible(const Nonlinearity& nl, const ExponentField& exps) {
    if (nl.kind() != NonlinearityKind::f2) return;
    if (!exps.m) throw std::invalid_argument("nonlinearity f2 needs an exponent field m");
    auto check = [](const Vector& p, const Vector& m, const Vector& r) {
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            if (std::abs(r[i] - (p[i] + m[i] - 2.0)) > 1e-12 * std::max(1.0, std::abs(r[i])))
                throw std::invalid_argument("f2 requires r = p + m - 2 at every sample point");
            if (m[i] > p[i]) throw std::invalid_argument("f2 requires m <= p at every sample point");
        }
    };
    check(exps.p.nodes, exps.m->nodes, exps.r.nodes);
    check(exps.p.midpoints, exps.m->midpoints, exps.r.midpoints);
}

/// One line of a validation report. Slack is positive when the check holds.
struct CheckEntry {
    std::string name;
    bool passed = true;
    double worst_slack = std::numeric_limits<double>::infinity();
    std::string worst_sample;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckEntry> entries;

    bool passed() const {
        return std::all_of(entries.begin(), entries.end(), [](const CheckEntry& e) { return e.passed; });
    }

    const CheckEntry* find(std::string_view name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }

    std::vector<std::string> failures() const {
        std::vector<std::string> out;
        for (const auto& e : entries)
            if (!e.passed) out.push_back(e.name);
        return out;
    }

    std::string to_text() const {
        std::ostringstream os;
        for (const auto& e : entries) {
            os << (e.passed ? "pass  " : "FAIL  ") << e.name << "  slack=" << format_double(e.worst_slack);
            if (!e.worst_sample.empty()) os << "  at " << e.worst_sample;
            if (!e.detail.empty()) os << "  (" << e.detail << ")";
            os << '\n';
        }
        return os.str();
    }
};

namespace detail {

/// Sample index k runs over nodes, then midpoints.
inline std::string describe_sample(const Mesh* mesh, std::size_t nodes, std::size_t k, int dimension) {
    std::ostringstream os;
    const bool is_node = k < nodes;
    const std::size_t idx = is_node ? k : k - nodes;
    os << (is_node ? "node " : "midpoint ") << idx;
    if (mesh) {
        const Point& z = is_node ? mesh->nodes[idx] : mesh->midpoints[idx];
        os << " (" << format_double(z[0]);
        if (dimension == 2) os << ", " << format_double(z[1]);
        os << ")";
    }
    return os.str();
}

inline std::vector<double> all_samples(const SampledField& f) {
    std::vector<double> out(f.nodes.data(), f.nodes.data() + f.nodes.size());
    out.insert(out.end(), f.midpoints.data(), f.midpoints.data() + f.midpoints.size());
    return out;
}

}  // namespace detail

/**
 * @brief Checks the exponent chain 1 < q_- <= q_+ < p_- <= p_+ < r < p*.
 *
 * Entry names: "1 < q_-", "q_+ < p_-", "p_+ < r", "r < p*", "xi finite".
 * Pass a mesh to get coordinates in the worst-sample descriptions.
 */
inline ValidationReport check_H0(const ExponentField& exps, const Potential& potential, const Mesh* mesh = nullptr) {
    ValidationReport report;
    const auto p = detail::all_samples(exps.p), q = detail::all_samples(exps.q), r = detail::all_samples(exps.r);
    const std::size_t nodes = static_cast<std::size_t>(exps.p.nodes.size());
    auto where = [&](std::size_t k) { return detail::describe_sample(mesh, nodes, k, exps.dimension); };
    auto argmin = [](const std::vector<double>& v) {
        return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
    };
    auto argmax = [](const std::vector<double>& v) {
        return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    };

    {
        const auto k = argmin(q);
        CheckEntry e{"1 < q_-", q[k] > 1.0, q[k] - 1.0, where(k), "q_- = " + format_double(q[k])};
        report.entries.push_back(e);
    }
    {
        const auto kq = argmax(q), kp = argmin(p);
        const double slack = p[kp] - q[kq];
        report.entries.push_back({"q_+ < p_-", slack > 0.0, slack, where(kq) + " / " + where(kp),
                                  "q_+ = " + format_double(q[kq]) + ", p_- = " + format_double(p[kp])});
    }
    {
        const auto kr = argmin(r), kp = argmax(p);
        const double slack = r[kr] - p[kp];
        report.entries.push_back({"p_+ < r", slack > 0.0, slack, where(kr) + " / " + where(kp),
                                  "r_- = " + format_double(r[kr]) + ", p_+ = " + format_double(p[kp])});
    }
    {
        double worst = std::numeric_limits<double>::infinity();
        std::size_t kw = 0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double slack = critical_exponent(p[k], exps.dimension) - r[k];
            if (slack < worst) worst = slack, kw = k;
        }
        report.entries.push_back({"r < p*", worst > 0.0, worst, std::isinf(worst) ? "" : where(kw),
                                  std::isinf(worst) ? "p >= N everywhere, p* = +inf"
                                                    : "p* = " + format_double(critical_exponent(p[kw], exps.dimension)) +
                                                          ", r = " + format_double(r[kw])});
    }
    {
        const bool finite = std::isfinite(potential.sup_norm) && potential.xi.nodes.allFinite();
        report.entries.push_back({"xi finite", finite, finite ? 0.0 : -1.0, "", "|xi|_inf = " + format_double(potential.sup_norm)});
    }
    return report;
}

/// Sample grid for the growth checks: small x for the behaviour at 0, large x for growth.
struct GrowthGrid {
    std::vector<double> small_x;
    std::vector<double> large_x;

    static std::vector<double> log_spaced(double lo, double hi, int count) {
        std::vector<double> out;
        for (int k = 0; k < count; ++k)
            out.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (count - 1)));
        return out;
    }

    static GrowthGrid standard() { return {log_spaced(1e-4, 1e-1, 16), log_spaced(10.0, 1e4, 16)}; }
};

/**
 * @brief Sample-based certificates for the growth hypotheses on f.
 *
 * Entry names and criteria, evaluated with the exponents at every node:
 * - "f >= 0": f(z,x) >= 0 on all samples.
 * - "growth cap": f <= a (1 + x^{r-1}), only when a cap a is supplied.
 * - "F/x^p_+ -> inf": F(z,x)/x^{p_+} nondecreasing over the last four large samples
 *   and at least doubling across the large grid.
 * - "e' >= C x^(p-1)": central difference (step 1e-6 x) of e(z,.) is at least
 *   C_test x^{p(z)-1} on the large grid, C_test = |xi|_inf (p_+/p_- - 1) + 1e-9.
 * - "f/x^(p_- -1) -> 0": the ratio is nonincreasing as x decreases over the small
 *   grid and halves at least once across it.
 * - "f > 0 for large x": positivity floor on the large grid.
 *
 * These are heuristic certificates: the hypotheses are asymptotic.
 */
inline ValidationReport check_growth_hypotheses(const Nonlinearity& nl, const ExponentField& exps,
                                                const Potential& potential,
                                                const GrowthGrid& grid = GrowthGrid::standard(),
                                                std::optional<double> growth_cap = std::nullopt) {
    ValidationReport report;
    const double p_minus = exps.p_minus(), p_plus = exps.p_plus();
    const double c_test = potential.sup_norm * (p_plus / p_minus - 1.0) + 1e-9;
    const std::size_t n = static_cast<std::size_t>(exps.p.nodes.size());

    auto named = [](std::string name) {
        CheckEntry e;
        e.name = std::move(name);
        return e;
    };
    CheckEntry nonneg = named("f >= 0"), cap = named("growth cap"), primitive = named("F/x^p_+ -> inf"),
               slope = named("e' >= C x^(p-1)"), small = named("f/x^(p_- -1) -> 0"), floor = named("f > 0 for large x");
    slope.detail = "C_test = " + format_double(c_test);

    auto note = [](CheckEntry& e, double slack, std::size_t node, double x) {
        if (slack < e.worst_slack) {
            e.worst_slack = slack;
            e.worst_sample = "node " + std::to_string(node) + ", x = " + format_double(x);
        }
    };

    try {
        for (std::size_t i = 0; i < n; ++i) {
            const LocalExponents z = exps.at_node(i);
            for (const auto* xs : {&grid.small_x, &grid.large_x}) {
                for (double x : *xs) {
                    const double fx = nl.f(z, x);
                    note(nonneg, fx, i, x);
                    if (growth_cap) {
                        const double bound = 1.0 + std::pow(x, z.r - 1.0);
                        note(cap, (*growth_cap * bound - fx) / bound, i, x);
                    }
                }
            }
            if (!grid.large_x.empty()) {
                std::vector<double> ratio;
                for (double x : grid.large_x) {
                    ratio.push_back(nl.F(z, x) / std::pow(x, p_plus));
                    const double d = 1e-6 * x;
                    const double de = (nl.e(z, x + d) - nl.e(z, x - d)) / (2.0 * d);
                    note(slope, (de - c_test * std::pow(x, z.p - 1.0)) / std::pow(x, z.p - 1.0), i, x);
                    note(floor, nl.f(z, x), i, x);
                }
                const std::size_t m = ratio.size();
                double s = ratio.back() / ratio.front() - 2.0;
                for (std::size_t k = m > 4 ? m - 4 : 1; k < m; ++k)
                    if (ratio[k] < ratio[k - 1]) s = std::min(s, ratio[k] - ratio[k - 1]);
                note(primitive, s, i, grid.large_x.back());
            }
            if (!grid.small_x.empty()) {
                std::vector<double> ratio;
                for (double x : grid.small_x) ratio.push_back(nl.f(z, x) / std::pow(x, p_minus - 1.0));
                // grid ascending: ratio must not grow as x decreases
                double s = 0.5 * ratio.back() - ratio.front();
                for (std::size_t k = 1; k < ratio.size(); ++k)
                    if (ratio[k - 1] > ratio[k] * (1.0 + 1e-12)) s = std::min(s, ratio[k] - ratio[k - 1]);
                note(small, s, i, grid.small_x.front());
            }
        }
    } catch (const std::domain_error& err) {
        for (auto* e : {&nonneg, &primitive, &slope, &small, &floor}) {
            e->worst_slack = -std::numeric_limits<double>::infinity();
            e->detail = err.what();
        }
    }

    nonneg.passed = nonneg.worst_slack >= 0.0;
    primitive.passed = primitive.worst_slack > 0.0;
    slope.passed = slope.worst_slack >= 0.0;
    small.passed = small.worst_slack >= 0.0;
    floor.passed = floor.worst_slack > 0.0;
    report.entries = {nonneg, primitive, slope, small, floor};
    if (growth_cap) {
        cap.passed = cap.worst_slack >= 0.0;
        report.entries.insert(report.entries.begin() + 1, cap);
    }
    return report;
}

}  // namespace varexp
