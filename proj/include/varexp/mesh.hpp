#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace varexp {

using Vector = Eigen::VectorXd;

/// Nodal values of a piecewise-linear function, one entry per mesh node.
using NodalFunction = Vector;

/// Gradient of an energy with respect to nodal values; boundary entries are zero.
using DualVector = Vector;

using Point = std::array<double, 2>;

/**
 * @brief Uniform P1 mesh of [0,1] or [0,1]^2.
 *
 * In 1D the elements use only the first two connectivity slots. Basis
 * gradients are stored per element and local vertex, so a piecewise-linear
 * gradient is a short weighted sum.
 */
struct Mesh {
    int dimension = 1;
    int resolution = 0;
    std::vector<Point> nodes;
    std::vector<std::array<int, 3>> elements;
    std::vector<bool> boundary;
    std::vector<double> measures;
    std::vector<Point> midpoints;
    std::vector<std::array<Point, 3>> basis_gradients;
    /// Lumped quadrature weights: trapezoid in 1D, area/3 per triangle in 2D.
    Vector lumped_weights;

    int vertices_per_element() const { return dimension + 1; }
    std::size_t node_count() const { return nodes.size(); }
    std::size_t element_count() const { return elements.size(); }

    std::size_t interior_count() const {
        std::size_t n = 0;
        for (bool b : boundary) n += b ? 0 : 1;
        return n;
    }
};

namespace detail {

inline void finish_mesh(Mesh& mesh) {
    const int nv = mesh.vertices_per_element();
    mesh.lumped_weights = Vector::Zero(static_cast<Eigen::Index>(mesh.node_count()));
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const auto& el = mesh.elements[e];
        Point mid{0.0, 0.0};
        for (int a = 0; a < nv; ++a) {
            mid[0] += mesh.nodes[el[a]][0] / nv;
            mid[1] += mesh.nodes[el[a]][1] / nv;
            mesh.lumped_weights[el[a]] += mesh.measures[e] / nv;
        }
        mesh.midpoints.push_back(mid);
    }
}

}  // namespace detail

/// Builds the uniform mesh; 2D splits each cell along its (0,0)-(1,1) diagonal.
inline Mesh build_mesh(int dimension, int resolution) {
    if (dimension != 1 && dimension != 2)
        throw std::invalid_argument("mesh dimension must be 1 or 2");
    if (resolution < 2)
        throw std::invalid_argument("mesh resolution must be at least 2");

    Mesh mesh;
    mesh.dimension = dimension;
    mesh.resolution = resolution;
    const double h = 1.0 / resolution;

    if (dimension == 1) {
        for (int i = 0; i <= resolution; ++i) {
            mesh.nodes.push_back({i * h, 0.0});
            mesh.boundary.push_back(i == 0 || i == resolution);
        }
        for (int i = 0; i < resolution; ++i) {
            mesh.elements.push_back({i, i + 1, -1});
            mesh.measures.push_back(h);
            mesh.basis_gradients.push_back({Point{-1.0 / h, 0.0}, Point{1.0 / h, 0.0}, Point{0.0, 0.0}});
        }
        detail::finish_mesh(mesh);
        return mesh;
    }

    const int side = resolution + 1;
    for (int j = 0; j <= resolution; ++j) {
        for (int i = 0; i <= resolution; ++i) {
            mesh.nodes.push_back({i * h, j * h});
            mesh.boundary.push_back(i == 0 || j == 0 || i == resolution || j == resolution);
        }
    }
    // Lower triangle (a, b, c) and upper triangle (a, c, d) of cell (i, j):
    //   d---c
    //   | / |
    //   a---b
    const Point ga_low{-1.0 / h, 0.0}, gb_low{1.0 / h, -1.0 / h}, gc_low{0.0, 1.0 / h};
    const Point ga_up{0.0, -1.0 / h}, gc_up{1.0 / h, 0.0}, gd_up{-1.0 / h, 1.0 / h};
    for (int j = 0; j < resolution; ++j) {
        for (int i = 0; i < resolution; ++i) {
            const int a = j * side + i, b = a + 1, c = a + side + 1, d = a + side;
            mesh.elements.push_back({a, b, c});
            mesh.basis_gradients.push_back({ga_low, gb_low, gc_low});
            mesh.elements.push_back({a, c, d});
            mesh.basis_gradients.push_back({ga_up, gc_up, gd_up});
            mesh.measures.push_back(0.5 * h * h);
            mesh.measures.push_back(0.5 * h * h);
        }
    }
    detail::finish_mesh(mesh);
    return mesh;
}

inline void require_conforming(const Mesh& mesh, const Vector& values) {
    if (static_cast<std::size_t>(values.size()) != mesh.node_count())
        throw std::invalid_argument("nodal vector length " + std::to_string(values.size()) +
                                    " does not match node count " + std::to_string(mesh.node_count()));
}

/// Integral of the piecewise-linear interpolant of nodal values.
inline double integrate_zero_order(const Mesh& mesh, const Vector& values) {
    require_conforming(mesh, values);
    return mesh.lumped_weights.dot(values);
}

inline Point element_gradient(const Mesh& mesh, const Vector& u, std::size_t e) {
    const auto& el = mesh.elements[e];
    const auto& g = mesh.basis_gradients[e];
    Point grad{0.0, 0.0};
    for (int a = 0; a < mesh.vertices_per_element(); ++a) {
        grad[0] += u[el[a]] * g[a][0];
        grad[1] += u[el[a]] * g[a][1];
    }
    return grad;
}

/// Constant gradient of u on every element (second component is 0 in 1D).
inline std::vector<Point> element_gradient(const Mesh& mesh, const Vector& u) {
    require_conforming(mesh, u);
    std::vector<Point> out(mesh.element_count());
    for (std::size_t e = 0; e < mesh.element_count(); ++e) out[e] = element_gradient(mesh, u, e);
    return out;
}

inline Vector apply_dirichlet(Vector u, const Mesh& mesh) {
    require_conforming(mesh, u);
    for (std::size_t i = 0; i < mesh.node_count(); ++i)
        if (mesh.boundary[i]) u[static_cast<Eigen::Index>(i)] = 0.0;
    return u;
}

/// Interpolates a pointwise function onto the nodes.
template <class Fn>
Vector interpolate(const Mesh& mesh, Fn&& fn) {
    Vector out(static_cast<Eigen::Index>(mesh.node_count()));
    for (std::size_t i = 0; i < mesh.node_count(); ++i) out[static_cast<Eigen::Index>(i)] = fn(mesh.nodes[i]);
    return out;
}

inline double sup_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// Writes `node,x[,y],value` rows with round-trip precision.
inline void write_nodal_csv(std::ostream& os, const Mesh& mesh, const Vector& u) {
    require_conforming(mesh, u);
    os << (mesh.dimension == 1 ? "node,x,value\n" : "node,x,y,value\n");
    std::ostringstream row;
    row.precision(17);
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        row.str("");
        row << i << ',' << mesh.nodes[i][0] << ',';
        if (mesh.dimension == 2) row << mesh.nodes[i][1] << ',';
        row << u[static_cast<Eigen::Index>(i)] << '\n';
        os << row.str();
    }
}

/// Reads the format produced by write_nodal_csv; node indices must be 0..n-1 in order.
inline Vector read_nodal_csv(std::istream& is, const Mesh& mesh) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("nodal CSV is empty");
    std::vector<double> values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (cells.size() != static_cast<std::size_t>(mesh.dimension) + 2)
            throw std::runtime_error("malformed nodal CSV row: " + line);
        if (std::stoul(cells.front()) != values.size())
            throw std::runtime_error("nodal CSV rows out of order at: " + line);
        values.push_back(std::stod(cells.back()));
    }
    Vector u = Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    require_conforming(mesh, u);
    return u;
}

}  // namespace varexp
