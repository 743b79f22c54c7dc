#pragma once

#include "varexp/mesh.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace varexp {

/**
 * @brief Inner-product structure used by the descent methods.
 *
 * `precondition` maps a gradient to a primal direction (the Riesz map),
 * `apply` is the inverse map, and `path_norm` measures distances along
 * mountain-pass paths.
 */
class Metric {
public:
    virtual ~Metric() = default;
    virtual Vector precondition(const Vector& gradient) const = 0;
    virtual Vector apply(const Vector& direction) const = 0;
    virtual double path_norm(const Vector& v) const = 0;

    double dual_norm(const Vector& gradient) const {
        return std::sqrt(std::max(0.0, gradient.dot(precondition(gradient))));
    }
    double norm(const Vector& v) const { return std::sqrt(std::max(0.0, v.dot(apply(v)))); }
};

/// Plain Euclidean structure, for toy problems that are not tied to a mesh.
class EuclideanMetric final : public Metric {
public:
    Vector precondition(const Vector& gradient) const override { return gradient; }
    Vector apply(const Vector& direction) const override { return direction; }
    double path_norm(const Vector& v) const override { return v.norm(); }
};

/**
 * @brief Discrete H^1_0 structure from the P1 Dirichlet stiffness matrix K.
 *
 * dual_norm(g) = sqrt(g^T K^{-1} g) is the discrete H^{-1} norm used for
 * every gradient tolerance. Path distances use the lumped L^2 norm.
 */
class SobolevMetric final : public Metric {
public:
    explicit SobolevMetric(const Mesh& mesh) : weights_(mesh.lumped_weights) {
        const std::size_t n = mesh.node_count();
        interior_.assign(n, -1);
        int count = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (!mesh.boundary[i]) interior_[i] = count++;
        size_ = static_cast<Eigen::Index>(n);

        std::vector<Eigen::Triplet<double>> triplets;
        const int nv = mesh.vertices_per_element();
        for (std::size_t e = 0; e < mesh.element_count(); ++e) {
            const auto& el = mesh.elements[e];
            const auto& g = mesh.basis_gradients[e];
            for (int a = 0; a < nv; ++a) {
                const int ia = interior_[el[a]];
                if (ia < 0) continue;
                for (int b = 0; b < nv; ++b) {
                    const int ib = interior_[el[b]];
                    if (ib < 0) continue;
                    triplets.emplace_back(ia, ib, mesh.measures[e] * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
                }
            }
        }
        stiffness_.resize(count, count);
        stiffness_.setFromTriplets(triplets.begin(), triplets.end());
        solver_.compute(stiffness_);
        if (solver_.info() != Eigen::Success) throw std::runtime_error("stiffness factorization failed");
    }

    Vector precondition(const Vector& gradient) const override {
        return scatter(solver_.solve(gather(gradient)));
    }
    Vector apply(const Vector& direction) const override { return scatter(stiffness_ * gather(direction)); }
    double path_norm(const Vector& v) const override {
        return std::sqrt(weights_.dot(v.cwiseProduct(v)));
    }

    const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }

    /// Restriction to interior nodes, in mesh order.
    Vector gather(const Vector& full) const {
        Vector out(stiffness_.rows());
        for (Eigen::Index i = 0; i < size_; ++i)
            if (interior_[static_cast<std::size_t>(i)] >= 0) out[interior_[static_cast<std::size_t>(i)]] = full[i];
        return out;
    }
    Vector scatter(const Vector& inner) const {
        Vector out = Vector::Zero(size_);
        for (Eigen::Index i = 0; i < size_; ++i)
            if (interior_[static_cast<std::size_t>(i)] >= 0) out[i] = inner[interior_[static_cast<std::size_t>(i)]];
        return out;
    }

private:
    Vector weights_;
    std::vector<int> interior_;
    Eigen::Index size_ = 0;
    Eigen::SparseMatrix<double> stiffness_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver_;
};

}  // namespace varexp
