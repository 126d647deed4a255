#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "larb/delaunay.hpp"
#include "larb/params.hpp"

namespace larb {

/// One stored field node: parameter location, metric tensor M, ball radius r.
struct MetricNode {
    Param point;
    Matrix tensor;
    double radius = 0.0;
};

/// Second-order finite-difference estimate of the curvature of the reduced
/// coefficient map mu -> (v_1(mu), ..., v_N(mu)):
///     H_ij = sum_n v_n(c) * D_ij v_n(c)
/// on the 3^p stencil around c, where c is mu shifted inward so the whole
/// stencil stays inside the domain. The result is symmetrized.
Matrix estimate_hessian(const std::function<Eigen::VectorXd(const Param&)>& coeffs,
                        const Param& mu, const Eigen::VectorXd& delta,
                        const ParameterDomain& domain);

/// Eigenvalue decomposition H = V diag(lambda) V^T mapped to the
/// semi-positive definite tensor M = V diag(|lambda|) V^T.
Matrix metric_from_hessian(const Matrix& hessian);

/// Two-endpoint trapezoidal surrogate for the geodesic length:
///     d = 1/2 sqrt(D^T M1 D) + 1/2 sqrt(D^T M2 D),  D = mu2 - mu1.
/// Symmetric by construction and zero for mu1 == mu2.
double metric_distance(const Matrix& m1, const Param& mu1,
                       const Matrix& m2, const Param& mu2);

/// Piecewise interpolant of (tensor, radius) data attached to a scattered set
/// of parameter points. For p = 2 a Delaunay triangulation is used when the
/// node set admits one (a structured lattice takes a direct cell split);
/// otherwise falls back to inverse-distance weighting with exponent 2 over
/// the 2p nearest nodes. Interpolated tensors are clamped back to PSD.
class MetricField {
public:
    MetricField() = default;
    explicit MetricField(std::vector<MetricNode> nodes);

    bool empty() const { return nodes_.empty(); }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<MetricNode>& nodes() const { return nodes_; }

    /// Interpolated (M(mu), r(mu)); exact stored values at a node.
    std::pair<Matrix, double> at(const Param& mu) const;

private:
    std::pair<Matrix, double> idw_at(const Param& mu) const;
    std::pair<Matrix, double> blend(const int* ids, const double* w, int count) const;

    std::vector<MetricNode> nodes_;
    int dim_ = 0;

    // exact-match index over node coordinates
    struct CoordHash {
        std::size_t operator()(const std::vector<double>& v) const;
    };
    std::unordered_map<std::vector<double>, int, CoordHash> exact_;

    // p = 2 linear interpolation machinery
    std::shared_ptr<const Delaunay2D> tri_;
    std::vector<double> lat_x_, lat_y_; // nonempty if nodes form a lattice
    std::vector<int> lat_id_;           // lattice (ix, iy) -> node id
};

/// Clamp negative eigenvalues of a symmetric matrix to zero.
Matrix clamp_psd(const Matrix& m);

} // namespace larb
