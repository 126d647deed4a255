#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace larb {

/// Result of locating a query point: triangle vertex ids and barycentric weights.
struct TriangleHit {
    std::array<int, 3> vertex;
    std::array<double, 3> weight;
};

/// Incremental Bowyer-Watson triangulation of a 2D point set, with a uniform
/// bucket grid for point location. Construction can fail on degenerate input
/// (collinear sets, duplicates); callers fall back to inverse-distance
/// weighting in that case.
class Delaunay2D {
public:
    /// Returns an empty optional if the point set cannot be triangulated.
    static std::optional<Delaunay2D> build(const std::vector<std::array<double, 2>>& points);

    /// Locates the triangle containing (x, y); nullopt if outside the hull.
    std::optional<TriangleHit> locate(double x, double y) const;

    std::size_t triangle_count() const { return tri_vertices_.size(); }

private:
    Delaunay2D() = default;

    std::vector<std::array<double, 2>> norm_pts_; // points mapped to [0,1]^2
    double scale_ = 1.0, off_x_ = 0.0, off_y_ = 0.0;
    std::vector<std::array<int, 3>> tri_vertices_;

    // bucket grid over normalized coordinates
    int grid_n_ = 1;
    std::vector<std::vector<std::int32_t>> buckets_;

    void build_buckets();
    bool bary(int tri, double x, double y, std::array<double, 3>& w, double tol) const;
};

} // namespace larb
