#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "larb/params.hpp"

namespace larb {

/// Tensorized Lagrange elements of degree 1..3 on a uniform quad grid of the
/// unit square. Assembles the parameter-independent operator blocks
///   stiffness  a_1(w,v) = int grad w . grad v
///   convection a_2(w,v) = int (d_x w) v,   a_3(w,v) = int (d_y w) v
/// and the mass matrix, all over the full node set with the convention
/// A(i,j) = a(phi_j, phi_i) so that v^T A w = a(w, v).
class QuadFem {
public:
    QuadFem(int elems_x, int elems_y, int degree);

    Eigen::Index node_count() const { return Eigen::Index(nodes_x_) * nodes_y_; }
    int nodes_x() const { return nodes_x_; }
    int nodes_y() const { return nodes_y_; }
    int degree() const { return degree_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    double node_x(int ix) const { return ix * hx_ / degree_; }
    double node_y(int iy) const { return iy * hy_ / degree_; }
    Eigen::Index node_id(int ix, int iy) const { return Eigen::Index(iy) * nodes_x_ + ix; }

    const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }
    const Eigen::SparseMatrix<double>& convection_x() const { return conv_x_; }
    const Eigen::SparseMatrix<double>& convection_y() const { return conv_y_; }
    const Eigen::SparseMatrix<double>& mass() const { return mass_; }

    bool is_boundary(int ix, int iy) const {
        return ix == 0 || iy == 0 || ix == nodes_x_ - 1 || iy == nodes_y_ - 1;
    }
    /// Ids of interior (free) nodes in ascending order.
    const std::vector<Eigen::Index>& free_nodes() const { return free_nodes_; }

private:
    int elems_x_, elems_y_, degree_;
    int nodes_x_, nodes_y_;
    double hx_, hy_;
    Eigen::SparseMatrix<double> stiffness_, conv_x_, conv_y_, mass_;
    std::vector<Eigen::Index> free_nodes_;
};

} // namespace larb
