#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace larb {

/// Tensor lattice over a box in R^d with trapezoidal quadrature weights.
/// Node ordering is row-major with the first coordinate fastest.
class SpatialGrid {
public:
    SpatialGrid(std::vector<int> counts, std::vector<double> lower, std::vector<double> upper)
        : counts_(std::move(counts)), lower_(std::move(lower)), upper_(std::move(upper)) {
        if (counts_.size() != lower_.size() || counts_.size() != upper_.size() ||
            counts_.empty())
            throw std::invalid_argument("SpatialGrid: inconsistent dimensions");
        std::size_t total = 1;
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            if (counts_[i] < 2)
                throw std::invalid_argument("SpatialGrid: need at least 2 nodes per dimension");
            if (!(lower_[i] < upper_[i]))
                throw std::invalid_argument("SpatialGrid: empty box");
            total *= std::size_t(counts_[i]);
        }
        axes_.resize(counts_.size());
        axis_weights_.resize(counts_.size());
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            const int n = counts_[i];
            const double h = (upper_[i] - lower_[i]) / (n - 1);
            axes_[i].resize(n);
            axis_weights_[i].resize(n);
            for (int k = 0; k < n; ++k) {
                axes_[i][k] = lower_[i] + k * h;
                axis_weights_[i][k] = (k == 0 || k == n - 1) ? 0.5 * h : h;
            }
        }
        weights_.resize(Eigen::Index(total));
        for (std::size_t flat = 0; flat < total; ++flat) {
            std::size_t rem = flat;
            double w = 1.0;
            for (std::size_t i = 0; i < counts_.size(); ++i) {
                w *= axis_weights_[i][rem % counts_[i]];
                rem /= counts_[i];
            }
            weights_[Eigen::Index(flat)] = w;
        }
    }

    int dim() const { return int(counts_.size()); }
    int count(int axis) const { return counts_[axis]; }
    Eigen::Index node_count() const { return weights_.size(); }
    const std::vector<double>& axis(int i) const { return axes_[i]; }
    const std::vector<double>& axis_weights(int i) const { return axis_weights_[i]; }
    const Eigen::VectorXd& weights() const { return weights_; }

    std::vector<double> node(Eigen::Index flat) const {
        std::vector<double> x(counts_.size());
        std::size_t rem = std::size_t(flat);
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            x[i] = axes_[i][rem % counts_[i]];
            rem /= counts_[i];
        }
        return x;
    }

private:
    std::vector<int> counts_;
    std::vector<double> lower_, upper_;
    std::vector<std::vector<double>> axes_, axis_weights_;
    Eigen::VectorXd weights_;
};

} // namespace larb
