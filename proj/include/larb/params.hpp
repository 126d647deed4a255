#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace larb {

using Param = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Axis-aligned box P in R^p that all parameter points live in.
class ParameterDomain {
public:
    ParameterDomain(Eigen::VectorXd lower, Eigen::VectorXd upper)
        : lower_(std::move(lower)), upper_(std::move(upper)) {
        if (lower_.size() != upper_.size() || lower_.size() < 1)
            throw std::invalid_argument("ParameterDomain: bounds must have equal size p >= 1");
        for (Eigen::Index i = 0; i < lower_.size(); ++i)
            if (!(lower_[i] < upper_[i]))
                throw std::invalid_argument("ParameterDomain: lower[i] < upper[i] required");
    }

    int dim() const { return static_cast<int>(lower_.size()); }
    const Eigen::VectorXd& lower() const { return lower_; }
    const Eigen::VectorXd& upper() const { return upper_; }
    double extent(int i) const { return upper_[i] - lower_[i]; }

    bool contains(const Param& mu, double tol = 0.0) const {
        if (mu.size() != lower_.size()) return false;
        for (Eigen::Index i = 0; i < mu.size(); ++i)
            if (mu[i] < lower_[i] - tol || mu[i] > upper_[i] + tol) return false;
        return true;
    }

    Param clamp(Param mu) const {
        for (Eigen::Index i = 0; i < mu.size(); ++i)
            mu[i] = std::min(std::max(mu[i], lower_[i]), upper_[i]);
        return mu;
    }

    Param centroid() const { return 0.5 * (lower_ + upper_); }

    /// The 2^p box corners, in lexicographic bit order.
    std::vector<Param> corners() const {
        const int p = dim();
        std::vector<Param> out;
        out.reserve(std::size_t(1) << p);
        for (std::size_t mask = 0; mask < (std::size_t(1) << p); ++mask) {
            Param c(p);
            for (int i = 0; i < p; ++i)
                c[i] = (mask >> i) & 1 ? upper_[i] : lower_[i];
            out.push_back(std::move(c));
        }
        return out;
    }

private:
    Eigen::VectorXd lower_, upper_;
};

} // namespace larb
