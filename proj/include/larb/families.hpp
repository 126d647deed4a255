#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "larb/params.hpp"

namespace larb {

/// Parametrized Gaussian bump families used by the projection tests. All are
/// separable products of two one-dimensional Gaussians in x1 and x2.
enum class Family { f1, f2, f3, f3xi };

Family family_from_string(const std::string& name);
std::string family_to_string(Family f);

/// Linear parameter maps xi_1 = a1 mu_1 + b1 mu_2, xi_2 = a2 mu_1 + b2 mu_2
/// for the f3xi variants.
struct XiMap {
    double a1 = 1.0, b1 = 3.0;
    double a2 = 3.0, b2 = -1.0;
};

/// Per-axis center and (positive) denominator of the Gaussian exponent:
/// f(x; mu) = exp(-(x1-c1)^2/d1 - (x2-c2)^2/d2).
struct FamilyShape {
    double c1, d1, c2, d2;
};

FamilyShape family_shape(Family f, const Param& mu, const std::optional<XiMap>& xi);

/// Closed-form value of the family at one spatial point.
double evaluate_family(Family f, double x1, double x2, const Param& mu,
                       const std::optional<XiMap>& xi = std::nullopt);

} // namespace larb
