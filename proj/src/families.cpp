#include "larb/families.hpp"

#include <cmath>

namespace larb {

Family family_from_string(const std::string& name) {
    if (name == "f1") return Family::f1;
    if (name == "f2") return Family::f2;
    if (name == "f3") return Family::f3;
    if (name == "f3xi") return Family::f3xi;
    throw std::invalid_argument("unknown family id: " + name);
}

std::string family_to_string(Family f) {
    switch (f) {
        case Family::f1: return "f1";
        case Family::f2: return "f2";
        case Family::f3: return "f3";
        case Family::f3xi: return "f3xi";
    }
    throw std::logic_error("unreachable");
}

FamilyShape family_shape(Family f, const Param& mu, const std::optional<XiMap>& xi) {
    if (mu.size() != 2)
        throw std::invalid_argument("family_shape: mu must be 2-dimensional");
    const double m1 = mu[0], m2 = mu[1];
    switch (f) {
        case Family::f1:
            return {0.1 * (m1 - m2), 0.01, m1 + m2, 0.01};
        case Family::f2: {
            const double s = m1 * m1 + m2 * m2;
            return {s, 0.01, s, 0.01};
        }
        case Family::f3: {
            const double x1 = m1 + 3.0 * m2;
            const double x2 = 3.0 * m1 - m2;
            return {x1, 0.1 + 5.0 * std::abs(x1), x2, 0.1 + 5.0 * std::abs(x2)};
        }
        case Family::f3xi: {
            const XiMap m = xi.value_or(XiMap{});
            const double x1 = m.a1 * m1 + m.b1 * m2;
            const double x2 = m.a2 * m1 + m.b2 * m2;
            return {x1, 0.1 + 5.0 * std::abs(x1), x2, 0.1 + 5.0 * std::abs(x2)};
        }
    }
    throw std::logic_error("unreachable");
}

double evaluate_family(Family f, double x1, double x2, const Param& mu,
                       const std::optional<XiMap>& xi) {
    const FamilyShape s = family_shape(f, mu, xi);
    const double e1 = (x1 - s.c1) * (x1 - s.c1) / s.d1;
    const double e2 = (x2 - s.c2) * (x2 - s.c2) / s.d2;
    return std::exp(-e1 - e2);
}

} // namespace larb
