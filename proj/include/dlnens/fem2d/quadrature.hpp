#pragma once
// Seven-point degree-5 rule on the reference triangle, in barycentric coordinates.
// Weights sum to 1 (multiply by the element area).

#include <array>
#include <cmath>

namespace dlnens::fem {

struct QuadPoint {
    std::array<double, 3> lambda;
    double weight;
};

inline const std::array<QuadPoint, 7>& triangle_rule()
{
    static const std::array<QuadPoint, 7> rule = [] {
        const double s = std::sqrt(15.0);
        const double a1 = (6.0 - s) / 21.0, b1 = (9.0 + 2.0 * s) / 21.0, w1 = (155.0 - s) / 1200.0;
        const double a2 = (6.0 + s) / 21.0, b2 = (9.0 - 2.0 * s) / 21.0, w2 = (155.0 + s) / 1200.0;
        return std::array<QuadPoint, 7>{{
            {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0},
            {{b1, a1, a1}, w1},
            {{a1, b1, a1}, w1},
            {{a1, a1, b1}, w1},
            {{b2, a2, a2}, w2},
            {{a2, b2, a2}, w2},
            {{a2, a2, b2}, w2},
        }};
    }();
    return rule;
}

}  // namespace dlnens::fem
