#pragma once

#include <array>

namespace bswave::quad {

/// Barycentric quadrature node on the reference triangle. Weights sum to 1;
/// multiply by the element area when integrating.
struct TriNode {
    double l0, l1, l2, w;
};

/// 3-point edge-midpoint rule, exact for degree 2.
inline constexpr std::array<TriNode, 3> tri_degree2 = {{
    {0.5, 0.5, 0.0, 1.0 / 3.0},
    {0.0, 0.5, 0.5, 1.0 / 3.0},
    {0.5, 0.0, 0.5, 1.0 / 3.0},
}};

/// 6-point rule, exact for degree 4.
inline constexpr std::array<TriNode, 6> tri_degree4 = {{
    {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011},
    {0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322},
}};

/// Gauss-Legendre node on [0,1]; weights sum to 1.
struct LineNode {
    double s, w;
};

/// 2-point Gauss on [0,1], exact for degree 3.
inline constexpr std::array<LineNode, 2> line_gauss2 = {{
    {0.5 - 0.28867513459481287, 0.5},
    {0.5 + 0.28867513459481287, 0.5},
}};

/// 3-point Gauss on [0,1], exact for degree 5.
inline constexpr std::array<LineNode, 3> line_gauss3 = {{
    {0.5 - 0.5 * 0.7745966692414834, 2.5 / 9.0},
    {0.5, 4.0 / 9.0},
    {0.5 + 0.5 * 0.7745966692414834, 2.5 / 9.0},
}};

} // namespace bswave::quad
