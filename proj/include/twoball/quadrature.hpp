#pragma once

#include <array>

namespace twoball::quad {

/// Barycentric node (l1, l2, l3) with a weight normalized to sum to 1.
struct TriangleNode {
    double l1, l2, l3;
    double weight;
};

/// Six-point symmetric rule, exact for polynomials of degree 4.
inline constexpr std::array<TriangleNode, 6> kDegree4 = {{
    {0.44594849091596489, 0.44594849091596489, 0.10810301816807023, 0.22338158967801147},
    {0.44594849091596489, 0.10810301816807023, 0.44594849091596489, 0.22338158967801147},
    {0.10810301816807023, 0.44594849091596489, 0.44594849091596489, 0.22338158967801147},
    {0.091576213509770743, 0.091576213509770743, 0.81684757298045851, 0.10995174365532187},
    {0.091576213509770743, 0.81684757298045851, 0.091576213509770743, 0.10995174365532187},
    {0.81684757298045851, 0.091576213509770743, 0.091576213509770743, 0.10995174365532187},
}};

inline constexpr int kNodesPerTriangle = static_cast<int>(kDegree4.size());

} // namespace twoball::quad
