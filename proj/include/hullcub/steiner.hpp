#pragma once

#include <vector>

#include "hullcub/space.hpp"

namespace hullcub {

/// Minimal network spanning a family of vertex groups: an edge forest in the
/// host, of exact minimum total weight, whose quotient collapsing each group
/// to a point is connected. lambda(F) is the singleton-groups case and is a
/// tree containing F.
struct SteinerNetwork {
    const MetricGraph* host = nullptr;
    std::vector<std::vector<int>> groups;
    std::vector<int> edge_ids;  // sorted host edge ids
    Dist total_weight = 0;

    std::vector<int> vertices() const;  // sorted vertices touched by the forest
    bool contains_vertex(int v) const;

    // In-network tree metric and paths; requires the network to be a single
    // tree (always true for lambda(F)).
    Dist net_dist(int u, int v) const;
    std::vector<int> net_path(int u, int v) const;  // vertex sequence

    // Minimal subtree of the network spanning `pts` (all must lie on it).
    // Returned as (vertices, edge ids), both sorted.
    std::pair<std::vector<int>, std::vector<int>> span_subtree(const std::vector<int>& pts) const;

    // Network vertices within host-distance <= radius of `centers`.
    std::vector<int> vertices_within(const std::vector<int>& centers, double radius) const;

    // Closest network vertex to x (host metric; least id on ties).
    int project(int x) const;
};

/// Exact minimum Steiner network over vertex groups (Dreyfus-Wagner on the
/// group quotient, canonical deterministic reconstruction, segments
/// straightened to tie-broken geodesics). Capped at 10 quotient terminals.
SteinerNetwork minimal_network(const MetricGraph& g, const std::vector<std::vector<int>>& groups);

/// lambda(F): minimal network spanning single points.
SteinerNetwork minimal_network_points(const MetricGraph& g, const std::vector<int>& pts);

/// The convex hull, inside the tree network `net`, of the network vertices
/// within `radius` of `centers` (vertex-resolution shadow). Empty when no
/// vertex qualifies.
struct Shadow {
    std::vector<int> vertices;  // sorted
    std::vector<int> edge_ids;  // sorted, edges of the network subtree
    bool empty() const { return vertices.empty(); }
    Dist diameter(const SteinerNetwork& net) const;
};
Shadow shadow(const SteinerNetwork& net, const std::vector<int>& A, double eps);

}  // namespace hullcub
