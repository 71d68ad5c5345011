#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hullcub/errors.hpp"

namespace hullcub {

using Dist = long long;

/// Finite connected weighted graph with exact integer all-pairs distances.
/// Immutable after construction; all queries are reentrant.
class MetricGraph {
  public:
    struct Edge {
        int u, v;
        Dist w;
    };

    // Validates (connected, positive weights, no self-loops/duplicates) and
    // precomputes the distance table.
    static MetricGraph build(int n, std::vector<Edge> edges);

    int n() const { return n_; }
    const std::vector<Edge>& edges() const { return edges_; }
    // Neighbors of v, sorted by vertex id: (neighbor, weight, edge id).
    struct Arc {
        int to;
        Dist w;
        int edge;
    };
    const std::vector<Arc>& arcs(int v) const { return adj_[v]; }

    Dist d(int a, int b) const { return dist_[a][b]; }
    const std::vector<Dist>& dist_row(int a) const { return dist_[a]; }

    Dist d_to_set(int v, const std::vector<int>& a) const;
    // Least-id closest point of `a` to v.
    int closest_point(int v, const std::vector<int>& a) const;

    // Lexicographically least shortest vertex sequence from a to b.
    std::vector<int> geodesic(int a, int b) const;
    // Same, but as host edge ids.
    std::vector<int> geodesic_edges(int a, int b) const;

    // { v : d(a,v) + d(v,b) = d(a,b) } — the union of all geodesics.
    std::vector<int> interval(int a, int b) const;

    // All-geodesics hull of F: { v : exists x,y in F on a common geodesic }.
    std::vector<int> hull(const std::vector<int>& F) const;

    // Diameter and a lexicographically least realizing pair.
    std::pair<Dist, std::pair<int, int>> diameter_pair(const std::vector<int>& among) const;

    int edge_between(int u, int v) const;  // -1 if absent

  private:
    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<Arc>> adj_;
    std::vector<std::vector<Dist>> dist_;
};

/// Exact four-point Gromov hyperbolicity constant, doubled (so the value is
/// an integer whenever weights are integers). Guarded at n <= 400.
Dist hyperbolicity_delta_doubled(const MetricGraph& g);
inline double hyperbolicity_delta(const MetricGraph& g) {
    return static_cast<double>(hyperbolicity_delta_doubled(g)) / 2.0;
}

/// Discrete (1,C)-quasi-geodesic: gamma on {0..a} with
/// |s-t| - C <= d(gamma(s),gamma(t)) <= |s-t| + C for all s,t.
struct DiscreteQuasiGeodesic {
    const MetricGraph* host = nullptr;
    std::vector<int> points;  // points[t] = gamma(t)
    double C = 0.0;

    int length() const { return static_cast<int>(points.size()) - 1; }
    int at(int t) const { return points[t]; }

    // Verifies the (1,C) bounds; throws ArgumentError on violation.
    static DiscreteQuasiGeodesic checked(const MetricGraph& host, std::vector<int> pts, double C);
    // Largest admissible C for the given sequence (handy in tests).
    static double tightest_constant(const MetricGraph& host, const std::vector<int>& pts);
};

/// Planar comparison triangle in canonical position: first vertex at the
/// origin, second on the nonnegative x-axis, third in the closed upper
/// half-plane. Side lengths are the source distances.
struct ComparisonTriangle {
    double ax = 0, ay = 0;  // = (0,0)
    double bx = 0, by = 0;  // = (d_ab, 0)
    double cx = 0, cy = 0;  // upper half-plane
    double d_ab = 0, d_ac = 0, d_bc = 0;

    // Throws GeometryError when the side lengths violate the triangle
    // inequality beyond 1e-9. Degenerate (collinear) triangles are fine.
    static ComparisonTriangle from_sides(double d_ab, double d_ac, double d_bc);

    std::pair<double, double> vertex(int i) const;
    double side_length(int side) const;  // side 0 = (0,1), 1 = (0,2), 2 = (1,2)
};

/// Point on the chosen side at the given arclength from its first endpoint.
/// Arclength is clamped to [0, side length]; values beyond side length + C
/// are rejected. This realizes the comparison point p-bar with
/// |d(p,x) - d(p-bar, x-bar)| <= C.
std::pair<double, double> comparison_point(const ComparisonTriangle& tri, int side, double arclength,
                                           double C);

/// Distance bound for a point on a (1,C)-quasi-geodesic from x to y in a
/// CAT(0) space: d(z,[x,y]) <= 3 sqrt(C min{d(x,z), d(y,z)} + C^2).
double cat0_quasigeodesic_bound(double C, double d_xz, double d_yz);

/// Euclidean helpers used by the planar oracles.
double point_segment_distance(double px, double py, double ax, double ay, double bx, double by);

}  // namespace hullcub
