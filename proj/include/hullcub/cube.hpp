#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hullcub/space.hpp"

namespace hullcub {

/// Finite wallspace: a point set with a family of bipartitions.
struct Wallspace {
    int npoints = 0;
    // walls[w][p] = true iff point p lies on the positive side of wall w.
    std::vector<std::vector<bool>> walls;
};

struct CubeDeletion;

/// Finite CAT(0) cube complex, stored through its hyperplane combinatorics:
/// vertices are consistent orientation tuples (one bit per wall), edges flip
/// a single wall. Immutable after construction; queries are reentrant.
class CubeComplex {
  public:
    using Bits = std::vector<std::uint64_t>;

    // Sageev dual of a finite wallspace: vertices are the orientations
    // flip-reachable from the principal orientation of a point.
    static CubeComplex dual(const Wallspace& ws, std::size_t vertex_guard = 200000);

    // Directly from vertex orientation tuples (e.g. a 0-consistent set).
    static CubeComplex from_orientations(int nwalls, std::vector<Bits> verts);

    int nwalls() const { return nwalls_; }
    int nverts() const { return static_cast<int>(verts_.size()); }
    bool side(int v, int w) const { return (verts_[v][w >> 6] >> (w & 63)) & 1; }
    const Bits& orientation(int v) const { return verts_[v]; }
    int vertex_index(const Bits& b) const;
    // (neighbor, wall) pairs, sorted by wall id.
    const std::vector<std::pair<int, int>>& neighbors(int v) const { return adj_[v]; }

    // Walls in different factors pairwise cross; used for exact lp formulas
    // on products of trees. Empty = no product structure declared.
    void set_factors(std::vector<int> wall_factor);
    bool has_factors() const { return !wall_factor_.empty(); }
    // True when the vertex set is the full product of its factor projections.
    bool is_full_product() const;

    int dimension() const;

    // --- metrics ---
    Dist l1(int a, int b) const;  // exact wall-counting distance
    // l-infinity: exact max-over-factors on (full) product form, otherwise
    // via the subdivision graph with the max-norm.
    double linf(int a, int b, double h = 0.25) const;
    struct L2Result {
        double value = 0;
        double error_bound = 0;  // |d_h - d_{h/2}| convergence gap (0 = exact)
        bool exact = false;
    };
    L2Result l2(int a, int b, double h = 0.25) const;

    // Coordinatewise majority; returns the vertex id or -1 when the vertex
    // set is not median-closed at this triple.
    int median(int a, int b, int c) const;

    // Restriction quotient forgetting the given hyperplanes.
    CubeDeletion delete_hyperplanes(const std::vector<int>& walls) const;

    // Convexity certificate for a vertex map src -> dst.
    struct ConvexCert {
        bool ok = true;
        std::string reason;
        int a = -1, b = -1, v = -1;  // witness: interval vertex v of (a,b) escapes
    };
    static ConvexCert convex_embedding_check(const std::vector<int>& map, const CubeComplex& src,
                                             const CubeComplex& dst);

    // All maximal lattice cubes up to dimension 3 (for the subdivision and
    // the flag checks): each cube = (base vertex, wall list).
    struct Cube {
        int base;
        std::vector<int> walls;
    };
    std::vector<Cube> cubes_up_to_dim3() const;

  private:
    int nwalls_ = 0;
    std::vector<Bits> verts_;
    std::vector<std::vector<std::pair<int, int>>> adj_;
    std::unordered_map<std::string, int> index_;
    std::vector<int> wall_factor_;

    static std::string key(const Bits& b);
    void build_index_and_adj();
    double subdivision_distance(int a, int b, double h, bool maxnorm) const;
    std::vector<Dist> factor_counts(int a, int b) const;
};

/// Result of a hyperplane deletion (restriction quotient).
struct CubeDeletion {
    CubeComplex complex;
    std::vector<int> vertex_map;  // old vertex -> new vertex
    std::vector<int> wall_map;    // old wall -> new wall (-1 = deleted)
};

/// Wallspace of a tree metric graph: one wall per edge.
Wallspace tree_wallspace(const MetricGraph& tree);

}  // namespace hullcub
