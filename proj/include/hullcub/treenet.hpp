#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hullcub/steiner.hpp"

namespace hullcub {

/// A cluster point: ambient vertex plus an optional domain label (labels name
/// the nested domains whose rho-points these are, in the hierarchical use).
struct SetupPoint {
    int vertex = -1;
    int label = -1;
    bool operator==(const SetupPoint& o) const { return vertex == o.vertex && label == o.label; }
    bool operator<(const SetupPoint& o) const {
        return std::tie(vertex, label) < std::tie(o.vertex, o.label);
    }
};

/// (F; Y) with every y within eps/2 of lambda(F).
struct EpsilonSetup {
    const MetricGraph* host = nullptr;
    std::vector<int> F;
    std::vector<SetupPoint> Y;
    double eps = 0;
    SteinerNetwork lambda;  // lambda(F)

    static EpsilonSetup build(const MetricGraph& host, std::vector<int> F, std::vector<SetupPoint> Y,
                              double eps);
    // Distance from v to lambda(F), at vertex resolution.
    Dist dist_to_lambda(int v) const;
    bool admits(int v) const { return static_cast<double>(dist_to_lambda(v)) < eps / 2.0; }
};

struct ClusterParams {
    double eps = 0;
    double eps_prime = 0;
    double E = 0;
};

/// True iff c2 separates c1 from c3: some tie-broken geodesic between a
/// closest pair of c1 x c3 meets the (2 eps')-neighborhood of c2.
bool separates(const MetricGraph& g, const std::vector<int>& c1, const std::vector<int>& c2,
               const std::vector<int>& c3, double eps_prime);

/// Cluster separation graph of an eps-setup: clusters are the E-proximity
/// components of F u Y; clusters are adjacent when no third cluster
/// eps'-separates them.
struct ClusterGraph {
    ClusterParams prm;
    std::vector<SetupPoint> pts;  // F points first (label -1), then Y
    int fcount = 0;

    std::vector<std::vector<int>> clusters;  // sorted point indices
    std::vector<int> cluster_of;             // point index -> cluster
    std::vector<std::vector<int>> gadj;      // sorted adjacency between clusters
    std::vector<bool> bivalent;

    struct Diagnostics {
        bool connected = false;
        int non_bivalent_count = 0;
        // pairs where the all-geodesics separation quantifier disagrees with
        // the tie-broken one (logged, not an error)
        int quantifier_disagreements = 0;
        bool shadows_ok = true;  // bivalent shadow disjointness along edges
        std::vector<std::string> notes;
    } diag;

    int cluster_of_vertex(int v) const;             // -1 when v carries no point
    int cluster_of_point(const SetupPoint& p) const;  // exact (vertex,label) match
    std::vector<int> cluster_vertices(int c) const;  // sorted, deduplicated
    bool cluster_has_f(int c) const;
    std::vector<int> labels_of_cluster(int c) const;  // sorted domain labels
};

ClusterGraph cluster_graph(const EpsilonSetup& setup, double eps_prime, double E);

/// The stable tree T = T_e u T_c for an eps-setup, realized as a
/// unit-subdivided abstract tree glued from minimal-network components.
struct StableTree {
    struct Component {
        bool is_cluster = false;
        int cluster_id = -1;  // for cluster components
        int vgroup = -1;      // index of the piece of G - E^0 for edge components
        std::vector<int> host_edges;  // sorted host edge ids
        std::vector<int> host_verts;  // sorted host vertices (incl. isolated)
        std::vector<int> nodes;       // nodes of the glued tree in this component
    };

    // Node realization on the host: a vertex, or an interior point of a host
    // edge at integer offset from its u-endpoint.
    struct NodeReal {
        int host_vertex = -1;
        int host_edge = -1;
        int offset = 0;
        bool is_vertex() const { return host_vertex >= 0; }
        bool operator==(const NodeReal& o) const {
            return host_vertex == o.host_vertex && host_edge == o.host_edge && offset == o.offset;
        }
    };

    EpsilonSetup setup;
    ClusterGraph clusters;
    std::vector<Component> comps;

    int n_nodes = 0;
    std::vector<std::vector<int>> adj;  // unit edges
    std::vector<NodeReal> real;
    std::vector<int> comp_of;  // node -> component index (attachment nodes: cluster side)
    std::vector<int> marked;   // per F index -> node id

    struct Quality {
        double distortion = 0;      // max |d_T - d_host| over sampled node pairs
        Dist hausdorff_gap = 0;     // vertex-level d_Haus(lambda(F), phi(T))
        int branching = 0;          // max node degree
        bool is_tree = false;
    } quality;

    // --- queries ---
    Dist node_dist(int a, int b) const;               // unit-tree metric (BFS)
    std::vector<int> node_path(int a, int b) const;   // node sequence
    int degree(int v) const { return static_cast<int>(adj[v].size()); }
    // Host distance from the realization of node a to host vertex z.
    Dist phi_dist(int a, int z) const;
    // Host realization label for exact comparisons between trees.
    NodeReal phi(int a) const { return real[a]; }
    int node_at_vertex(int comp, int host_vertex) const;  // -1 if absent
    std::vector<int> component_of_cluster(int cluster_id) const;  // node set of mu(C)
    int marked_node(int f_index) const { return marked[f_index]; }
    // Minimal subtree spanning the marked nodes of the given F indices.
    std::vector<int> hull_nodes(const std::vector<int>& f_indices) const;
};

/// Builds the (eps, eps', E)-stable tree. Throws PipelineError when the glued
/// union fails to be a tree (instance outside the hyperbolic regime).
StableTree stable_tree(const EpsilonSetup& setup, double eps_prime, double E);

using TreePtr = std::shared_ptr<const StableTree>;

/// A stable decomposition of a pair of stable trees (Definition-level object;
/// the checker below validates all seven clauses).
struct StableDecomposition {
    TreePtr T;
    TreePtr Tp;

    std::vector<int> f_index_in_T;   // shared F: index into T->setup.F
    std::vector<int> f_index_in_Tp;  // and into Tp->setup.F (same order)
    std::vector<SetupPoint> y0;      // the reference set Y0

    std::vector<bool> in_hull;  // Tp nodes in hull_{T'}(F)

    // Stable pairs, matched by index (alpha(i) = i); aligned node paths give
    // the isometries i_{E,E'}.
    std::vector<std::vector<int>> s_nodes;   // intervals in T (node paths)
    std::vector<std::vector<int>> sp_nodes;  // intervals in T' (node paths)
    std::vector<bool> identical;             // phi-pointwise identical pairs

    // Complement components (interval edges removed, nodes kept).
    std::vector<std::vector<int>> comp_T;   // components of T - T_s
    std::vector<std::vector<int>> comp_Tp;  // components of hull - T'_s
    std::vector<int> beta;                  // comp_T index -> comp_Tp index

    // Unstable forests: tree components (indices into StableTree::comps).
    std::vector<int> diff_T, diff_Tp;

    struct Measured {
        int non_identical_pairs = 0;
        int unstable_count = 0;      // max of the two sides
        Dist unstable_diam = 0;      // max diameter of an unstable component
        int diff_comps = 0;          // max #components in T_diff / T'_diff
        Dist pair_gap = 0;           // max host gap over non-identical pairs
        int L1 = 0;
        Dist L2 = 0;
    } measured;
};

/// Clause-by-clause verification of Definition (stable decomposition).
struct DecompReport {
    struct Clause {
        std::string name;
        bool pass = true;
        std::string witness;
    };
    std::vector<Clause> clauses;
    bool pass = true;
    int L1 = 0;
    Dist L2 = 0;
};
DecompReport check_decomposition(const StableDecomposition& d, int L1, Dist L2);

/// Constructs a decomposition between the stable trees of two setups with
/// F(T) contained in F(T'), by matching maximal identically-realized
/// intervals. min_stable_len drops shorter common intervals into the
/// unstable part.
StableDecomposition make_decomposition(TreePtr T, TreePtr Tp, const std::vector<SetupPoint>& y0,
                                       int min_stable_len = 1);

/// One-point refinement data (adding a single cluster point w).
struct OnePointData {
    std::vector<int> absorbed;      // cluster ids of G
    std::vector<int> affected;      // cluster ids of G
    int measured_A1 = 0;            // max G-distance between affected clusters
    std::vector<int> raw_core;      // cluster ids: (A1+2)-neighborhood of affected
    std::vector<int> s_core;        // cluster ids of S_A (insulated core)
    std::vector<int> core_T;        // T component indices forming T_A
    std::vector<int> core_Tp;       // T' component indices forming T'_A
    std::vector<std::pair<int, int>> gamma;  // identical complement comp pairs
    StableDecomposition decomp;     // decomp.T / decomp.Tp own the trees
};

/// Stable decomposition for (F;Y) vs (F;Y u {w}), with unstable cores and the
/// complement bijection gamma.
OnePointData one_point_decomposition(const EpsilonSetup& setup, int w, double eps_prime, double E);

/// Fake cluster points: an (a,A)-net of the B-neighborhood in lambda(F) of
/// the projection of x, extended along the new branch for F' = F u {x}.
struct FakeClusterPoints {
    std::vector<int> y_fake;    // net on lambda(F)
    std::vector<int> yp_fake;   // extension along lambda(F') - hull
    int d_fake_bound = 0;       // the D_fake(a,A,B) gate both counts obey
};
FakeClusterPoints fake_cluster_points(const EpsilonSetup& setupF, const EpsilonSetup& setupFp, int x,
                                      double a, double A, double B);

struct StablerParams {
    double eps_prime = 0;  // 0 = default eps + 1
    double E = 0;          // 0 = default 8 eps'
    double S = 0;          // sporadicity radius
    int N = 0;             // max sporadic points per layer
    double net_a = 2, net_A = 1, net_B = 0;  // 0 = default 8 eps' + S
    int min_stable_len = 1;
};

/// Per-layer audit artifacts of the stabler construction.
struct StablerLayer {
    int added_vertex = -1;
    std::vector<SetupPoint> sporadic;
    FakeClusterPoints fake;
    bool edge_inject_ok = true;  // every T_fake edge component reappears in T'_fake
};

struct StablerResult {
    StableDecomposition decomp;  // between T(F;Y) and hull-restricted T(F';Y')
    std::vector<StablerLayer> layers;
};

/// Stable decomposition between T(F;Y) and the hull-restricted T(F';Y') for
/// well-layered setups; retains per-layer fake/sporadic artifacts.
StablerResult stabler_decomposition(const EpsilonSetup& setupF, const EpsilonSetup& setupFp,
                                    const StablerParams& prm);

/// Composes a chain of decompositions sharing middle trees. Constants grow
/// at most per the (4 L1^2, 4 L2^2) base-case bound per link.
StableDecomposition chain_compose(const std::vector<const StableDecomposition*>& chain);

/// Collapsed simplicial trees with the convex embedding of the Corollary:
/// T-hat, T'-hat, quotient maps Delta, Delta', and Phi with
/// Phi(Delta(f)) = Delta'(f).
struct CollapsedPair {
    // Quotient trees: unit edges, vertices are either surviving interval
    // nodes or collapsed complement components.
    struct Tree {
        int n = 0;
        std::vector<std::vector<int>> adj;
        std::vector<int> from_comp;  // quotient vertex -> complement comp index (-1 = interval node)
        std::vector<int> marked;     // F index -> quotient vertex
    };
    Tree that, thatp;
    std::vector<int> delta;   // T node -> that vertex (-1 for Tp-only nodes)
    std::vector<int> deltap;  // T' node -> thatp vertex (-1 outside hull)
    std::vector<int> phi;     // that vertex -> thatp vertex
};
CollapsedPair collapse_and_embed(const StableDecomposition& d);

}  // namespace hullcub
