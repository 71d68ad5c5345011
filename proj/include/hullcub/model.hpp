#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hullcub/cube.hpp"
#include "hullcub/hhs.hpp"
#include "hullcub/treenet.hpp"

namespace hullcub {

struct ModelParams {
    double K = 0;          // 0 = default 10 E_S + 10
    double eps = 1;        // eps-setup constant used in every coordinate space
    double eps_prime = 0;  // 0 = default eps + 1
    double E = 0;          // 0 = default 8 eps'
    int r1 = 0, r2 = 0;    // 0 = default 2E (flagged in reports when defaulted)
    double S = 0;          // sporadicity radius (0 = default 2E)
    int N = 0;             // sporadic cap per layer (0 = uncapped)
    std::size_t q_guard = 200000;
    int min_stable_len = 1;

    double K_value(const HHSInstance& inst) const { return K > 0 ? K : 10 * inst.E_S + 10; }
    double eps_prime_value() const { return eps_prime > 0 ? eps_prime : eps + 1; }
    double E_value() const { return E > 0 ? E : 8 * eps_prime_value(); }
    int r1_value() const { return r1 > 0 ? r1 : static_cast<int>(2 * E_value()); }
    int r2_value() const { return r2 > 0 ? r2 : static_cast<int>(2 * E_value()); }
    double S_value() const { return S > 0 ? S : 2 * E_value(); }
};

/// (r1,r2)-thickening of a stable tree along its cluster forest: iterated
/// neighborhoods and merges until stationary.
struct Thickening {
    int r1 = 0, r2 = 0;
    std::vector<std::vector<int>> tc_comps;  // sorted node sets, pairwise > r2 apart
    std::vector<int> comp_of;                // node -> thick component (-1 = edge part)
    int iterations = 0;
};
Thickening thicken(const StableTree& t, int r1, int r2);

/// Collapsed simplicial tree T-hat with the quotient map q.
struct CollapsedTree {
    int n = 0;
    std::vector<std::vector<int>> adj;             // unit edges
    std::vector<int> marked;                       // F index -> vertex
    std::vector<std::vector<int>> cluster_labels;  // vertex -> carried domain labels
    std::vector<int> from_comp;  // vertex -> thick component (-1 = edge vertex)

    Dist dist(int a, int b) const;
    std::vector<int> path(int a, int b) const;
    std::vector<int> hull_of(const std::vector<int>& vs) const;  // minimal subtree
    int nedges() const;
};
struct CollapseResult {
    CollapsedTree tree;
    std::vector<int> q;  // stable-tree node -> vertex
};
CollapseResult collapse_tree(const StableTree& t, const Thickening& th);

/// Hierarchical family of trees over the relevant domains of F, with the
/// collapsed projections and the five-clause validation report.
struct HFT {
    const HHSInstance* inst = nullptr;
    std::vector<int> domains;  // instance domain ids, ascending
    std::vector<int> F;        // ambient points
    std::vector<CollapsedTree> trees;
    std::map<std::pair<int, int>, int> delta_point;  // (V,U) local: vertex in trees[U]
    std::map<std::pair<int, int>, std::vector<int>> delta_down;  // (V,U): trees[V] -> trees[U]

    // Backing data (realizations for Psi/Omega).
    std::vector<TreePtr> stable;
    std::vector<Thickening> thick;
    std::vector<std::vector<int>> q;        // per domain: node -> vertex
    std::vector<std::vector<int>> rep_vertex;  // per domain: tree vertex -> C(U) vertex

    ValidationReport report;

    int local(int domain_id) const;
    HHSInstance::Rel rel(int lu, int lv) const {
        return inst->rel[domains[lu]][domains[lv]];
    }
};

/// Builds per-domain stable trees, thickens, collapses, assembles the
/// collapsed projections and validates the HFT axioms. Throws PipelineError
/// naming the clause on validation failure.
HFT build_hft(const HHSInstance& inst, const std::vector<int>& F, const ModelParams& prm);

/// The 0-consistent set Q of an HFT, with its cube complex.
struct ConsistentSet {
    std::vector<std::vector<int>> tuples;  // per domain coordinates
    CubeComplex complex;
    std::vector<std::pair<int, std::pair<int, int>>> wall_edges;  // wall -> (local dom, tree edge)
    bool median_closed = true;
    bool matches_brute_force = true;  // checked when the full product is small

    int index_of(const std::vector<int>& tuple) const;
    Dist l1(int a, int b) const;

  private:
    friend ConsistentSet consistent_set(const HFT& hft, std::size_t guard);
    std::map<std::vector<int>, int> index_;
};
ConsistentSet consistent_set(const HFT& hft, std::size_t guard = 200000);

/// Coordinates of Psi-hat(x) for an ambient point of the hull.
std::vector<int> psi_tuple(const HFT& hft, int x);

struct PsiOmega {
    std::vector<int> hull;       // ambient hull vertices
    std::vector<int> psi;        // hull index -> Q vertex
    std::vector<int> omega;      // Q vertex -> ambient hull vertex (empty if skipped)
    Dist max_round_trip = 0;     // max d(Omega(Psi(x)), x) over the hull
};
/// Psi lands in Q (verified per point; hard error otherwise). Omega realizes
/// each tuple as the hull point minimizing the maximum per-domain deviation.
PsiOmega psi_omega(const HHSInstance& inst, const std::vector<int>& F, const HFT& hft,
                   const ConsistentSet& q, bool with_omega = true);

/// The full stabler-cubulation diagram for F inside F'.
struct DiagramBundle {
    std::vector<int> F, Fp;
    HFT hft, hftp;    // Q-level families
    HFT hft0, hftp0;  // collapsed (0-level) families
    ConsistentSet Q, Qp, Q0, Qp0;

    std::vector<int> eta, etap;    // Q -> Q0, Q' -> Q'0 (hyperplane deletions)
    int eta_deletions = 0, etap_deletions = 0;
    std::vector<int> theta;        // Q0 -> Q'0 vertex map (Phi)
    CubeComplex::ConvexCert theta_cert;
    std::vector<int> xi, xip;      // sections Q0 -> Q, Q'0 -> Q'

    PsiOmega po, pop;

    bool left_square_exact = false;
    double face_top = 0, face_bottom = 0, face_middle = 0;  // ambient errors
    bool theta_bijective = false;

    // Per-domain audit data.
    struct DomainAudit {
        int domain = -1;
        bool shared = false;        // in Rel(F)
        bool distinguished = false;
        bool involved = false;
        int unstable_components = 0;
        Dist unstable_diameter = 0;
        int deleted_walls = 0, deleted_walls_p = 0;
    };
    std::vector<DomainAudit> audits;
    DomainDiff diff;
};
DiagramBundle stabler_pipeline(const HHSInstance& inst, const std::vector<int>& F,
                               const std::vector<int>& Fp, const ModelParams& prm);

/// Two-point cubical model distances (the d-hat metrics); fast paths avoid
/// materializing Q when the domains are orthogonal or single.
struct TwoPointModel {
    HFT hft;
    std::vector<int> tuple_a, tuple_b;
    Dist d1 = 0;
    double d2 = 0, dinf = 0;
    double d2_error = 0;
};
TwoPointModel two_point_model(const HHSInstance& inst, int a, int b, const ModelParams& prm);

}  // namespace hullcub
