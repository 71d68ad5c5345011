#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hullcub/space.hpp"

namespace hullcub {

/// Explicit finite hierarchically-hyperbolic instance: an ambient metric
/// graph, a domain poset with hyperbolic coordinate graphs, projections and
/// relative-projection data, and a coloring. Immutable after validation.
struct HHSInstance {
    enum class Rel { Eq, In, Contains, Orth, Trans };  // In: row nested in col

    struct Domain {
        std::string name;
        MetricGraph space;  // C(U)
        int color = 0;
    };

    std::shared_ptr<const MetricGraph> ambient;
    std::vector<Domain> domains;
    std::vector<std::vector<Rel>> rel;
    std::vector<std::vector<int>> pi;  // pi[u][ambient vertex] = C(U) vertex
    // rho point of V inside C(U), for V in U or V trans U: key (V, U).
    std::map<std::pair<int, int>, int> rho_point;
    // downward table C(V) -> C(U) for U nested in V: key (V, U).
    std::map<std::pair<int, int>, std::vector<int>> rho_down;

    double E_S = 1;      // the HHS constant E_frak
    double theta = 0;    // 0 = default 2 E_S
    double lip_a = 1, lip_b = 0;  // declared pi Lipschitz quality

    struct Symmetry {
        std::vector<int> ambient_perm;
        std::vector<int> domain_perm;
        std::vector<std::vector<int>> space_perms;  // per domain
    };
    std::vector<Symmetry> symmetries;

    // Product metadata when the ambient is a materialized product.
    struct ProductForm {
        std::vector<int> factor_domain;  // factor index -> domain id
        std::vector<int> strides;
    };
    std::optional<ProductForm> product;

    int ndomains() const { return static_cast<int>(domains.size()); }
    Dist d_in(int u, int a, int b) const { return domains[u].space.d(a, b); }
    double theta_value() const { return theta > 0 ? theta : 2 * E_S; }
    bool nested_in(int v, int u) const { return rel[v][u] == Rel::In; }
    Dist diam_proj(int u, const std::vector<int>& F) const;
};

struct ValidationReport {
    struct Item {
        std::string check;
        bool pass = true;
        std::string witness;
    };
    std::vector<Item> items;
    bool pass = true;
};

/// Exhaustive verification of the instance invariants: relation axioms,
/// colorability, the strict projection laws, bounded geodesic image of the
/// downward tables, and pi Lipschitz quality.
ValidationReport validate_instance(const HHSInstance& inst);

/// Rel_K(F) = { U : diam_{C(U)}(pi_U(F)) >= K }.
std::vector<int> rel_domains(const HHSInstance& inst, const std::vector<int>& F, double K);

struct DomainDiff {
    std::vector<int> distinguished;
    std::vector<int> involved;
    std::vector<int> sporadic;
    bool sporadic_in_rel = true;  // every sporadic V lies in Rel_{K-2E_S}(F)
    std::vector<std::string> witnesses;
};
DomainDiff domain_diff(const HHSInstance& inst, const std::vector<int>& F,
                       const std::vector<int>& Fp, double K, double D);

struct PassingUpWitness {
    int W = -1;
    std::vector<int> members;  // the V's nested in W
    int occupied_cells = 0;
};
/// Searches for a parent domain whose rho-points of the given family spread
/// along the geodesic between the projections of the F-pair; absence is not
/// a failure (the proposition is existential above a threshold).
std::optional<PassingUpWitness> passing_up_probe(const HHSInstance& inst, const std::vector<int>& F,
                                                 const std::vector<int>& members, double K1,
                                                 double K2, double sigma, int n);

// --- built-in generators ---

/// (G1) single-domain wrapper of a metric graph.
HHSInstance gen_single(const MetricGraph& g, double E_S = 1);

/// (G2) product of two trees with two orthogonal proper domains under a
/// trivial top domain. add_swap_symmetry requires isomorphic factors given
/// by an explicit vertex identification (empty = no symmetry).
HHSInstance gen_product(const MetricGraph& t1, const MetricGraph& t2, double E_S = 1,
                        const std::vector<int>& swap_iso = {});

/// Ambient vertex of a product instance from factor coordinates.
int product_vertex(const HHSInstance& inst, int x1, int x2);

/// (G3) tree of flats: a parent tree with a path flat of the given length
/// glued at each marked vertex; child domains nest into the parent and are
/// pairwise transverse.
HHSInstance gen_tree_of_flats(const MetricGraph& parent,
                              const std::vector<std::pair<int, int>>& flats, double E_S = 1);

}  // namespace hullcub
