#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <set>

#include "hullcub/model.hpp"
#include "hullcub/rng.hpp"

using namespace hullcub;

namespace {

MetricGraph path_graph(int n) {
    std::vector<MetricGraph::Edge> es;
    for (int i = 0; i + 1 < n; ++i) es.push_back({i, i + 1, 1});
    return MetricGraph::build(n, es);
}

MetricGraph random_tree(Rng& rng, int n) {
    std::vector<MetricGraph::Edge> es;
    for (int v = 1; v < n; ++v) es.push_back({rng.range(std::max(0, v - 5), v - 1), v, 1});
    return MetricGraph::build(n, es);
}

ModelParams small_params() {
    ModelParams prm;
    prm.eps = 0.5;
    prm.eps_prime = 1.0;
    prm.E = 8.0;
    prm.r1 = 2;
    prm.r2 = 2;
    prm.K = 4.0;
    return prm;
}

std::vector<SetupPoint> pts(std::initializer_list<int> vs) {
    std::vector<SetupPoint> out;
    for (int v : vs) out.push_back({v, -1});
    return out;
}

}  // namespace

TEST_CASE("thicken: single cluster on a path") {
    MetricGraph g = path_graph(21);
    auto setup = EpsilonSetup::build(g, {0, 20}, pts({10}), 0.5);
    StableTree t = stable_tree(setup, 1.0, 8.0);
    Thickening th = thicken(t, 2, 5);
    // Three clusters: {0}, {10}, {20}; the middle blob covers [8,12].
    REQUIRE(th.tc_comps.size() == 3);
    int mid = -1;
    for (int i = 0; i < 3; ++i)
        for (int nd : th.tc_comps[i])
            if (t.real[nd].is_vertex() && t.real[nd].host_vertex == 10) mid = i;
    REQUIRE(mid >= 0);
    std::set<int> hosts;
    for (int nd : th.tc_comps[mid])
        if (t.real[nd].is_vertex()) hosts.insert(t.real[nd].host_vertex);
    CHECK(hosts == std::set<int>{8, 9, 10, 11, 12});
}

TEST_CASE("thicken: nearby components merge") {
    MetricGraph g = path_graph(21);
    auto setup = EpsilonSetup::build(g, {0, 20}, pts({5, 9}), 0.4);
    // E small enough that 5 and 9 are separate clusters: d = 4 > E needs E <4;
    // the gate needs E >= 8 eps', so eps' = 0.45, E = 3.6 is not allowed.
    // Use E = 3.6 < 4 with eps' = 0.45: gate requires E >= 8*0.45 = 3.6. OK.
    StableTree t = stable_tree(setup, 0.45, 3.6);
    int nclusters = 0;
    for (const auto& c : t.comps)
        if (c.is_cluster) ++nclusters;
    REQUIRE(nclusters == 4);  // {0}, {5}, {9}, {20}
    Thickening th = thicken(t, 1, 3);
    // r1=1 blobs: [4,6] and [8,10] are 2 apart (<= r2=3): merged into [4,10].
    bool merged = false;
    for (const auto& comp : th.tc_comps) {
        std::set<int> hosts;
        for (int nd : comp)
            if (t.real[nd].is_vertex()) hosts.insert(t.real[nd].host_vertex);
        if (hosts.count(4) && hosts.count(10)) merged = true;
    }
    CHECK(merged);
}

TEST_CASE("thicken: empty cluster forest edge case via collapse identity") {
    // Clusters always exist (F points); instead check collapse on a tree
    // whose thickening covers everything: T-hat is a single vertex.
    MetricGraph g = path_graph(9);
    auto setup = EpsilonSetup::build(g, {0, 8}, {}, 0.5);
    StableTree t = stable_tree(setup, 1.0, 8.0);
    Thickening th = thicken(t, 10, 10);
    CollapseResult cr = collapse_tree(t, th);
    CHECK(cr.tree.n == 1);
    CHECK(cr.tree.marked[0] == 0);
    CHECK(cr.tree.marked[1] == 0);
}

TEST_CASE("collapse_tree: middle block becomes a labeled vertex") {
    MetricGraph g = path_graph(21);
    auto setup = EpsilonSetup::build(g, {0, 20},
                                     std::vector<SetupPoint>{{10, 7}},  // labeled domain 7
                                     0.5);
    StableTree t = stable_tree(setup, 1.0, 8.0);
    Thickening th = thicken(t, 2, 2);
    CollapseResult cr = collapse_tree(t, th);
    // Length bookkeeping: blocks [0,2],[8,12],[18,20] collapse; 5 interior
    // vertices survive on each side, so the marked points end up 12 apart.
    CHECK(cr.tree.dist(cr.tree.marked[0], cr.tree.marked[1]) == 12);
    bool labeled = false;
    for (int v = 0; v < cr.tree.n; ++v)
        for (int l : cr.tree.cluster_labels[v])
            if (l == 7) labeled = true;
    CHECK(labeled);
}

TEST_CASE("build_hft: single-domain tree instance") {
    Rng rng(19);
    MetricGraph g = random_tree(rng, 40);
    auto inst = gen_single(g);
    ModelParams prm = small_params();
    HFT hft = build_hft(inst, {0, 30}, prm);
    CHECK(hft.domains.size() == 1);
    CHECK(hft.report.pass);
    CHECK(hft.delta_point.empty());
}

TEST_CASE("build_hft: two orthogonal domains have no deltas") {
    auto inst = gen_product(path_graph(20), path_graph(15));
    ModelParams prm = small_params();
    std::vector<int> F{product_vertex(inst, 0, 0), product_vertex(inst, 15, 12)};
    HFT hft = build_hft(inst, F, prm);
    CHECK(hft.domains.size() == 2);
    CHECK(hft.delta_point.empty());
    CHECK(hft.delta_down.empty());
    CHECK(hft.report.pass);
}

TEST_CASE("build_hft: tree of flats exercises the BGI clause") {
    auto inst = gen_tree_of_flats(path_graph(41), {{10, 12}, {30, 12}});
    ModelParams prm = small_params();
    int tip1 = -1, tip2 = -1;
    for (int v = 0; v < inst.ambient->n(); ++v) {
        if (inst.pi[1][v] == 12) tip1 = v;
        if (inst.pi[2][v] == 12) tip2 = v;
    }
    HFT hft = build_hft(inst, {0, 40, tip1, tip2}, prm);
    CHECK(hft.domains.size() == 3);  // parent + both flats
    for (const auto& it : hft.report.items) {
        INFO(it.check, ": ", it.witness);
        CHECK(it.pass);
    }
    // delta points for the nested flats exist.
    CHECK(hft.delta_point.count({hft.local(1), hft.local(0)}));
    CHECK(hft.delta_down.count({hft.local(0), hft.local(1)}));
}

TEST_CASE("consistent set: orthogonal domains give the full product") {
    auto inst = gen_product(path_graph(12), path_graph(10));
    ModelParams prm = small_params();
    std::vector<int> F{product_vertex(inst, 0, 0), product_vertex(inst, 11, 9)};
    HFT hft = build_hft(inst, F, prm);
    ConsistentSet q = consistent_set(hft);
    CHECK(q.matches_brute_force);
    CHECK(q.median_closed);
    long long expect = static_cast<long long>(hft.trees[0].n) * hft.trees[1].n;
    CHECK(static_cast<long long>(q.tuples.size()) == expect);
    CHECK(q.complex.is_full_product());
}

TEST_CASE("consistent set: two transverse edges give the L-tree") {
    // Hand-built HFT: two transverse domains, trees a single edge each,
    // deltas at vertex 0 on both sides. Q = {(0,0),(0,1),(1,0)}.
    auto inst = gen_tree_of_flats(path_graph(5), {{1, 1}, {3, 1}});
    HFT hft;
    hft.inst = &inst;
    hft.domains = {1, 2};
    hft.F = {0};
    CollapsedTree edge;
    edge.n = 2;
    edge.adj = {{1}, {0}};
    edge.marked = {0};
    edge.cluster_labels = {{}, {}};
    edge.from_comp = {-1, -1};
    hft.trees = {edge, edge};
    hft.delta_point[{1, 0}] = 0;
    hft.delta_point[{0, 1}] = 0;
    ConsistentSet q = consistent_set(hft);
    CHECK(q.tuples.size() == 3);
    CHECK(q.index_of({1, 1}) < 0);
    CHECK(q.matches_brute_force);
}

TEST_CASE("two-point models: tree and product oracles") {
    Rng rng(77);
    MetricGraph tree = random_tree(rng, 50);
    auto single = gen_single(tree);
    ModelParams prm = small_params();
    // Tree: d-hat_1 within a constant of the tree distance over random pairs.
    Dist diff_max = 0, diff_min = std::numeric_limits<Dist>::max();
    for (int trial = 0; trial < 60; ++trial) {
        int a = rng.range(0, tree.n() - 1), b = rng.range(0, tree.n() - 1);
        TwoPointModel m = two_point_model(single, a, b, prm);
        Dist gap = tree.d(a, b) - m.d1;
        CHECK(gap >= 0);
        diff_max = std::max(diff_max, gap);
        diff_min = std::min(diff_min, gap);
        CHECK(m.d2 == doctest::Approx(static_cast<double>(m.d1)));
    }
    CHECK(diff_max <= 4 * (prm.r1 + 1));

    auto prod = gen_product(path_graph(25), path_graph(25));
    for (int trial = 0; trial < 30; ++trial) {
        int a = product_vertex(prod, rng.range(0, 24), rng.range(0, 24));
        int b = product_vertex(prod, rng.range(0, 24), rng.range(0, 24));
        TwoPointModel m = two_point_model(prod, a, b, prm);
        CHECK(m.d1 <= prod.ambient->d(a, b));
        // d-hat_2 matches sqrt(d1^2 + d2^2) of the collapsed coordinates.
        double lhs = m.d2 * m.d2;
        double rhs = 0;
        for (std::size_t u = 0; u < m.hft.domains.size(); ++u) {
            double c = static_cast<double>(m.hft.trees[u].dist(m.tuple_a[u], m.tuple_b[u]));
            rhs += c * c;
        }
        CHECK(lhs == doctest::Approx(rhs));
    }
}

TEST_CASE("psi/omega: marked tuples and bounded round trips") {
    Rng rng(5);
    MetricGraph tree = random_tree(rng, 40);
    auto inst = gen_single(tree);
    ModelParams prm = small_params();
    std::vector<int> F{0, 25, 37};
    HFT hft = build_hft(inst, F, prm);
    ConsistentSet q = consistent_set(hft);
    PsiOmega po = psi_omega(inst, F, hft, q, true);
    // psi(f) is the all-marked tuple.
    for (std::size_t fi = 0; fi < F.size(); ++fi) {
        int hidx = -1;
        for (std::size_t i = 0; i < po.hull.size(); ++i)
            if (po.hull[i] == F[fi]) hidx = static_cast<int>(i);
        REQUIRE(hidx >= 0);
        std::vector<int> expect{hft.trees[0].marked[fi]};
        CHECK(q.tuples[po.psi[hidx]] == expect);
    }
    // Round trips are bounded by the largest thickened-component extent.
    Dist max_comp = 0;
    for (const auto& comp : hft.thick[0].tc_comps) {
        for (int x : comp)
            for (int y : comp)
                if (hft.stable[0]->real[x].is_vertex() && hft.stable[0]->real[y].is_vertex())
                    max_comp = std::max(max_comp,
                                        tree.d(hft.stable[0]->real[x].host_vertex,
                                               hft.stable[0]->real[y].host_vertex));
    }
    CHECK(po.max_round_trip <= max_comp + 2);
}

TEST_CASE("Q duality: dualizing Q's walls returns Q") {
    auto inst = gen_product(path_graph(7), path_graph(6));
    ModelParams prm = small_params();
    std::vector<int> F{product_vertex(inst, 0, 0), product_vertex(inst, 6, 5)};
    HFT hft = build_hft(inst, F, prm);
    ConsistentSet q = consistent_set(hft);
    // Wallspace on Q's vertices from its own walls.
    Wallspace ws;
    ws.npoints = static_cast<int>(q.tuples.size());
    for (int w = 0; w < q.complex.nwalls(); ++w) {
        std::vector<bool> s(ws.npoints);
        for (int v = 0; v < ws.npoints; ++v) s[v] = q.complex.side(v, w);
        ws.walls.push_back(s);
    }
    CubeComplex dual = CubeComplex::dual(ws);
    REQUIRE(dual.nverts() == q.complex.nverts());
    // Vertex bijection preserving adjacency: orientations coincide.
    for (int v = 0; v < dual.nverts(); ++v) {
        int back = q.complex.vertex_index(dual.orientation(v));
        REQUIRE(back >= 0);
        CHECK(dual.neighbors(v).size() == q.complex.neighbors(back).size());
    }
}

TEST_CASE("stabler pipeline: F' = F is an isomorphism with zero deletions") {
    Rng rng(3);
    MetricGraph tree = random_tree(rng, 40);
    auto inst = gen_single(tree);
    ModelParams prm = small_params();
    std::vector<int> F{0, 30};
    DiagramBundle b = stabler_pipeline(inst, F, F, prm);
    CHECK(b.eta_deletions == 0);
    CHECK(b.etap_deletions == 0);
    CHECK(b.theta_cert.ok);
    CHECK(b.theta_bijective);
    CHECK(b.left_square_exact);
    CHECK(b.face_middle == 0);
}

TEST_CASE("stabler pipeline: growing a branch on a tree") {
    Rng rng(11);
    for (int trial = 0; trial < 4; ++trial) {
        MetricGraph tree = random_tree(rng, 60);
        auto inst = gen_single(tree);
        ModelParams prm = small_params();
        std::vector<int> F{0, 40};
        int x = rng.range(41, 59);
        std::vector<int> Fp{0, 40, x};
        DiagramBundle b = stabler_pipeline(inst, F, Fp, prm);
        INFO("trial ", trial, " x=", x, " reason=", b.theta_cert.reason);
        CHECK(b.theta_cert.ok);
        CHECK(b.left_square_exact);
        CHECK(b.eta_deletions <= 40);
        // Deletion accounting: per-pair l1 drop is at most the count.
        for (int i = 0; i < std::min(20, (int)b.Q.tuples.size()); ++i)
            for (int j = 0; j < std::min(20, (int)b.Q.tuples.size()); ++j) {
                Dist before = b.Q.l1(i, j);
                Dist after = b.Q0.l1(b.eta[i], b.eta[j]);
                CHECK(after <= before);
                CHECK(before - after <= b.eta_deletions);
            }
    }
}

TEST_CASE("stabler pipeline: product instance") {
    auto inst = gen_product(path_graph(16), path_graph(16));
    ModelParams prm = small_params();
    std::vector<int> F{product_vertex(inst, 2, 2), product_vertex(inst, 13, 12)};
    std::vector<int> Fp = F;
    Fp.push_back(product_vertex(inst, 15, 0));
    DiagramBundle b = stabler_pipeline(inst, F, Fp, prm);
    CHECK(b.theta_cert.ok);
    CHECK(b.left_square_exact);
}

TEST_CASE("stabler pipeline: tree of flats with a newly relevant domain") {
    auto inst = gen_tree_of_flats(path_graph(41), {{10, 14}, {30, 14}});
    ModelParams prm = small_params();
    int tip1 = -1, tip2 = -1;
    for (int v = 0; v < inst.ambient->n(); ++v) {
        if (inst.pi[1][v] == 14) tip1 = v;
        if (inst.pi[2][v] == 14) tip2 = v;
    }
    std::vector<int> F{0, 40, tip1};
    std::vector<int> Fp{0, 40, tip1, tip2};
    DiagramBundle b = stabler_pipeline(inst, F, Fp, prm);
    CHECK(b.theta_cert.ok);
    CHECK(b.left_square_exact);
    // Flat 2 is newly relevant and not distinguished: its F-hull collapses
    // to a vertex (checked inside the pipeline; a throw would fail here).
    bool has_new = false;
    for (const auto& a : b.audits)
        if (!a.shared) has_new = true;
    CHECK(has_new);
}
