#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "hullcub/rng.hpp"
#include "hullcub/steiner.hpp"

using namespace hullcub;

namespace {

MetricGraph grid_graph(int w, int h) {
    auto id = [&](int x, int y) { return y * w + x; };
    std::vector<MetricGraph::Edge> es;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (x + 1 < w) es.push_back({id(x, y), id(x + 1, y), 1});
            if (y + 1 < h) es.push_back({id(x, y), id(x, y + 1), 1});
        }
    return MetricGraph::build(w * h, es);
}

MetricGraph random_tree(Rng& rng, int n) {
    std::vector<MetricGraph::Edge> es;
    for (int v = 1; v < n; ++v) es.push_back({rng.range(0, v - 1), v, 1});
    return MetricGraph::build(n, es);
}

// Brute-force Steiner oracle: minimum over subsets S of candidate Steiner
// vertices of the MST of the metric closure on terminals u S. Exact for
// metric closures; only usable on tiny instances.
Dist steiner_oracle(const MetricGraph& g, const std::vector<int>& terminals) {
    std::vector<int> others;
    for (int v = 0; v < g.n(); ++v)
        if (std::find(terminals.begin(), terminals.end(), v) == terminals.end()) others.push_back(v);
    REQUIRE(others.size() <= 16);
    Dist best = std::numeric_limits<Dist>::max();
    for (int mask = 0; mask < (1 << others.size()); ++mask) {
        std::vector<int> pts = terminals;
        for (std::size_t i = 0; i < others.size(); ++i)
            if (mask & (1 << i)) pts.push_back(others[i]);
        // Prim on the metric closure.
        std::vector<bool> in(pts.size(), false);
        std::vector<Dist> key(pts.size(), std::numeric_limits<Dist>::max());
        key[0] = 0;
        Dist total = 0;
        for (std::size_t it = 0; it < pts.size(); ++it) {
            int u = -1;
            for (std::size_t j = 0; j < pts.size(); ++j)
                if (!in[j] && (u < 0 || key[j] < key[u])) u = static_cast<int>(j);
            in[u] = true;
            total += key[u];
            for (std::size_t j = 0; j < pts.size(); ++j)
                if (!in[j]) key[j] = std::min(key[j], g.d(pts[u], pts[j]));
        }
        best = std::min(best, total);
    }
    return best;
}

}  // namespace

TEST_CASE("degenerate networks") {
    MetricGraph g = grid_graph(3, 3);
    SteinerNetwork single = minimal_network(g, {{4}});
    CHECK(single.edge_ids.empty());
    CHECK(single.total_weight == 0);

    // Two singletons: the tie-broken geodesic.
    SteinerNetwork two = minimal_network(g, {{0}, {8}});
    CHECK(two.total_weight == g.d(0, 8));
    std::vector<int> geo = g.geodesic_edges(0, 8);
    std::sort(geo.begin(), geo.end());
    CHECK(two.edge_ids == geo);
}

TEST_CASE("three grid corners match the brute-force Steiner oracle") {
    MetricGraph g = grid_graph(4, 3);
    std::vector<int> T{0, 3, 8};
    SteinerNetwork net = minimal_network(g, {{0}, {3}, {8}});
    CHECK(net.total_weight == steiner_oracle(g, T));
}

TEST_CASE("minimality against the oracle on random small instances") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        MetricGraph g = trial % 2 ? grid_graph(3, 4) : random_tree(rng, 14);
        std::set<int> tset;
        int k = rng.range(2, 5);
        while (static_cast<int>(tset.size()) < k) tset.insert(rng.range(0, g.n() - 1));
        std::vector<int> terminals(tset.begin(), tset.end());
        if (g.n() - k > 16) continue;
        std::vector<std::vector<int>> groups;
        for (int t : terminals) groups.push_back({t});
        SteinerNetwork net = minimal_network(g, groups);
        CHECK(net.total_weight == steiner_oracle(g, terminals));
    }
}

TEST_CASE("group networks collapse to quotient-connected forests") {
    MetricGraph g = grid_graph(5, 2);
    // Two groups on opposite ends; the network should bridge the gap once.
    SteinerNetwork net = minimal_network(g, {{0, 5}, {4, 9}});
    CHECK(net.total_weight == g.d(0, 4));  // a single straight bridge

    // Overlapping groups rejected.
    CHECK_THROWS_AS(minimal_network(g, {{0, 1}, {1, 2}}), ArgumentError);
    // Terminal cap.
    std::vector<std::vector<int>> many;
    for (int i = 0; i < 11; ++i) many.push_back({i % g.n()});
    CHECK_THROWS_AS(minimal_network(g, many), CapacityError);
}

TEST_CASE("determinism: identical inputs give identical edge sets") {
    Rng rng(9);
    MetricGraph g = grid_graph(4, 4);
    for (int trial = 0; trial < 10; ++trial) {
        std::set<int> tset;
        while (static_cast<int>(tset.size()) < 4) tset.insert(rng.range(0, g.n() - 1));
        std::vector<std::vector<int>> groups;
        for (int t : tset) groups.push_back({t});
        SteinerNetwork a = minimal_network(g, groups);
        SteinerNetwork b = minimal_network(g, groups);
        CHECK(a.edge_ids == b.edge_ids);
    }
}

TEST_CASE("inductive-forest stability under strong separation") {
    // Host: a long path. Groups along it; the component attached to the
    // separating group must be bit-identical after enlarging the family.
    std::vector<MetricGraph::Edge> es;
    for (int i = 0; i < 60; ++i) es.push_back({i, i + 1, 1});
    MetricGraph g = MetricGraph::build(61, es);
    std::vector<std::vector<int>> base{{0}, {20}};
    std::vector<std::vector<int>> bigger{{0}, {20, 22}, {50}};
    SteinerNetwork small = minimal_network(g, base);
    SteinerNetwork big = minimal_network(g, bigger);
    // The 0..20 segment of `small` reappears untouched in `big`.
    std::set<int> big_edges(big.edge_ids.begin(), big.edge_ids.end());
    for (int e : small.edge_ids) CHECK(big_edges.count(e));
}

TEST_CASE("net paths, spans and shadows on lambda(F)") {
    Rng rng(15);
    MetricGraph t = random_tree(rng, 40);
    std::vector<int> F{0, 11, 23, 37};
    SteinerNetwork lam = minimal_network_points(t, F);
    // In a tree, lambda(F) is the union of pairwise geodesics.
    for (std::size_t i = 0; i < F.size(); ++i)
        for (std::size_t j = i + 1; j < F.size(); ++j)
            CHECK(lam.net_dist(F[i], F[j]) == t.d(F[i], F[j]));

    // Shadow of a vertex on the network is that vertex.
    Shadow s1 = shadow(lam, {F[1]}, 0);
    CHECK(s1.vertices == std::vector<int>{F[1]});

    // Shadow of a far-away set is empty.
    Dist far = 0;
    int far_v = 0;
    for (int v = 0; v < t.n(); ++v) {
        Dist dv = t.d_to_set(v, lam.vertices());
        if (dv > far) {
            far = dv;
            far_v = v;
        }
    }
    if (far > 1) {
        Shadow s2 = shadow(lam, {far_v}, static_cast<double>(far - 1));
        CHECK(s2.empty());
    }
}

TEST_CASE("shadow straddling a branch vertex spans both incident edges") {
    // Tripod: center 0, three legs of length 5.
    std::vector<MetricGraph::Edge> es;
    int id = 1;
    for (int leg = 0; leg < 3; ++leg) {
        int prev = 0;
        for (int i = 0; i < 5; ++i) {
            es.push_back({prev, id, 1});
            prev = id++;
        }
    }
    MetricGraph g = MetricGraph::build(id, es);
    std::vector<int> leaves{5, 10, 15};
    SteinerNetwork lam = minimal_network_points(g, leaves);
    // A set within 1 of the branch vertex shadows onto all three directions.
    Shadow s = shadow(lam, {0}, 1.0);
    CHECK(s.vertices.size() >= 3);
    std::set<int> vs(s.vertices.begin(), s.vertices.end());
    CHECK(vs.count(0));
    CHECK(vs.count(1));
    CHECK(vs.count(6));
    CHECK(vs.count(11));
}
