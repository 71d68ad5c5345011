#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <queue>
#include <set>

#include "hullcub/rng.hpp"
#include "hullcub/treenet.hpp"

using namespace hullcub;

namespace {

MetricGraph path_graph(int n) {
    std::vector<MetricGraph::Edge> es;
    for (int i = 0; i + 1 < n; ++i) es.push_back({i, i + 1, 1});
    return MetricGraph::build(n, es);
}

MetricGraph tripod(int arm, std::vector<int>& tips) {
    std::vector<MetricGraph::Edge> es;
    int id = 1;
    tips.clear();
    for (int leg = 0; leg < 3; ++leg) {
        int prev = 0;
        for (int i = 0; i < arm; ++i) {
            es.push_back({prev, id, 1});
            prev = id++;
        }
        tips.push_back(prev);
    }
    return MetricGraph::build(id, es);
}

MetricGraph random_tree(Rng& rng, int n) {
    std::vector<MetricGraph::Edge> es;
    for (int v = 1; v < n; ++v) es.push_back({rng.range(std::max(0, v - 6), v - 1), v, 1});
    return MetricGraph::build(n, es);
}

std::vector<SetupPoint> pts(std::initializer_list<int> vs) {
    std::vector<SetupPoint> out;
    for (int v : vs) out.push_back({v, -1});
    return out;
}

}  // namespace

TEST_CASE("eps-setup validation") {
    MetricGraph g = path_graph(40);
    CHECK_THROWS_AS(EpsilonSetup::build(g, {}, {}, 1.0), ArgumentError);
    // Cluster point too far from lambda(F).
    CHECK_THROWS_AS(EpsilonSetup::build(g, {0, 10}, pts({30}), 1.0), SetupError);
    auto s = EpsilonSetup::build(g, {0, 10}, pts({5}), 1.0);
    CHECK(s.dist_to_lambda(5) == 0);
}

TEST_CASE("separates: path fixtures") {
    MetricGraph g = path_graph(31);
    CHECK(separates(g, {0}, {15}, {30}, 2.0));
    // Separator behind the far endpoint does not separate.
    CHECK_FALSE(separates(g, {0}, {30}, {20}, 2.0));
}

TEST_CASE("separates: off-geodesic cluster in a tree") {
    // Path 0..20 with a decoration hanging at 10 of length 6.
    std::vector<MetricGraph::Edge> es;
    for (int i = 0; i < 20; ++i) es.push_back({i, i + 1, 1});
    int id = 21;
    int prev = 10;
    for (int i = 0; i < 6; ++i) {
        es.push_back({prev, id, 1});
        prev = id++;
    }
    MetricGraph g = MetricGraph::build(id, es);
    // The tip of the decoration is 6 off the unique 0-20 geodesic: > 2*2.
    CHECK_FALSE(separates(g, {0}, {prev}, {20}, 2.0));
    CHECK(separates(g, {0}, {10}, {20}, 2.0));
}

TEST_CASE("cluster graph: proximity components and separation adjacency") {
    MetricGraph g = path_graph(31);
    auto setup = EpsilonSetup::build(g, {0, 30}, pts({3, 10, 12}), 0.4);
    ClusterGraph cg = cluster_graph(setup, 0.45, 4.0);
    // Clusters: {0,3}, {10,12}, {30}.
    CHECK(cg.clusters.size() == 3);
    CHECK(cg.cluster_of_vertex(0) == cg.cluster_of_vertex(3));
    CHECK(cg.cluster_of_vertex(10) == cg.cluster_of_vertex(12));
    CHECK(cg.cluster_of_vertex(0) != cg.cluster_of_vertex(10));
    // The middle cluster separates the outer pair.
    int c0 = cg.cluster_of_vertex(0), c1 = cg.cluster_of_vertex(10), c2 = cg.cluster_of_vertex(30);
    CHECK(std::binary_search(cg.gadj[c0].begin(), cg.gadj[c0].end(), c1));
    CHECK(std::binary_search(cg.gadj[c1].begin(), cg.gadj[c1].end(), c2));
    CHECK_FALSE(std::binary_search(cg.gadj[c0].begin(), cg.gadj[c0].end(), c2));
    CHECK(cg.diag.connected);

    // Parameter gate.
    CHECK_THROWS_AS(cluster_graph(setup, 0.3, 4.0), ConfigError);   // eps' <= eps
    CHECK_THROWS_AS(cluster_graph(setup, 0.45, 3.0), ConfigError);  // E < 8 eps'
}

TEST_CASE("two clusters with no third are adjacent") {
    MetricGraph g = path_graph(20);
    auto setup = EpsilonSetup::build(g, {0, 19}, pts({2, 17}), 0.4);
    ClusterGraph cg = cluster_graph(setup, 0.45, 4.0);
    CHECK(cg.clusters.size() == 2);
    CHECK(cg.gadj[0] == std::vector<int>{1});
}

TEST_CASE("cluster graph connectivity under the gate on random setups") {
    Rng rng(77);
    for (int trial = 0; trial < 12; ++trial) {
        MetricGraph g = random_tree(rng, 60);
        std::vector<int> F{rng.range(0, 29), rng.range(30, 59)};
        if (F[0] == F[1]) continue;
        SteinerNetwork lam = minimal_network_points(g, F);
        std::vector<SetupPoint> Y;
        auto verts = lam.vertices();
        for (int i = 0; i < 6; ++i) Y.push_back({verts[rng.below(verts.size())], -1});
        auto setup = EpsilonSetup::build(g, F, Y, 1.0);
        ClusterGraph cg = cluster_graph(setup, 2.0, 16.0);
        CHECK(cg.diag.connected);
    }
}

TEST_CASE("stable tree: two points on a path") {
    MetricGraph g = path_graph(41);
    auto setup = EpsilonSetup::build(g, {0, 40}, {}, 0.5);
    StableTree t = stable_tree(setup, 1.0, 8.0);
    CHECK(t.quality.is_tree);
    // T realizes the geodesic: node distance between marks equals d(0,40).
    CHECK(t.node_dist(t.marked_node(0), t.marked_node(1)) == 40);
    // Two endpoint clusters, one edge component.
    int nclusters = 0, nedges = 0;
    for (const auto& c : t.comps) (c.is_cluster ? nclusters : nedges)++;
    CHECK(nclusters == 2);
    CHECK(nedges == 1);
}

TEST_CASE("stable tree: midpoint cluster splits the edge forest") {
    MetricGraph g = path_graph(41);
    auto setup = EpsilonSetup::build(g, {0, 40}, pts({20}), 0.5);
    StableTree t = stable_tree(setup, 1.0, 8.0);
    CHECK(t.quality.is_tree);
    int nedges = 0;
    for (const auto& c : t.comps)
        if (!c.is_cluster) ++nedges;
    // T_e = two segments joined through mu(C_20).
    CHECK(nedges == 2);
    CHECK(t.node_dist(t.marked_node(0), t.marked_node(1)) == 40);
}

TEST_CASE("stable tree recovers a tripod") {
    std::vector<int> tips;
    MetricGraph g = tripod(12, tips);
    auto setup = EpsilonSetup::build(g, tips, {}, 0.5);
    StableTree t = stable_tree(setup, 1.0, 8.0);
    CHECK(t.quality.is_tree);
    CHECK(t.quality.branching >= 3);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            CHECK(t.node_dist(t.marked_node(i), t.marked_node(j)) == g.d(tips[i], tips[j]));
    CHECK(t.quality.hausdorff_gap == 0);
}

TEST_CASE("decomposition: identical setups give an all-identical matching") {
    MetricGraph g = path_graph(41);
    auto setup = EpsilonSetup::build(g, {0, 40}, pts({20}), 0.5);
    auto T = std::make_shared<StableTree>(stable_tree(setup, 1.0, 8.0));
    auto Tp = std::make_shared<StableTree>(stable_tree(setup, 1.0, 8.0));
    StableDecomposition d = make_decomposition(T, Tp, setup.Y);
    CHECK(d.measured.non_identical_pairs == 0);
    DecompReport rep = check_decomposition(d, d.measured.L1, d.measured.L2);
    for (const auto& c : rep.clauses) {
        INFO(c.name, ": ", c.witness);
        CHECK(c.pass);
    }
    CHECK(rep.pass);
}

TEST_CASE("checker rejects hand-built counterexamples") {
    MetricGraph g = path_graph(41);
    auto setup = EpsilonSetup::build(g, {0, 40}, pts({20}), 0.5);
    auto T = std::make_shared<StableTree>(stable_tree(setup, 1.0, 8.0));
    auto Tp = std::make_shared<StableTree>(stable_tree(setup, 1.0, 8.0));
    StableDecomposition good = make_decomposition(T, Tp, setup.Y);
    REQUIRE(check_decomposition(good, good.measured.L1, good.measured.L2).pass);

    SUBCASE("broken pair isometry (clause 2)") {
        StableDecomposition bad = good;
        REQUIRE(!bad.sp_nodes.empty());
        bad.sp_nodes[0].pop_back();
        CHECK_FALSE(check_decomposition(bad, bad.measured.L1, bad.measured.L2).pass);
    }
    SUBCASE("interval through a marked point (clause 1)") {
        StableDecomposition bad = good;
        // Make an 'interval' out of a whole path through the marked node.
        std::vector<int> through = T->node_path(T->marked_node(0), T->marked_node(1));
        bad.s_nodes[0] = through;
        bad.sp_nodes[0] = Tp->node_path(Tp->marked_node(0), Tp->marked_node(1));
        auto rep = check_decomposition(bad, bad.measured.L1, bad.measured.L2);
        CHECK_FALSE(rep.pass);
    }
    SUBCASE("lying identical flag (clause 3)") {
        StableDecomposition bad = good;
        bad.identical[0] = false;
        CHECK_FALSE(check_decomposition(bad, bad.measured.L1, bad.measured.L2).pass);
    }
    SUBCASE("beta scrambled (clause 7)") {
        StableDecomposition bad = good;
        REQUIRE(bad.beta.size() >= 2);
        std::swap(bad.beta[0], bad.beta[1]);
        CHECK_FALSE(check_decomposition(bad, bad.measured.L1, bad.measured.L2).pass);
    }
}

TEST_CASE("one-point: w on an existing cluster point changes nothing") {
    MetricGraph g = path_graph(41);
    auto setup = EpsilonSetup::build(g, {0, 40}, pts({20}), 0.5);
    OnePointData od = one_point_decomposition(setup, 20, 1.0, 8.0);
    CHECK(od.decomp.measured.non_identical_pairs == 0);
    auto rep = check_decomposition(od.decomp, od.decomp.measured.L1, od.decomp.measured.L2);
    CHECK(rep.pass);
    // w merged into the existing cluster: exactly one absorbed cluster.
    CHECK(od.absorbed.size() == 1);
}

TEST_CASE("one-point: absorption into a single nearby cluster") {
    MetricGraph g = path_graph(61);
    auto setup = EpsilonSetup::build(g, {0, 60}, pts({20, 40}), 0.5);
    OnePointData od = one_point_decomposition(setup, 24, 1.0, 8.0);
    // 24 is within E=8 of cluster {20} only.
    CHECK(od.absorbed.size() == 1);
    auto rep = check_decomposition(od.decomp, od.decomp.measured.L1, od.decomp.measured.L2);
    for (const auto& c : rep.clauses) {
        INFO(c.name, ": ", c.witness);
        CHECK(c.pass);
    }
}

TEST_CASE("one-point: isolated w forms a fresh singleton cluster") {
    MetricGraph g = path_graph(201);
    std::vector<SetupPoint> y;
    for (int v = 20; v <= 180; v += 20) y.push_back({v, -1});
    auto setup = EpsilonSetup::build(g, {0, 200}, y, 0.5);
    OnePointData od = one_point_decomposition(setup, 50, 1.0, 8.0);
    CHECK(od.absorbed.empty());
    // The primed tree has one more cluster.
    CHECK(od.decomp.Tp->clusters.clusters.size() == od.decomp.T->clusters.clusters.size() + 1);
    auto rep = check_decomposition(od.decomp, od.decomp.measured.L1, od.decomp.measured.L2);
    CHECK(rep.pass);
    // The unstable core localizes: it does not swallow the whole tree.
    CHECK(od.core_T.size() < od.decomp.T->comps.size());
    CHECK(!od.core_T.empty());
    // Complement pairs under gamma are identical components.
    CHECK(!od.gamma.empty());
}

TEST_CASE("one-point: proximity gate") {
    MetricGraph g = path_graph(41);
    // A point far from lambda(F) cannot be added.
    auto setup = EpsilonSetup::build(g, {0, 20}, {}, 0.5);
    CHECK_THROWS_AS(one_point_decomposition(setup, 40, 1.0, 8.0), SetupError);
}

TEST_CASE("chain: composing identity decompositions is the identity") {
    MetricGraph g = path_graph(41);
    auto setup = EpsilonSetup::build(g, {0, 40}, pts({20}), 0.5);
    auto t1 = std::make_shared<StableTree>(stable_tree(setup, 1.0, 8.0));
    auto t2 = std::make_shared<StableTree>(stable_tree(setup, 1.0, 8.0));
    auto t3 = std::make_shared<StableTree>(stable_tree(setup, 1.0, 8.0));
    auto d12 = make_decomposition(t1, t2, setup.Y);
    auto d23 = make_decomposition(t2, t3, setup.Y);
    auto d13 = chain_compose({&d12, &d23});
    CHECK(d13.measured.non_identical_pairs == 0);
    CHECK(check_decomposition(d13, d13.measured.L1, d13.measured.L2).pass);
    // Mismatched middles are rejected.
    auto d_bad = make_decomposition(t1, t3, setup.Y);
    CHECK_THROWS_AS(chain_compose({&d12, &d_bad}), ArgumentError);
}

TEST_CASE("chain: three one-point links compose within (4 L1^2, 4 L2^2)") {
    MetricGraph g = path_graph(101);
    std::vector<SetupPoint> y0 = pts({30, 60});
    std::vector<int> adds{15, 45, 75};
    std::vector<TreePtr> trees;
    std::vector<SetupPoint> y = y0;
    trees.push_back(std::make_shared<StableTree>(
        stable_tree(EpsilonSetup::build(g, {0, 100}, y, 0.5), 1.0, 8.0)));
    for (int w : adds) {
        y.push_back({w, -1});
        trees.push_back(std::make_shared<StableTree>(
            stable_tree(EpsilonSetup::build(g, {0, 100}, y, 0.5), 1.0, 8.0)));
    }
    std::vector<StableDecomposition> links;
    int L1 = 1;
    Dist L2 = 1;
    for (int i = 0; i < 3; ++i) {
        links.push_back(make_decomposition(trees[i], trees[i + 1], y0));
        L1 = std::max(L1, links.back().measured.L1);
        L2 = std::max(L2, links.back().measured.L2);
        REQUIRE(check_decomposition(links.back(), links.back().measured.L1,
                                    links.back().measured.L2)
                    .pass);
    }
    auto composed = chain_compose({&links[0], &links[1], &links[2]});
    auto rep = check_decomposition(composed, 4 * L1 * L1, 4 * L2 * L2);
    for (const auto& c : rep.clauses) {
        INFO(c.name, ": ", c.witness);
        CHECK(c.pass);
    }
    for (std::size_t i = 0; i < composed.s_nodes.size(); ++i)
        CHECK(composed.s_nodes[i].size() == composed.sp_nodes[i].size());
}

TEST_CASE("fake cluster points: arithmetic net on an interval") {
    MetricGraph g = path_graph(61);
    // F = {0,20}: lambda(F) = [0,20]. x = 40 projects to 20; B-neighborhood
    // of radius 8 in lambda(F) is [12,20].
    auto sF = EpsilonSetup::build(g, {0, 20}, {}, 0.5);
    auto sFp = EpsilonSetup::build(g, {0, 20, 40}, {}, 0.5);
    FakeClusterPoints fake = fake_cluster_points(sF, sFp, 40, 2.0, 1.0, 8.0);
    CHECK(fake.y_fake == std::vector<int>{12, 14, 16, 18, 20});
    // y_fake is always contained in yp_fake.
    for (int v : fake.y_fake) CHECK(std::binary_search(fake.yp_fake.begin(), fake.yp_fake.end(), v));
    // The extension runs along the new branch (vertices past 20).
    bool has_branch = false;
    for (int v : fake.yp_fake)
        if (v > 20) has_branch = true;
    CHECK(has_branch);
    CHECK(static_cast<int>(fake.yp_fake.size()) <= fake.d_fake_bound);

    // The F-side net forms a single E-cluster (E = 8 >= spacing 2).
    auto s2 = EpsilonSetup::build(g, {0, 20}, [&] {
        std::vector<SetupPoint> y;
        for (int v : fake.y_fake) y.push_back({v, -1});
        return y;
    }(), 0.5);
    ClusterGraph cg = cluster_graph(s2, 1.0, 8.0);
    std::set<int> fake_clusters;
    for (int v : fake.y_fake) fake_clusters.insert(cg.cluster_of_vertex(v));
    CHECK(fake_clusters.size() == 1);

    CHECK_THROWS_AS(fake_cluster_points(sF, sFp, 40, 1.0, 2.0, 8.0), ConfigError);  // A > a
}

TEST_CASE("stabler: empty layer list reduces to the ordinary comparison") {
    MetricGraph g = path_graph(41);
    auto s = EpsilonSetup::build(g, {0, 40}, pts({20}), 0.5);
    StablerParams prm;
    prm.S = 10;
    prm.N = 4;
    StablerResult r = stabler_decomposition(s, s, prm);
    CHECK(r.layers.empty());
    CHECK(r.decomp.measured.non_identical_pairs == 0);
    CHECK(check_decomposition(r.decomp, r.decomp.measured.L1, r.decomp.measured.L2).pass);
}

TEST_CASE("stabler: one fresh branch point") {
    MetricGraph g = path_graph(101);
    auto sF = EpsilonSetup::build(g, {0, 60}, pts({30}), 0.5);
    auto sFp = EpsilonSetup::build(g, {0, 60, 100}, pts({30, 80}), 0.5);
    StablerParams prm;
    prm.S = 12;
    prm.N = 4;
    StablerResult r = stabler_decomposition(sF, sFp, prm);
    CHECK(r.layers.size() == 1);
    auto rep = check_decomposition(r.decomp, r.decomp.measured.L1, r.decomp.measured.L2);
    for (const auto& c : rep.clauses) {
        INFO(c.name, ": ", c.witness);
        CHECK(c.pass);
    }
    CHECK(r.layers[0].added_vertex == 100);
}

TEST_CASE("collapse and embed: marked-point equation and isometric Phi") {
    MetricGraph g = path_graph(81);
    auto setup = EpsilonSetup::build(g, {0, 80}, pts({20}), 0.5);
    Rng rng(4);
    for (int trial = 0; trial < 6; ++trial) {
        int w = rng.range(5, 75);
        OnePointData od = one_point_decomposition(setup, w, 1.0, 8.0);
        CollapsedPair cp = collapse_and_embed(od.decomp);
        // Marked equation, exactly.
        for (std::size_t i = 0; i < cp.that.marked.size(); ++i)
            CHECK(cp.phi[cp.that.marked[i]] == cp.thatp.marked[i]);
        // Phi is distance-preserving on all vertex pairs.
        auto tree_dist = [](const CollapsedPair::Tree& t, int a, int b) {
            std::vector<int> dist(t.n, -1);
            std::queue<int> q;
            q.push(a);
            dist[a] = 0;
            while (!q.empty()) {
                int u = q.front();
                q.pop();
                for (int v : t.adj[u])
                    if (dist[v] < 0) {
                        dist[v] = dist[u] + 1;
                        q.push(v);
                    }
            }
            return dist[b];
        };
        for (int a = 0; a < cp.that.n; ++a)
            for (int b = a + 1; b < cp.that.n; ++b)
                CHECK(tree_dist(cp.that, a, b) == tree_dist(cp.thatp, cp.phi[a], cp.phi[b]));
    }
}
