#include "hullcub/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

namespace hullcub {

namespace {
constexpr Dist kInf = std::numeric_limits<Dist>::max() / 4;
}

MetricGraph MetricGraph::build(int n, std::vector<Edge> edges) {
    if (n <= 0) throw FormatError("graph must have at least one vertex");
    std::set<std::pair<int, int>> seen;
    for (auto& e : edges) {
        if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
            throw FormatError("edge endpoint out of range");
        if (e.u == e.v) throw FormatError("self-loops are not allowed");
        if (e.w <= 0) throw FormatError("edge weights must be positive integers");
        if (e.u > e.v) std::swap(e.u, e.v);
        if (!seen.insert({e.u, e.v}).second) throw FormatError("duplicate edge");
    }
    std::sort(edges.begin(), edges.end(),
              [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });

    MetricGraph g;
    g.n_ = n;
    g.edges_ = std::move(edges);
    g.adj_.assign(n, {});
    for (int i = 0; i < static_cast<int>(g.edges_.size()); ++i) {
        const Edge& e = g.edges_[i];
        g.adj_[e.u].push_back({e.v, e.w, i});
        g.adj_[e.v].push_back({e.u, e.w, i});
    }
    for (auto& row : g.adj_)
        std::sort(row.begin(), row.end(), [](const Arc& a, const Arc& b) { return a.to < b.to; });

    // Dijkstra from every source; weights are small so this is plenty fast
    // at desk scale and keeps everything in exact integers.
    g.dist_.assign(n, std::vector<Dist>(n, kInf));
    for (int s = 0; s < n; ++s) {
        auto& dist = g.dist_[s];
        dist[s] = 0;
        std::priority_queue<std::pair<Dist, int>, std::vector<std::pair<Dist, int>>, std::greater<>>
            pq;
        pq.push({0, s});
        while (!pq.empty()) {
            auto [du, u] = pq.top();
            pq.pop();
            if (du != dist[u]) continue;
            for (const Arc& a : g.adj_[u]) {
                if (du + a.w < dist[a.to]) {
                    dist[a.to] = du + a.w;
                    pq.push({dist[a.to], a.to});
                }
            }
        }
    }
    for (int v = 0; v < n; ++v)
        if (g.dist_[0][v] >= kInf) throw FormatError("graph is not connected");
    return g;
}

Dist MetricGraph::d_to_set(int v, const std::vector<int>& a) const {
    Dist best = kInf;
    for (int x : a) best = std::min(best, d(v, x));
    return best;
}

int MetricGraph::closest_point(int v, const std::vector<int>& a) const {
    if (a.empty()) throw ArgumentError("closest_point: empty target set");
    Dist best = kInf;
    int who = -1;
    for (int x : a) {
        if (d(v, x) < best || (d(v, x) == best && x < who)) {
            best = d(v, x);
            who = x;
        }
    }
    return who;
}

std::vector<int> MetricGraph::geodesic(int a, int b) const {
    // Greedy walk: among neighbors x of cur with w(cur,x) + d(x,b) = d(cur,b),
    // take the least x. Arcs are sorted by id, so the first hit wins; this
    // yields the lexicographically least shortest vertex sequence.
    std::vector<int> path{a};
    int cur = a;
    while (cur != b) {
        for (const Arc& arc : adj_[cur]) {
            if (arc.w + d(arc.to, b) == d(cur, b)) {
                cur = arc.to;
                path.push_back(cur);
                break;
            }
        }
    }
    return path;
}

std::vector<int> MetricGraph::geodesic_edges(int a, int b) const {
    std::vector<int> verts = geodesic(a, b);
    std::vector<int> eids;
    for (std::size_t i = 0; i + 1 < verts.size(); ++i) eids.push_back(edge_between(verts[i], verts[i + 1]));
    return eids;
}

std::vector<int> MetricGraph::interval(int a, int b) const {
    std::vector<int> out;
    for (int v = 0; v < n_; ++v)
        if (d(a, v) + d(v, b) == d(a, b)) out.push_back(v);
    return out;
}

std::vector<int> MetricGraph::hull(const std::vector<int>& F) const {
    if (F.empty()) throw ArgumentError("hull: F must be nonempty");
    std::vector<bool> in(n_, false);
    for (std::size_t i = 0; i < F.size(); ++i)
        for (std::size_t j = i; j < F.size(); ++j)
            for (int v = 0; v < n_; ++v)
                if (d(F[i], v) + d(v, F[j]) == d(F[i], F[j])) in[v] = true;
    std::vector<int> out;
    for (int v = 0; v < n_; ++v)
        if (in[v]) out.push_back(v);
    return out;
}

std::pair<Dist, std::pair<int, int>> MetricGraph::diameter_pair(const std::vector<int>& among) const {
    if (among.empty()) throw ArgumentError("diameter_pair: empty set");
    Dist best = -1;
    std::pair<int, int> arg{among[0], among[0]};
    for (std::size_t i = 0; i < among.size(); ++i)
        for (std::size_t j = i; j < among.size(); ++j) {
            int a = std::min(among[i], among[j]);
            int b = std::max(among[i], among[j]);
            Dist dd = d(a, b);
            if (dd > best || (dd == best && std::make_pair(a, b) < arg)) {
                best = dd;
                arg = {a, b};
            }
        }
    return {best, arg};
}

int MetricGraph::edge_between(int u, int v) const {
    for (const Arc& a : adj_[u])
        if (a.to == v) return a.edge;
    return -1;
}

Dist hyperbolicity_delta_doubled(const MetricGraph& g) {
    const int n = g.n();
    if (n > 400) throw CapacityError("hyperbolicity_delta: graphs are capped at 400 vertices");
    Dist worst = 0;
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b)
            for (int c = b; c < n; ++c)
                for (int e = c; e < n; ++e) {
                    Dist s1 = g.d(a, b) + g.d(c, e);
                    Dist s2 = g.d(a, c) + g.d(b, e);
                    Dist s3 = g.d(a, e) + g.d(b, c);
                    Dist lo = std::min({s1, s2, s3});
                    Dist hi = std::max({s1, s2, s3});
                    Dist mid = s1 + s2 + s3 - lo - hi;
                    worst = std::max(worst, hi - mid);
                }
    return worst;
}

DiscreteQuasiGeodesic DiscreteQuasiGeodesic::checked(const MetricGraph& host, std::vector<int> pts,
                                                     double C) {
    if (pts.empty()) throw ArgumentError("quasi-geodesic needs at least one point");
    if (C < 0) throw ArgumentError("quasi-geodesic constant must be nonnegative");
    double need = tightest_constant(host, pts);
    if (need > C + 1e-9)
        throw ArgumentError("sequence is not a (1," + std::to_string(C) + ")-quasi-geodesic (needs C >= " +
                            std::to_string(need) + ")");
    return DiscreteQuasiGeodesic{&host, std::move(pts), C};
}

double DiscreteQuasiGeodesic::tightest_constant(const MetricGraph& host, const std::vector<int>& pts) {
    double need = 0;
    const int m = static_cast<int>(pts.size());
    for (int s = 0; s < m; ++s)
        for (int t = s + 1; t < m; ++t) {
            double gap = static_cast<double>(host.d(pts[s], pts[t])) - (t - s);
            need = std::max(need, std::fabs(gap));
        }
    return need;
}

ComparisonTriangle ComparisonTriangle::from_sides(double d_ab, double d_ac, double d_bc) {
    if (d_ab < 0 || d_ac < 0 || d_bc < 0) throw GeometryError("negative side length");
    const double slack = 1e-9;
    if (d_ab > d_ac + d_bc + slack || d_ac > d_ab + d_bc + slack || d_bc > d_ab + d_ac + slack)
        throw GeometryError("side lengths violate the triangle inequality");
    ComparisonTriangle t;
    t.d_ab = d_ab;
    t.d_ac = d_ac;
    t.d_bc = d_bc;
    t.bx = d_ab;
    if (d_ab == 0) {
        t.cx = d_ac;  // a == b; put c on the axis
        t.cy = 0;
    } else {
        // Law of cosines; clamp the radicand against roundoff.
        t.cx = (d_ac * d_ac + d_ab * d_ab - d_bc * d_bc) / (2 * d_ab);
        double h2 = d_ac * d_ac - t.cx * t.cx;
        t.cy = h2 > 0 ? std::sqrt(h2) : 0.0;
    }
    return t;
}

std::pair<double, double> ComparisonTriangle::vertex(int i) const {
    switch (i) {
        case 0: return {ax, ay};
        case 1: return {bx, by};
        case 2: return {cx, cy};
        default: throw ArgumentError("triangle vertex index out of range");
    }
}

double ComparisonTriangle::side_length(int side) const {
    switch (side) {
        case 0: return d_ab;
        case 1: return d_ac;
        case 2: return d_bc;
        default: throw ArgumentError("triangle side index out of range");
    }
}

std::pair<double, double> comparison_point(const ComparisonTriangle& tri, int side, double arclength,
                                           double C) {
    double len = tri.side_length(side);
    if (arclength < -C - 1e-9 || arclength > len + C + 1e-9)
        throw ArgumentError("comparison point arclength exceeds side length + C");
    double t = std::clamp(arclength, 0.0, len);
    auto [x1, y1] = tri.vertex(side == 2 ? 1 : 0);
    auto [x2, y2] = tri.vertex(side == 0 ? 1 : 2);
    if (len == 0) return {x1, y1};
    double s = t / len;
    return {x1 + s * (x2 - x1), y1 + s * (y2 - y1)};
}

double cat0_quasigeodesic_bound(double C, double d_xz, double d_yz) {
    if (C < 0 || d_xz < 0 || d_yz < 0) throw ArgumentError("cat0_quasigeodesic_bound: negative input");
    return 3.0 * std::sqrt(C * std::min(d_xz, d_yz) + C * C);
}

double point_segment_distance(double px, double py, double ax, double ay, double bx, double by) {
    double vx = bx - ax, vy = by - ay;
    double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double qx = ax + t * vx, qy = ay + t * vy;
    return std::hypot(px - qx, py - qy);
}

}  // namespace hullcub
