#include "hullcub/steiner.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <queue>
#include <set>

namespace hullcub {

namespace {

constexpr Dist kInf = std::numeric_limits<Dist>::max() / 4;

// Group quotient of the host: one supervertex per group, other vertices kept.
struct Quotient {
    int nq = 0;
    int k = 0;                      // number of groups = terminals 0..k-1
    std::vector<int> host_to_q;     // host vertex -> quotient vertex
    struct QArc {
        int to;
        Dist w;
        int host_edge;
    };
    std::vector<std::vector<QArc>> adj;
};

Quotient make_quotient(const MetricGraph& g, const std::vector<std::vector<int>>& groups) {
    Quotient q;
    q.k = static_cast<int>(groups.size());
    q.host_to_q.assign(g.n(), -1);
    for (int i = 0; i < q.k; ++i) {
        if (groups[i].empty()) throw ArgumentError("minimal_network: empty group");
        for (int v : groups[i]) {
            if (v < 0 || v >= g.n()) throw ArgumentError("minimal_network: vertex out of range");
            if (q.host_to_q[v] != -1) throw ArgumentError("minimal_network: groups overlap");
            q.host_to_q[v] = i;
        }
    }
    q.nq = q.k;
    for (int v = 0; v < g.n(); ++v)
        if (q.host_to_q[v] == -1) q.host_to_q[v] = q.nq++;

    // Collapse parallel edges to the cheapest, tie-broken by host edge id.
    std::map<std::pair<int, int>, std::pair<Dist, int>> best;
    for (int e = 0; e < static_cast<int>(g.edges().size()); ++e) {
        const auto& he = g.edges()[e];
        int a = q.host_to_q[he.u], b = q.host_to_q[he.v];
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        auto it = best.find({a, b});
        if (it == best.end() || std::make_pair(he.w, e) < it->second) best[{a, b}] = {he.w, e};
    }
    q.adj.assign(q.nq, {});
    for (const auto& [key, val] : best) {
        q.adj[key.first].push_back({key.second, val.first, val.second});
        q.adj[key.second].push_back({key.first, val.first, val.second});
    }
    for (auto& row : q.adj)
        std::sort(row.begin(), row.end(), [](const Quotient::QArc& a, const Quotient::QArc& b) {
            return a.to < b.to;
        });
    return q;
}

// Dreyfus-Wagner table: dp[mask][v] = weight of a cheapest forest connecting
// the terminals in mask together with quotient vertex v.
struct DwTable {
    int k = 0;
    std::vector<std::vector<Dist>> dp;  // [mask][v]
};

DwTable dreyfus_wagner(const Quotient& q) {
    DwTable t;
    t.k = q.k;
    const int full = 1 << q.k;
    t.dp.assign(full, std::vector<Dist>(q.nq, kInf));
    for (int i = 0; i < q.k; ++i) t.dp[1 << i][i] = 0;

    using Item = std::pair<Dist, int>;
    for (int mask = 1; mask < full; ++mask) {
        auto& dp = t.dp[mask];
        if (mask & (mask - 1)) {  // not a singleton: merge step
            for (int sub = (mask - 1) & mask; sub; sub = (sub - 1) & mask) {
                if (sub > (mask ^ sub)) continue;  // each split once
                const auto& a = t.dp[sub];
                const auto& b = t.dp[mask ^ sub];
                for (int v = 0; v < q.nq; ++v)
                    if (a[v] < kInf && b[v] < kInf) dp[v] = std::min(dp[v], a[v] + b[v]);
            }
        }
        // Grow step: multi-source Dijkstra seeded with the merged labels.
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        for (int v = 0; v < q.nq; ++v)
            if (dp[v] < kInf) pq.push({dp[v], v});
        while (!pq.empty()) {
            auto [du, u] = pq.top();
            pq.pop();
            if (du != dp[u]) continue;
            for (const auto& arc : q.adj[u])
                if (du + arc.w < dp[arc.to]) {
                    dp[arc.to] = du + arc.w;
                    pq.push({dp[arc.to], arc.to});
                }
        }
    }
    return t;
}

// Deterministic backtrack of an optimal solution; collects quotient edges as
// host edge ids. Merge splits are scanned in ascending submask order and
// grow steps follow the least admissible neighbor, so the output depends
// only on the input.
void backtrack(const Quotient& q, const DwTable& t, int mask, int v, std::set<int>& out_edges) {
    const auto& dp = t.dp[mask];
    std::vector<std::pair<int, int>> stack{{mask, v}};
    while (!stack.empty()) {
        auto [m, u] = stack.back();
        stack.pop_back();
        while (true) {
            if ((m & (m - 1)) == 0 && t.dp[m][u] == 0) break;  // at the terminal itself
            bool merged = false;
            if (m & (m - 1)) {
                for (int sub = (m - 1) & m; sub; sub = (sub - 1) & m) {
                    if (t.dp[sub][u] < kInf && t.dp[m ^ sub][u] < kInf &&
                        t.dp[sub][u] + t.dp[m ^ sub][u] == t.dp[m][u]) {
                        stack.push_back({m ^ sub, u});
                        m = sub;
                        merged = true;
                        break;
                    }
                }
            }
            if (merged) continue;
            // Grow step: least neighbor with an exact predecessor label.
            bool stepped = false;
            for (const auto& arc : q.adj[u]) {
                if (t.dp[m][arc.to] + arc.w == t.dp[m][u]) {
                    out_edges.insert(arc.host_edge);
                    u = arc.to;
                    stepped = true;
                    break;
                }
            }
            if (!stepped) throw PipelineError("minimal_network: backtrack lost the optimum");
        }
    }
}

struct Forest {
    std::set<int> edges;
    Dist weight(const MetricGraph& g) const {
        Dist w = 0;
        for (int e : edges) w += g.edges()[e].w;
        return w;
    }
};

// Straighten every maximal degree-2 run between topology nodes to the
// tie-broken geodesic of the same length. Topology nodes are forest vertices
// of degree != 2 and any vertex lying in a group.
bool straighten_once(const MetricGraph& g, const std::vector<int>& host_group, Forest& f) {
    std::map<int, std::vector<int>> deg;  // vertex -> incident forest edges
    for (int e : f.edges) {
        deg[g.edges()[e].u].push_back(e);
        deg[g.edges()[e].v].push_back(e);
    }
    auto is_node = [&](int v) { return deg[v].size() != 2 || host_group[v] >= 0; };
    auto other_end = [&](int e, int v) { return g.edges()[e].u == v ? g.edges()[e].v : g.edges()[e].u; };

    std::set<int> done;
    for (const auto& [a, incident] : deg) {
        if (!is_node(a)) continue;
        for (int e0 : incident) {
            if (done.count(e0)) continue;
            std::vector<int> run{e0};
            int cur = other_end(e0, a);
            while (!is_node(cur)) {
                int prev_edge = run.back();
                int next_edge = deg[cur][0] == prev_edge ? deg[cur][1] : deg[cur][0];
                run.push_back(next_edge);
                cur = other_end(next_edge, cur);
            }
            int b = cur;
            for (int e : run) done.insert(e);
            Dist run_len = 0;
            for (int e : run) run_len += g.edges()[e].w;
            if (run_len != g.d(a, b)) continue;  // cannot happen for an optimal network
            std::vector<int> geo = g.geodesic_edges(std::min(a, b), std::max(a, b));
            std::set<int> run_set(run.begin(), run.end());
            std::set<int> geo_set(geo.begin(), geo.end());
            if (run_set == geo_set) continue;
            for (int e : run) f.edges.erase(e);
            for (int e : geo) f.edges.insert(e);
            return true;
        }
    }
    return false;
}

}  // namespace

SteinerNetwork minimal_network(const MetricGraph& g, const std::vector<std::vector<int>>& groups) {
    if (groups.empty()) throw ArgumentError("minimal_network: need at least one group");
    if (groups.size() > 10)
        throw CapacityError("minimal_network: exact solver is capped at 10 quotient terminals");

    SteinerNetwork net;
    net.host = &g;
    net.groups = groups;
    if (groups.size() == 1) return net;  // a single group needs no edges

    Quotient q = make_quotient(g, groups);
    DwTable t = dreyfus_wagner(q);
    const int full = (1 << q.k) - 1;
    Dist best = kInf;
    int root = -1;
    for (int v = 0; v < q.nq; ++v)
        if (t.dp[full][v] < best) {
            best = t.dp[full][v];
            root = v;
        }
    if (root < 0) throw PipelineError("minimal_network: no solution found");

    Forest f;
    backtrack(q, t, full, root, f.edges);
    if (f.weight(g) != best) throw PipelineError("minimal_network: reconstruction weight mismatch");

    std::vector<int> host_group(g.n(), -1);
    for (int i = 0; i < static_cast<int>(groups.size()); ++i)
        for (int v : groups[i]) host_group[v] = i;
    for (int pass = 0; pass < 64 && straighten_once(g, host_group, f); ++pass) {
        if (f.weight(g) != best) throw PipelineError("minimal_network: straightening changed the weight");
    }

    net.edge_ids.assign(f.edges.begin(), f.edges.end());
    net.total_weight = best;
    return net;
}

SteinerNetwork minimal_network_points(const MetricGraph& g, const std::vector<int>& pts) {
    std::vector<int> uniq = pts;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::vector<std::vector<int>> groups;
    groups.reserve(uniq.size());
    for (int v : uniq) groups.push_back({v});
    return minimal_network(g, groups);
}

std::vector<int> SteinerNetwork::vertices() const {
    std::set<int> vs;
    for (int e : edge_ids) {
        vs.insert(host->edges()[e].u);
        vs.insert(host->edges()[e].v);
    }
    // Group members are always part of the network, even when isolated.
    for (const auto& grp : groups) vs.insert(grp.begin(), grp.end());
    return {vs.begin(), vs.end()};
}

bool SteinerNetwork::contains_vertex(int v) const {
    for (int e : edge_ids)
        if (host->edges()[e].u == v || host->edges()[e].v == v) return true;
    if (edge_ids.empty())
        for (const auto& grp : groups)
            for (int x : grp)
                if (x == v) return true;
    return false;
}

namespace {
// BFS over the network's own edges; returns parent edge map.
std::map<int, std::pair<int, int>> net_bfs(const MetricGraph& g, const std::vector<int>& eids, int src) {
    std::map<int, std::vector<std::pair<int, int>>> adj;  // v -> (nbr, edge)
    for (int e : eids) {
        adj[g.edges()[e].u].push_back({g.edges()[e].v, e});
        adj[g.edges()[e].v].push_back({g.edges()[e].u, e});
    }
    std::map<int, std::pair<int, int>> parent;  // v -> (prev vertex, edge)
    parent[src] = {-1, -1};
    std::queue<int> bfs;
    bfs.push(src);
    while (!bfs.empty()) {
        int u = bfs.front();
        bfs.pop();
        for (auto [w, e] : adj[u])
            if (!parent.count(w)) {
                parent[w] = {u, e};
                bfs.push(w);
            }
    }
    return parent;
}
}  // namespace

Dist SteinerNetwork::net_dist(int u, int v) const {
    auto path = net_path(u, v);
    Dist total = 0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        int e = host->edge_between(path[i], path[i + 1]);
        total += host->edges()[e].w;
    }
    return total;
}

std::vector<int> SteinerNetwork::net_path(int u, int v) const {
    auto parent = net_bfs(*host, edge_ids, u);
    if (!parent.count(v)) throw ArgumentError("net_path: endpoints not connected in the network");
    std::vector<int> path;
    for (int cur = v; cur != -1; cur = parent[cur].first) path.push_back(cur);
    std::reverse(path.begin(), path.end());
    return path;
}

std::pair<std::vector<int>, std::vector<int>> SteinerNetwork::span_subtree(
    const std::vector<int>& pts) const {
    std::set<int> vs, es;
    if (pts.empty()) return {{}, {}};
    for (int p : pts) vs.insert(p);
    auto parent = net_bfs(*host, edge_ids, pts[0]);
    for (int p : pts) {
        if (!parent.count(p)) throw ArgumentError("span_subtree: point not on the network");
        for (int cur = p; parent[cur].first != -1; cur = parent[cur].first) {
            if (!es.insert(parent[cur].second).second) break;  // already walked
            vs.insert(cur);
            vs.insert(parent[cur].first);
        }
    }
    // Prune: keep only the minimal subtree (drop branches without marked pts).
    std::map<int, std::vector<std::pair<int, int>>> adj;
    for (int e : es) {
        adj[host->edges()[e].u].push_back({host->edges()[e].v, e});
        adj[host->edges()[e].v].push_back({host->edges()[e].u, e});
    }
    std::set<int> marked(pts.begin(), pts.end());
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto it = adj.begin(); it != adj.end();) {
            if (it->second.size() == 1 && !marked.count(it->first)) {
                auto [nbr, e] = it->second[0];
                es.erase(e);
                vs.erase(it->first);
                auto& row = adj[nbr];
                row.erase(std::find_if(row.begin(), row.end(),
                                       [&](auto pr) { return pr.second == e; }));
                it = adj.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }
    return {{vs.begin(), vs.end()}, {es.begin(), es.end()}};
}

std::vector<int> SteinerNetwork::vertices_within(const std::vector<int>& centers, double radius) const {
    std::vector<int> out;
    for (int v : vertices())
        if (static_cast<double>(host->d_to_set(v, centers)) <= radius) out.push_back(v);
    return out;
}

int SteinerNetwork::project(int x) const {
    return host->closest_point(x, vertices());
}

Shadow shadow(const SteinerNetwork& net, const std::vector<int>& A, double eps) {
    Shadow s;
    std::vector<int> close = net.vertices_within(A, eps);
    if (close.empty()) return s;
    auto [vs, es] = net.span_subtree(close);
    s.vertices = std::move(vs);
    s.edge_ids = std::move(es);
    return s;
}

Dist Shadow::diameter(const SteinerNetwork& net) const {
    Dist best = 0;
    for (std::size_t i = 0; i < vertices.size(); ++i)
        for (std::size_t j = i + 1; j < vertices.size(); ++j)
            best = std::max(best, net.net_dist(vertices[i], vertices[j]));
    return best;
}

}  // namespace hullcub
