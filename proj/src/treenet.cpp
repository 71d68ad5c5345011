#include "hullcub/treenet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

namespace hullcub {

EpsilonSetup EpsilonSetup::build(const MetricGraph& host, std::vector<int> F,
                                 std::vector<SetupPoint> Y, double eps) {
    if (F.empty()) throw ArgumentError("eps-setup: F must be nonempty");
    if (eps <= 0) throw ArgumentError("eps-setup: eps must be positive");
    for (int f : F)
        if (f < 0 || f >= host.n()) throw ArgumentError("eps-setup: F vertex out of range");
    EpsilonSetup s;
    s.host = &host;
    s.F = std::move(F);
    s.Y = std::move(Y);
    s.eps = eps;
    s.lambda = minimal_network_points(host, s.F);
    for (const auto& y : s.Y) {
        if (y.vertex < 0 || y.vertex >= host.n()) throw ArgumentError("eps-setup: Y vertex out of range");
        if (static_cast<double>(s.dist_to_lambda(y.vertex)) >= eps / 2.0)
            throw SetupError("eps-setup: cluster point " + std::to_string(y.vertex) +
                             " is not within eps/2 of lambda(F)");
    }
    return s;
}

Dist EpsilonSetup::dist_to_lambda(int v) const {
    return host->d_to_set(v, lambda.vertices());
}

bool separates(const MetricGraph& g, const std::vector<int>& c1, const std::vector<int>& c2,
               const std::vector<int>& c3, double eps_prime) {
    Dist best = std::numeric_limits<Dist>::max();
    for (int x : c1)
        for (int z : c3) best = std::min(best, g.d(x, z));
    for (int x : c1)
        for (int z : c3) {
            if (g.d(x, z) != best) continue;
            for (int v : g.geodesic(x, z))
                if (static_cast<double>(g.d_to_set(v, c2)) <= 2.0 * eps_prime) return true;
        }
    return false;
}

namespace {

// All-geodesics variant of the separation test, used only as a diagnostic.
bool separates_universal(const MetricGraph& g, const std::vector<int>& c1, const std::vector<int>& c2,
                         const std::vector<int>& c3, double eps_prime) {
    Dist best = std::numeric_limits<Dist>::max();
    for (int x : c1)
        for (int z : c3) best = std::min(best, g.d(x, z));
    for (int x : c1)
        for (int z : c3) {
            if (g.d(x, z) != best) continue;
            for (int v : g.interval(x, z))
                if (static_cast<double>(g.d_to_set(v, c2)) <= 2.0 * eps_prime) return true;
        }
    return false;
}

}  // namespace

int ClusterGraph::cluster_of_vertex(int v) const {
    for (int i = 0; i < static_cast<int>(pts.size()); ++i)
        if (pts[i].vertex == v) return cluster_of[i];
    return -1;
}

int ClusterGraph::cluster_of_point(const SetupPoint& p) const {
    for (int i = 0; i < static_cast<int>(pts.size()); ++i)
        if (pts[i] == p) return cluster_of[i];
    return -1;
}

std::vector<int> ClusterGraph::cluster_vertices(int c) const {
    std::set<int> vs;
    for (int i : clusters[c]) vs.insert(pts[i].vertex);
    return {vs.begin(), vs.end()};
}

bool ClusterGraph::cluster_has_f(int c) const {
    for (int i : clusters[c])
        if (i < fcount) return true;
    return false;
}

std::vector<int> ClusterGraph::labels_of_cluster(int c) const {
    std::set<int> ls;
    for (int i : clusters[c])
        if (pts[i].label >= 0) ls.insert(pts[i].label);
    return {ls.begin(), ls.end()};
}

ClusterGraph cluster_graph(const EpsilonSetup& setup, double eps_prime, double E) {
    if (!(2 * eps_prime > setup.eps + eps_prime))
        throw ConfigError("cluster parameters: need 2 eps' > eps + eps'");
    if (!(E >= 8 * eps_prime)) throw ConfigError("cluster parameters: need E >= 8 eps'");

    const MetricGraph& g = *setup.host;
    ClusterGraph cg;
    cg.prm = {setup.eps, eps_prime, E};
    for (int f : setup.F) cg.pts.push_back({f, -1});
    cg.fcount = static_cast<int>(setup.F.size());
    for (const auto& y : setup.Y) cg.pts.push_back(y);

    // E-proximity components.
    const int m = static_cast<int>(cg.pts.size());
    std::vector<int> uf(m);
    for (int i = 0; i < m; ++i) uf[i] = i;
    std::function<int(int)> find = [&](int x) { return uf[x] == x ? x : uf[x] = find(uf[x]); };
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (static_cast<double>(g.d(cg.pts[i].vertex, cg.pts[j].vertex)) <= E)
                uf[find(i)] = find(j);
    std::map<int, int> root_to_cluster;
    for (int i = 0; i < m; ++i) {
        int r = find(i);
        if (!root_to_cluster.count(r)) {
            root_to_cluster[r] = static_cast<int>(cg.clusters.size());
            cg.clusters.push_back({});
        }
    }
    cg.cluster_of.assign(m, -1);
    for (int i = 0; i < m; ++i) {
        cg.cluster_of[i] = root_to_cluster[find(i)];
        cg.clusters[cg.cluster_of[i]].push_back(i);
    }

    // Separation graph.
    const int nc = static_cast<int>(cg.clusters.size());
    cg.gadj.assign(nc, {});
    std::vector<std::vector<int>> cvs(nc);
    for (int c = 0; c < nc; ++c) cvs[c] = cg.cluster_vertices(c);
    for (int a = 0; a < nc; ++a)
        for (int b = a + 1; b < nc; ++b) {
            bool blocked = false;
            bool blocked_universal = false;
            for (int c = 0; c < nc && !(blocked && blocked_universal); ++c) {
                if (c == a || c == b) continue;
                if (!blocked && separates(g, cvs[a], cvs[c], cvs[b], eps_prime)) blocked = true;
                if (!blocked_universal && separates_universal(g, cvs[a], cvs[c], cvs[b], eps_prime))
                    blocked_universal = true;
            }
            if (blocked != blocked_universal) ++cg.diag.quantifier_disagreements;
            if (!blocked) {
                cg.gadj[a].push_back(b);
                cg.gadj[b].push_back(a);
            }
        }
    for (auto& row : cg.gadj) std::sort(row.begin(), row.end());

    cg.bivalent.assign(nc, false);
    for (int c = 0; c < nc; ++c)
        cg.bivalent[c] = cg.gadj[c].size() == 2 && !cg.cluster_has_f(c);

    // Diagnostics: connectivity and the bivalent-shadow ordering checks.
    std::vector<bool> vis(nc, false);
    std::queue<int> bfs;
    bfs.push(0);
    vis[0] = true;
    int seen = 1;
    while (!bfs.empty()) {
        int u = bfs.front();
        bfs.pop();
        for (int w : cg.gadj[u])
            if (!vis[w]) {
                vis[w] = true;
                ++seen;
                bfs.push(w);
            }
    }
    cg.diag.connected = seen == nc;
    for (int c = 0; c < nc; ++c)
        if (!cg.bivalent[c]) ++cg.diag.non_bivalent_count;

    for (int a = 0; a < nc && cg.diag.shadows_ok; ++a) {
        if (!cg.bivalent[a]) continue;
        Shadow sa = shadow(setup.lambda, cvs[a], setup.eps);
        for (int b = a + 1; b < nc; ++b) {
            if (!cg.bivalent[b]) continue;
            Shadow sb = shadow(setup.lambda, cvs[b], setup.eps);
            std::vector<int> common;
            std::set_intersection(sa.vertices.begin(), sa.vertices.end(), sb.vertices.begin(),
                                  sb.vertices.end(), std::back_inserter(common));
            if (!common.empty()) {
                cg.diag.shadows_ok = false;
                cg.diag.notes.push_back("bivalent clusters " + std::to_string(a) + "," +
                                        std::to_string(b) + " have overlapping shadows");
                break;
            }
        }
    }
    return cg;
}

// ---------------------------------------------------------------------------
// Stable tree construction
// ---------------------------------------------------------------------------

namespace {

struct PieceSet {
    // Pieces of G - E^0, as cluster-id sets: closures of components around
    // non-bivalent clusters, plus single edges joining two bivalent clusters.
    std::vector<std::vector<int>> pieces;
};

PieceSet split_pieces(const ClusterGraph& cg) {
    const int nc = static_cast<int>(cg.clusters.size());
    PieceSet out;
    std::vector<bool> used(nc, false);
    // Blobs: components of the induced graph on non-bivalent clusters, closed
    // up with their bivalent neighbors.
    for (int c = 0; c < nc; ++c) {
        if (cg.bivalent[c] || used[c]) continue;
        std::set<int> blob;
        std::queue<int> bfs;
        bfs.push(c);
        used[c] = true;
        blob.insert(c);
        while (!bfs.empty()) {
            int u = bfs.front();
            bfs.pop();
            for (int w : cg.gadj[u]) {
                blob.insert(w);
                if (!cg.bivalent[w] && !used[w]) {
                    used[w] = true;
                    bfs.push(w);
                }
            }
        }
        out.pieces.emplace_back(blob.begin(), blob.end());
    }
    // Single edges with both endpoints bivalent.
    for (int a = 0; a < nc; ++a) {
        if (!cg.bivalent[a]) continue;
        for (int b : cg.gadj[a]) {
            if (b <= a || !cg.bivalent[b]) continue;
            out.pieces.push_back({a, b});
        }
    }
    // Isolated graph: a single cluster with no neighbors forms its own piece
    // handled above only if non-bivalent; bivalent needs degree 2 so cannot
    // be isolated.
    return out;
}

struct UnionFind {
    std::vector<int> p;
    explicit UnionFind(int n) : p(n) {
        for (int i = 0; i < n; ++i) p[i] = i;
    }
    int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
    void unite(int a, int b) { p[find(a)] = find(b); }
};

}  // namespace

StableTree stable_tree(const EpsilonSetup& setup, double eps_prime, double E) {
    const MetricGraph& g = *setup.host;
    StableTree t;
    t.setup = setup;
    t.clusters = cluster_graph(setup, eps_prime, E);
    const ClusterGraph& cg = t.clusters;
    const int nc = static_cast<int>(cg.clusters.size());

    PieceSet pieces = split_pieces(cg);

    // Edge forest: one lambda' per piece, split into connected components.
    struct RawComp {
        bool is_cluster;
        int cluster_id;
        int vgroup;
        std::set<int> host_edges;
        std::set<int> host_verts;
    };
    std::vector<RawComp> raw;

    for (int p = 0; p < static_cast<int>(pieces.pieces.size()); ++p) {
        const auto& piece = pieces.pieces[p];
        if (piece.size() < 2) continue;
        std::vector<std::vector<int>> groups;
        for (int c : piece) groups.push_back(cg.cluster_vertices(c));
        SteinerNetwork net = minimal_network(g, groups);
        // Split the forest into connected components.
        std::map<int, int> vcomp;
        std::map<int, std::vector<std::pair<int, int>>> nadj;
        for (int e : net.edge_ids) {
            nadj[g.edges()[e].u].push_back({g.edges()[e].v, e});
            nadj[g.edges()[e].v].push_back({g.edges()[e].u, e});
        }
        for (const auto& [v, _] : nadj) {
            if (vcomp.count(v)) continue;
            RawComp rc{false, -1, p, {}, {}};
            std::queue<int> bfs;
            bfs.push(v);
            vcomp[v] = 1;
            rc.host_verts.insert(v);
            while (!bfs.empty()) {
                int u = bfs.front();
                bfs.pop();
                for (auto [w, e] : nadj[u]) {
                    rc.host_edges.insert(e);
                    if (!vcomp.count(w)) {
                        vcomp[w] = 1;
                        rc.host_verts.insert(w);
                        bfs.push(w);
                    }
                }
            }
            raw.push_back(std::move(rc));
        }
    }
    const int n_edge_comps = static_cast<int>(raw.size());

    // Cluster forest: mu(C) = lambda(r(C)), r(C) = C n (T_e u F).
    for (int c = 0; c < nc; ++c) {
        std::set<int> rC;
        for (int v : cg.cluster_vertices(c)) {
            bool on_te = false;
            for (int i = 0; i < n_edge_comps && !on_te; ++i) on_te = raw[i].host_verts.count(v) > 0;
            bool in_f = false;
            for (int idx : cg.clusters[c])
                if (idx < cg.fcount && cg.pts[idx].vertex == v) in_f = true;
            if (on_te || in_f) rC.insert(v);
        }
        if (rC.empty()) rC.insert(cg.cluster_vertices(c).front());
        SteinerNetwork mu = minimal_network_points(g, {rC.begin(), rC.end()});
        RawComp rc{true, c, -1, {}, {}};
        rc.host_edges.insert(mu.edge_ids.begin(), mu.edge_ids.end());
        for (int v : mu.vertices()) rc.host_verts.insert(v);
        for (int v : rC) rc.host_verts.insert(v);
        raw.push_back(std::move(rc));
    }

    // Materialize components and the unit-subdivided glued tree.
    struct LocalNode {
        int comp;
        StableTree::NodeReal real;
    };
    std::vector<LocalNode> locals;
    std::map<std::pair<int, int>, int> vert_node;  // (comp, host vertex) -> local node
    std::vector<std::pair<int, int>> unit_edges;   // local node pairs

    for (int ci = 0; ci < static_cast<int>(raw.size()); ++ci) {
        StableTree::Component comp;
        comp.is_cluster = raw[ci].is_cluster;
        comp.cluster_id = raw[ci].cluster_id;
        comp.vgroup = raw[ci].vgroup;
        comp.host_edges.assign(raw[ci].host_edges.begin(), raw[ci].host_edges.end());
        comp.host_verts.assign(raw[ci].host_verts.begin(), raw[ci].host_verts.end());
        t.comps.push_back(comp);

        for (int v : raw[ci].host_verts) {
            vert_node[{ci, v}] = static_cast<int>(locals.size());
            locals.push_back({ci, {v, -1, 0}});
        }
        for (int e : raw[ci].host_edges) {
            const auto& he = g.edges()[e];
            int prev = vert_node[{ci, he.u}];
            for (Dist o = 1; o < he.w; ++o) {
                int id = static_cast<int>(locals.size());
                locals.push_back({ci, {-1, e, static_cast<int>(o)}});
                unit_edges.push_back({prev, id});
                prev = id;
            }
            unit_edges.push_back({prev, vert_node[{ci, he.v}]});
        }
    }

    // Glue edge components to the cluster trees of their own piece.
    UnionFind uf(static_cast<int>(locals.size()));
    for (int ci = 0; ci < n_edge_comps; ++ci) {
        const auto& piece = pieces.pieces[raw[ci].vgroup];
        for (int c : piece) {
            int cluster_comp = n_edge_comps + c;
            for (int v : cg.cluster_vertices(c)) {
                auto a = vert_node.find({ci, v});
                auto b = vert_node.find({cluster_comp, v});
                if (a != vert_node.end() && b != vert_node.end()) uf.unite(a->second, b->second);
            }
        }
    }

    // Compact to final nodes; cluster-side representatives win comp_of.
    std::map<int, int> rep_to_node;
    auto node_of = [&](int local) {
        int r = uf.find(local);
        auto it = rep_to_node.find(r);
        if (it != rep_to_node.end()) return it->second;
        int id = t.n_nodes++;
        rep_to_node[r] = id;
        return id;
    };
    std::vector<int> local_to_node(locals.size());
    for (int i = 0; i < static_cast<int>(locals.size()); ++i) local_to_node[i] = node_of(i);

    t.adj.assign(t.n_nodes, {});
    t.real.assign(t.n_nodes, {});
    t.comp_of.assign(t.n_nodes, -1);
    for (int i = 0; i < static_cast<int>(locals.size()); ++i) {
        int nd = local_to_node[i];
        t.real[nd] = locals[i].real;
        if (t.comp_of[nd] < 0 || raw[locals[i].comp].is_cluster) t.comp_of[nd] = locals[i].comp;
    }
    std::set<std::pair<int, int>> edge_set;
    for (auto [a, b] : unit_edges) {
        int x = local_to_node[a], y = local_to_node[b];
        if (x == y) throw PipelineError("stable tree: gluing collapsed a unit edge");
        if (edge_set.insert({std::min(x, y), std::max(x, y)}).second) {
            t.adj[x].push_back(y);
            t.adj[y].push_back(x);
        }
    }
    for (int ci = 0; ci < static_cast<int>(raw.size()); ++ci) t.comps[ci].nodes.clear();
    for (int i = 0; i < static_cast<int>(locals.size()); ++i)
        t.comps[locals[i].comp].nodes.push_back(local_to_node[i]);
    for (auto& c : t.comps) {
        std::sort(c.nodes.begin(), c.nodes.end());
        c.nodes.erase(std::unique(c.nodes.begin(), c.nodes.end()), c.nodes.end());
    }

    // Marked points: each f lives on its cluster tree.
    t.marked.assign(setup.F.size(), -1);
    for (int fi = 0; fi < static_cast<int>(setup.F.size()); ++fi) {
        int c = cg.cluster_of[fi];
        auto it = vert_node.find({n_edge_comps + c, setup.F[fi]});
        if (it == vert_node.end()) throw PipelineError("stable tree: marked point missing from mu(C)");
        t.marked[fi] = local_to_node[it->second];
    }

    // Validate tree-ness and record the quality report.
    int edges_count = static_cast<int>(edge_set.size());
    std::vector<int> order;
    std::vector<bool> vis(t.n_nodes, false);
    std::queue<int> bfs;
    if (t.n_nodes > 0) {
        bfs.push(0);
        vis[0] = true;
        while (!bfs.empty()) {
            int u = bfs.front();
            bfs.pop();
            order.push_back(u);
            for (int w : t.adj[u])
                if (!vis[w]) {
                    vis[w] = true;
                    bfs.push(w);
                }
        }
    }
    t.quality.is_tree =
        static_cast<int>(order.size()) == t.n_nodes && edges_count == t.n_nodes - 1;
    if (!t.quality.is_tree)
        throw PipelineError("stable tree: glued union is not a tree (components " +
                            std::to_string(order.size()) + "/" + std::to_string(t.n_nodes) +
                            ", edges " + std::to_string(edges_count) + ")");

    for (int v = 0; v < t.n_nodes; ++v)
        t.quality.branching = std::max(t.quality.branching, static_cast<int>(t.adj[v].size()));

    // Vertex-level Hausdorff gap between lambda(F) and phi(T).
    std::vector<int> lam = setup.lambda.vertices();
    std::set<int> phi_verts;
    for (int v = 0; v < t.n_nodes; ++v)
        if (t.real[v].is_vertex()) phi_verts.insert(t.real[v].host_vertex);
    Dist gap = 0;
    for (int v : lam) gap = std::max(gap, g.d_to_set(v, {phi_verts.begin(), phi_verts.end()}));
    for (int v : phi_verts) gap = std::max(gap, g.d_to_set(v, lam));
    t.quality.hausdorff_gap = gap;

    // Distortion over node pairs (exact when small, sampled otherwise).
    double distortion = 0;
    auto host_d = [&](int a, int b) {
        const auto &ra = t.real[a], &rb = t.real[b];
        auto vdist = [&](const StableTree::NodeReal& r, int z) -> Dist {
            if (r.is_vertex()) return g.d(r.host_vertex, z);
            const auto& he = g.edges()[r.host_edge];
            return std::min<Dist>(r.offset + g.d(he.u, z), he.w - r.offset + g.d(he.v, z));
        };
        if (rb.is_vertex()) return vdist(ra, rb.host_vertex);
        const auto& he = g.edges()[rb.host_edge];
        Dist via_u = vdist(ra, he.u) + rb.offset;
        Dist via_v = vdist(ra, he.v) + (he.w - rb.offset);
        Dist direct = (ra.host_edge == rb.host_edge)
                          ? std::abs(static_cast<long long>(ra.offset - rb.offset))
                          : std::numeric_limits<Dist>::max();
        return std::min({via_u, via_v, direct});
    };
    if (t.n_nodes <= 400) {
        for (int a = 0; a < t.n_nodes; ++a) {
            std::vector<Dist> dt(t.n_nodes, -1);
            std::queue<int> q2;
            q2.push(a);
            dt[a] = 0;
            while (!q2.empty()) {
                int u = q2.front();
                q2.pop();
                for (int w : t.adj[u])
                    if (dt[w] < 0) {
                        dt[w] = dt[u] + 1;
                        q2.push(w);
                    }
            }
            for (int b = a + 1; b < t.n_nodes; ++b)
                distortion = std::max(distortion, std::fabs(static_cast<double>(dt[b] - host_d(a, b))));
        }
    } else {
        for (int a = 0; a < t.n_nodes; a += std::max(1, t.n_nodes / 60)) {
            std::vector<Dist> dt(t.n_nodes, -1);
            std::queue<int> q2;
            q2.push(a);
            dt[a] = 0;
            while (!q2.empty()) {
                int u = q2.front();
                q2.pop();
                for (int w : t.adj[u])
                    if (dt[w] < 0) {
                        dt[w] = dt[u] + 1;
                        q2.push(w);
                    }
            }
            for (int b = 0; b < t.n_nodes; b += 3)
                distortion = std::max(distortion, std::fabs(static_cast<double>(dt[b] - host_d(a, b))));
        }
    }
    t.quality.distortion = distortion;
    return t;
}

Dist StableTree::node_dist(int a, int b) const {
    if (a == b) return 0;
    std::vector<Dist> dt(n_nodes, -1);
    std::queue<int> q;
    q.push(a);
    dt[a] = 0;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        if (u == b) return dt[b];
        for (int w : adj[u])
            if (dt[w] < 0) {
                dt[w] = dt[u] + 1;
                q.push(w);
            }
    }
    throw ArgumentError("node_dist: nodes are not connected");
}

std::vector<int> StableTree::node_path(int a, int b) const {
    std::vector<int> par(n_nodes, -2);
    std::queue<int> q;
    q.push(a);
    par[a] = -1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        if (u == b) break;
        for (int w : adj[u])
            if (par[w] == -2) {
                par[w] = u;
                q.push(w);
            }
    }
    std::vector<int> path;
    for (int cur = b; cur != -1; cur = par[cur]) path.push_back(cur);
    std::reverse(path.begin(), path.end());
    return path;
}

Dist StableTree::phi_dist(int a, int z) const {
    const MetricGraph& g = *setup.host;
    const NodeReal& r = real[a];
    if (r.is_vertex()) return g.d(r.host_vertex, z);
    const auto& he = g.edges()[r.host_edge];
    return std::min<Dist>(r.offset + g.d(he.u, z), he.w - r.offset + g.d(he.v, z));
}

int StableTree::node_at_vertex(int comp, int host_vertex) const {
    for (int nd : comps[comp].nodes)
        if (real[nd].is_vertex() && real[nd].host_vertex == host_vertex) return nd;
    return -1;
}

std::vector<int> StableTree::component_of_cluster(int cluster_id) const {
    for (const auto& c : comps)
        if (c.is_cluster && c.cluster_id == cluster_id) return c.nodes;
    return {};
}

std::vector<int> StableTree::hull_nodes(const std::vector<int>& f_indices) const {
    if (f_indices.empty()) return {};
    std::set<int> keep;
    int root = marked[f_indices[0]];
    std::vector<int> par(n_nodes, -2);
    std::queue<int> q;
    q.push(root);
    par[root] = -1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int w : adj[u])
            if (par[w] == -2) {
                par[w] = u;
                q.push(w);
            }
    }
    for (int fi : f_indices) {
        int cur = marked[fi];
        while (cur != -1 && !keep.count(cur)) {
            keep.insert(cur);
            cur = par[cur];
        }
    }
    return {keep.begin(), keep.end()};
}

}  // namespace hullcub
