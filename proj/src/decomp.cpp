#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include "hullcub/treenet.hpp"

namespace hullcub {

namespace {

// Host distance between two node realizations.
Dist real_dist(const MetricGraph& g, const StableTree::NodeReal& a, const StableTree::NodeReal& b) {
    auto vdist = [&](const StableTree::NodeReal& r, int z) -> Dist {
        if (r.is_vertex()) return g.d(r.host_vertex, z);
        const auto& he = g.edges()[r.host_edge];
        return std::min<Dist>(r.offset + g.d(he.u, z), he.w - r.offset + g.d(he.v, z));
    };
    if (b.is_vertex()) return vdist(a, b.host_vertex);
    const auto& he = g.edges()[b.host_edge];
    Dist best = std::min<Dist>(vdist(a, he.u) + b.offset, vdist(a, he.v) + (he.w - b.offset));
    if (a.host_edge == b.host_edge)
        best = std::min<Dist>(best, std::llabs(static_cast<long long>(a.offset) - b.offset));
    return best;
}

// Component fingerprint used for "identical subtree" tests. Two components
// with equal fingerprints realize the same host subforest with the same
// cluster content.
struct Fingerprint {
    bool is_cluster;
    std::vector<int> host_edges;
    std::vector<int> host_verts;
    std::vector<SetupPoint> content;  // cluster points for cluster comps
    bool operator<(const Fingerprint& o) const {
        return std::tie(is_cluster, host_edges, host_verts, content) <
               std::tie(o.is_cluster, o.host_edges, o.host_verts, o.content);
    }
    bool operator==(const Fingerprint& o) const {
        return is_cluster == o.is_cluster && host_edges == o.host_edges &&
               host_verts == o.host_verts && content == o.content;
    }
};

Fingerprint fingerprint(const StableTree& t, int comp) {
    const auto& c = t.comps[comp];
    Fingerprint fp;
    fp.is_cluster = c.is_cluster;
    fp.host_edges = c.host_edges;
    fp.host_verts = c.host_verts;
    if (c.is_cluster) {
        for (int i : t.clusters.clusters[c.cluster_id]) fp.content.push_back(t.clusters.pts[i]);
        std::sort(fp.content.begin(), fp.content.end());
    }
    return fp;
}

// Per-tree lookup: (component, realization) -> node.
struct NodeIndex {
    std::map<std::tuple<int, int, int, int>, int> m;  // (comp, hv, he, off) -> node
    explicit NodeIndex(const StableTree& t) {
        for (int ci = 0; ci < static_cast<int>(t.comps.size()); ++ci)
            for (int nd : t.comps[ci].nodes) {
                const auto& r = t.real[nd];
                m[{ci, r.host_vertex, r.host_edge, r.offset}] = nd;
            }
    }
    int at(const StableTree& t, int comp, const StableTree::NodeReal& r) const {
        auto it = m.find({comp, r.host_vertex, r.host_edge, r.offset});
        return it == m.end() ? -1 : it->second;
    }
    int at_vertex(int comp, int v) const {
        auto it = m.find({comp, v, -1, 0});
        return it == m.end() ? -1 : it->second;
    }
};

std::vector<bool> cover_mask(const StableTree& t, const std::vector<std::vector<int>>& intervals) {
    std::vector<bool> covered(t.n_nodes, false);
    for (const auto& iv : intervals)
        for (int nd : iv) covered[nd] = true;
    return covered;
}

std::set<std::pair<int, int>> interval_edges(const std::vector<std::vector<int>>& intervals) {
    std::set<std::pair<int, int>> es;
    for (const auto& iv : intervals)
        for (std::size_t i = 0; i + 1 < iv.size(); ++i)
            es.insert({std::min(iv[i], iv[i + 1]), std::max(iv[i], iv[i + 1])});
    return es;
}

// Connected components of `scope` nodes after removing the interval edges.
// Interval-interior nodes belong to the intervals and are skipped; endpoint
// nodes stay with the complement so that adjacency data survives.
std::vector<std::vector<int>> complement_components(const StableTree& t,
                                                    const std::vector<bool>& scope,
                                                    const std::vector<std::vector<int>>& intervals) {
    std::vector<bool> interior(t.n_nodes, false);
    for (const auto& iv : intervals)
        for (std::size_t i = 1; i + 1 < iv.size(); ++i) interior[iv[i]] = true;
    auto removed = interval_edges(intervals);
    std::vector<int> comp(t.n_nodes, -1);
    std::vector<std::vector<int>> out;
    for (int s = 0; s < t.n_nodes; ++s) {
        if (!scope[s] || interior[s] || comp[s] >= 0) continue;
        std::vector<int> nodes;
        std::queue<int> q;
        q.push(s);
        comp[s] = 1;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            nodes.push_back(u);
            for (int w : t.adj[u]) {
                if (!scope[w] || interior[w] || comp[w] >= 0) continue;
                if (removed.count({std::min(u, w), std::max(u, w)})) continue;
                comp[w] = 1;
                q.push(w);
            }
        }
        std::sort(nodes.begin(), nodes.end());
        out.push_back(std::move(nodes));
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Components of T_e minus the stable intervals, computed per edge component.
std::vector<std::vector<int>> unstable_components(const StableTree& t,
                                                  const std::vector<bool>& scope,
                                                  const std::vector<std::vector<int>>& intervals) {
    auto covered = cover_mask(t, intervals);
    auto removed = interval_edges(intervals);
    std::vector<std::vector<int>> out;
    for (int ci = 0; ci < static_cast<int>(t.comps.size()); ++ci) {
        if (t.comps[ci].is_cluster) continue;
        std::set<int> comp_nodes(t.comps[ci].nodes.begin(), t.comps[ci].nodes.end());
        std::set<int> seen;
        for (int s : t.comps[ci].nodes) {
            if (!scope[s] || covered[s] || seen.count(s)) continue;
            std::vector<int> nodes;
            std::queue<int> q;
            q.push(s);
            seen.insert(s);
            while (!q.empty()) {
                int u = q.front();
                q.pop();
                nodes.push_back(u);
                for (int w : t.adj[u]) {
                    if (!comp_nodes.count(w) || !scope[w] || covered[w] || seen.count(w)) continue;
                    if (removed.count({std::min(u, w), std::max(u, w)})) continue;
                    seen.insert(w);
                    q.push(w);
                }
            }
            std::sort(nodes.begin(), nodes.end());
            out.push_back(std::move(nodes));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Dist node_set_diameter(const StableTree& t, const std::vector<int>& nodes) {
    Dist best = 0;
    std::set<int> in(nodes.begin(), nodes.end());
    for (int s : nodes) {
        std::map<int, Dist> dist;
        std::queue<int> q;
        q.push(s);
        dist[s] = 0;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            best = std::max(best, dist[u]);
            for (int w : t.adj[u])
                if (in.count(w) && !dist.count(w)) {
                    dist[w] = dist[u] + 1;
                    q.push(w);
                }
        }
    }
    return best;
}

// Matches F(T) into F(T') by host vertex.
void match_shared_f(const StableTree& T, const StableTree& Tp, std::vector<int>& fT,
                    std::vector<int>& fTp) {
    fT.clear();
    fTp.clear();
    for (int i = 0; i < static_cast<int>(T.setup.F.size()); ++i) {
        int v = T.setup.F[i];
        auto it = std::find(Tp.setup.F.begin(), Tp.setup.F.end(), v);
        if (it == Tp.setup.F.end())
            throw ArgumentError("decomposition: F(T) is not contained in F(T')");
        fT.push_back(i);
        fTp.push_back(static_cast<int>(it - Tp.setup.F.begin()));
    }
}

// Builds complement components, beta, unstable forests and measured
// constants on top of the matched stable pairs; shared by the constructor
// and the chain composition.
void finalize_decomposition(StableDecomposition& d) {
    const StableTree& T = *d.T;
    const StableTree& Tp = *d.Tp;

    std::vector<bool> allT(T.n_nodes, true);
    d.comp_T = complement_components(T, allT, d.s_nodes);
    d.comp_Tp = complement_components(Tp, d.in_hull, d.sp_nodes);

    // beta via the adjacency signature through alpha.
    std::vector<int> comp_of_T(T.n_nodes, -1), comp_of_Tp(Tp.n_nodes, -1);
    for (int i = 0; i < static_cast<int>(d.comp_T.size()); ++i)
        for (int nd : d.comp_T[i]) comp_of_T[nd] = i;
    for (int i = 0; i < static_cast<int>(d.comp_Tp.size()); ++i)
        for (int nd : d.comp_Tp[i]) comp_of_Tp[nd] = i;

    d.beta.assign(d.comp_T.size(), -1);
    std::vector<bool> taken(d.comp_Tp.size(), false);
    for (int ci = 0; ci < static_cast<int>(d.comp_T.size()); ++ci) {
        std::set<int> candidates;
        for (int pi = 0; pi < static_cast<int>(d.s_nodes.size()); ++pi) {
            const auto& iv = d.s_nodes[pi];
            const auto& ivp = d.sp_nodes[pi];
            for (int side = 0; side < 2; ++side) {
                int endpoint = side == 0 ? iv.front() : iv.back();
                int endpointp = side == 0 ? ivp.front() : ivp.back();
                if (comp_of_T[endpoint] == ci && comp_of_Tp[endpointp] >= 0)
                    candidates.insert(comp_of_Tp[endpointp]);
            }
        }
        if (candidates.size() == 1) {
            d.beta[ci] = *candidates.begin();
            taken[d.beta[ci]] = true;
        }
    }
    // Leftovers (typically the single all-unstable pair) matched in order of
    // least marked host vertex, falling back to least node id.
    std::vector<int> freeT, freeTp;
    for (int i = 0; i < static_cast<int>(d.comp_T.size()); ++i)
        if (d.beta[i] < 0) freeT.push_back(i);
    for (int i = 0; i < static_cast<int>(d.comp_Tp.size()); ++i)
        if (!taken[i]) freeTp.push_back(i);
    for (std::size_t i = 0; i < freeT.size() && i < freeTp.size(); ++i) d.beta[freeT[i]] = freeTp[i];

    // Unstable forests: components that are not mirrored between the trees.
    std::map<Fingerprint, std::vector<int>> fpT, fpTp;
    for (int ci = 0; ci < static_cast<int>(T.comps.size()); ++ci)
        fpT[fingerprint(T, ci)].push_back(ci);
    // Only components meeting the hull participate on the primed side.
    std::vector<bool> comp_in_hull(Tp.comps.size(), false);
    for (int nd = 0; nd < Tp.n_nodes; ++nd)
        if (d.in_hull[nd]) comp_in_hull[Tp.comp_of[nd]] = true;
    for (int ci = 0; ci < static_cast<int>(Tp.comps.size()); ++ci) {
        if (!comp_in_hull[ci]) continue;
        // A component partially outside the hull can never be mirrored.
        bool fully_inside = true;
        for (int nd : Tp.comps[ci].nodes)
            if (!d.in_hull[nd]) fully_inside = false;
        if (fully_inside) fpTp[fingerprint(Tp, ci)].push_back(ci);
    }
    std::set<int> dirtyT, dirtyTp;
    for (int ci = 0; ci < static_cast<int>(T.comps.size()); ++ci) {
        const auto& mine = fpT[fingerprint(T, ci)];
        const auto& theirs = fpTp[fingerprint(T, ci)];
        auto pos = std::find(mine.begin(), mine.end(), ci) - mine.begin();
        if (pos >= static_cast<long>(theirs.size())) dirtyT.insert(ci);
    }
    for (int ci = 0; ci < static_cast<int>(Tp.comps.size()); ++ci) {
        if (!comp_in_hull[ci]) continue;
        bool fully_inside = true;
        for (int nd : Tp.comps[ci].nodes)
            if (!d.in_hull[nd]) fully_inside = false;
        if (!fully_inside) {
            dirtyTp.insert(ci);
            continue;
        }
        const auto& mine = fpTp[fingerprint(Tp, ci)];
        const auto& theirs = fpT[fingerprint(Tp, ci)];
        auto pos = std::find(mine.begin(), mine.end(), ci) - mine.begin();
        if (pos >= static_cast<long>(theirs.size())) dirtyTp.insert(ci);
    }
    d.diff_T.assign(dirtyT.begin(), dirtyT.end());
    d.diff_Tp.assign(dirtyTp.begin(), dirtyTp.end());

    // Measured constants.
    auto& m = d.measured;
    m.non_identical_pairs = 0;
    m.pair_gap = 0;
    const MetricGraph& g = *T.setup.host;
    for (int i = 0; i < static_cast<int>(d.s_nodes.size()); ++i) {
        if (d.identical[i]) continue;
        ++m.non_identical_pairs;
        for (std::size_t j = 0; j < d.s_nodes[i].size(); ++j)
            m.pair_gap = std::max(
                m.pair_gap, real_dist(g, T.real[d.s_nodes[i][j]], Tp.real[d.sp_nodes[i][j]]));
    }
    auto uT = unstable_components(T, allT, d.s_nodes);
    auto uTp = unstable_components(Tp, d.in_hull, d.sp_nodes);
    m.unstable_count = std::max(uT.size(), uTp.size());
    m.unstable_diam = 0;
    for (const auto& c : uT) m.unstable_diam = std::max(m.unstable_diam, node_set_diameter(T, c));
    for (const auto& c : uTp) m.unstable_diam = std::max(m.unstable_diam, node_set_diameter(Tp, c));
    m.diff_comps = std::max(d.diff_T.size(), d.diff_Tp.size());
    m.L1 = std::max({m.non_identical_pairs, m.unstable_count, m.diff_comps, 1});
    m.L2 = std::max({m.pair_gap, m.unstable_diam, static_cast<Dist>(1)});
}

std::vector<bool> hull_mask(const StableTree& Tp, const std::vector<int>& f_indices) {
    std::vector<bool> mask(Tp.n_nodes, false);
    for (int nd : Tp.hull_nodes(f_indices)) mask[nd] = true;
    return mask;
}

}  // namespace

StableDecomposition make_decomposition(TreePtr Tptr, TreePtr Tpptr, const std::vector<SetupPoint>& y0,
                                       int min_stable_len) {
    const StableTree& T = *Tptr;
    const StableTree& Tp = *Tpptr;
    if (T.setup.host != Tp.setup.host)
        throw ArgumentError("decomposition: trees live on different hosts");

    StableDecomposition d;
    d.T = std::move(Tptr);
    d.Tp = std::move(Tpptr);
    d.y0 = y0;
    match_shared_f(T, Tp, d.f_index_in_T, d.f_index_in_Tp);
    d.in_hull = hull_mask(Tp, d.f_index_in_Tp);

    NodeIndex idxT(T), idxTp(Tp);
    std::vector<bool> markedT(T.n_nodes, false), markedTp(Tp.n_nodes, false);
    for (int nd : T.marked) markedT[nd] = true;
    for (int nd : Tp.marked) markedTp[nd] = true;

    // A node is interval-interior material iff it has degree 2, is not an
    // attachment (its component is not a cluster component) and not marked.
    auto interior_ok = [](const StableTree& t, const std::vector<bool>& marked, int nd) {
        return t.adj[nd].size() == 2 && !t.comps[t.comp_of[nd]].is_cluster && !marked[nd];
    };

    std::set<std::pair<int, int>> consumedT, consumedTp;  // (comp, host edge)

    for (int a = 0; a < static_cast<int>(T.comps.size()); ++a) {
        if (T.comps[a].is_cluster) continue;
        for (int b = 0; b < static_cast<int>(Tp.comps.size()); ++b) {
            if (Tp.comps[b].is_cluster) continue;
            std::vector<int> common;
            std::set_intersection(T.comps[a].host_edges.begin(), T.comps[a].host_edges.end(),
                                  Tp.comps[b].host_edges.begin(), Tp.comps[b].host_edges.end(),
                                  std::back_inserter(common));
            std::vector<int> eligible;
            for (int e : common)
                if (!consumedT.count({a, e}) && !consumedTp.count({b, e})) eligible.push_back(e);
            if (eligible.empty()) continue;

            // Walk maximal runs of eligible host edges whose interior nodes
            // are run-interior material on both sides and inside the hull.
            const MetricGraph& g = *T.setup.host;
            std::map<int, std::vector<int>> vadj;  // host vertex -> eligible edges
            for (int e : eligible) {
                vadj[g.edges()[e].u].push_back(e);
                vadj[g.edges()[e].v].push_back(e);
            }
            auto side_ok = [&](int hv, bool prime) {
                int nd = prime ? idxTp.at_vertex(b, hv) : idxT.at_vertex(a, hv);
                if (nd < 0) return false;
                if (prime && !d.in_hull[nd]) return false;
                return prime ? interior_ok(Tp, markedTp, nd) : interior_ok(T, markedT, nd);
            };
            auto vertex_breaks = [&](int hv) {
                return vadj[hv].size() != 2 || !side_ok(hv, false) || !side_ok(hv, true);
            };
            // A break vertex may serve as a closed interval endpoint only
            // when both trees carry structure there (cluster attachment,
            // branch point or marked point on each side). Otherwise abutting
            // intervals from different pairings would meet at a bare point
            // and the complement bijection beta could not exist; we trim the
            // final edge instead, leaving a small unstable gap.
            auto endpoint_closed = [&](int hv) { return !side_ok(hv, false) && !side_ok(hv, true); };
            // Hull / degree admissibility of a full host edge (its interior
            // subdivision nodes).
            auto edge_ok = [&](int e) {
                const auto& he = g.edges()[e];
                for (int off = 1; off < he.w; ++off) {
                    int ndT = idxT.at(T, a, {-1, e, off});
                    int ndTp = idxTp.at(Tp, b, {-1, e, off});
                    if (ndT < 0 || ndTp < 0 || !d.in_hull[ndTp]) return false;
                }
                int ndTpu = idxTp.at_vertex(b, he.u), ndTpv = idxTp.at_vertex(b, he.v);
                if (ndTpu < 0 || ndTpv < 0 || !d.in_hull[ndTpu] || !d.in_hull[ndTpv]) return false;
                return true;
            };

            std::set<int> used;
            for (int e0 : eligible) {
                if (used.count(e0) || !edge_ok(e0)) continue;
                // Grow a run through e0 in both directions, then trim the
                // ends that stop at half-open breakpoints.
                std::vector<int> run{e0};
                used.insert(e0);
                for (int dir = 0; dir < 2; ++dir) {
                    int hv = dir == 0 ? g.edges()[e0].u : g.edges()[e0].v;
                    int last = e0;
                    while (!vertex_breaks(hv)) {
                        int nxt = vadj[hv][0] == last ? vadj[hv][1] : vadj[hv][0];
                        if (used.count(nxt) || !edge_ok(nxt)) break;
                        used.insert(nxt);
                        if (dir == 0)
                            run.insert(run.begin(), nxt);
                        else
                            run.push_back(nxt);
                        hv = g.edges()[nxt].u == hv ? g.edges()[nxt].v : g.edges()[nxt].u;
                        last = nxt;
                    }
                    if (!endpoint_closed(hv) && !run.empty()) {
                        if (dir == 0)
                            run.erase(run.begin());
                        else
                            run.pop_back();
                    }
                }
                if (run.empty()) continue;
                Dist run_len = 0;
                for (int e : run) run_len += g.edges()[e].w;
                if (run_len < min_stable_len) continue;

                // Orient the run and emit aligned node paths in both trees.
                std::vector<int> hostpath;  // host vertices along the run
                {
                    int first = run.front();
                    int second = run.size() > 1 ? run[1] : -1;
                    int start = g.edges()[first].u;
                    if (second >= 0 &&
                        (g.edges()[first].u == g.edges()[second].u ||
                         g.edges()[first].u == g.edges()[second].v))
                        start = g.edges()[first].v;
                    hostpath.push_back(start);
                    int cur = start;
                    for (int e : run) {
                        cur = g.edges()[e].u == cur ? g.edges()[e].v : g.edges()[e].u;
                        hostpath.push_back(cur);
                    }
                }
                std::vector<int> pathT, pathTp;
                for (std::size_t i = 0; i + 1 < hostpath.size(); ++i) {
                    int e = run[i];
                    const auto& he = g.edges()[e];
                    bool forward = he.u == hostpath[i];
                    pathT.push_back(idxT.at_vertex(a, hostpath[i]));
                    pathTp.push_back(idxTp.at_vertex(b, hostpath[i]));
                    for (int k = 1; k < he.w; ++k) {
                        int off = forward ? k : static_cast<int>(he.w) - k;
                        pathT.push_back(idxT.at(T, a, {-1, e, off}));
                        pathTp.push_back(idxTp.at(Tp, b, {-1, e, off}));
                    }
                }
                pathT.push_back(idxT.at_vertex(a, hostpath.back()));
                pathTp.push_back(idxTp.at_vertex(b, hostpath.back()));
                for (int nd : pathT)
                    if (nd < 0) throw PipelineError("decomposition: node lookup failed");
                for (int nd : pathTp)
                    if (nd < 0) throw PipelineError("decomposition: node lookup failed");

                d.s_nodes.push_back(pathT);
                d.sp_nodes.push_back(pathTp);
                d.identical.push_back(true);
                for (int e : run) {
                    consumedT.insert({a, e});
                    consumedTp.insert({b, e});
                }
            }
        }
    }

    finalize_decomposition(d);
    return d;
}

// ---------------------------------------------------------------------------
// Checker
// ---------------------------------------------------------------------------

DecompReport check_decomposition(const StableDecomposition& d, int L1, Dist L2) {
    const StableTree& T = *d.T;
    const StableTree& Tp = *d.Tp;
    const MetricGraph& g = *T.setup.host;
    DecompReport rep;
    auto clause = [&](const std::string& name) -> DecompReport::Clause& {
        rep.clauses.push_back({name, true, ""});
        return rep.clauses.back();
    };
    auto fail = [&](DecompReport::Clause& c, const std::string& w) {
        c.pass = false;
        if (c.witness.empty()) c.witness = w;
        rep.pass = false;
    };

    std::vector<bool> markedT(T.n_nodes, false), markedTp(Tp.n_nodes, false);
    for (int nd : T.marked) markedT[nd] = true;
    for (int nd : Tp.marked) markedTp[nd] = true;

    // (1) alpha is a bijection between interval families, intervals live in
    // edges of the edge forests (and the hull on the primed side).
    auto& c1 = clause("1:alpha-bijection-intervals");
    if (d.s_nodes.size() != d.sp_nodes.size())
        fail(c1, "pair counts differ");
    for (int i = 0; i < static_cast<int>(d.s_nodes.size()); ++i) {
        auto check_side = [&](const StableTree& t, const std::vector<int>& iv,
                               const std::vector<bool>* hull, const std::vector<bool>& marked) {
            if (iv.size() < 2) return std::string("degenerate interval");
            for (std::size_t j = 0; j + 1 < iv.size(); ++j)
                if (std::find(t.adj[iv[j]].begin(), t.adj[iv[j]].end(), iv[j + 1]) ==
                    t.adj[iv[j]].end())
                    return std::string("interval is not a path");
            for (std::size_t j = 1; j + 1 < iv.size(); ++j) {
                int nd = iv[j];
                if (t.adj[nd].size() != 2) return std::string("interior node has degree != 2");
                if (t.comps[t.comp_of[nd]].is_cluster)
                    return std::string("interior node lies on a cluster component");
                if (marked[nd]) return std::string("marked point interior to a stable component");
            }
            if (hull)
                for (int nd : iv)
                    if (!(*hull)[nd]) return std::string("interval leaves hull_{T'}(F)");
            return std::string();
        };
        std::string w1 = check_side(T, d.s_nodes[i], nullptr, markedT);
        std::string w2 = check_side(Tp, d.sp_nodes[i], &d.in_hull, markedTp);
        if (!w1.empty()) fail(c1, "pair " + std::to_string(i) + ": " + w1);
        if (!w2.empty()) fail(c1, "pair " + std::to_string(i) + "': " + w2);
    }

    // (2) paired components are isometric.
    auto& c2 = clause("2:pair-isometries");
    for (int i = 0; i < static_cast<int>(d.s_nodes.size()); ++i)
        if (d.s_nodes[i].size() != d.sp_nodes[i].size())
            fail(c2, "pair " + std::to_string(i) + " has mismatched lengths");

    // (3) all but at most L1 pairs are identical in the host.
    auto& c3 = clause("3:identical-pairs");
    int non_identical = 0;
    for (int i = 0; i < static_cast<int>(d.s_nodes.size()); ++i) {
        bool ident = d.s_nodes[i].size() == d.sp_nodes[i].size();
        for (std::size_t j = 0; ident && j < d.s_nodes[i].size(); ++j)
            ident = T.real[d.s_nodes[i][j]] == Tp.real[d.sp_nodes[i][j]];
        if (ident != static_cast<bool>(d.identical[i]))
            fail(c3, "pair " + std::to_string(i) + " identical flag is wrong");
        if (!ident) ++non_identical;
    }
    if (non_identical > L1) fail(c3, std::to_string(non_identical) + " non-identical pairs > L1");

    // (4) non-identical pairs stay within L2 in the host.
    auto& c4 = clause("4:close-pairs");
    for (int i = 0; i < static_cast<int>(d.s_nodes.size()); ++i) {
        if (d.identical[i]) continue;
        for (std::size_t j = 0; j < d.s_nodes[i].size() && j < d.sp_nodes[i].size(); ++j) {
            Dist gap = real_dist(g, T.real[d.s_nodes[i][j]], Tp.real[d.sp_nodes[i][j]]);
            if (gap >= L2) {
                fail(c4, "pair " + std::to_string(i) + " strays " + std::to_string(gap));
                break;
            }
        }
    }

    // (5) at most L1 unstable components of diameter at most L2.
    auto& c5 = clause("5:unstable-components");
    std::vector<bool> allT(T.n_nodes, true);
    auto uT = unstable_components(T, allT, d.s_nodes);
    auto uTp = unstable_components(Tp, d.in_hull, d.sp_nodes);
    if (static_cast<int>(uT.size()) > L1 || static_cast<int>(uTp.size()) > L1)
        fail(c5, "unstable component count exceeds L1");
    for (const auto& c : uT)
        if (node_set_diameter(T, c) > L2) fail(c5, "unstable component diameter exceeds L2");
    for (const auto& c : uTp)
        if (node_set_diameter(Tp, c) > L2) fail(c5, "unstable component diameter exceeds L2");

    // (6) unstable forests with identical complements.
    auto& c6 = clause("6:unstable-forests");
    if (static_cast<int>(d.diff_T.size()) > L1 || static_cast<int>(d.diff_Tp.size()) > L1)
        fail(c6, "unstable forest has more than L1 components");
    {
        // Components of T - T_diff and hull - T'_diff must be identical: we
        // match them as multisets of component fingerprints.
        std::set<int> dirtyT(d.diff_T.begin(), d.diff_T.end());
        std::set<int> dirtyTp(d.diff_Tp.begin(), d.diff_Tp.end());
        std::multiset<Fingerprint> left, right;
        for (int ci = 0; ci < static_cast<int>(T.comps.size()); ++ci)
            if (!dirtyT.count(ci)) left.insert(fingerprint(T, ci));
        std::vector<bool> comp_in_hull(Tp.comps.size(), false);
        for (int nd = 0; nd < Tp.n_nodes; ++nd)
            if (d.in_hull[nd]) comp_in_hull[Tp.comp_of[nd]] = true;
        for (int ci = 0; ci < static_cast<int>(Tp.comps.size()); ++ci)
            if (comp_in_hull[ci] && !dirtyTp.count(ci)) right.insert(fingerprint(Tp, ci));
        if (left != right) fail(c6, "complements of the unstable forests are not identical");
    }

    // (7) beta: bijection, cluster carriers, adjacency preservation.
    auto& c7a = clause("7a:cluster-carriers");
    auto& c7b = clause("7b:adjacency-preserving");
    std::vector<int> comp_of_T(T.n_nodes, -1), comp_of_Tp(Tp.n_nodes, -1);
    for (int i = 0; i < static_cast<int>(d.comp_T.size()); ++i)
        for (int nd : d.comp_T[i]) comp_of_T[nd] = i;
    for (int i = 0; i < static_cast<int>(d.comp_Tp.size()); ++i)
        for (int nd : d.comp_Tp[i]) comp_of_Tp[nd] = i;
    {
        std::set<int> image;
        for (int b : d.beta) {
            if (b < 0 || b >= static_cast<int>(d.comp_Tp.size()) || !image.insert(b).second) {
                fail(c7b, "beta is not a bijection");
                break;
            }
        }
        if (d.beta.size() != d.comp_T.size() || image.size() != d.comp_Tp.size())
            fail(c7b, "beta is not a bijection");
    }
    // Carriers: y in Y0 u F.
    auto comp_of_cluster_T = [&](int cluster_id) {
        auto nodes = T.component_of_cluster(cluster_id);
        return nodes.empty() ? -1 : comp_of_T[nodes.front()];
    };
    auto comp_of_cluster_Tp = [&](int cluster_id) {
        auto nodes = Tp.component_of_cluster(cluster_id);
        for (int nd : nodes)
            if (d.in_hull[nd] && comp_of_Tp[nd] >= 0) return comp_of_Tp[nd];
        return -1;
    };
    std::vector<SetupPoint> carriers = d.y0;
    for (int fi : d.f_index_in_T) carriers.push_back({T.setup.F[fi], -1});
    for (const auto& y : carriers) {
        int cT = T.clusters.cluster_of_point(y);
        int cTp = Tp.clusters.cluster_of_point(y);
        if (cT < 0 || cTp < 0) {
            fail(c7a, "carrier point not present in both cluster graphs");
            continue;
        }
        int DT = comp_of_cluster_T(cT);
        int DTp = comp_of_cluster_Tp(cTp);
        if (DT < 0 || DTp < 0 || d.beta[DT] != DTp) {
            fail(c7a, "carrier of vertex " + std::to_string(y.vertex) + " not preserved by beta");
        }
    }
    // Adjacency: each interval endpoint lying in a component D must map to
    // the matching endpoint in beta(D).
    for (int i = 0; i < static_cast<int>(d.s_nodes.size()); ++i) {
        for (int side = 0; side < 2; ++side) {
            int x = side == 0 ? d.s_nodes[i].front() : d.s_nodes[i].back();
            int xp = side == 0 ? d.sp_nodes[i].front() : d.sp_nodes[i].back();
            int D = comp_of_T[x];
            if (D < 0) continue;  // endpoint fully absorbed in the intervals
            int expected = d.beta[D];
            if (comp_of_Tp[xp] != expected)
                fail(c7b, "pair " + std::to_string(i) + " endpoint not adjacency-preserved");
        }
    }

    rep.L1 = std::max({non_identical, static_cast<int>(std::max(uT.size(), uTp.size())),
                       static_cast<int>(std::max(d.diff_T.size(), d.diff_Tp.size()))});
    Dist diam = 0;
    for (const auto& c : uT) diam = std::max(diam, node_set_diameter(T, c));
    for (const auto& c : uTp) diam = std::max(diam, node_set_diameter(Tp, c));
    rep.L2 = diam;
    return rep;
}

// ---------------------------------------------------------------------------
// One-point refinement
// ---------------------------------------------------------------------------

namespace detail {
// Rebuilds complements, beta and measured constants after a composition step.
void finalize_for_compose(StableDecomposition& d) { finalize_decomposition(d); }
}  // namespace detail

OnePointData one_point_decomposition(const EpsilonSetup& setup, int w, double eps_prime, double E) {
    if (!setup.admits(w))
        throw SetupError("one_point: w violates the eps/2 proximity to lambda(F)");
    EpsilonSetup setup2 = EpsilonSetup::build(*setup.host, setup.F, [&] {
        auto y = setup.Y;
        y.push_back({w, -1});
        return y;
    }(), setup.eps);

    OnePointData out;
    auto T = std::make_shared<StableTree>(stable_tree(setup, eps_prime, E));
    auto Tp = std::make_shared<StableTree>(stable_tree(setup2, eps_prime, E));
    const ClusterGraph& G = T->clusters;
    const ClusterGraph& Gp = Tp->clusters;
    const MetricGraph& g = *setup.host;

    const int nc = static_cast<int>(G.clusters.size());
    // Absorbed: clusters within the proximity constant of w (these are
    // exactly the ones merging into w's cluster on the primed side).
    for (int c = 0; c < nc; ++c)
        if (static_cast<double>(g.d_to_set(w, G.cluster_vertices(c))) <= E)
            out.absorbed.push_back(c);

    // Cluster correspondence (by point content) for the adjacency diff.
    auto content = [](const ClusterGraph& cg, int c) {
        std::vector<SetupPoint> v;
        for (int i : cg.clusters[c]) v.push_back(cg.pts[i]);
        std::sort(v.begin(), v.end());
        return v;
    };
    std::map<std::vector<SetupPoint>, int> prime_of;
    for (int c = 0; c < static_cast<int>(Gp.clusters.size()); ++c) prime_of[content(Gp, c)] = c;

    std::set<int> affected(out.absorbed.begin(), out.absorbed.end());
    for (int c : out.absorbed)
        for (int nb : G.gadj[c]) affected.insert(nb);
    std::set<int> absorbed_set(out.absorbed.begin(), out.absorbed.end());
    for (int a = 0; a < nc; ++a) {
        if (absorbed_set.count(a)) continue;
        auto ita = prime_of.find(content(G, a));
        if (ita == prime_of.end()) continue;
        for (int b : G.gadj[a]) {
            if (b < a || absorbed_set.count(b)) continue;
            auto itb = prime_of.find(content(G, b));
            if (itb == prime_of.end()) continue;
            bool still = std::binary_search(Gp.gadj[ita->second].begin(),
                                            Gp.gadj[ita->second].end(), itb->second);
            if (!still) {
                affected.insert(a);
                affected.insert(b);
            }
        }
    }
    if (affected.empty()) {
        // Nothing absorbed, nothing separated: anchor the core at the
        // cluster nearest to w so the audit data is still meaningful.
        int best = 0;
        Dist bd = std::numeric_limits<Dist>::max();
        for (int c = 0; c < nc; ++c) {
            Dist dd = g.d_to_set(w, G.cluster_vertices(c));
            if (dd < bd) {
                bd = dd;
                best = c;
            }
        }
        affected.insert(best);
    }
    out.affected.assign(affected.begin(), affected.end());

    // A1 = max pairwise G-distance between affected clusters.
    auto gdist = [&](int s) {
        std::vector<int> dist(nc, -1);
        std::queue<int> q;
        q.push(s);
        dist[s] = 0;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v2 : G.gadj[u])
                if (dist[v2] < 0) {
                    dist[v2] = dist[u] + 1;
                    q.push(v2);
                }
        }
        return dist;
    };
    for (int a : out.affected) {
        auto dist = gdist(a);
        for (int b : out.affected)
            if (dist[b] > out.measured_A1) out.measured_A1 = dist[b];
    }

    // Raw core and its bivalent insulation.
    std::set<int> raw;
    for (int a : out.affected) {
        auto dist = gdist(a);
        for (int c = 0; c < nc; ++c)
            if (dist[c] >= 0 && dist[c] <= out.measured_A1 + 2) raw.insert(c);
    }
    out.raw_core.assign(raw.begin(), raw.end());

    std::set<int> insulation;  // bivalent clusters outside the raw core
    for (int c = 0; c < nc; ++c)
        if (G.bivalent[c] && !raw.count(c)) insulation.insert(c);
    std::set<int> score;  // S_A
    {
        std::set<int> seen;
        for (int s : raw) {
            if (seen.count(s)) continue;
            std::queue<int> q;
            q.push(s);
            seen.insert(s);
            score.insert(s);
            while (!q.empty()) {
                int u = q.front();
                q.pop();
                for (int v2 : G.gadj[u]) {
                    if (insulation.count(v2)) {
                        score.insert(v2);  // boundary stays in the closure
                        continue;
                    }
                    if (!seen.count(v2)) {
                        seen.insert(v2);
                        score.insert(v2);
                        q.push(v2);
                    }
                }
            }
        }
    }
    out.s_core.assign(score.begin(), score.end());

    // Tree cores: components living on core clusters.
    auto core_components = [&](const StableTree& t, const std::set<int>& core_clusters) {
        std::vector<int> comps;
        for (int ci = 0; ci < static_cast<int>(t.comps.size()); ++ci) {
            const auto& c = t.comps[ci];
            if (c.is_cluster) {
                if (core_clusters.count(c.cluster_id)) comps.push_back(ci);
            } else {
                // Edge components belong to the core when every endpoint
                // cluster of their piece lies in the core. We approximate the
                // piece by the clusters its vertices touch.
                bool inside = !c.host_verts.empty();
                for (int v : c.host_verts) {
                    int cl = t.clusters.cluster_of_vertex(v);
                    if (cl >= 0 && !core_clusters.count(cl)) inside = false;
                }
                if (inside) comps.push_back(ci);
            }
        }
        return comps;
    };
    out.core_T = core_components(*T, score);
    std::set<int> scorep;  // primed-side core clusters
    for (int c = 0; c < static_cast<int>(Gp.clusters.size()); ++c) {
        bool is_w_cluster = false;
        for (int i : Gp.clusters[c])
            if (Gp.pts[i].vertex == w && i >= Gp.fcount) is_w_cluster = true;
        if (is_w_cluster) {
            scorep.insert(c);
            continue;
        }
        auto it = prime_of.find(content(Gp, c));
        (void)it;
        // Match back into G by content.
        for (int cg = 0; cg < nc; ++cg)
            if (score.count(cg) && content(G, cg) == content(Gp, c)) scorep.insert(c);
    }
    out.core_Tp = core_components(*Tp, scorep);

    // gamma: identical complement components outside the cores.
    {
        std::set<int> dT(out.core_T.begin(), out.core_T.end());
        std::set<int> dTp(out.core_Tp.begin(), out.core_Tp.end());
        std::map<Fingerprint, std::vector<int>> rest;
        for (int ci = 0; ci < static_cast<int>(T->comps.size()); ++ci)
            if (!dT.count(ci)) rest[fingerprint(*T, ci)].push_back(ci);
        for (int ci = 0; ci < static_cast<int>(Tp->comps.size()); ++ci) {
            if (dTp.count(ci)) continue;
            auto& mine = rest[fingerprint(*Tp, ci)];
            if (!mine.empty()) {
                out.gamma.push_back({mine.back(), ci});
                mine.pop_back();
            }
        }
    }

    out.decomp = make_decomposition(T, Tp, setup.Y);
    return out;
}

}  // namespace hullcub
