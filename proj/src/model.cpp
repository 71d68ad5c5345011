#include "hullcub/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <set>

namespace hullcub {

using Rel = HHSInstance::Rel;

// ---------------------------------------------------------------------------
// Thickening and collapsing
// ---------------------------------------------------------------------------

Thickening thicken(const StableTree& t, int r1, int r2) {
    if (r1 <= 0 || r2 <= 0) throw ArgumentError("thicken: r1, r2 must be positive integers");
    Thickening th;
    th.r1 = r1;
    th.r2 = r2;

    // Start from the r1-neighborhoods of the cluster components.
    std::vector<std::set<int>> comps;
    for (const auto& c : t.comps) {
        if (!c.is_cluster) continue;
        std::set<int> blob(c.nodes.begin(), c.nodes.end());
        std::queue<std::pair<int, int>> bfs;
        for (int nd : c.nodes) bfs.push({nd, 0});
        std::set<int> seen(c.nodes.begin(), c.nodes.end());
        while (!bfs.empty()) {
            auto [u, d] = bfs.front();
            bfs.pop();
            if (d == r1) continue;
            for (int w : t.adj[u])
                if (seen.insert(w).second) {
                    blob.insert(w);
                    bfs.push({w, d + 1});
                }
        }
        comps.push_back(std::move(blob));
    }
    auto merge_overlaps = [&]() {
        bool change = true;
        while (change) {
            change = false;
            for (std::size_t i = 0; i < comps.size() && !change; ++i)
                for (std::size_t j = i + 1; j < comps.size() && !change; ++j) {
                    bool meet = false;
                    for (int nd : comps[j])
                        if (comps[i].count(nd)) {
                            meet = true;
                            break;
                        }
                    if (meet) {
                        comps[i].insert(comps[j].begin(), comps[j].end());
                        comps.erase(comps.begin() + j);
                        change = true;
                    }
                }
        }
    };
    merge_overlaps();

    bool change = true;
    while (change) {
        change = false;
        ++th.iterations;
        for (std::size_t i = 0; i < comps.size() && !change; ++i) {
            std::vector<Dist> dist(t.n_nodes, -1);
            std::vector<int> par(t.n_nodes, -1);
            std::queue<int> bfs;
            for (int nd : comps[i]) {
                dist[nd] = 0;
                bfs.push(nd);
            }
            while (!bfs.empty()) {
                int u = bfs.front();
                bfs.pop();
                if (dist[u] > r2) continue;
                for (int w : t.adj[u])
                    if (dist[w] < 0) {
                        dist[w] = dist[u] + 1;
                        par[w] = u;
                        bfs.push(w);
                    }
            }
            for (std::size_t j = 0; j < comps.size() && !change; ++j) {
                if (j == i) continue;
                for (int nd : comps[j]) {
                    if (dist[nd] >= 0 && dist[nd] <= r2) {
                        for (int cur = nd; cur != -1; cur = par[cur]) comps[i].insert(cur);
                        comps[i].insert(comps[j].begin(), comps[j].end());
                        comps.erase(comps.begin() + j);
                        merge_overlaps();
                        change = true;
                        break;
                    }
                }
            }
        }
    }

    th.comp_of.assign(t.n_nodes, -1);
    for (std::size_t i = 0; i < comps.size(); ++i) {
        th.tc_comps.push_back({comps[i].begin(), comps[i].end()});
        for (int nd : comps[i]) th.comp_of[nd] = static_cast<int>(i);
    }
    return th;
}

Dist CollapsedTree::dist(int a, int b) const {
    if (a == b) return 0;
    std::vector<Dist> d(n, -1);
    std::queue<int> q;
    q.push(a);
    d[a] = 0;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        if (u == b) return d[b];
        for (int w : adj[u])
            if (d[w] < 0) {
                d[w] = d[u] + 1;
                q.push(w);
            }
    }
    throw ArgumentError("collapsed tree: disconnected query");
}

std::vector<int> CollapsedTree::path(int a, int b) const {
    std::vector<int> par(n, -2);
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
    std::vector<int> out;
    for (int cur = b; cur != -1; cur = par[cur]) out.push_back(cur);
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<int> CollapsedTree::hull_of(const std::vector<int>& vs) const {
    std::set<int> keep;
    if (vs.empty()) return {};
    for (int v : vs)
        for (int u : path(vs[0], v)) keep.insert(u);
    return {keep.begin(), keep.end()};
}

int CollapsedTree::nedges() const {
    int total = 0;
    for (const auto& row : adj) total += static_cast<int>(row.size());
    return total / 2;
}

CollapseResult collapse_tree(const StableTree& t, const Thickening& th) {
    CollapseResult out;
    out.q.assign(t.n_nodes, -1);
    CollapsedTree& ct = out.tree;
    for (std::size_t i = 0; i < th.tc_comps.size(); ++i) {
        int v = ct.n++;
        ct.from_comp.push_back(static_cast<int>(i));
        for (int nd : th.tc_comps[i]) out.q[nd] = v;
    }
    for (int nd = 0; nd < t.n_nodes; ++nd)
        if (out.q[nd] < 0) {
            out.q[nd] = ct.n++;
            ct.from_comp.push_back(-1);
        }
    std::set<std::pair<int, int>> edges;
    for (int u = 0; u < t.n_nodes; ++u)
        for (int w : t.adj[u]) {
            int a = out.q[u], b = out.q[w];
            if (a != b) edges.insert({std::min(a, b), std::max(a, b)});
        }
    ct.adj.assign(ct.n, {});
    for (auto [a, b] : edges) {
        ct.adj[a].push_back(b);
        ct.adj[b].push_back(a);
    }
    ct.marked.clear();
    for (int nd : t.marked) ct.marked.push_back(out.q[nd]);
    ct.cluster_labels.assign(ct.n, {});
    for (const auto& c : t.comps) {
        if (!c.is_cluster) continue;
        auto labels = t.clusters.labels_of_cluster(c.cluster_id);
        if (labels.empty()) continue;
        int v = out.q[c.nodes.front()];
        auto& dst = ct.cluster_labels[v];
        dst.insert(dst.end(), labels.begin(), labels.end());
    }
    for (auto& ls : ct.cluster_labels) {
        std::sort(ls.begin(), ls.end());
        ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// HFT assembly
// ---------------------------------------------------------------------------

int HFT::local(int domain_id) const {
    auto it = std::lower_bound(domains.begin(), domains.end(), domain_id);
    if (it == domains.end() || *it != domain_id) return -1;
    return static_cast<int>(it - domains.begin());
}

namespace {

std::vector<int> representatives(const StableTree& t, const std::vector<int>& q, int nverts) {
    std::vector<int> rep(nverts, -1);
    for (int nd = 0; nd < t.n_nodes; ++nd) {
        int v = q[nd];
        if (rep[v] < 0 && t.real[nd].is_vertex()) rep[v] = t.real[nd].host_vertex;
    }
    for (int nd = 0; nd < t.n_nodes; ++nd) {
        int v = q[nd];
        if (rep[v] < 0) rep[v] = t.setup.host->edges()[t.real[nd].host_edge].u;
    }
    return rep;
}

void validate_hft(HFT& hft) {
    ValidationReport& rep = hft.report;
    rep = ValidationReport{};
    auto item = [&](const std::string& name) -> ValidationReport::Item& {
        rep.items.push_back({name, true, ""});
        return rep.items.back();
    };
    auto fail = [&](ValidationReport::Item& it, const std::string& w) {
        it.pass = false;
        if (it.witness.empty()) it.witness = w;
        rep.pass = false;
    };
    const int nd = static_cast<int>(hft.domains.size());
    const HHSInstance& inst = *hft.inst;

    // (1) relation axioms on the restricted poset; multiple maximal domains
    // are admitted only when pairwise orthogonal (the product case, where
    // the ambient top domain is not relevant).
    auto& c1 = item("hft-1:relations");
    {
        std::vector<int> maxes;
        for (int u = 0; u < nd; ++u) {
            bool is_max = true;
            for (int v = 0; v < nd; ++v)
                if (u != v && hft.rel(u, v) == Rel::In) is_max = false;
            if (is_max) maxes.push_back(u);
        }
        for (std::size_t i = 0; i < maxes.size(); ++i)
            for (std::size_t j = i + 1; j < maxes.size(); ++j)
                if (hft.rel(maxes[i], maxes[j]) != Rel::Orth)
                    fail(c1, "non-orthogonal maximal domains");
    }

    auto& c2 = item("hft-2:finite-simplicial-trees");
    for (const auto& t : hft.trees)
        if (t.n <= 0) fail(c2, "empty tree");

    auto& c3 = item("hft-3:marked-points");
    for (int u = 0; u < nd; ++u) {
        const auto& t = hft.trees[u];
        if (static_cast<int>(t.marked.size()) != static_cast<int>(hft.F.size()))
            fail(c3, "marked point count mismatch");
        std::set<int> marked(t.marked.begin(), t.marked.end());
        for (int v = 0; v < t.n; ++v)
            if (t.n > 1 && t.adj[v].size() == 1 && !marked.count(v))
                fail(c3, "unmarked leaf in tree of domain " + inst.domains[hft.domains[u]].name);
    }

    auto& c4a = item("hft-4a:components-carry-marked-points");
    for (const auto& [key, vtx] : hft.delta_point) {
        int lu = key.second;
        const auto& t = hft.trees[lu];
        std::set<int> marked(t.marked.begin(), t.marked.end());
        std::vector<bool> seen(t.n, false);
        seen[vtx] = true;
        for (int s = 0; s < t.n; ++s) {
            if (seen[s]) continue;
            bool has_mark = false;
            std::queue<int> q;
            q.push(s);
            seen[s] = true;
            while (!q.empty()) {
                int x = q.front();
                q.pop();
                if (marked.count(x)) has_mark = true;
                for (int w : t.adj[x])
                    if (!seen[w]) {
                        seen[w] = true;
                        q.push(w);
                    }
            }
            if (!has_mark) fail(c4a, "unmarked component off a delta point");
        }
    }
    auto& c4b = item("hft-4b:orthogonality-substitution");
    for (int u = 0; u < nd; ++u)
        for (int v = 0; v < nd; ++v)
            for (int w = 0; w < nd; ++w) {
                if (u == v || v == w || u == w) continue;
                if (hft.rel(u, v) != Rel::Orth || hft.rel(v, w) != Rel::In) continue;
                if (hft.rel(u, w) != Rel::In && hft.rel(u, w) != Rel::Trans) continue;
                auto a = hft.delta_point.find({u, w});
                auto b = hft.delta_point.find({v, w});
                if (a == hft.delta_point.end() || b == hft.delta_point.end())
                    fail(c4b, "missing delta point in substitution triple");
                else if (a->second != b->second)
                    fail(c4b, "delta^U_W differs from delta^V_W for orthogonal U,V");
            }

    auto& c5 = item("hft-5:bounded-geodesic-image");
    for (const auto& [key, table] : hft.delta_down) {
        auto [lv, lu] = key;  // trees[lv] -> trees[lu], lu nested in lv
        auto anchor_it = hft.delta_point.find({lu, lv});
        if (anchor_it == hft.delta_point.end()) {
            fail(c5, "downward table without a delta point");
            continue;
        }
        const auto& tv = hft.trees[lv];
        std::vector<int> comp(tv.n, -1);
        int ncomp = 0;
        for (int s = 0; s < tv.n; ++s) {
            if (s == anchor_it->second || comp[s] >= 0) continue;
            std::queue<int> q;
            q.push(s);
            comp[s] = ncomp;
            while (!q.empty()) {
                int x = q.front();
                q.pop();
                for (int w2 : tv.adj[x])
                    if (w2 != anchor_it->second && comp[w2] < 0) {
                        comp[w2] = ncomp;
                        q.push(w2);
                    }
            }
            ++ncomp;
        }
        for (int fi = 0; fi < static_cast<int>(hft.F.size()); ++fi) {
            int fu = tv.marked[fi];
            if (fu == anchor_it->second) continue;
            int c = comp[fu];
            int want = hft.trees[lu].marked[fi];
            for (int x = 0; x < tv.n; ++x)
                if (comp[x] == c && table[x] != want) {
                    fail(c5, "component of " + inst.domains[hft.domains[lv]].name +
                                 " does not collapse to the marked point downstairs");
                    break;
                }
        }
    }
}

HFT build_hft_from_trees(const HHSInstance& inst, const std::vector<int>& F,
                         const std::vector<int>& domains, std::vector<TreePtr> trees,
                         const ModelParams& prm) {
    HFT hft;
    hft.inst = &inst;
    hft.domains = domains;
    hft.F = F;
    hft.stable = std::move(trees);
    const int nd = static_cast<int>(domains.size());
    for (int u = 0; u < nd; ++u) {
        Thickening th = thicken(*hft.stable[u], prm.r1_value(), prm.r2_value());
        CollapseResult cr = collapse_tree(*hft.stable[u], th);
        hft.thick.push_back(std::move(th));
        hft.q.push_back(std::move(cr.q));
        hft.trees.push_back(std::move(cr.tree));
        hft.rep_vertex.push_back(representatives(*hft.stable[u], hft.q.back(), hft.trees.back().n));
    }

    for (int lu = 0; lu < nd; ++lu)
        for (int lv = 0; lv < nd; ++lv) {
            if (lu == lv) continue;
            int U = domains[lu], V = domains[lv];
            if (inst.rel[V][U] == Rel::In) {
                auto it = inst.rho_point.find({V, U});
                if (it == inst.rho_point.end())
                    throw PipelineError("hft: missing rho point for nested pair");
                const StableTree& t = *hft.stable[lu];
                int cl = t.clusters.cluster_of_point({it->second, V});
                if (cl < 0)
                    throw PipelineError("hft: nested rho point is not a cluster point upstairs");
                auto nodes = t.component_of_cluster(cl);
                hft.delta_point[{lv, lu}] = hft.q[lu][nodes.front()];
            } else if (inst.rel[V][U] == Rel::Trans) {
                auto it = inst.rho_point.find({V, U});
                if (it == inst.rho_point.end()) continue;
                int best_f = -1;
                Dist best = std::numeric_limits<Dist>::max();
                for (int fi = 0; fi < static_cast<int>(F.size()); ++fi) {
                    Dist dd = inst.d_in(U, inst.pi[U][F[fi]], it->second);
                    if (dd < best) {
                        best = dd;
                        best_f = fi;
                    }
                }
                hft.delta_point[{lv, lu}] = hft.trees[lu].marked[best_f];
            }
        }
    for (int lv = 0; lv < nd; ++lv)
        for (int lu = 0; lu < nd; ++lu) {
            if (lu == lv) continue;
            int U = domains[lu], V = domains[lv];
            if (inst.rel[U][V] != Rel::In) continue;  // need U nested in V
            auto table_it = inst.rho_down.find({V, U});
            if (table_it == inst.rho_down.end())
                throw PipelineError("hft: missing downward rho table");
            const StableTree& tu = *hft.stable[lu];
            std::map<int, int> node_at;
            for (int ndi = 0; ndi < tu.n_nodes; ++ndi)
                if (tu.real[ndi].is_vertex() && !node_at.count(tu.real[ndi].host_vertex))
                    node_at[tu.real[ndi].host_vertex] = ndi;
            const MetricGraph& cu = inst.domains[U].space;
            std::vector<int> table(hft.trees[lv].n, 0);
            for (int x = 0; x < hft.trees[lv].n; ++x) {
                int cx = hft.rep_vertex[lv][x];
                int image = table_it->second[cx];
                Dist best = std::numeric_limits<Dist>::max();
                int best_v = -1;
                for (const auto& [hv, ndi] : node_at) {
                    (void)ndi;
                    Dist dd = cu.d(image, hv);
                    if (dd < best) {
                        best = dd;
                        best_v = hv;
                    }
                }
                table[x] = hft.q[lu][node_at[best_v]];
            }
            hft.delta_down[{lv, lu}] = std::move(table);
        }

    validate_hft(hft);
    if (!hft.report.pass) {
        std::string bad;
        for (const auto& it : hft.report.items)
            if (!it.pass) bad += (bad.empty() ? "" : ", ") + it.check;
        throw PipelineError("hft validation failed (" + bad + ")");
    }
    return hft;
}

EpsilonSetup domain_setup(const HHSInstance& inst, const std::vector<int>& F,
                          const std::vector<int>& rel_set, int U, double eps) {
    std::vector<int> FU;
    for (int x : F) FU.push_back(inst.pi[U][x]);
    std::vector<SetupPoint> YU;
    for (int V : rel_set) {
        if (!inst.nested_in(V, U)) continue;
        auto it = inst.rho_point.find({V, U});
        if (it == inst.rho_point.end())
            throw PipelineError("hft: missing rho point for nested relevant domain");
        YU.push_back({it->second, V});
    }
    try {
        return EpsilonSetup::build(inst.domains[U].space, FU, YU, eps);
    } catch (const SetupError& e) {
        throw PipelineError("hft: setup in domain " + inst.domains[U].name + ": " + e.what());
    }
}

}  // namespace

HFT build_hft(const HHSInstance& inst, const std::vector<int>& F, const ModelParams& prm) {
    if (F.empty()) throw ArgumentError("build_hft: F must be nonempty");
    std::vector<int> domains = rel_domains(inst, F, prm.K_value(inst));
    std::vector<TreePtr> trees;
    for (int U : domains) {
        EpsilonSetup s = domain_setup(inst, F, domains, U, prm.eps);
        trees.push_back(
            std::make_shared<StableTree>(stable_tree(s, prm.eps_prime_value(), prm.E_value())));
    }
    return build_hft_from_trees(inst, F, domains, std::move(trees), prm);
}

// ---------------------------------------------------------------------------
// Consistent set
// ---------------------------------------------------------------------------

namespace {
bool tuple_consistent(const HFT& hft, const std::vector<int>& x) {
    const int nd = static_cast<int>(hft.domains.size());
    for (int u = 0; u < nd; ++u)
        for (int v = u + 1; v < nd; ++v) {
            Rel r = hft.rel(u, v);
            if (r == Rel::Trans) {
                auto ituv = hft.delta_point.find({v, u});
                auto itvu = hft.delta_point.find({u, v});
                int duv = ituv == hft.delta_point.end() ? -1 : ituv->second;
                int dvu = itvu == hft.delta_point.end() ? -1 : itvu->second;
                if (x[u] != duv && x[v] != dvu) return false;
            } else if (r == Rel::In) {  // u nested in v
                auto itp = hft.delta_point.find({u, v});
                int point = itp == hft.delta_point.end() ? -1 : itp->second;
                const auto& down = hft.delta_down.at({v, u});
                if (x[v] != point && x[u] != down[x[v]]) return false;
            } else if (r == Rel::Contains) {  // v nested in u
                auto itp = hft.delta_point.find({v, u});
                int point = itp == hft.delta_point.end() ? -1 : itp->second;
                const auto& down = hft.delta_down.at({u, v});
                if (x[u] != point && x[v] != down[x[u]]) return false;
            }
        }
    return true;
}
}  // namespace

int ConsistentSet::index_of(const std::vector<int>& tuple) const {
    auto it = index_.find(tuple);
    return it == index_.end() ? -1 : it->second;
}

Dist ConsistentSet::l1(int a, int b) const { return complex.l1(a, b); }

ConsistentSet consistent_set(const HFT& hft, std::size_t guard) {
    ConsistentSet out;
    const int nd = static_cast<int>(hft.domains.size());

    std::vector<int> seed;
    for (int u = 0; u < nd; ++u)
        seed.push_back(hft.trees[u].marked.empty() ? 0 : hft.trees[u].marked[0]);
    if (!tuple_consistent(hft, seed))
        throw PipelineError("consistent set: the marked seed tuple is not 0-consistent");

    std::queue<std::vector<int>> bfs;
    out.index_[seed] = 0;
    out.tuples.push_back(seed);
    bfs.push(seed);
    while (!bfs.empty()) {
        auto x = bfs.front();
        bfs.pop();
        for (int u = 0; u < nd; ++u) {
            for (int w : hft.trees[u].adj[x[u]]) {
                auto y = x;
                y[u] = w;
                if (out.index_.count(y) || !tuple_consistent(hft, y)) continue;
                if (out.tuples.size() >= guard)
                    throw CapacityError("consistent set: enumeration guard exceeded");
                out.index_[y] = static_cast<int>(out.tuples.size());
                out.tuples.push_back(y);
                bfs.push(y);
            }
        }
    }

    long long product = 1;
    for (int u = 0; u < nd; ++u) {
        product *= hft.trees[u].n;
        if (product > 60000) break;
    }
    if (product <= 60000 && nd > 0) {
        long long count = 0;
        std::vector<int> x(nd, 0);
        std::function<void(int)> rec = [&](int pos) {
            if (pos == nd) {
                if (tuple_consistent(hft, x)) {
                    ++count;
                    if (!out.index_.count(x)) out.matches_brute_force = false;
                }
                return;
            }
            for (int v = 0; v < hft.trees[pos].n; ++v) {
                x[pos] = v;
                rec(pos + 1);
            }
        };
        rec(0);
        if (count != static_cast<long long>(out.tuples.size())) out.matches_brute_force = false;
    }

    // Cube complex over the separating tree edges.
    std::vector<std::vector<std::pair<int, int>>> edges_per(nd);
    for (int u = 0; u < nd; ++u)
        for (int a = 0; a < hft.trees[u].n; ++a)
            for (int b : hft.trees[u].adj[a])
                if (a < b) edges_per[u].push_back({a, b});
    std::vector<std::vector<std::vector<bool>>> side(nd);
    for (int u = 0; u < nd; ++u) {
        side[u].resize(edges_per[u].size());
        for (std::size_t e = 0; e < edges_per[u].size(); ++e) {
            auto [a, b] = edges_per[u][e];
            std::vector<bool>& s = side[u][e];
            s.assign(hft.trees[u].n, false);
            std::vector<bool> seen(hft.trees[u].n, false);
            seen[a] = seen[b] = true;
            s[b] = true;
            std::queue<int> q2;
            q2.push(b);
            while (!q2.empty()) {
                int x2 = q2.front();
                q2.pop();
                for (int w : hft.trees[u].adj[x2])
                    if (!seen[w]) {
                        seen[w] = true;
                        s[w] = true;
                        q2.push(w);
                    }
            }
        }
    }
    std::vector<int> factors;
    std::vector<std::pair<int, std::size_t>> wall_src;
    for (int u = 0; u < nd; ++u)
        for (std::size_t e = 0; e < edges_per[u].size(); ++e) {
            bool pos = false, neg = false;
            for (const auto& t2 : out.tuples) (side[u][e][t2[u]] ? pos : neg) = true;
            if (pos && neg) {
                out.wall_edges.push_back({u, edges_per[u][e]});
                wall_src.push_back({u, e});
                factors.push_back(u);
            }
        }
    const int m = static_cast<int>(out.wall_edges.size());
    const int blocks = std::max(1, (m + 63) / 64);
    std::vector<CubeComplex::Bits> orient;
    for (const auto& t2 : out.tuples) {
        CubeComplex::Bits b(blocks, 0);
        for (int w = 0; w < m; ++w) {
            auto [u, e] = wall_src[w];
            if (side[u][e][t2[u]]) b[w >> 6] |= 1ULL << (w & 63);
        }
        orient.push_back(std::move(b));
    }
    out.complex = CubeComplex::from_orientations(m, std::move(orient));
    if (m > 0) out.complex.set_factors(factors);

    int nv = static_cast<int>(out.tuples.size());
    auto check_median = [&](int a, int b, int c) { return out.complex.median(a, b, c) >= 0; };
    if (nv <= 40) {
        for (int a = 0; a < nv && out.median_closed; ++a)
            for (int b = a; b < nv && out.median_closed; ++b)
                for (int c = b; c < nv; ++c)
                    if (!check_median(a, b, c)) {
                        out.median_closed = false;
                        break;
                    }
    } else {
        std::uint64_t st = 0x9e3779b97f4a7c15ULL;
        auto rnd = [&]() {
            st ^= st << 13;
            st ^= st >> 7;
            st ^= st << 17;
            return st;
        };
        for (int it = 0; it < 2000 && out.median_closed; ++it) {
            int a = static_cast<int>(rnd() % nv), b = static_cast<int>(rnd() % nv),
                c = static_cast<int>(rnd() % nv);
            if (!check_median(a, b, c)) out.median_closed = false;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Psi and Omega
// ---------------------------------------------------------------------------

std::vector<int> psi_tuple(const HFT& hft, int x) {
    const HHSInstance& inst = *hft.inst;
    std::vector<int> out;
    for (std::size_t u = 0; u < hft.domains.size(); ++u) {
        int U = hft.domains[u];
        int px = inst.pi[U][x];
        const StableTree& t = *hft.stable[u];
        const MetricGraph& cu = inst.domains[U].space;
        Dist best = std::numeric_limits<Dist>::max();
        int best_node = -1;
        for (int ndi = 0; ndi < t.n_nodes; ++ndi) {
            if (!t.real[ndi].is_vertex()) continue;
            Dist dd = cu.d(px, t.real[ndi].host_vertex);
            if (dd < best || (dd == best && best_node >= 0 &&
                              t.real[ndi].host_vertex < t.real[best_node].host_vertex)) {
                best = dd;
                best_node = ndi;
            }
        }
        out.push_back(hft.q[u][best_node]);
    }
    return out;
}

PsiOmega psi_omega(const HHSInstance& inst, const std::vector<int>& F, const HFT& hft,
                   const ConsistentSet& q, bool with_omega) {
    PsiOmega out;
    out.hull = inst.ambient->hull(F);
    for (int x : out.hull) {
        auto tup = psi_tuple(hft, x);
        int id = q.index_of(tup);
        if (id < 0)
            throw PipelineError("psi: the image of hull point " + std::to_string(x) +
                                " escapes the 0-consistent set");
        out.psi.push_back(id);
    }
    if (!with_omega) return out;

    const int nd = static_cast<int>(hft.domains.size());
    out.omega.assign(q.tuples.size(), -1);
    for (std::size_t t = 0; t < q.tuples.size(); ++t) {
        Dist best = std::numeric_limits<Dist>::max();
        int who = -1;
        for (int z : out.hull) {
            Dist dev = 0;
            for (int u = 0; u < nd; ++u) {
                int U = hft.domains[u];
                dev = std::max(dev,
                               inst.d_in(U, inst.pi[U][z], hft.rep_vertex[u][q.tuples[t][u]]));
            }
            if (dev < best) {
                best = dev;
                who = z;
            }
        }
        out.omega[t] = who;
    }
    for (std::size_t i = 0; i < out.hull.size(); ++i)
        out.max_round_trip =
            std::max(out.max_round_trip, inst.ambient->d(out.omega[out.psi[i]], out.hull[i]));
    return out;
}

// ---------------------------------------------------------------------------
// Two-point models
// ---------------------------------------------------------------------------

TwoPointModel two_point_model(const HHSInstance& inst, int a, int b, const ModelParams& prm) {
    TwoPointModel out;
    out.hft = build_hft(inst, {a, b}, prm);
    const int nd = static_cast<int>(out.hft.domains.size());
    out.tuple_a = psi_tuple(out.hft, a);
    out.tuple_b = psi_tuple(out.hft, b);

    bool orth_only = true;
    for (int u = 0; u < nd && orth_only; ++u)
        for (int v = u + 1; v < nd; ++v)
            if (out.hft.rel(u, v) != Rel::Orth) orth_only = false;

    std::vector<Dist> per_domain(nd, 0);
    for (int u = 0; u < nd; ++u)
        per_domain[u] = out.hft.trees[u].dist(out.tuple_a[u], out.tuple_b[u]);
    for (Dist d : per_domain) out.d1 += d;
    for (Dist d : per_domain) out.dinf = std::max(out.dinf, static_cast<double>(d));
    if (orth_only) {
        double sum = 0;
        for (Dist d : per_domain) sum += static_cast<double>(d) * static_cast<double>(d);
        out.d2 = std::sqrt(sum);
    } else {
        ConsistentSet q = consistent_set(out.hft, prm.q_guard);
        int ia = q.index_of(out.tuple_a), ib = q.index_of(out.tuple_b);
        if (ia < 0 || ib < 0) throw PipelineError("two_point_model: psi escapes Q");
        auto r = q.complex.l2(ia, ib);
        out.d2 = r.value;
        out.d2_error = r.error_bound;
    }
    return out;
}

// ---------------------------------------------------------------------------
// The stabler pipeline
// ---------------------------------------------------------------------------

namespace {

struct TreeZero {
    CollapsedTree tree;
    std::vector<int> delta;
};

TreeZero collapse_vertices(const CollapsedTree& t, const std::vector<std::vector<int>>& comps) {
    TreeZero out;
    out.delta.assign(t.n, -1);
    for (std::size_t i = 0; i < comps.size(); ++i) {
        int v = out.tree.n++;
        out.tree.from_comp.push_back(static_cast<int>(i));
        for (int nd : comps[i]) out.delta[nd] = v;
    }
    for (int nd = 0; nd < t.n; ++nd)
        if (out.delta[nd] < 0) {
            out.delta[nd] = out.tree.n++;
            out.tree.from_comp.push_back(-1);
        }
    std::set<std::pair<int, int>> edges;
    for (int u = 0; u < t.n; ++u)
        for (int w : t.adj[u]) {
            int x = out.delta[u], y = out.delta[w];
            if (x != y) edges.insert({std::min(x, y), std::max(x, y)});
        }
    out.tree.adj.assign(out.tree.n, {});
    for (auto [x, y] : edges) {
        out.tree.adj[x].push_back(y);
        out.tree.adj[y].push_back(x);
    }
    for (int m : t.marked) out.tree.marked.push_back(out.delta[m]);
    out.tree.cluster_labels.assign(out.tree.n, {});
    for (int v = 0; v < t.n; ++v)
        for (int l : t.cluster_labels[v]) out.tree.cluster_labels[out.delta[v]].push_back(l);
    for (auto& ls : out.tree.cluster_labels) {
        std::sort(ls.begin(), ls.end());
        ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
    }
    return out;
}

struct DomainCollapse {
    TreeZero zero;
    TreeZero zerop;
    std::vector<int> phi;
    int unstable_components = 0;
    Dist unstable_diameter = 0;
};

DomainCollapse stabilize_domain(const HFT& hft, const HFT& hftp, int lu, int lup,
                                const StableDecomposition& dec, const std::vector<int>& f_to_fp) {
    const CollapsedTree& that = hft.trees[lu];
    const CollapsedTree& thatp = hftp.trees[lup];
    const std::vector<int>& qa = hft.q[lu];
    const std::vector<int>& qb = hftp.q[lup];

    struct Run {
        std::vector<int> a, b;
    };
    std::vector<Run> runs;
    std::set<std::pair<int, int>> run_edges_a, run_edges_b;
    for (std::size_t i = 0; i < dec.s_nodes.size(); ++i) {
        Run cur;
        auto flush = [&]() {
            if (cur.a.size() >= 2) runs.push_back(cur);
            cur.a.clear();
            cur.b.clear();
        };
        for (std::size_t j = 0; j < dec.s_nodes[i].size(); ++j) {
            int va = qa[dec.s_nodes[i][j]];
            int vb = qb[dec.sp_nodes[i][j]];
            // Thickened cluster vertices pass through runs when both sides
            // collapse in sync; a one-sided collapse ends the arc (trimmed,
            // leaving the difference to the unstable part).
            bool ca = that.from_comp[va] >= 0, cb = thatp.from_comp[vb] >= 0;
            if (ca != cb) {
                flush();
                continue;
            }
            if (!cur.a.empty() && cur.a.back() == va && cur.b.back() == vb) continue;
            if (!cur.a.empty()) {
                bool adj_a = std::find(that.adj[cur.a.back()].begin(),
                                       that.adj[cur.a.back()].end(),
                                       va) != that.adj[cur.a.back()].end();
                bool adj_b = std::find(thatp.adj[cur.b.back()].begin(),
                                       thatp.adj[cur.b.back()].end(),
                                       vb) != thatp.adj[cur.b.back()].end();
                if (!adj_a || !adj_b) flush();
            }
            cur.a.push_back(va);
            cur.b.push_back(vb);
            // Break runs at branch vertices so that beta can track adjacency.
            bool junction = that.adj[va].size() != 2 || thatp.adj[vb].size() != 2;
            if (junction && cur.a.size() >= 2) {
                runs.push_back(cur);
                cur.a = {va};
                cur.b = {vb};
            }
        }
        flush();
    }
    for (const auto& r : runs) {
        for (std::size_t j = 0; j + 1 < r.a.size(); ++j)
            run_edges_a.insert({std::min(r.a[j], r.a[j + 1]), std::max(r.a[j], r.a[j + 1])});
        for (std::size_t j = 0; j + 1 < r.b.size(); ++j)
            run_edges_b.insert({std::min(r.b[j], r.b[j + 1]), std::max(r.b[j], r.b[j + 1])});
    }

    auto comps_of = [&](const CollapsedTree& t, const std::set<std::pair<int, int>>& run_edges,
                        const std::vector<bool>& scope, const std::vector<bool>& interior) {
        std::vector<std::vector<int>> out;
        std::vector<bool> seen(t.n, false);
        for (int s = 0; s < t.n; ++s) {
            if (!scope[s] || interior[s] || seen[s]) continue;
            std::vector<int> comp;
            std::queue<int> q;
            q.push(s);
            seen[s] = true;
            while (!q.empty()) {
                int u = q.front();
                q.pop();
                comp.push_back(u);
                for (int w : t.adj[u]) {
                    if (!scope[w] || interior[w] || seen[w]) continue;
                    if (run_edges.count({std::min(u, w), std::max(u, w)})) continue;
                    seen[w] = true;
                    q.push(w);
                }
            }
            std::sort(comp.begin(), comp.end());
            out.push_back(std::move(comp));
        }
        return out;
    };
    std::vector<bool> interior_a(that.n, false), interior_b(thatp.n, false);
    for (const auto& r : runs) {
        for (std::size_t j = 1; j + 1 < r.a.size(); ++j) interior_a[r.a[j]] = true;
        for (std::size_t j = 1; j + 1 < r.b.size(); ++j) interior_b[r.b[j]] = true;
    }
    std::vector<bool> all_a(that.n, true);
    std::vector<bool> hull_b(thatp.n, false);
    {
        std::vector<int> fverts;
        for (int fi : f_to_fp) fverts.push_back(thatp.marked[fi]);
        for (int v : thatp.hull_of(fverts)) hull_b[v] = true;
    }
    auto comps_a = comps_of(that, run_edges_a, all_a, interior_a);
    auto comps_b = comps_of(thatp, run_edges_b, hull_b, interior_b);

    DomainCollapse out;
    out.zero = collapse_vertices(that, comps_a);
    out.zerop = collapse_vertices(thatp, comps_b);
    out.unstable_components = static_cast<int>(std::max(comps_a.size(), comps_b.size()));
    for (const auto& c : comps_a) {
        Dist diam = 0;
        for (int x : c)
            for (int y : c) diam = std::max(diam, that.dist(x, y));
        out.unstable_diameter = std::max(out.unstable_diameter, diam);
    }

    out.phi.assign(out.zero.tree.n, -1);
    std::vector<int> comp_of_a(that.n, -1), comp_of_b(thatp.n, -1);
    for (std::size_t i = 0; i < comps_a.size(); ++i)
        for (int v : comps_a[i]) comp_of_a[v] = static_cast<int>(i);
    for (std::size_t i = 0; i < comps_b.size(); ++i)
        for (int v : comps_b[i]) comp_of_b[v] = static_cast<int>(i);
    std::vector<int> beta(comps_a.size(), -1);
    std::vector<bool> taken(comps_b.size(), false);
    for (const auto& r : runs)
        for (int side = 0; side < 2; ++side) {
            int ea = side == 0 ? r.a.front() : r.a.back();
            int eb = side == 0 ? r.b.front() : r.b.back();
            if (comp_of_a[ea] >= 0 && comp_of_b[eb] >= 0 && beta[comp_of_a[ea]] < 0) {
                beta[comp_of_a[ea]] = comp_of_b[eb];
                taken[comp_of_b[eb]] = true;
            }
        }
    {
        std::vector<int> freea, freeb;
        for (std::size_t i = 0; i < beta.size(); ++i)
            if (beta[i] < 0) freea.push_back(static_cast<int>(i));
        for (std::size_t i = 0; i < taken.size(); ++i)
            if (!taken[i]) freeb.push_back(static_cast<int>(i));
        for (std::size_t i = 0; i < freea.size() && i < freeb.size(); ++i)
            beta[freea[i]] = freeb[i];
    }
    for (std::size_t i = 0; i < comps_a.size(); ++i)
        if (beta[i] >= 0)
            out.phi[out.zero.delta[comps_a[i].front()]] = out.zerop.delta[comps_b[beta[i]].front()];
    for (const auto& r : runs)
        for (std::size_t j = 0; j < r.a.size(); ++j) {
            int src = out.zero.delta[r.a[j]];
            int dst = out.zerop.delta[r.b[j]];
            if (out.phi[src] >= 0 && out.phi[src] != dst)
                throw PipelineError("theta: inconsistent embedding on a stable run");
            out.phi[src] = dst;
        }
    for (int v = 0; v < out.zero.tree.n; ++v)
        if (out.phi[v] < 0)
            throw PipelineError("theta: collapsed tree vertex left unmapped in a shared domain");
    return out;
}

HFT rebuild_hft_zero(const HFT& base, const std::vector<TreeZero>& zeros) {
    HFT out;
    out.inst = base.inst;
    out.domains = base.domains;
    out.F = base.F;
    out.stable = base.stable;
    out.thick = base.thick;
    const int nd = static_cast<int>(base.domains.size());
    for (int u = 0; u < nd; ++u) {
        out.trees.push_back(zeros[u].tree);
        std::vector<int> q0(base.stable[u]->n_nodes);
        for (int ndx = 0; ndx < base.stable[u]->n_nodes; ++ndx)
            q0[ndx] = zeros[u].delta[base.q[u][ndx]];
        out.q.push_back(std::move(q0));
        out.rep_vertex.push_back(representatives(*base.stable[u], out.q.back(), zeros[u].tree.n));
    }
    for (const auto& [key, vtx] : base.delta_point)
        out.delta_point[key] = zeros[key.second].delta[vtx];
    for (const auto& [key, table] : base.delta_down) {
        auto [lv, lu] = key;
        std::vector<int> rep(zeros[lv].tree.n, -1);
        for (int v = 0; v < base.trees[lv].n; ++v) {
            int z = zeros[lv].delta[v];
            if (rep[z] < 0) rep[z] = v;
        }
        std::vector<int> t0(zeros[lv].tree.n, 0);
        for (int z = 0; z < zeros[lv].tree.n; ++z) t0[z] = zeros[lu].delta[table[rep[z]]];
        out.delta_down[key] = std::move(t0);
    }
    validate_hft(out);
    if (!out.report.pass) {
        std::string bad;
        for (const auto& it : out.report.items)
            if (!it.pass) bad += (bad.empty() ? "" : ", ") + it.check;
        throw PipelineError("collapsed hft validation failed (" + bad + ")");
    }
    return out;
}

std::vector<int> map_tuples(const ConsistentSet& from, const ConsistentSet& to,
                            const std::vector<std::vector<int>>& vertex_maps,
                            const std::string& face) {
    std::vector<int> out(from.tuples.size(), -1);
    for (std::size_t i = 0; i < from.tuples.size(); ++i) {
        std::vector<int> img(from.tuples[i].size());
        for (std::size_t u = 0; u < img.size(); ++u) img[u] = vertex_maps[u][from.tuples[i][u]];
        int id = to.index_of(img);
        if (id < 0) throw PipelineError(face + ": mapped tuple escapes the target consistent set");
        out[i] = id;
    }
    return out;
}

}  // namespace

DiagramBundle stabler_pipeline(const HHSInstance& inst, const std::vector<int>& F,
                               const std::vector<int>& Fp, const ModelParams& prm) {
    for (int x : F)
        if (std::find(Fp.begin(), Fp.end(), x) == Fp.end())
            throw ArgumentError("stabler_pipeline: F must be contained in F'");

    DiagramBundle bundle;
    bundle.F = F;
    bundle.Fp = Fp;
    const double K = prm.K_value(inst);
    std::vector<int> U = rel_domains(inst, F, K);
    std::vector<int> Uprime = rel_domains(inst, Fp, K);
    bundle.diff = domain_diff(inst, F, Fp, K, prm.S_value());

    std::map<int, StableDecomposition> per_domain;
    std::vector<TreePtr> treesF, treesFp;
    StablerParams sprm;
    sprm.eps_prime = prm.eps_prime_value();
    sprm.E = prm.E_value();
    sprm.S = prm.S_value();
    sprm.N = prm.N;
    sprm.min_stable_len = prm.min_stable_len;
    for (int dom : U) {
        EpsilonSetup sF = domain_setup(inst, F, U, dom, prm.eps);
        EpsilonSetup sFp = domain_setup(inst, Fp, Uprime, dom, prm.eps);
        StablerResult r = stabler_decomposition(sF, sFp, sprm);
        treesF.push_back(r.decomp.T);
        per_domain.emplace(dom, std::move(r.decomp));
    }
    for (int dom : Uprime) {
        auto it = per_domain.find(dom);
        if (it != per_domain.end()) {
            treesFp.push_back(it->second.Tp);
        } else {
            EpsilonSetup sFp = domain_setup(inst, Fp, Uprime, dom, prm.eps);
            treesFp.push_back(std::make_shared<StableTree>(
                stable_tree(sFp, prm.eps_prime_value(), prm.E_value())));
        }
    }

    bundle.hft = build_hft_from_trees(inst, F, U, treesF, prm);
    bundle.hftp = build_hft_from_trees(inst, Fp, Uprime, treesFp, prm);
    bundle.Q = consistent_set(bundle.hft, prm.q_guard);
    bundle.Qp = consistent_set(bundle.hftp, prm.q_guard);

    std::vector<int> f_to_fp;
    for (int x : F)
        f_to_fp.push_back(static_cast<int>(std::find(Fp.begin(), Fp.end(), x) - Fp.begin()));

    std::vector<TreeZero> zerosF(U.size()), zerosFp(Uprime.size());
    std::vector<std::vector<int>> phi_per_domain(U.size());
    for (std::size_t u = 0; u < U.size(); ++u) {
        int lup = bundle.hftp.local(U[u]);
        DomainCollapse dc = stabilize_domain(bundle.hft, bundle.hftp, static_cast<int>(u), lup,
                                             per_domain.at(U[u]), f_to_fp);
        zerosF[u] = dc.zero;
        zerosFp[lup] = dc.zerop;
        phi_per_domain[u] = dc.phi;
        DiagramBundle::DomainAudit audit;
        audit.domain = U[u];
        audit.shared = true;
        audit.distinguished = std::binary_search(bundle.diff.distinguished.begin(),
                                                 bundle.diff.distinguished.end(), U[u]);
        audit.involved = std::find(bundle.diff.involved.begin(), bundle.diff.involved.end(),
                                   U[u]) != bundle.diff.involved.end();
        audit.unstable_components = dc.unstable_components;
        audit.unstable_diameter = dc.unstable_diameter;
        bundle.audits.push_back(audit);
    }
    for (std::size_t u = 0; u < Uprime.size(); ++u) {
        if (bundle.hft.local(Uprime[u]) >= 0) continue;
        const CollapsedTree& t = bundle.hftp.trees[u];
        std::vector<int> fverts;
        for (int fi : f_to_fp) fverts.push_back(t.marked[fi]);
        std::vector<std::vector<int>> comps{t.hull_of(fverts)};
        zerosFp[u] = collapse_vertices(t, comps);
        DiagramBundle::DomainAudit audit;
        audit.domain = Uprime[u];
        audit.shared = false;
        audit.unstable_components = 1;
        Dist diam = 0;
        for (int x : comps[0])
            for (int y : comps[0]) diam = std::max(diam, t.dist(x, y));
        audit.unstable_diameter = diam;
        bundle.audits.push_back(audit);
    }

    bundle.hft0 = rebuild_hft_zero(bundle.hft, zerosF);
    bundle.hftp0 = rebuild_hft_zero(bundle.hftp, zerosFp);
    bundle.Q0 = consistent_set(bundle.hft0, prm.q_guard);
    bundle.Qp0 = consistent_set(bundle.hftp0, prm.q_guard);

    std::vector<std::vector<int>> dmapF, dmapFp;
    for (std::size_t u = 0; u < U.size(); ++u) dmapF.push_back(zerosF[u].delta);
    for (std::size_t u = 0; u < Uprime.size(); ++u) dmapFp.push_back(zerosFp[u].delta);
    bundle.eta = map_tuples(bundle.Q, bundle.Q0, dmapF, "eta");
    bundle.etap = map_tuples(bundle.Qp, bundle.Qp0, dmapFp, "eta'");
    {
        std::set<int> image(bundle.eta.begin(), bundle.eta.end());
        if (image.size() != bundle.Q0.tuples.size())
            throw PipelineError("eta: collapse does not surject onto Q0");
        std::set<int> imagep(bundle.etap.begin(), bundle.etap.end());
        if (imagep.size() != bundle.Qp0.tuples.size())
            throw PipelineError("eta': collapse does not surject onto Q'0");
    }
    auto count_deletions = [](const ConsistentSet& q, const std::vector<std::vector<int>>& dmap,
                              std::vector<int>* per_wall_domain) {
        int cnt = 0;
        for (const auto& [u, edge] : q.wall_edges) {
            if (dmap[u][edge.first] == dmap[u][edge.second]) {
                ++cnt;
                if (per_wall_domain) per_wall_domain->push_back(u);
            }
        }
        return cnt;
    };
    std::vector<int> delF, delFp;
    bundle.eta_deletions = count_deletions(bundle.Q, dmapF, &delF);
    bundle.etap_deletions = count_deletions(bundle.Qp, dmapFp, &delFp);
    for (auto& audit : bundle.audits) {
        int lu = bundle.hft.local(audit.domain);
        int lup = bundle.hftp.local(audit.domain);
        if (lu >= 0)
            audit.deleted_walls = static_cast<int>(std::count(delF.begin(), delF.end(), lu));
        if (lup >= 0)
            audit.deleted_walls_p = static_cast<int>(std::count(delFp.begin(), delFp.end(), lup));
    }

    {
        const int ndp = static_cast<int>(Uprime.size());
        std::vector<int> const_coord(ndp, -1);
        for (int u = 0; u < ndp; ++u) {
            if (bundle.hft.local(Uprime[u]) >= 0) continue;
            int v0 = bundle.hftp0.trees[u].marked[f_to_fp[0]];
            for (int fi : f_to_fp)
                if (bundle.hftp0.trees[u].marked[fi] != v0)
                    throw PipelineError(
                        "theta: F-marked hull of a new domain is not a single vertex");
            const_coord[u] = v0;
        }
        bundle.theta.assign(bundle.Q0.tuples.size(), -1);
        for (std::size_t i = 0; i < bundle.Q0.tuples.size(); ++i) {
            std::vector<int> img(ndp, -1);
            for (int u = 0; u < ndp; ++u) {
                int lu = bundle.hft.local(Uprime[u]);
                img[u] = lu >= 0 ? phi_per_domain[lu][bundle.Q0.tuples[i][lu]] : const_coord[u];
            }
            int id = bundle.Qp0.index_of(img);
            if (id < 0) throw PipelineError("theta: image tuple escapes Q'0");
            bundle.theta[i] = id;
        }
        bundle.theta_cert = CubeComplex::convex_embedding_check(bundle.theta, bundle.Q0.complex,
                                                                bundle.Qp0.complex);
        std::set<int> img(bundle.theta.begin(), bundle.theta.end());
        bundle.theta_bijective =
            img.size() == bundle.Qp0.tuples.size() && bundle.theta.size() == bundle.Qp0.tuples.size();
    }

    bundle.xi.assign(bundle.Q0.tuples.size(), -1);
    for (int i = 0; i < static_cast<int>(bundle.Q.tuples.size()); ++i) {
        int z = bundle.eta[i];
        if (bundle.xi[z] < 0 || bundle.Q.tuples[i] < bundle.Q.tuples[bundle.xi[z]]) bundle.xi[z] = i;
    }
    bundle.xip.assign(bundle.Qp0.tuples.size(), -1);
    for (int i = 0; i < static_cast<int>(bundle.Qp.tuples.size()); ++i) {
        int z = bundle.etap[i];
        if (bundle.xip[z] < 0 || bundle.Qp.tuples[i] < bundle.Qp.tuples[bundle.xip[z]])
            bundle.xip[z] = i;
    }

    bundle.po = psi_omega(inst, F, bundle.hft, bundle.Q, true);
    bundle.pop = psi_omega(inst, Fp, bundle.hftp, bundle.Qp, true);

    bundle.left_square_exact = true;
    for (std::size_t fi = 0; fi < F.size(); ++fi) {
        int hf = -1, hfp = -1;
        for (std::size_t i = 0; i < bundle.po.hull.size(); ++i)
            if (bundle.po.hull[i] == F[fi]) hf = static_cast<int>(i);
        for (std::size_t i = 0; i < bundle.pop.hull.size(); ++i)
            if (bundle.pop.hull[i] == F[fi]) hfp = static_cast<int>(i);
        if (hf < 0 || hfp < 0) {
            bundle.left_square_exact = false;
            break;
        }
        if (bundle.theta[bundle.eta[bundle.po.psi[hf]]] != bundle.etap[bundle.pop.psi[hfp]])
            bundle.left_square_exact = false;
    }

    const MetricGraph& amb = *inst.ambient;
    auto omega0 = [&](int q0) { return bundle.po.omega[bundle.xi[q0]]; };
    auto omega0p = [&](int q0) { return bundle.pop.omega[bundle.xip[q0]]; };
    for (std::size_t i = 0; i < bundle.Q.tuples.size(); ++i)
        bundle.face_top =
            std::max(bundle.face_top, static_cast<double>(amb.d(
                                          bundle.po.omega[i], omega0(bundle.eta[i]))));
    for (std::size_t i = 0; i < bundle.Qp.tuples.size(); ++i)
        bundle.face_bottom =
            std::max(bundle.face_bottom, static_cast<double>(amb.d(
                                             bundle.pop.omega[i], omega0p(bundle.etap[i]))));
    for (std::size_t i = 0; i < bundle.Q0.tuples.size(); ++i)
        bundle.face_middle = std::max(
            bundle.face_middle,
            static_cast<double>(amb.d(omega0(static_cast<int>(i)), omega0p(bundle.theta[i]))));
    return bundle;
}

}  // namespace hullcub
