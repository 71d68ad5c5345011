#include "hullcub/hhs.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hullcub {

Dist HHSInstance::diam_proj(int u, const std::vector<int>& F) const {
    Dist best = 0;
    for (std::size_t i = 0; i < F.size(); ++i)
        for (std::size_t j = i + 1; j < F.size(); ++j)
            best = std::max(best, d_in(u, pi[u][F[i]], pi[u][F[j]]));
    return best;
}

ValidationReport validate_instance(const HHSInstance& inst) {
    using Rel = HHSInstance::Rel;
    ValidationReport rep;
    auto item = [&](const std::string& name) -> ValidationReport::Item& {
        rep.items.push_back({name, true, ""});
        return rep.items.back();
    };
    auto fail = [&](ValidationReport::Item& it, const std::string& w) {
        it.pass = false;
        if (it.witness.empty()) it.witness = w;
        rep.pass = false;
    };
    const int nd = inst.ndomains();

    // --- table shapes (format errors first) ---
    if (static_cast<int>(inst.rel.size()) != nd || static_cast<int>(inst.pi.size()) != nd)
        throw FormatError("instance tables do not match the domain count");
    for (int u = 0; u < nd; ++u) {
        if (static_cast<int>(inst.rel[u].size()) != nd)
            throw FormatError("relation matrix is not square");
        if (static_cast<int>(inst.pi[u].size()) != inst.ambient->n())
            throw FormatError("projection table of domain " + inst.domains[u].name +
                              " does not cover the ambient set");
        for (int x : inst.pi[u])
            if (x < 0 || x >= inst.domains[u].space.n())
                throw FormatError("projection image out of range");
    }

    // --- relation axioms ---
    auto& relations = item("relations: one per pair, coherent, partial order");
    for (int u = 0; u < nd; ++u) {
        if (inst.rel[u][u] != Rel::Eq) fail(relations, "diagonal must be Eq");
        for (int v = 0; v < nd; ++v) {
            if (u == v) continue;
            Rel a = inst.rel[u][v], b = inst.rel[v][u];
            bool coherent = (a == Rel::In && b == Rel::Contains) ||
                            (a == Rel::Contains && b == Rel::In) ||
                            (a == Rel::Orth && b == Rel::Orth) ||
                            (a == Rel::Trans && b == Rel::Trans);
            if (a == Rel::Eq || b == Rel::Eq)
                fail(relations, "off-diagonal Eq between " + inst.domains[u].name + "," +
                                    inst.domains[v].name);
            else if (!coherent)
                fail(relations, "incoherent relation pair at " + inst.domains[u].name + "," +
                                    inst.domains[v].name);
        }
    }
    // In is a strict partial order.
    for (int u = 0; u < nd; ++u)
        for (int v = 0; v < nd; ++v)
            for (int w = 0; w < nd; ++w)
                if (u != v && v != w && u != w && inst.rel[u][v] == Rel::In &&
                    inst.rel[v][w] == Rel::In && inst.rel[u][w] != Rel::In)
                    fail(relations, "nesting is not transitive");
    auto& maximal = item("relations: unique maximal domain");
    {
        std::vector<int> maxes;
        for (int u = 0; u < nd; ++u) {
            bool is_max = true;
            for (int v = 0; v < nd; ++v)
                if (inst.rel[u][v] == Rel::In) is_max = false;
            if (is_max) maxes.push_back(u);
        }
        if (maxes.size() != 1)
            fail(maximal, std::to_string(maxes.size()) + " maximal domains");
    }

    // --- colorability ---
    auto& colors = item("colors: classes pairwise transverse");
    for (int u = 0; u < nd; ++u)
        for (int v = u + 1; v < nd; ++v)
            if (inst.domains[u].color == inst.domains[v].color && inst.rel[u][v] != Rel::Trans)
                fail(colors, inst.domains[u].name + "," + inst.domains[v].name +
                                 " share a color but are not transverse");
    auto& sym = item("colors: symmetries permute the classes");
    for (const auto& s : inst.symmetries) {
        if (static_cast<int>(s.domain_perm.size()) != nd) {
            fail(sym, "symmetry domain permutation has the wrong size");
            continue;
        }
        std::map<int, std::set<int>> image;  // color -> colors hit
        for (int u = 0; u < nd; ++u)
            image[inst.domains[u].color].insert(inst.domains[s.domain_perm[u]].color);
        for (const auto& [c, hits] : image)
            if (hits.size() != 1)
                fail(sym, "symmetry splits color class " + std::to_string(c));
    }

    // --- strict projection laws (within color classes) ---
    const double theta = inst.theta_value();
    auto rho = [&](int v, int u) {
        auto it = inst.rho_point.find({v, u});
        return it == inst.rho_point.end() ? -1 : it->second;
    };
    auto& law4 = item("strict law: rho coincidence (distinct triple)");
    for (int x = 0; x < nd; ++x)
        for (int y = 0; y < nd; ++y)
            for (int z = 0; z < nd; ++z) {
                if (x == y || y == z || x == z) continue;
                if (inst.domains[x].color != inst.domains[y].color ||
                    inst.domains[y].color != inst.domains[z].color)
                    continue;
                int rxy = rho(x, y), rzy = rho(z, y);
                int rxz = rho(x, z), ryz = rho(y, z);
                if (rxy < 0 || rzy < 0 || rxz < 0 || ryz < 0) continue;
                if (static_cast<double>(inst.d_in(y, rxy, rzy)) > theta && rxz != ryz)
                    fail(law4, "triple " + inst.domains[x].name + "," + inst.domains[y].name + "," +
                                   inst.domains[z].name);
            }
    auto& law5 = item("strict law: point projection (Behrstock)");
    for (int y = 0; y < nd; ++y)
        for (int z = 0; z < nd; ++z) {
            if (y == z || inst.domains[y].color != inst.domains[z].color) continue;
            int rzy = rho(z, y), ryz = rho(y, z);
            if (rzy < 0 || ryz < 0) continue;
            for (int p = 0; p < inst.ambient->n(); ++p)
                if (static_cast<double>(inst.d_in(y, inst.pi[y][p], rzy)) > theta &&
                    inst.pi[z][p] != ryz) {
                    fail(law5, "point " + std::to_string(p) + " at domains " +
                                   inst.domains[y].name + "," + inst.domains[z].name);
                    break;
                }
        }

    // --- bounded geodesic image of the downward tables ---
    auto& bgi = item("bounded geodesic image of downward rho tables");
    for (const auto& [key, table] : inst.rho_down) {
        auto [v, u] = key;  // u nested in v, table: C(v) -> C(u)
        if (static_cast<int>(table.size()) != inst.domains[v].space.n()) {
            fail(bgi, "downward table has the wrong domain");
            continue;
        }
        int anchor = rho(u, v);
        if (anchor < 0) {
            fail(bgi, "missing rho point for nested pair");
            continue;
        }
        const MetricGraph& cv = inst.domains[v].space;
        for (int a = 0; a < cv.n() && bgi.pass; ++a)
            for (int b = a + 1; b < cv.n(); ++b) {
                bool avoids = true;
                for (int g : cv.geodesic(a, b))
                    if (static_cast<double>(cv.d(g, anchor)) <= inst.E_S) avoids = false;
                if (avoids &&
                    static_cast<double>(inst.d_in(u, table[a], table[b])) > inst.E_S) {
                    fail(bgi, "geodesic far from rho moves under " + inst.domains[v].name + "->" +
                                  inst.domains[u].name);
                    break;
                }
            }
    }

    // --- pi Lipschitz quality ---
    auto& lip = item("pi maps are Lipschitz up to the declared constants");
    for (const auto& e : inst.ambient->edges())
        for (int u = 0; u < nd; ++u)
            if (static_cast<double>(inst.d_in(u, inst.pi[u][e.u], inst.pi[u][e.v])) >
                inst.lip_a * static_cast<double>(e.w) + inst.lip_b) {
                fail(lip, "edge " + std::to_string(e.u) + "-" + std::to_string(e.v) +
                              " stretched in " + inst.domains[u].name);
                break;
            }
    return rep;
}

std::vector<int> rel_domains(const HHSInstance& inst, const std::vector<int>& F, double K) {
    if (K <= 0) throw ArgumentError("rel_domains: K must be positive");
    std::vector<int> out;
    for (int u = 0; u < inst.ndomains(); ++u)
        if (static_cast<double>(inst.diam_proj(u, F)) >= K) out.push_back(u);
    return out;
}

DomainDiff domain_diff(const HHSInstance& inst, const std::vector<int>& F,
                       const std::vector<int>& Fp, double K, double D) {
    for (int x : F)
        if (std::find(Fp.begin(), Fp.end(), x) == Fp.end())
            throw ArgumentError("domain_diff: F must be contained in F'");
    DomainDiff out;
    std::vector<int> U = rel_domains(inst, F, K);
    std::vector<int> Up = rel_domains(inst, Fp, K);
    std::set<int> in_U(U.begin(), U.end());
    std::vector<int> added;
    for (int x : Fp)
        if (std::find(F.begin(), F.end(), x) == F.end()) added.push_back(x);

    for (int u : Up) {
        if (in_U.count(u)) {
            for (int xp : added) {
                bool all_diff = true;
                for (int x : F)
                    if (inst.pi[u][xp] == inst.pi[u][x]) all_diff = false;
                if (all_diff) {
                    out.distinguished.push_back(u);
                    out.witnesses.push_back("domain " + inst.domains[u].name +
                                            " distinguished by added point " + std::to_string(xp));
                    break;
                }
            }
        } else {
            bool diff = false;
            for (std::size_t i = 0; i < F.size() && !diff; ++i)
                for (std::size_t j = i + 1; j < F.size(); ++j)
                    if (inst.pi[u][F[i]] != inst.pi[u][F[j]]) diff = true;
            if (diff) {
                out.distinguished.push_back(u);
                out.witnesses.push_back("fresh domain " + inst.domains[u].name +
                                        " separates two points of F");
            }
        }
    }

    for (int u : U) {
        std::set<int> nested, nestedp;
        for (int v : U)
            if (inst.nested_in(v, u)) nested.insert(v);
        for (int v : Up)
            if (inst.nested_in(v, u)) nestedp.insert(v);
        if (nested != nestedp) out.involved.push_back(u);
    }

    std::set<int> in_Up(Up.begin(), Up.end());
    for (int v : Up) {
        if (in_U.count(v)) continue;
        for (int u : U) {
            if (!inst.nested_in(v, u)) continue;
            auto it = inst.rho_point.find({v, u});
            if (it == inst.rho_point.end()) continue;
            const MetricGraph& cu = inst.domains[u].space;
            bool in_union = false;
            for (int xp : added) {
                bool in_all = true;
                for (int x : F) {
                    std::vector<int> hull = cu.interval(inst.pi[u][x], inst.pi[u][xp]);
                    if (static_cast<double>(cu.d_to_set(it->second, hull)) > D) in_all = false;
                }
                if (in_all) in_union = true;
            }
            if (!in_union) {
                out.sporadic.push_back(v);
                if (static_cast<double>(inst.diam_proj(v, F)) < K - 2 * inst.E_S) {
                    out.sporadic_in_rel = false;
                    out.witnesses.push_back("sporadic domain " + inst.domains[v].name +
                                            " escapes Rel_{K-2E}(F)");
                }
                break;
            }
        }
    }
    std::sort(out.distinguished.begin(), out.distinguished.end());
    out.distinguished.erase(std::unique(out.distinguished.begin(), out.distinguished.end()),
                            out.distinguished.end());
    return out;
}

std::optional<PassingUpWitness> passing_up_probe(const HHSInstance& inst, const std::vector<int>& F,
                                                 const std::vector<int>& members, double K1,
                                                 double K2, double sigma, int n) {
    if (sigma < 10 * inst.E_S)
        throw ArgumentError("passing_up_probe: sigma must be at least 10 E_S");
    if (F.size() < 2 || members.empty()) return std::nullopt;
    for (int v : members)
        if (static_cast<double>(inst.diam_proj(v, F)) < K1)
            throw ArgumentError("passing_up_probe: member outside Rel_{K1}(F)");

    for (int w = 0; w < inst.ndomains(); ++w) {
        if (static_cast<double>(inst.diam_proj(w, F)) < K2) continue;
        std::vector<int> nested;
        for (int v : members)
            if (inst.nested_in(v, w)) nested.push_back(v);
        if (nested.empty()) continue;

        const MetricGraph& cw = inst.domains[w].space;
        std::vector<int> rhos;
        for (int v : nested) {
            auto it = inst.rho_point.find({v, w});
            if (it != inst.rho_point.end()) rhos.push_back(it->second);
        }
        if (rhos.size() < 2) continue;
        Dist diam = 0;
        for (std::size_t i = 0; i < rhos.size(); ++i)
            for (std::size_t j = i + 1; j < rhos.size(); ++j)
                diam = std::max(diam, cw.d(rhos[i], rhos[j]));
        if (static_cast<double>(diam) <= K2) continue;

        // Geodesic between the lexicographically least diameter pair of
        // pi_W(F), sigma-subdivided; count occupied cells.
        std::vector<int> proj;
        for (int x : F) proj.push_back(inst.pi[w][x]);
        auto [dd, pair] = cw.diameter_pair(proj);
        (void)dd;
        std::vector<int> gamma = cw.geodesic(pair.first, pair.second);
        std::vector<Dist> arc(gamma.size(), 0);
        for (std::size_t i = 1; i < gamma.size(); ++i)
            arc[i] = arc[i - 1] + cw.d(gamma[i - 1], gamma[i]);
        std::set<long long> occupied;
        for (int r : rhos) {
            // closest point on gamma (least index tie-break)
            std::size_t best = 0;
            for (std::size_t i = 1; i < gamma.size(); ++i)
                if (cw.d(r, gamma[i]) < cw.d(r, gamma[best])) best = i;
            occupied.insert(static_cast<long long>(static_cast<double>(arc[best]) / sigma));
        }
        if (static_cast<int>(occupied.size()) >= n) {
            PassingUpWitness wit;
            wit.W = w;
            wit.members = nested;
            wit.occupied_cells = static_cast<int>(occupied.size());
            return wit;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

HHSInstance gen_single(const MetricGraph& g, double E_S) {
    HHSInstance inst;
    inst.ambient = std::make_shared<MetricGraph>(g);
    inst.domains.push_back({"S", g, 0});
    inst.rel = {{HHSInstance::Rel::Eq}};
    std::vector<int> idmap(g.n());
    for (int v = 0; v < g.n(); ++v) idmap[v] = v;
    inst.pi = {idmap};
    inst.E_S = E_S;
    return inst;
}

HHSInstance gen_product(const MetricGraph& t1, const MetricGraph& t2, double E_S,
                        const std::vector<int>& swap_iso) {
    using Rel = HHSInstance::Rel;
    HHSInstance inst;
    const int n1 = t1.n(), n2 = t2.n();
    std::vector<MetricGraph::Edge> es;
    auto id = [&](int x1, int x2) { return x2 * n1 + x1; };
    for (int x2 = 0; x2 < n2; ++x2)
        for (const auto& e : t1.edges()) es.push_back({id(e.u, x2), id(e.v, x2), e.w});
    for (int x1 = 0; x1 < n1; ++x1)
        for (const auto& e : t2.edges()) es.push_back({id(x1, e.u), id(x1, e.v), e.w});
    inst.ambient = std::make_shared<MetricGraph>(MetricGraph::build(n1 * n2, es));

    inst.domains.push_back({"S", MetricGraph::build(1, {}), 0});
    inst.domains.push_back({"U1", t1, 1});
    inst.domains.push_back({"U2", t2, 2});
    inst.rel = {{Rel::Eq, Rel::Contains, Rel::Contains},
                {Rel::In, Rel::Eq, Rel::Orth},
                {Rel::In, Rel::Orth, Rel::Eq}};
    inst.pi.assign(3, std::vector<int>(n1 * n2, 0));
    for (int x1 = 0; x1 < n1; ++x1)
        for (int x2 = 0; x2 < n2; ++x2) {
            inst.pi[1][id(x1, x2)] = x1;
            inst.pi[2][id(x1, x2)] = x2;
        }
    inst.rho_point[{1, 0}] = 0;  // U1 inside C(S)
    inst.rho_point[{2, 0}] = 0;
    inst.rho_down[{0, 1}] = std::vector<int>(1, 0);  // C(S) -> C(U1)
    inst.rho_down[{0, 2}] = std::vector<int>(1, 0);
    inst.E_S = E_S;
    inst.product = HHSInstance::ProductForm{{1, 2}, {1, n1}};

    if (!swap_iso.empty()) {
        if (n1 != n2 || static_cast<int>(swap_iso.size()) != n1)
            throw ArgumentError("gen_product: swap symmetry needs isomorphic factors");
        HHSInstance::Symmetry s;
        s.ambient_perm.assign(n1 * n2, 0);
        for (int x1 = 0; x1 < n1; ++x1)
            for (int x2 = 0; x2 < n2; ++x2)
                s.ambient_perm[id(x1, x2)] = id(swap_iso[x2], swap_iso[x1]);
        s.domain_perm = {0, 2, 1};
        s.space_perms.resize(3);
        s.space_perms[0] = {0};
        s.space_perms[1] = swap_iso;
        s.space_perms[2] = swap_iso;
        inst.symmetries.push_back(std::move(s));
    }
    return inst;
}

int product_vertex(const HHSInstance& inst, int x1, int x2) {
    if (!inst.product) throw ArgumentError("product_vertex: instance is not a product");
    return x2 * inst.product->strides[1] + x1;
}

HHSInstance gen_tree_of_flats(const MetricGraph& parent,
                              const std::vector<std::pair<int, int>>& flats, double E_S) {
    using Rel = HHSInstance::Rel;
    const int np = parent.n();
    const int nf = static_cast<int>(flats.size());
    std::vector<MetricGraph::Edge> es;
    for (const auto& e : parent.edges()) es.push_back(e);
    int next = np;
    std::vector<std::vector<int>> flat_vertices(nf);  // ambient ids along each flat
    for (int i = 0; i < nf; ++i) {
        auto [attach, len] = flats[i];
        if (attach < 0 || attach >= np) throw ArgumentError("gen_tree_of_flats: bad attachment");
        if (len < 1) throw ArgumentError("gen_tree_of_flats: flat length must be positive");
        int prev = attach;
        flat_vertices[i].push_back(attach);
        for (int d = 1; d <= len; ++d) {
            es.push_back({prev, next, 1});
            flat_vertices[i].push_back(next);
            prev = next++;
        }
    }
    HHSInstance inst;
    inst.ambient = std::make_shared<MetricGraph>(MetricGraph::build(next, es));

    inst.domains.push_back({"P", parent, 0});
    for (int i = 0; i < nf; ++i) {
        auto [attach, len] = flats[i];
        std::vector<MetricGraph::Edge> path;
        for (int d = 0; d < len; ++d) path.push_back({d, d + 1, 1});
        inst.domains.push_back({"V" + std::to_string(attach), MetricGraph::build(len + 1, path), 1});
    }
    const int nd = nf + 1;
    inst.rel.assign(nd, std::vector<Rel>(nd, Rel::Trans));
    for (int u = 0; u < nd; ++u) inst.rel[u][u] = Rel::Eq;
    for (int i = 1; i < nd; ++i) {
        inst.rel[i][0] = Rel::In;
        inst.rel[0][i] = Rel::Contains;
    }

    inst.pi.assign(nd, std::vector<int>(next, 0));
    // Parent projection: collapse each flat to its attachment.
    for (int v = 0; v < np; ++v) inst.pi[0][v] = v;
    for (int i = 0; i < nf; ++i)
        for (std::size_t d = 1; d < flat_vertices[i].size(); ++d)
            inst.pi[0][flat_vertices[i][d]] = flats[i].first;
    // Flat projections: depth along the flat, base elsewhere.
    for (int i = 0; i < nf; ++i)
        for (std::size_t d = 0; d < flat_vertices[i].size(); ++d)
            inst.pi[i + 1][flat_vertices[i][d]] = static_cast<int>(d);

    for (int i = 0; i < nf; ++i) {
        inst.rho_point[{i + 1, 0}] = flats[i].first;  // rho^{V_i}_P = marked vertex
        for (int j = 0; j < nf; ++j)
            if (i != j) inst.rho_point[{i + 1, j + 1}] = 0;  // base of the other flat
        inst.rho_down[{0, i + 1}] = std::vector<int>(np, 0);  // constant off the marked vertex
    }
    inst.E_S = E_S;
    return inst;
}

}  // namespace hullcub
