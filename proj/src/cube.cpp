#include "hullcub/cube.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>

namespace hullcub {

namespace {
int popcount_xor(const CubeComplex::Bits& a, const CubeComplex::Bits& b) {
    int c = 0;
    for (std::size_t i = 0; i < a.size(); ++i) c += __builtin_popcountll(a[i] ^ b[i]);
    return c;
}
}  // namespace

std::string CubeComplex::key(const Bits& b) {
    return std::string(reinterpret_cast<const char*>(b.data()), b.size() * sizeof(std::uint64_t));
}

int CubeComplex::vertex_index(const Bits& b) const {
    auto it = index_.find(key(b));
    return it == index_.end() ? -1 : it->second;
}

void CubeComplex::build_index_and_adj() {
    index_.clear();
    for (int i = 0; i < nverts(); ++i) index_[key(verts_[i])] = i;
    adj_.assign(nverts(), {});
    for (int v = 0; v < nverts(); ++v) {
        Bits b = verts_[v];
        for (int w = 0; w < nwalls_; ++w) {
            b[w >> 6] ^= 1ULL << (w & 63);
            auto it = index_.find(key(b));
            if (it != index_.end()) adj_[v].push_back({it->second, w});
            b[w >> 6] ^= 1ULL << (w & 63);
        }
    }
}

CubeComplex CubeComplex::dual(const Wallspace& ws, std::size_t vertex_guard) {
    const int m = static_cast<int>(ws.walls.size());
    for (const auto& w : ws.walls) {
        bool pos = false, neg = false;
        for (bool s : w) (s ? pos : neg) = true;
        if (!pos || !neg) throw ArgumentError("dual: degenerate wall with an empty side");
    }
    CubeComplex cx;
    cx.nwalls_ = m;
    const int blocks = std::max(1, (m + 63) / 64);

    auto sides_meet = [&](int w1, bool s1, int w2, bool s2) {
        for (int p = 0; p < ws.npoints; ++p)
            if (ws.walls[w1][p] == s1 && ws.walls[w2][p] == s2) return true;
        return false;
    };
    std::vector<std::vector<std::array<bool, 4>>> inter(m, std::vector<std::array<bool, 4>>(m));
    for (int w1 = 0; w1 < m; ++w1)
        for (int w2 = 0; w2 < m; ++w2)
            for (int s1 = 0; s1 < 2; ++s1)
                for (int s2 = 0; s2 < 2; ++s2)
                    inter[w1][w2][s1 * 2 + s2] = sides_meet(w1, s1 != 0, w2, s2 != 0);

    auto consistent_flip = [&](const Bits& b, int w) {
        bool sw = !((b[w >> 6] >> (w & 63)) & 1);  // side after the flip
        for (int w2 = 0; w2 < m; ++w2) {
            if (w2 == w) continue;
            bool s2 = (b[w2 >> 6] >> (w2 & 63)) & 1;
            if (!inter[w][w2][(sw ? 1 : 0) * 2 + (s2 ? 1 : 0)]) return false;
        }
        return true;
    };

    // Seed: principal orientation of point 0.
    Bits seed(blocks, 0);
    for (int w = 0; w < m; ++w)
        if (ws.walls[w][0]) seed[w >> 6] |= 1ULL << (w & 63);

    std::map<std::string, int> seen;
    std::queue<Bits> bfs;
    seen[key(seed)] = 0;
    cx.verts_.push_back(seed);
    bfs.push(seed);
    while (!bfs.empty()) {
        Bits b = bfs.front();
        bfs.pop();
        for (int w = 0; w < m; ++w) {
            if (!consistent_flip(b, w)) continue;
            Bits nb = b;
            nb[w >> 6] ^= 1ULL << (w & 63);
            if (seen.count(key(nb))) continue;
            if (cx.verts_.size() >= vertex_guard)
                throw CapacityError("dual: vertex guard exceeded");
            seen[key(nb)] = static_cast<int>(cx.verts_.size());
            cx.verts_.push_back(nb);
            bfs.push(nb);
        }
    }
    cx.build_index_and_adj();
    return cx;
}

CubeComplex CubeComplex::from_orientations(int nwalls, std::vector<Bits> verts) {
    CubeComplex cx;
    cx.nwalls_ = nwalls;
    cx.verts_ = std::move(verts);
    cx.build_index_and_adj();
    return cx;
}

void CubeComplex::set_factors(std::vector<int> wall_factor) {
    if (static_cast<int>(wall_factor.size()) != nwalls_)
        throw ArgumentError("set_factors: one factor per wall required");
    wall_factor_ = std::move(wall_factor);
}

bool CubeComplex::is_full_product() const {
    if (wall_factor_.empty()) return false;
    int nf = *std::max_element(wall_factor_.begin(), wall_factor_.end()) + 1;
    long long size = 1;
    for (int f = 0; f < nf; ++f) {
        std::set<std::vector<bool>> proj;
        for (int v = 0; v < nverts(); ++v) {
            std::vector<bool> coords;
            for (int w = 0; w < nwalls_; ++w)
                if (wall_factor_[w] == f) coords.push_back(side(v, w));
            proj.insert(coords);
        }
        size *= static_cast<long long>(proj.size());
        if (size > nverts()) return false;
    }
    return size == nverts();
}

int CubeComplex::dimension() const {
    int best = nverts() > 0 ? 0 : -1;
    for (int v = 0; v < nverts(); ++v) {
        std::vector<int> flippable;
        for (auto [nb, w] : adj_[v]) {
            (void)nb;
            flippable.push_back(w);
        }
        auto crosses = [&](int w1, int w2) {
            Bits b = verts_[v];
            b[w1 >> 6] ^= 1ULL << (w1 & 63);
            b[w2 >> 6] ^= 1ULL << (w2 & 63);
            return vertex_index(b) >= 0;
        };
        std::vector<std::vector<bool>> x(flippable.size(),
                                         std::vector<bool>(flippable.size(), false));
        for (std::size_t i = 0; i < flippable.size(); ++i)
            for (std::size_t j = i + 1; j < flippable.size(); ++j)
                x[i][j] = x[j][i] = crosses(flippable[i], flippable[j]);
        std::vector<int> cur;
        std::function<void(std::vector<int>)> grow = [&](std::vector<int> cand) {
            best = std::max(best, static_cast<int>(cur.size()));
            for (std::size_t ii = 0; ii < cand.size(); ++ii) {
                if (static_cast<int>(cur.size() + cand.size() - ii) <= best) break;
                std::vector<int> next;
                for (std::size_t jj = ii + 1; jj < cand.size(); ++jj)
                    if (x[cand[ii]][cand[jj]]) next.push_back(cand[jj]);
                cur.push_back(static_cast<int>(cand[ii]));
                grow(next);
                cur.pop_back();
            }
        };
        std::vector<int> all(flippable.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
        grow(all);
    }
    return best;
}

Dist CubeComplex::l1(int a, int b) const {
    if (a < 0 || b < 0 || a >= nverts() || b >= nverts())
        throw ArgumentError("l1: vertex out of range");
    return popcount_xor(verts_[a], verts_[b]);
}

std::vector<Dist> CubeComplex::factor_counts(int a, int b) const {
    int nf = *std::max_element(wall_factor_.begin(), wall_factor_.end()) + 1;
    std::vector<Dist> counts(nf, 0);
    for (int w = 0; w < nwalls_; ++w)
        if (side(a, w) != side(b, w)) ++counts[wall_factor_[w]];
    return counts;
}

double CubeComplex::linf(int a, int b, double h) const {
    if (l1(a, b) == 0) return 0.0;
    if (has_factors() && is_full_product()) {
        auto counts = factor_counts(a, b);
        return static_cast<double>(*std::max_element(counts.begin(), counts.end()));
    }
    return subdivision_distance(a, b, h, /*maxnorm=*/true);
}

CubeComplex::L2Result CubeComplex::l2(int a, int b, double h) const {
    L2Result r;
    if (l1(a, b) == 0) {
        r.exact = true;
        return r;
    }
    if (has_factors() && is_full_product()) {
        double sum = 0;
        for (Dist c : factor_counts(a, b)) sum += static_cast<double>(c) * static_cast<double>(c);
        r.value = std::sqrt(sum);
        r.exact = true;
        return r;
    }
    double d1 = subdivision_distance(a, b, h, false);
    double d2 = subdivision_distance(a, b, h / 2, false);
    r.value = d2;
    r.error_bound = std::fabs(d1 - d2);
    return r;
}

int CubeComplex::median(int a, int b, int c) const {
    Bits m(verts_[a].size(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const std::uint64_t x = verts_[a][i], y = verts_[b][i], z = verts_[c][i];
        m[i] = (x & y) | (x & z) | (y & z);
    }
    return vertex_index(m);
}

CubeDeletion CubeComplex::delete_hyperplanes(const std::vector<int>& walls) const {
    for (int w : walls)
        if (w < 0 || w >= nwalls_) throw ArgumentError("delete_hyperplanes: unknown hyperplane id");
    std::vector<bool> drop(nwalls_, false);
    for (int w : walls) drop[w] = true;

    CubeDeletion out;
    out.wall_map.assign(nwalls_, -1);
    int kept = 0;
    for (int w = 0; w < nwalls_; ++w)
        if (!drop[w]) out.wall_map[w] = kept++;

    const int blocks = std::max(1, (kept + 63) / 64);
    std::map<std::string, int> seen;
    std::vector<Bits> new_verts;
    out.vertex_map.assign(nverts(), -1);
    for (int v = 0; v < nverts(); ++v) {
        Bits nb(blocks, 0);
        for (int w = 0; w < nwalls_; ++w) {
            int nw = out.wall_map[w];
            if (nw >= 0 && side(v, w)) nb[nw >> 6] |= 1ULL << (nw & 63);
        }
        auto it = seen.find(key(nb));
        if (it == seen.end()) {
            it = seen.emplace(key(nb), static_cast<int>(new_verts.size())).first;
            new_verts.push_back(nb);
        }
        out.vertex_map[v] = it->second;
    }
    out.complex = from_orientations(kept, std::move(new_verts));
    if (!wall_factor_.empty()) {
        std::vector<int> nf;
        for (int w = 0; w < nwalls_; ++w)
            if (!drop[w]) nf.push_back(wall_factor_[w]);
        out.complex.set_factors(nf);
    }
    return out;
}

CubeComplex::ConvexCert CubeComplex::convex_embedding_check(const std::vector<int>& map,
                                                            const CubeComplex& src,
                                                            const CubeComplex& dst) {
    ConvexCert cert;
    if (static_cast<int>(map.size()) != src.nverts()) {
        cert.ok = false;
        cert.reason = "map is not defined on every source vertex";
        return cert;
    }
    std::set<int> image(map.begin(), map.end());
    if (static_cast<int>(image.size()) != src.nverts()) {
        cert.ok = false;
        cert.reason = "map is not injective";
        return cert;
    }
    for (int v = 0; v < src.nverts(); ++v)
        for (auto [nb, w] : src.neighbors(v)) {
            (void)w;
            if (dst.l1(map[v], map[nb]) != 1) {
                cert.ok = false;
                cert.reason = "map does not preserve edges";
                cert.a = v;
                cert.b = nb;
                return cert;
            }
        }
    std::vector<int> img(image.begin(), image.end());
    for (std::size_t i = 0; i < img.size(); ++i)
        for (std::size_t j = i + 1; j < img.size(); ++j) {
            Dist dab = dst.l1(img[i], img[j]);
            for (int v = 0; v < dst.nverts(); ++v) {
                if (image.count(v)) continue;
                if (dst.l1(img[i], v) + dst.l1(v, img[j]) == dab) {
                    cert.ok = false;
                    cert.reason = "image is not geodesically closed";
                    cert.a = img[i];
                    cert.b = img[j];
                    cert.v = v;
                    return cert;
                }
            }
        }
    return cert;
}

std::vector<CubeComplex::Cube> CubeComplex::cubes_up_to_dim3() const {
    std::vector<Cube> out;
    auto closes = [&](int v, const std::vector<int>& ws) {
        const int k = static_cast<int>(ws.size());
        for (int mask = 1; mask < (1 << k); ++mask) {
            Bits b = verts_[v];
            for (int i = 0; i < k; ++i)
                if (mask & (1 << i)) b[ws[i] >> 6] ^= 1ULL << (ws[i] & 63);
            if (vertex_index(b) < 0) return false;
        }
        return true;
    };
    for (int v = 0; v < nverts(); ++v) {
        // Walls flipping v toward the positive side (each cube is emitted
        // once, from its minimal corner).
        std::vector<int> ws;
        for (auto [nb, w] : adj_[v]) {
            (void)nb;
            if (!side(v, w)) ws.push_back(w);
        }
        for (std::size_t i = 0; i < ws.size(); ++i) {
            out.push_back({v, {ws[i]}});
            for (std::size_t j = i + 1; j < ws.size(); ++j) {
                if (!closes(v, {ws[i], ws[j]})) continue;
                out.push_back({v, {ws[i], ws[j]}});
                for (std::size_t k2 = j + 1; k2 < ws.size(); ++k2)
                    if (closes(v, {ws[i], ws[j], ws[k2]}))
                        out.push_back({v, {ws[i], ws[j], ws[k2]}});
            }
        }
    }
    return out;
}

double CubeComplex::subdivision_distance(int a, int b, double h, bool maxnorm) const {
    if (dimension() > 3)
        throw CapacityError("subdivision lp: complexes above dimension 3 are not supported");
    const int steps = std::max(1, static_cast<int>(std::llround(1.0 / h)));

    struct NodeKey {
        std::string base;
        std::vector<std::pair<int, int>> frac;  // (wall, numerator in 1..steps-1)
        bool operator<(const NodeKey& o) const {
            return std::tie(base, frac) < std::tie(o.base, o.frac);
        }
    };
    std::map<NodeKey, int> ids;
    std::vector<std::vector<std::pair<int, double>>> g;
    auto node_id = [&](const NodeKey& k) {
        auto it = ids.find(k);
        if (it != ids.end()) return it->second;
        int id = static_cast<int>(ids.size());
        ids.emplace(k, id);
        g.push_back({});
        return id;
    };

    auto cubes = cubes_up_to_dim3();
    for (const auto& cube : cubes) {
        const int k = static_cast<int>(cube.walls.size());
        long long total = 1;
        for (int i = 0; i < k; ++i) total *= steps + 1;
        if (static_cast<long long>(ids.size()) + total > 400000)
            throw CapacityError("subdivision lp: lattice guard exceeded");
        auto key_of = [&](const std::vector<int>& c) {
            Bits base = verts_[cube.base];
            NodeKey nk;
            for (int i = 0; i < k; ++i)
                if (c[i] == steps) base[cube.walls[i] >> 6] ^= 1ULL << (cube.walls[i] & 63);
            nk.base = key(base);
            for (int i = 0; i < k; ++i)
                if (c[i] > 0 && c[i] < steps) nk.frac.push_back({cube.walls[i], c[i]});
            std::sort(nk.frac.begin(), nk.frac.end());
            return nk;
        };
        // Straight segments between lattice points of one cube are geodesic,
        // so each cube contributes a complete graph on its lattice.
        std::vector<std::vector<int>> lattice;
        std::vector<int> cur(k, 0);
        std::function<void(int)> rec = [&](int pos) {
            if (pos == k) {
                lattice.push_back(cur);
                return;
            }
            for (int c = 0; c <= steps; ++c) {
                cur[pos] = c;
                rec(pos + 1);
            }
        };
        rec(0);
        std::vector<int> lid(lattice.size());
        for (std::size_t i = 0; i < lattice.size(); ++i) lid[i] = node_id(key_of(lattice[i]));
        for (std::size_t i = 0; i < lattice.size(); ++i)
            for (std::size_t j = i + 1; j < lattice.size(); ++j) {
                double sq = 0, mx = 0;
                for (int t2 = 0; t2 < k; ++t2) {
                    double dgap = static_cast<double>(lattice[i][t2] - lattice[j][t2]);
                    sq += dgap * dgap;
                    mx = std::max(mx, std::fabs(dgap));
                }
                double len = (maxnorm ? mx : std::sqrt(sq)) / steps;
                g[lid[i]].push_back({lid[j], len});
                g[lid[j]].push_back({lid[i], len});
            }
    }

    NodeKey ka{key(verts_[a]), {}}, kb{key(verts_[b]), {}};
    if (!ids.count(ka) || !ids.count(kb))
        throw ArgumentError("subdivision lp: endpoint is not part of any cube");
    int s = ids[ka], t = ids[kb];
    std::vector<double> dist(g.size(), std::numeric_limits<double>::infinity());
    std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>, std::greater<>>
        pq;
    dist[s] = 0;
    pq.push({0.0, s});
    while (!pq.empty()) {
        auto [du, u] = pq.top();
        pq.pop();
        if (du > dist[u]) continue;
        if (u == t) break;
        for (auto [v, w] : g[u])
            if (du + w < dist[v]) {
                dist[v] = du + w;
                pq.push({dist[v], v});
            }
    }
    return dist[t];
}

Wallspace tree_wallspace(const MetricGraph& tree) {
    if (static_cast<int>(tree.edges().size()) != tree.n() - 1)
        throw ArgumentError("tree_wallspace: graph is not a tree");
    Wallspace ws;
    ws.npoints = tree.n();
    for (const auto& e : tree.edges()) {
        std::vector<bool> side(tree.n());
        for (int p = 0; p < tree.n(); ++p) side[p] = tree.d(p, e.u) < tree.d(p, e.v);
        ws.walls.push_back(std::move(side));
    }
    return ws;
}

}  // namespace hullcub
