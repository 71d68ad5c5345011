#include "hullcub/rips.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace hullcub {

void SimplicialComplex::close_faces() {
    std::set<std::pair<int, int>> es(edges.begin(), edges.end());
    std::set<std::array<int, 3>> tris(triangles.begin(), triangles.end());
    for (auto t : tetrahedra) {
        std::sort(t.begin(), t.end());
        tris.insert({t[0], t[1], t[2]});
        tris.insert({t[0], t[1], t[3]});
        tris.insert({t[0], t[2], t[3]});
        tris.insert({t[1], t[2], t[3]});
    }
    for (auto t : tris) {
        es.insert({t[0], t[1]});
        es.insert({t[0], t[2]});
        es.insert({t[1], t[2]});
    }
    edges.assign(es.begin(), es.end());
    triangles.assign(tris.begin(), tris.end());
}

FlagComplex rips_complex(const std::vector<std::vector<double>>& dist, double T, int dim_cap,
                         std::size_t guard) {
    if (T < 0) throw ArgumentError("rips_complex: threshold must be nonnegative");
    if (dim_cap < 0 || dim_cap > 3) throw ArgumentError("rips_complex: dimension cap must be <= 3");
    const int n = static_cast<int>(dist.size());
    FlagComplex out;
    out.T = T;
    out.dim_cap = dim_cap;
    out.complex.npoints = n;

    std::vector<std::vector<bool>> close(n, std::vector<bool>(n, false));
    out.complete = true;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            bool c = dist[i][j] <= T + 1e-9;
            close[i][j] = close[j][i] = c;
            if (!c) out.complete = false;
        }
    if (out.complete) return out;  // homology short-circuits on full simplices

    auto& cx = out.complex;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (close[i][j]) cx.edges.push_back({i, j});
    if (cx.size() > guard) throw CapacityError("rips_complex: simplex guard exceeded");
    if (dim_cap >= 2) {
        for (auto [i, j] : cx.edges)
            for (int k = j + 1; k < n; ++k)
                if (close[i][k] && close[j][k]) {
                    cx.triangles.push_back({i, j, k});
                    if (cx.size() > guard)
                        throw CapacityError("rips_complex: simplex guard exceeded");
                }
    }
    if (dim_cap >= 3) {
        for (const auto& t : cx.triangles)
            for (int l = t[2] + 1; l < n; ++l)
                if (close[t[0]][l] && close[t[1]][l] && close[t[2]][l]) {
                    cx.tetrahedra.push_back({t[0], t[1], t[2], l});
                    if (cx.size() > guard)
                        throw CapacityError("rips_complex: simplex guard exceeded");
                }
    }
    return out;
}

namespace {

// Rank of a sparse GF(2) matrix given as columns of ascending row indices.
long long gf2_rank(std::vector<std::vector<int>> cols) {
    std::map<int, int> pivot;  // low row -> column index
    long long rank = 0;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        auto& col = cols[c];
        while (!col.empty()) {
            int low = col.back();
            auto it = pivot.find(low);
            if (it == pivot.end()) break;
            // XOR with the pivot column.
            const auto& other = cols[it->second];
            std::vector<int> merged;
            std::set_symmetric_difference(col.begin(), col.end(), other.begin(), other.end(),
                                          std::back_inserter(merged));
            col = std::move(merged);
        }
        if (!col.empty()) {
            pivot[col.back()] = static_cast<int>(c);
            ++rank;
        }
    }
    return rank;
}

}  // namespace

BettiNumbers homology_z2(const SimplicialComplex& cx, int max_dim) {
    if (max_dim < 0 || max_dim > 2) throw ArgumentError("homology_z2: degrees 0..2 only");
    BettiNumbers b;

    std::map<std::pair<int, int>, int> eid;
    for (int i = 0; i < static_cast<int>(cx.edges.size()); ++i) eid[cx.edges[i]] = i;
    std::map<std::array<int, 3>, int> tid;
    for (int i = 0; i < static_cast<int>(cx.triangles.size()); ++i) tid[cx.triangles[i]] = i;

    // Augmented d0: every vertex maps to the single (-1)-simplex.
    std::vector<std::vector<int>> d0(cx.npoints, std::vector<int>{0});
    long long rank_d0 = cx.npoints > 0 ? 1 : 0;
    (void)d0;

    std::vector<std::vector<int>> d1;
    for (auto [i, j] : cx.edges) d1.push_back({std::min(i, j), std::max(i, j)});
    long long rank_d1 = gf2_rank(d1);

    std::vector<std::vector<int>> d2;
    for (const auto& t : cx.triangles) {
        std::vector<int> col{eid.at({t[0], t[1]}), eid.at({t[0], t[2]}), eid.at({t[1], t[2]})};
        std::sort(col.begin(), col.end());
        d2.push_back(col);
    }
    long long rank_d2 = gf2_rank(d2);

    std::vector<std::vector<int>> d3;
    for (auto t : cx.tetrahedra) {
        std::sort(t.begin(), t.end());
        std::vector<int> col{tid.at({t[0], t[1], t[2]}), tid.at({t[0], t[1], t[3]}),
                             tid.at({t[0], t[2], t[3]}), tid.at({t[1], t[2], t[3]})};
        std::sort(col.begin(), col.end());
        d3.push_back(col);
    }
    long long rank_d3 = gf2_rank(d3);

    // Reduced chain complex: b~k = dim C_k - rank d~k - rank d_{k+1}.
    b.b0 = static_cast<long long>(cx.npoints) - rank_d0 - rank_d1;
    if (max_dim >= 1) b.b1 = static_cast<long long>(cx.edges.size()) - rank_d1 - rank_d2;
    if (max_dim >= 2) b.b2 = static_cast<long long>(cx.triangles.size()) - rank_d2 - rank_d3;
    return b;
}

BettiNumbers homology_z2(const FlagComplex& c, int max_dim) {
    if (c.complete) return {};  // a full simplex has trivial reduced homology
    return homology_z2(c.complex, max_dim);
}

SubdivisionStep subdivision_step(const MetricGraph& g,
                                 const std::vector<std::vector<int>>& simplices,
                                 const std::vector<int>& theta, double T, double dc_C, double eps,
                                 double C_prime) {
    SubdivisionStep out;
    out.T_prime = (1 - eps) * T + C_prime;
    for (const auto& s : simplices) {
        std::vector<int> img;
        for (int v : s) {
            if (v < 0 || v >= static_cast<int>(theta.size()))
                throw ArgumentError("subdivision_step: simplex vertex outside theta");
            img.push_back(theta[v]);
        }
        out.images.push_back(diacenter(g, img, dc_C));
    }
    // Adjacent barycentric vertices = nested simplex chains.
    for (std::size_t i = 0; i < simplices.size(); ++i)
        for (std::size_t j = 0; j < simplices.size(); ++j) {
            if (i == j) continue;
            if (simplices[i].size() >= simplices[j].size()) continue;
            bool nested = std::includes(simplices[j].begin(), simplices[j].end(),
                                        simplices[i].begin(), simplices[i].end());
            if (!nested) continue;
            double dd = static_cast<double>(g.d(out.images[i], out.images[j]));
            if (dd > out.worst_pair) {
                out.worst_pair = dd;
                if (dd > out.T_prime + 1e-9) {
                    out.within = false;
                    out.witness_a = static_cast<int>(i);
                    out.witness_b = static_cast<int>(j);
                }
            }
        }
    return out;
}

}  // namespace hullcub
