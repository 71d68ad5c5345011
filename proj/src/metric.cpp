#include "hullcub/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace hullcub {

double KappaGauge::operator()(double t) const { return c1 * std::sqrt(std::max(0.0, t)) + c2; }

KappaGauge KappaGauge::make(double c1, double c2, double C) {
    if (c1 < 0 || c2 < 0 || C < 0) throw ArgumentError("kappa gauge: coefficients must be nonnegative");
    if (c2 < 10 * C) throw ArgumentError("kappa gauge: needs c2 >= 10 C");
    return KappaGauge{c1, c2, C};
}

double dhat_p(const HHSInstance& inst, int a, int b, LpKind p, const ModelParams& prm) {
    if (a == b) return 0.0;
    TwoPointModel m = two_point_model(inst, a, b, prm);
    switch (p) {
        case LpKind::One: return static_cast<double>(m.d1);
        case LpKind::Two: return m.d2;
        case LpKind::Inf: return m.dinf;
    }
    return 0.0;
}

MetricTable symmetrized_metric(const HHSInstance& inst, const std::vector<int>& sample, LpKind p,
                               const ModelParams& prm) {
    MetricTable out;
    out.points = sample;
    const int n = static_cast<int>(sample.size());
    out.raw.assign(n, std::vector<double>(n, 0));

    // Symmetrized base values: max of d-hat over the declared symmetries
    // (always including the identity).
    auto images = [&](int x) {
        std::vector<int> out_imgs{x};
        for (const auto& s : inst.symmetries) out_imgs.push_back(s.ambient_perm[x]);
        return out_imgs;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            auto xi = images(sample[i]);
            auto xj = images(sample[j]);
            double best = 0;
            for (std::size_t g = 0; g < xi.size(); ++g)
                best = std::max(best, dhat_p(inst, xi[g], xj[g], p, prm));
            out.raw[i][j] = out.raw[j][i] = best;
        }

    // Measured maximum triangle defect of the symmetrized values.
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                if (i == j || j == k || i == k) continue;
                out.defect = std::max(out.defect, out.raw[i][j] - out.raw[i][k] - out.raw[k][j]);
            }
    out.defect = std::max(out.defect, 0.0);

    out.d.assign(n, std::vector<double>(n, 0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) out.d[i][j] = out.raw[i][j] + out.defect;
    for (int i = 0; i < n && out.triangle_ok; ++i)
        for (int j = 0; j < n && out.triangle_ok; ++j)
            for (int k = 0; k < n; ++k) {
                if (i == j || j == k || i == k) continue;
                if (out.d[i][j] > out.d[i][k] + out.d[k][j] + 1e-9) {
                    out.triangle_ok = false;
                    break;
                }
            }
    return out;
}

SubCat0Result sub_cat0_check(const DiscreteQuasiGeodesic& xy, const DiscreteQuasiGeodesic& xz,
                             const DiscreteQuasiGeodesic& yz, const KappaGauge& kappa) {
    if (xy.host != xz.host || xy.host != yz.host)
        throw ArgumentError("sub_cat0_check: sides on different hosts");
    const MetricGraph& g = *xy.host;
    int x = xy.points.front(), y = xy.points.back();
    int x2 = xz.points.front(), z = xz.points.back();
    int y2 = yz.points.front(), z2 = yz.points.back();
    if (x != x2 || y != y2 || z != z2)
        throw ArgumentError("sub_cat0_check: side endpoints do not match");

    ComparisonTriangle tri = ComparisonTriangle::from_sides(
        static_cast<double>(g.d(x, y)), static_cast<double>(g.d(x, z)),
        static_cast<double>(g.d(y, z)));

    const DiscreteQuasiGeodesic* sides[3] = {&xy, &xz, &yz};
    // Side s runs from its first endpoint: (x,y), (x,z), (y,z).
    const int first_of[3] = {x, x, y};
    const int second_of[3] = {y, z, z};
    SubCat0Result res;
    res.worst_margin = -std::numeric_limits<double>::infinity();
    for (int sp = 0; sp < 3; ++sp)
        for (int tp = 0; tp <= sides[sp]->length(); ++tp) {
            int p = sides[sp]->at(tp);
            double arc_p = static_cast<double>(g.d(first_of[sp], p));
            auto pbar = comparison_point(tri, sp, std::min(arc_p, tri.side_length(sp)), sides[sp]->C);
            double delta_p = std::min<double>(static_cast<double>(g.d(first_of[sp], p)),
                                              static_cast<double>(g.d(p, second_of[sp]))) -
                             sides[sp]->C;
            for (int sq = sp; sq < 3; ++sq)
                for (int tq = (sq == sp ? tp : 0); tq <= sides[sq]->length(); ++tq) {
                    int q = sides[sq]->at(tq);
                    double arc_q = static_cast<double>(g.d(first_of[sq], q));
                    auto qbar =
                        comparison_point(tri, sq, std::min(arc_q, tri.side_length(sq)), sides[sq]->C);
                    double delta_q = std::min<double>(static_cast<double>(g.d(first_of[sq], q)),
                                                      static_cast<double>(g.d(q, second_of[sq]))) -
                                     sides[sq]->C;
                    double bound = std::hypot(pbar.first - qbar.first, pbar.second - qbar.second) +
                                   kappa(std::max(0.0, delta_p)) + kappa(std::max(0.0, delta_q));
                    double margin = static_cast<double>(g.d(p, q)) - bound;
                    if (margin > res.worst_margin) {
                        res.worst_margin = margin;
                        res.side_p = sp;
                        res.t_p = tp;
                        res.side_q = sq;
                        res.t_q = tq;
                    }
                }
        }
    res.pass = res.worst_margin <= 1e-9;
    return res;
}

int diacenter(const MetricGraph& g, const std::vector<int>& points_in, double C) {
    std::vector<int> points = points_in;
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.empty()) throw ArgumentError("diacenter: empty point set");
    if (points.size() == 1) return points[0];
    auto [diam, pair] = g.diameter_pair(points);
    auto [a, b] = pair;
    double half = static_cast<double>(diam) / 2.0;
    int best = -1;
    for (int c = 0; c < g.n(); ++c) {
        if (static_cast<double>(g.d(a, c) + g.d(c, b)) > static_cast<double>(diam) + 3 * C + 1e-9)
            continue;
        if (std::fabs(static_cast<double>(g.d(a, c)) - half) > C + 1e-9) continue;
        best = c;
        break;  // vertices scanned in id order: least witness wins
    }
    if (best < 0)
        throw InfeasibleError("diacenter: no witness for the pair (" + std::to_string(a) + "," +
                              std::to_string(b) + "); C too small for this space");
    return best;
}

double WeakMetricTable::f_at(double s) const {
    double best = 0;
    for (const auto& [bp, val] : f_steps)
        if (bp <= s + 1e-12) best = std::max(best, val);
    return best;
}

WeakMetricTable weak_metric_dkappa(const std::vector<DiscreteQuasiGeodesic>& prefixes,
                                   const std::vector<int>& class_of, const KappaGauge& kappa) {
    if (prefixes.empty()) throw ArgumentError("weak metric: no prefixes");
    if (class_of.size() != prefixes.size())
        throw ArgumentError("weak metric: class labels do not match the prefixes");
    const MetricGraph& g = *prefixes[0].host;
    int base = prefixes[0].points.front();
    for (const auto& p : prefixes) {
        if (p.host != prefixes[0].host) throw ArgumentError("weak metric: mixed hosts");
        if (p.points.front() != base) throw ArgumentError("weak metric: prefixes must share the basepoint");
    }
    int nc = *std::max_element(class_of.begin(), class_of.end()) + 1;

    WeakMetricTable out;
    out.nclasses = nc;
    out.d.assign(nc, std::vector<double>(nc, 0));
    for (int A = 0; A < nc; ++A)
        for (int B = A + 1; B < nc; ++B) {
            long long best_t = 0;  // t = 0 always qualifies (shared basepoint)
            for (std::size_t i = 0; i < prefixes.size(); ++i) {
                if (class_of[i] != A) continue;
                for (std::size_t j = 0; j < prefixes.size(); ++j) {
                    if (class_of[j] != B) continue;
                    int horizon = std::min(prefixes[i].length(), prefixes[j].length());
                    long long t_ok = 0;
                    for (int t = 0; t <= horizon; ++t) {
                        double dd =
                            static_cast<double>(g.d(prefixes[i].at(t), prefixes[j].at(t)));
                        if (dd <= 3 * kappa(static_cast<double>(t)) + 1e-12) t_ok = t;
                    }
                    best_t = std::max(best_t, t_ok);
                }
            }
            // t = 0 always qualifies (both prefixes share the basepoint), so
            // the supremum exists; classes separating immediately sit at
            // 1/0 = infinity.
            double val = best_t == 0 ? std::numeric_limits<double>::infinity()
                                     : 1.0 / static_cast<double>(best_t);
            out.d[A][B] = out.d[B][A] = val;
        }

    // Fitted modulus: the minimal nondecreasing envelope over all triples.
    std::map<double, double> steps;
    for (int x = 0; x < nc; ++x)
        for (int y = 0; y < nc; ++y)
            for (int z = 0; z < nc; ++z) {
                if (x == y || y == z || x == z) continue;
                double s = std::max(out.d[x][y], out.d[y][z]);
                double need = out.d[x][z];
                auto it = steps.find(s);
                if (it == steps.end() || it->second < need) steps[s] = need;
            }
    double run = 0;
    for (auto& [s, v] : steps) {
        run = std::max(run, v);
        out.f_steps.push_back({s, run});
    }
    return out;
}

long long divergence_gauge(const std::function<double(double)>& eta, const KappaGauge& kappa,
                           double C, double t) {
    if (t <= C) return 0;
    const double rate = eta(t) / (t - C);
    long long g = 0;
    for (long long tp = 1; tp <= 100000000; ++tp) {
        if (rate * static_cast<double>(tp) <= kappa(static_cast<double>(tp)) + 1e-12)
            g = tp;
        else
            break;
    }
    return g;
}

DivergenceCheck divergence_check(const DiscreteQuasiGeodesic& g1, const DiscreteQuasiGeodesic& g2,
                                 const std::function<double(double)>& eta, const KappaGauge& kappa,
                                 double C, int t) {
    DivergenceCheck out;
    if (g1.host != g2.host) throw ArgumentError("divergence_check: mixed hosts");
    if (t > g1.length() || t > g2.length()) throw ArgumentError("divergence_check: t out of range");
    const MetricGraph& g = *g1.host;
    if (static_cast<double>(g.d(g1.at(t), g2.at(t))) > eta(static_cast<double>(t))) return out;
    out.applicable = true;
    long long gg = divergence_gauge(eta, kappa, C, static_cast<double>(t));
    for (int tp = 0; tp <= std::min<long long>({gg, g1.length(), g2.length()}); ++tp)
        if (static_cast<double>(g.d(g1.at(tp), g2.at(tp))) >
            3 * kappa(static_cast<double>(tp)) + 1e-12) {
            out.pass = false;
            out.witness_t = tp;
            break;
        }
    return out;
}

}  // namespace hullcub
