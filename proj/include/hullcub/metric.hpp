#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hullcub/model.hpp"
#include "hullcub/space.hpp"

namespace hullcub {

/// Sublinear gauge kappa(t) = c1 sqrt(t) + c2 with a floor constant C
/// (standing assumption: kappa >= 10 C pointwise, i.e. c2 >= 10 C).
struct KappaGauge {
    double c1 = 0, c2 = 0;
    double C = 0;

    double operator()(double t) const;
    static KappaGauge make(double c1, double c2, double C);
};

enum class LpKind { One, Two, Inf };

/// d-hat_p(a,b): the lp distance between the marked tuples in the two-point
/// cubical model of {a,b}.
double dhat_p(const HHSInstance& inst, int a, int b, LpKind p, const ModelParams& prm);

/// Symmetrized metric table over a sample: max of d-hat over the declared
/// symmetries, plus the measured maximum triangle defect, zero diagonal.
struct MetricTable {
    std::vector<int> points;
    std::vector<std::vector<double>> raw;  // symmetrized d-hat
    std::vector<std::vector<double>> d;    // raw + defect off-diagonal
    double defect = 0;                     // measured max triangle defect of raw
    bool triangle_ok = true;               // exact triangle inequality on d
};
MetricTable symmetrized_metric(const HHSInstance& inst, const std::vector<int>& sample, LpKind p,
                               const ModelParams& prm);

/// Exhaustive CAT(0)-up-to-kappa comparison over all integer side-point
/// pairs of a triangle of (1,C)-quasi-geodesics.
struct SubCat0Result {
    bool pass = true;
    double worst_margin = 0;  // max of d(p,q) - (comparison + kappa terms)
    int side_p = -1, t_p = -1, side_q = -1, t_q = -1;
};
/// Sides: xy, xz, yz with matching endpoints (xy(0)=xz(0), xy(end)=yz(0),
/// xz(end)=yz(end)).
SubCat0Result sub_cat0_check(const DiscreteQuasiGeodesic& xy, const DiscreteQuasiGeodesic& xz,
                             const DiscreteQuasiGeodesic& yz, const KappaGauge& kappa);

/// Diacenter: near-midpoint of the lexicographically least furthest pair,
/// witness chosen by least vertex id. dc({x}) = x.
int diacenter(const MetricGraph& g, const std::vector<int>& points, double C);

/// Weak metric d_kappa over a family of same-basepoint quasi-geodesic
/// prefixes grouped into classes.
struct WeakMetricTable {
    int nclasses = 0;
    std::vector<std::vector<double>> d;
    // Fitted modulus: minimal nondecreasing step function with
    // d(x,z) <= f(max(d(x,y), d(y,z))) over all sampled triples.
    std::vector<std::pair<double, double>> f_steps;  // (s, value), s ascending
    double f_at(double s) const;
};
WeakMetricTable weak_metric_dkappa(const std::vector<DiscreteQuasiGeodesic>& prefixes,
                                   const std::vector<int>& class_of, const KappaGauge& kappa);

/// Divergence gauge from the uniform divergence lemma: g(t) = 0 for t <= C,
/// otherwise the largest integer with eta(t) t'/(t - C) <= kappa(t') for all
/// integer t' up to it.
long long divergence_gauge(const std::function<double(double)>& eta, const KappaGauge& kappa,
                           double C, double t);

/// Companion checker for the lemma's conclusion on a supplied pair.
struct DivergenceCheck {
    bool applicable = false;  // d(g1(t), g2(t)) <= eta(t)
    bool pass = true;
    int witness_t = -1;
};
DivergenceCheck divergence_check(const DiscreteQuasiGeodesic& g1, const DiscreteQuasiGeodesic& g2,
                                 const std::function<double(double)>& eta, const KappaGauge& kappa,
                                 double C, int t);

}  // namespace hullcub
