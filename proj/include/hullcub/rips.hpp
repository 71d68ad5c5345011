#pragma once

#include <array>
#include <vector>

#include "hullcub/metric.hpp"
#include "hullcub/space.hpp"

namespace hullcub {

/// Simplicial complex up to dimension 3, closed under faces.
struct SimplicialComplex {
    int npoints = 0;
    std::vector<std::pair<int, int>> edges;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 4>> tetrahedra;

    std::size_t size() const { return edges.size() + triangles.size() + tetrahedra.size(); }
    // Adds any missing lower-dimensional faces.
    void close_faces();
};

/// Vietoris-Rips flag complex on the <=T proximity graph of a finite metric.
struct FlagComplex {
    double T = 0;
    int dim_cap = 3;
    bool complete = false;  // all pairwise distances <= T
    SimplicialComplex complex;
};

FlagComplex rips_complex(const std::vector<std::vector<double>>& dist, double T, int dim_cap = 3,
                         std::size_t guard = 5000000);

/// Reduced Z/2 Betti numbers in degrees 0..max_dim (max_dim <= 2), via
/// boundary-matrix ranks. Complete proximity graphs short-circuit to zero
/// (the flag complex of a complete graph is a simplex).
struct BettiNumbers {
    long long b0 = 0, b1 = 0, b2 = 0;  // b0 is reduced
    long long at(int k) const { return k == 0 ? b0 : k == 1 ? b1 : b2; }
};
BettiNumbers homology_z2(const SimplicialComplex& c, int max_dim = 2);
BettiNumbers homology_z2(const FlagComplex& c, int max_dim = 2);

/// One barycentric-subdivision homotopy step: each simplex maps to the
/// diacenter of its theta-image; nested pairs must land within
/// T' = (1 - eps) T + C'. Failures are reported, not thrown (eps and C' are
/// empirical).
struct SubdivisionStep {
    std::vector<int> images;  // per input simplex
    double T_prime = 0;
    double worst_pair = 0;    // max distance over nested simplex pairs
    bool within = true;
    int witness_a = -1, witness_b = -1;  // indices of a failing nested pair
};
SubdivisionStep subdivision_step(const MetricGraph& g,
                                 const std::vector<std::vector<int>>& simplices,
                                 const std::vector<int>& theta, double T, double dc_C, double eps,
                                 double C_prime);

}  // namespace hullcub
