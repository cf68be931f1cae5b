#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "kansim/common.hpp"

namespace kansim {

// Uniform knot sequence knot(i) = t0 + i*delta for i = 0..G+2P, i.e. G+2P
// intervals. The layer's input domain is [knot(P), knot(G+P)] and carries
// G+P basis functions of degree P; basis i is supported on
// [knot(i), knot(i+P+1)).
struct UniformGrid {
    double t0 = 0.0;
    double delta = 1.0;
    int G = 1;
    int P = 3;

    UniformGrid() = default;
    UniformGrid(double t0_, double delta_, int G_, int P_) : t0(t0_), delta(delta_), G(G_), P(P_) {
        require(delta > 0.0, "UniformGrid: delta must be positive");
        require(G >= 1, "UniformGrid: G must be >= 1");
        require(P >= 1 && P <= 3, "UniformGrid: supported degrees are 1 <= P <= 3");
    }

    int num_knots() const { return G + 2 * P + 1; }
    int num_basis() const { return G + P; }
    double knot(int i) const { return t0 + static_cast<double>(i) * delta; }
    double domain_min() const { return knot(P); }
    double domain_max() const { return knot(G + P); }

    bool operator==(const UniformGrid&) const = default;
};

// B_{i,0}: indicator of the half-open interval [knot(i), knot(i+1)).
inline double bspline_degree0(const UniformGrid& g, int i, double x) {
    require(i >= 0 && i <= g.G + 2 * g.P - 1, "bspline_degree0: interval index out of range");
    return (g.knot(i) <= x && x < g.knot(i + 1)) ? 1.0 : 0.0;
}

// Two-term recursion over degree. Zero-width denominators contribute zero so
// the function stays total on degenerate synthetic grids.
inline double bspline_recursive(const UniformGrid& g, int i, int p, double x) {
    require(p >= 0 && p <= g.P, "bspline_recursive: degree out of range");
    require(i >= 0 && i + p + 1 <= g.G + 2 * g.P, "bspline_recursive: basis index out of range");
    if (p == 0) return bspline_degree0(g, i, x);
    double acc = 0.0;
    double d1 = g.knot(i + p) - g.knot(i);
    if (d1 != 0.0) acc += (x - g.knot(i)) / d1 * bspline_recursive(g, i, p - 1, x);
    double d2 = g.knot(i + p + 1) - g.knot(i + 1);
    if (d2 != 0.0) acc += (g.knot(i + p + 1) - x) / d2 * bspline_recursive(g, i + 1, p - 1, x);
    return acc;
}

// B_{0,p} on integer knots 0..p+1; zero outside [0, p+1).
inline double cardinal_bspline(int p, double u) {
    require(p >= 1 && p <= 3, "cardinal_bspline: supported degrees are 1 <= p <= 3");
    if (u < 0.0 || u >= static_cast<double>(p + 1)) return 0.0;
    UniformGrid unit(0.0, 1.0, 1, p);
    return bspline_recursive(unit, 0, p, u);
}

inline double clamp_to_domain(const UniformGrid& g, double x) {
    return std::clamp(x, g.domain_min(), g.domain_max());
}

// Index k of the interval containing x after clamping into the input domain;
// always in [P, G+P-1]. Uniform spacing makes floor((x-t0)/delta) exact, a
// final clamp absorbs the closed right edge.
inline int interval_index(const UniformGrid& g, double x) {
    double u = (clamp_to_domain(g, x) - g.t0) / g.delta;
    int k = static_cast<int>(std::floor(u));
    return std::clamp(k, g.P, g.G + g.P - 1);
}

// All G+P basis values at x. At most P+1 entries are non-zero, at indices
// interval_index(x)-P .. interval_index(x).
inline std::vector<double> basis_row(const UniformGrid& g, double x) {
    require(x >= g.domain_min() && x <= g.domain_max(),
            "basis_row: x outside the input domain (clip before calling)");
    std::vector<double> row(static_cast<size_t>(g.num_basis()), 0.0);
    int k = interval_index(g, x);
    for (int i = std::max(0, k - g.P); i <= k; ++i) {
        row[static_cast<size_t>(i)] = bspline_recursive(g, i, g.P, x);
    }
    return row;
}

}  // namespace kansim
