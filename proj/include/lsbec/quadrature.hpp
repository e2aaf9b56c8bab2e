#pragma once

#include "lsbec/geometry.hpp"

namespace lsbec {

// Per-node integration weights for the region phi < 0. Cells fully inside
// contribute the bilinear product rule h^2/4 per corner; cells cut by the
// boundary are split into two triangles along the SW-NE diagonal, phi is
// linearized on each, and the negative subregion is integrated with the
// three-midpoint rule, accumulating linearly back to the cell corners. Weight
// can land on exterior corners of cut cells; those are always ghost nodes, so
// integrands extended off the domain evaluate there naturally.
struct QuadratureWeights {
    Grid2D grid;
    std::vector<double> w;
};

QuadratureWeights build_weights(const Grid2D& grid, const LevelSetField& ls);

double integrate(const QuadratureWeights& q, const std::vector<double>& f);
double inner(const QuadratureWeights& q, const std::vector<double>& a, const std::vector<double>& b);
double lp_norm(const QuadratureWeights& q, const std::vector<double>& u, double p);

// Scales u to unit weighted L2 norm; returns the norm it had. Throws when the
// norm is too small to normalize against.
double normalize(const QuadratureWeights& q, std::vector<double>& u);

} // namespace lsbec
