#pragma once

#include "lsbec/geometry.hpp"
#include "lsbec/sparse.hpp"

namespace lsbec {

struct ExtensionConfig {
    double tol = 1e-12;    // stop when the largest per-sweep change falls below this
    int max_sweeps = 200;
};

// Transport extension: advects values outward along the level-set normal with
// upwind differences (pseudo-time step h/2 folded in), Jacobi sweeps on a
// double buffer. `field` is a full-grid vector; values at non-pinned irregular
// nodes are the fixed boundary data, ghost entries are overwritten (their
// incoming values serve as the initial guess). Throws when the sweep budget is
// exhausted before the tolerance is met.
void extend_field(const GridClassification& cls, const LevelSetField& ls,
                  std::vector<double>& field, const ExtensionConfig& cfg = {});

// The same operator in matrix form: ghost values = A * irregular values, rows
// over the ghost ordering, columns over the irregular ordering. Entries are
// nonnegative and each row sums to 1 (up to the sweep tolerance); entries
// below 1e-14 are dropped.
SparseMatrix build_extension_matrix(const GridClassification& cls, const LevelSetField& ls,
                                    const ExtensionConfig& cfg = {});

// Per-node factors for the boundary-value reconstruction maps.
//   c[k]   curvature of the boundary foot of irregular node k,
//          kappa - phi * dkappa/dn (order 3 only; zero for order 1)
//   g[k]   1/phi (order 1) or 1/(phi * (1 - c*phi/2)) (order 3)
//   phi_ghost[p]  level-set value at ghost node p
struct DiagonalFactors {
    int order = 1;
    std::vector<double> c;
    std::vector<double> g;
    std::vector<double> phi_ghost;
};

DiagonalFactors build_diagonal_factors(const GridClassification& cls, const LevelSetField& ls,
                                       const GeometryFields& gf, int order);

// Ghost reconstruction: u_ghost = M * u_irregular, where M folds the division
// by the map at the sources, the transport extension A, and the multiplication
// by the map at the ghosts into one matrix.
struct GhostMap {
    int order = 1;
    SparseMatrix M;
};

GhostMap assemble_ghost_map(const SparseMatrix& A, const DiagonalFactors& f);

// Convenience pipeline: extension matrix + diagonal factors + assembly.
GhostMap build_ghost_map(const GridClassification& cls, const LevelSetField& ls,
                         const GeometryFields& gf, int order, const ExtensionConfig& cfg = {});

} // namespace lsbec
