#pragma once

#include "lsbec/extension.hpp"
#include "lsbec/geometry.hpp"
#include "lsbec/sparse.hpp"

namespace lsbec {

// A finite-difference operator on the interior unknowns with its ghost-node
// reads folded through a ghost reconstruction map:
//   folded = interior_part + ghost_part * (M scattered to interior columns).
// The split parts stay available for fields whose ghost values follow a
// different rule than the one folded in (e.g. squared fields).
struct SparseOperator {
    int order = 2;               // stencil width: 2 or 4
    SparseMatrix folded;         // interior x interior
    SparseMatrix interior_part;  // interior x interior
    SparseMatrix ghost_part;     // interior x ghost
};

// Discrete -Laplacian (positive semidefinite sign convention).
SparseOperator assemble_laplacian(const GridClassification& cls, const GhostMap& gm, int order);

// First-derivative operators, centered stencils of matching order.
SparseOperator assemble_gradient_x(const GridClassification& cls, const GhostMap& gm, int order);
SparseOperator assemble_gradient_y(const GridClassification& cls, const GhostMap& gm, int order);

// out = interior_part * u_int + ghost_part * u_ghost
void apply_split(const SparseOperator& op, const std::vector<double>& u_int,
                 const std::vector<double>& u_ghost, std::vector<double>& out);

} // namespace lsbec
