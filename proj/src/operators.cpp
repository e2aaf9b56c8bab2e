#include "lsbec/operators.hpp"

#include <stdexcept>
#include <string>

namespace lsbec {

namespace {

struct StencilEntry {
    int di, dj;
    double c;
};

SparseOperator assemble_stencil(const GridClassification& cls, const GhostMap& gm,
                                const std::vector<StencilEntry>& st, int order) {
    const Grid2D& g = cls.grid;
    int ni = (int)cls.interior_nodes.size();
    int ng = (int)cls.ghost_nodes.size();
    if (gm.M.rows != ng || gm.M.cols != (int)cls.irregular_nodes.size())
        throw std::runtime_error("assemble_stencil: ghost map does not match the classification");

    std::vector<Triplet> folded_t, int_t, ghost_t;
    folded_t.reserve(ni * st.size());
    int_t.reserve(ni * st.size());
    for (int r = 0; r < ni; ++r) {
        int n = cls.interior_nodes[r];
        int i = n % g.nx, j = n / g.nx;
        for (const StencilEntry& e : st) {
            int m = g.idx(i + e.di, j + e.dj);
            switch (cls.mask[m]) {
                case NodeClass::regular:
                case NodeClass::irregular: {
                    int col = cls.interior_index[m];
                    int_t.push_back({r, col, e.c});
                    folded_t.push_back({r, col, e.c});
                    break;
                }
                case NodeClass::pinned:
                    break;   // pinned values are identically zero
                case NodeClass::ghost1:
                case NodeClass::ghost2: {
                    int gp = cls.ghost_index[m];
                    ghost_t.push_back({r, gp, e.c});
                    for (int q = gm.M.row_ptr[gp]; q < gm.M.row_ptr[gp + 1]; ++q) {
                        int col = cls.interior_index[cls.irregular_nodes[gm.M.col_idx[q]]];
                        folded_t.push_back({r, col, e.c * gm.M.vals[q]});
                    }
                    break;
                }
                case NodeClass::exterior:
                    throw std::runtime_error("assemble_stencil: stencil of interior node (" +
                                             std::to_string(i) + "," + std::to_string(j) +
                                             ") reaches an unclassified exterior node");
            }
        }
    }
    SparseOperator op;
    op.order = order;
    op.folded = csr_from_triplets(ni, ni, std::move(folded_t));
    op.interior_part = csr_from_triplets(ni, ni, std::move(int_t));
    op.ghost_part = csr_from_triplets(ni, ng, std::move(ghost_t));
    return op;
}

} // namespace

SparseOperator assemble_laplacian(const GridClassification& cls, const GhostMap& gm, int order) {
    double h2 = cls.grid.h * cls.grid.h;
    std::vector<StencilEntry> st;
    if (order == 2) {
        st = {{0, 0, 4.0 / h2},
              {-1, 0, -1.0 / h2}, {1, 0, -1.0 / h2},
              {0, -1, -1.0 / h2}, {0, 1, -1.0 / h2}};
    } else if (order == 4) {
        double c0 = 5.0 / h2, c1 = -4.0 / (3.0 * h2), c2 = 1.0 / (12.0 * h2);
        st = {{0, 0, c0},
              {-1, 0, c1}, {1, 0, c1}, {0, -1, c1}, {0, 1, c1},
              {-2, 0, c2}, {2, 0, c2}, {0, -2, c2}, {0, 2, c2}};
    } else {
        throw std::runtime_error("assemble_laplacian: order must be 2 or 4");
    }
    return assemble_stencil(cls, gm, st, order);
}

SparseOperator assemble_gradient_x(const GridClassification& cls, const GhostMap& gm, int order) {
    double h = cls.grid.h;
    std::vector<StencilEntry> st;
    if (order == 2) {
        st = {{-1, 0, -0.5 / h}, {1, 0, 0.5 / h}};
    } else if (order == 4) {
        st = {{-2, 0, 1.0 / (12.0 * h)}, {-1, 0, -2.0 / (3.0 * h)},
              {1, 0, 2.0 / (3.0 * h)},  {2, 0, -1.0 / (12.0 * h)}};
    } else {
        throw std::runtime_error("assemble_gradient_x: order must be 2 or 4");
    }
    return assemble_stencil(cls, gm, st, order);
}

SparseOperator assemble_gradient_y(const GridClassification& cls, const GhostMap& gm, int order) {
    double h = cls.grid.h;
    std::vector<StencilEntry> st;
    if (order == 2) {
        st = {{0, -1, -0.5 / h}, {0, 1, 0.5 / h}};
    } else if (order == 4) {
        st = {{0, -2, 1.0 / (12.0 * h)}, {0, -1, -2.0 / (3.0 * h)},
              {0, 1, 2.0 / (3.0 * h)},  {0, 2, -1.0 / (12.0 * h)}};
    } else {
        throw std::runtime_error("assemble_gradient_y: order must be 2 or 4");
    }
    return assemble_stencil(cls, gm, st, order);
}

void apply_split(const SparseOperator& op, const std::vector<double>& u_int,
                 const std::vector<double>& u_ghost, std::vector<double>& out) {
    if ((int)u_int.size() != op.interior_part.cols || (int)u_ghost.size() != op.ghost_part.cols)
        throw std::runtime_error("apply_split: vector sizes do not match the operator");
    out.assign(op.interior_part.rows, 0.0);
    std::vector<double> tmp(op.ghost_part.rows);
    op.interior_part.apply(u_int.data(), out.data());
    op.ghost_part.apply(u_ghost.data(), tmp.data());
    for (size_t k = 0; k < out.size(); ++k) out[k] += tmp[k];
}

} // namespace lsbec
