#include "lsbec/extension.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lsbec {

namespace {

// One ghost node's upwind update: value <- self*value + sum_r w[r]*source[r],
// where a source is either a fixed irregular value (kind 0) or another ghost
// (kind 1). Positions index the compact irregular/ghost orderings.
struct TransportRow {
    double self = 0.0;
    int n_reads = 0;
    double w[2] = {0.0, 0.0};
    int pos[2] = {0, 0};
    uint8_t from_ghost[2] = {0, 0};
};

std::vector<TransportRow> build_transport_rows(const GridClassification& cls,
                                               const LevelSetField& ls) {
    const Grid2D& g = cls.grid;
    const std::vector<double>& phi = ls.phi;
    auto dx = [&](int i, int j) {
        if (i > 0 && i < g.nx - 1) return (phi[g.idx(i + 1, j)] - phi[g.idx(i - 1, j)]) / (2 * g.h);
        if (i == 0) return (-3 * phi[g.idx(0, j)] + 4 * phi[g.idx(1, j)] - phi[g.idx(2, j)]) / (2 * g.h);
        return (3 * phi[g.idx(i, j)] - 4 * phi[g.idx(i - 1, j)] + phi[g.idx(i - 2, j)]) / (2 * g.h);
    };
    auto dy = [&](int i, int j) {
        if (j > 0 && j < g.ny - 1) return (phi[g.idx(i, j + 1)] - phi[g.idx(i, j - 1)]) / (2 * g.h);
        if (j == 0) return (-3 * phi[g.idx(i, 0)] + 4 * phi[g.idx(i, 1)] - phi[g.idx(i, 2)]) / (2 * g.h);
        return (3 * phi[g.idx(i, j)] - 4 * phi[g.idx(i, j - 1)] + phi[g.idx(i, j - 2)]) / (2 * g.h);
    };
    // readable sources: non-pinned irregular nodes and both ghost layers
    auto source = [&](int i, int j, int& pos, uint8_t& from_ghost) {
        if (i < 0 || j < 0 || i >= g.nx || j >= g.ny) return false;
        int n = g.idx(i, j);
        switch (cls.mask[n]) {
            case NodeClass::irregular:
                pos = cls.irregular_index[n];
                from_ghost = 0;
                return true;
            case NodeClass::ghost1:
            case NodeClass::ghost2:
                pos = cls.ghost_index[n];
                from_ghost = 1;
                return true;
            default:
                return false;
        }
    };

    std::vector<TransportRow> rows(cls.ghost_nodes.size());
    for (size_t p = 0; p < cls.ghost_nodes.size(); ++p) {
        int n = cls.ghost_nodes[p];
        int i = n % g.nx, j = n / g.nx;
        double px = dx(i, j), py = dy(i, j);
        double norm = std::hypot(px, py);
        if (norm < 1e-8)
            throw std::runtime_error("transport extension: vanishing level-set gradient at ghost node (" +
                                     std::to_string(i) + "," + std::to_string(j) + ")");
        px /= norm;
        py /= norm;
        double wx = 0.5 * std::abs(px), wy = 0.5 * std::abs(py);
        TransportRow& r = rows[p];
        r.self = 1.0 - wx - wy;

        int posx = 0, posy = 0;
        uint8_t gx = 0, gy = 0;
        bool okx = wx > 0.0 && source(px >= 0.0 ? i - 1 : i + 1, j, posx, gx);
        bool oky = wy > 0.0 && source(i, py >= 0.0 ? j - 1 : j + 1, posy, gy);
        if (okx && oky) {
            r.n_reads = 2;
            r.w[0] = wx; r.pos[0] = posx; r.from_ghost[0] = gx;
            r.w[1] = wy; r.pos[1] = posy; r.from_ghost[1] = gy;
        } else if (okx) {
            r.n_reads = 1;
            r.w[0] = wx + wy; r.pos[0] = posx; r.from_ghost[0] = gx;
        } else if (oky) {
            r.n_reads = 1;
            r.w[0] = wx + wy; r.pos[0] = posy; r.from_ghost[0] = gy;
        } else {
            // no upwind source; copy from the readable neighbor closest to the boundary
            int best = -1;
            uint8_t bg = 0;
            double bphi = 1e300;
            for (auto [di, dj] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
                int pp = 0;
                uint8_t fg = 0;
                if (!source(i + di, j + dj, pp, fg)) continue;
                double ph = phi[g.idx(i + di, j + dj)];
                if (ph < bphi) { bphi = ph; best = pp; bg = fg; }
            }
            if (best < 0)
                throw std::runtime_error("transport extension: ghost node (" + std::to_string(i) + "," +
                                         std::to_string(j) + ") has no readable neighbor");
            r.n_reads = 1;
            r.w[0] = wx + wy; r.pos[0] = best; r.from_ghost[0] = bg;
        }
    }
    return rows;
}

// Jacobi sweeps on the compact ghost vector; returns false when the sweep
// budget runs out.
bool sweep_to_convergence(const std::vector<TransportRow>& rows, const std::vector<double>& src,
                          std::vector<double>& cur, std::vector<double>& buf,
                          const ExtensionConfig& cfg, double& last_change) {
    size_t ng = rows.size();
    for (int s = 0; s < cfg.max_sweeps; ++s) {
        double change = 0.0;
        for (size_t p = 0; p < ng; ++p) {
            const TransportRow& r = rows[p];
            double v = r.self * cur[p];
            for (int k = 0; k < r.n_reads; ++k)
                v += r.w[k] * (r.from_ghost[k] ? cur[r.pos[k]] : src[r.pos[k]]);
            buf[p] = v;
            change = std::max(change, std::abs(v - cur[p]));
        }
        cur.swap(buf);
        last_change = change;
        if (change < cfg.tol) return true;
    }
    return ng == 0;
}

} // namespace

void extend_field(const GridClassification& cls, const LevelSetField& ls,
                  std::vector<double>& field, const ExtensionConfig& cfg) {
    if ((int)field.size() != cls.grid.size())
        throw std::runtime_error("extend_field: field / grid size mismatch");
    std::vector<TransportRow> rows = build_transport_rows(cls, ls);
    std::vector<double> src(cls.irregular_nodes.size());
    for (size_t k = 0; k < src.size(); ++k) src[k] = field[cls.irregular_nodes[k]];
    std::vector<double> cur(cls.ghost_nodes.size()), buf(cls.ghost_nodes.size());
    for (size_t p = 0; p < cur.size(); ++p) cur[p] = field[cls.ghost_nodes[p]];
    double last = 0.0;
    if (!sweep_to_convergence(rows, src, cur, buf, cfg, last))
        throw std::runtime_error("extend_field: no convergence after " + std::to_string(cfg.max_sweeps) +
                                 " sweeps (last change " + std::to_string(last) + ")");
    for (size_t p = 0; p < cur.size(); ++p) field[cls.ghost_nodes[p]] = cur[p];
}

SparseMatrix build_extension_matrix(const GridClassification& cls, const LevelSetField& ls,
                                    const ExtensionConfig& cfg) {
    std::vector<TransportRow> rows = build_transport_rows(cls, ls);
    size_t ng = cls.ghost_nodes.size(), ni = cls.irregular_nodes.size();
    std::vector<Triplet> trips;
    std::vector<double> src(ni, 0.0), cur(ng), buf(ng);
    for (size_t l = 0; l < ni; ++l) {
        src[l] = 1.0;
        std::fill(cur.begin(), cur.end(), 0.0);
        double last = 0.0;
        if (!sweep_to_convergence(rows, src, cur, buf, cfg, last))
            throw std::runtime_error("build_extension_matrix: no convergence for column " +
                                     std::to_string(l) + " (last change " + std::to_string(last) + ")");
        for (size_t p = 0; p < ng; ++p)
            if (cur[p] > 1e-14) trips.push_back({(int)p, (int)l, cur[p]});
        src[l] = 0.0;
    }
    return csr_from_triplets((int)ng, (int)ni, trips);
}

DiagonalFactors build_diagonal_factors(const GridClassification& cls, const LevelSetField& ls,
                                       const GeometryFields& gf, int order) {
    if (order != 1 && order != 3)
        throw std::runtime_error("build_diagonal_factors: order must be 1 or 3");
    DiagonalFactors f;
    f.order = order;
    size_t ni = cls.irregular_nodes.size();
    f.c.assign(ni, 0.0);
    f.g.assign(ni, 0.0);
    double h = cls.grid.h;
    for (size_t k = 0; k < ni; ++k) {
        int n = cls.irregular_nodes[k];
        double phi = ls.phi[n];
        double denom;
        if (order == 1) {
            denom = phi;
        } else {
            if (!gf.in_band[n])
                throw std::runtime_error(
                    "build_diagonal_factors: irregular node outside the geometry band; widen band_width");
            double kdn = gf.has_kappa_dn[n] ? gf.kappa_dn[n] : 0.0;
            f.c[k] = gf.kappa[n] - phi * kdn;
            denom = phi * (1.0 - 0.5 * f.c[k] * phi);
        }
        if (std::abs(denom) < 1e-14 * h)
            throw std::runtime_error("build_diagonal_factors: boundary map degenerate at node " +
                                     std::to_string(n));
        f.g[k] = 1.0 / denom;
    }
    f.phi_ghost.resize(cls.ghost_nodes.size());
    for (size_t p = 0; p < f.phi_ghost.size(); ++p) f.phi_ghost[p] = ls.phi[cls.ghost_nodes[p]];
    return f;
}

GhostMap assemble_ghost_map(const SparseMatrix& A, const DiagonalFactors& f) {
    if (A.rows != (int)f.phi_ghost.size() || A.cols != (int)f.g.size())
        throw std::runtime_error("assemble_ghost_map: extension matrix / factor size mismatch");
    GhostMap m;
    m.order = f.order;
    std::vector<Triplet> trips;
    trips.reserve(A.nnz());
    for (int g = 0; g < A.rows; ++g) {
        double phig = f.phi_ghost[g];
        for (int q = A.row_ptr[g]; q < A.row_ptr[g + 1]; ++q) {
            int l = A.col_idx[q];
            double a = A.vals[q];
            double v = f.order == 1 ? phig * a * f.g[l]
                                    : phig * (a - 0.5 * phig * a * f.c[l]) * f.g[l];
            trips.push_back({g, l, v});
        }
    }
    m.M = csr_from_triplets(A.rows, A.cols, trips);
    return m;
}

GhostMap build_ghost_map(const GridClassification& cls, const LevelSetField& ls,
                         const GeometryFields& gf, int order, const ExtensionConfig& cfg) {
    SparseMatrix A = build_extension_matrix(cls, ls, cfg);
    DiagonalFactors f = build_diagonal_factors(cls, ls, gf, order);
    return assemble_ghost_map(A, f);
}

} // namespace lsbec
