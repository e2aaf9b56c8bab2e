#include "lsbec/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace lsbec {

GeometryBundle build_geometry(const Grid2D& grid, const Shape& shape,
                              double curvature_cutoff, const ExtensionConfig& ext) {
    GeometryBundle gb;
    gb.grid = grid;
    gb.ls = build_level_set(grid, shape);
    gb.cls = classify(grid, gb.ls);
    gb.gf = geometry_fields(grid, gb.ls, 0.0, curvature_cutoff);
    gb.quad = build_weights(grid, gb.ls);
    gb.map2 = build_ghost_map(gb.cls, gb.ls, gb.gf, 1, ext);
    gb.map4 = build_ghost_map(gb.cls, gb.ls, gb.gf, 3, ext);
    gb.lap2 = assemble_laplacian(gb.cls, gb.map2, 2);
    gb.lap4 = assemble_laplacian(gb.cls, gb.map4, 4);
    gb.gx2 = assemble_gradient_x(gb.cls, gb.map2, 2);
    gb.gy2 = assemble_gradient_y(gb.cls, gb.map2, 2);
    gb.gx4 = assemble_gradient_x(gb.cls, gb.map4, 4);
    gb.gy4 = assemble_gradient_y(gb.cls, gb.map4, 4);
    gb.w_int.resize(gb.cls.interior_nodes.size());
    for (size_t r = 0; r < gb.cls.interior_nodes.size(); ++r)
        gb.w_int[r] = gb.quad.w[gb.cls.interior_nodes[r]];
    return gb;
}

static std::vector<double> at_irregular(const GeometryBundle& gb, const std::vector<double>& u) {
    std::vector<double> v(gb.cls.irregular_nodes.size());
    for (size_t l = 0; l < v.size(); ++l)
        v[l] = u[gb.cls.interior_index[gb.cls.irregular_nodes[l]]];
    return v;
}

static std::vector<double> ghost_values(const GeometryBundle& gb, const std::vector<double>& u,
                                        int order) {
    const GhostMap& gm = order == 4 ? gb.map4 : gb.map2;
    return gm.M.apply(at_irregular(gb, u));
}

std::vector<double> scatter_full(const GeometryBundle& gb, const std::vector<double>& u, int order) {
    if ((int)u.size() != (int)gb.cls.interior_nodes.size())
        throw std::invalid_argument("scatter_full: size mismatch");
    std::vector<double> full(gb.grid.size(), 0.0);
    for (size_t r = 0; r < u.size(); ++r) full[gb.cls.interior_nodes[r]] = u[r];
    std::vector<double> ug = ghost_values(gb, u, order);
    for (size_t k = 0; k < ug.size(); ++k) full[gb.cls.ghost_nodes[k]] = ug[k];
    return full;
}

// Weighted L2 norm of the field extended to its ghost nodes.
static double full_norm(const GeometryBundle& gb, const std::vector<double>& u, int order) {
    std::vector<double> full = scatter_full(gb, u, order);
    return lp_norm(gb.quad, full, 2.0);
}

double befd_step(const GeometryBundle& gb, const ModelSpec& m, const std::vector<double>& V,
                 double dt, int order, std::vector<double>& u, double norm_target,
                 double solver_rel_tol) {
    const int n = (int)gb.cls.interior_nodes.size();
    if ((int)u.size() != n || (int)V.size() != n)
        throw std::invalid_argument("befd_step: size mismatch");
    if (dt <= 0.0) throw std::invalid_argument("befd_step: dt must be positive");
    const SparseOperator& L = order == 4 ? gb.lap4 : gb.lap2;

    // System matrix on the folded pattern: diag(1/dt + V + beta u^2 + gamma u^4)
    // plus the row-scaled half Laplacian.
    SparseMatrix B = L.folded;
    std::vector<double> rhs(n);
    for (int r = 0; r < n; ++r) {
        double u2 = u[r] * u[r];
        double s = 1.0 + 4.0 * m.delta * u2;
        bool have_diag = false;
        for (int q = B.row_ptr[r]; q < B.row_ptr[r + 1]; ++q) {
            B.vals[q] *= 0.5 * s;
            if (B.col_idx[q] == r) {
                B.vals[q] += 1.0 / dt + V[r] + m.beta * u2 + m.gamma * u2 * u2;
                have_diag = true;
            }
        }
        if (!have_diag) throw std::logic_error("befd_step: row without diagonal entry");
        rhs[r] = u[r] / dt;
    }
    if (m.delta != 0.0) {
        const SparseOperator& gx = order == 4 ? gb.gx4 : gb.gx2;
        const SparseOperator& gy = order == 4 ? gb.gy4 : gb.gy2;
        std::vector<double> ux = gx.folded.apply(u), uy = gy.folded.apply(u);
        for (int r = 0; r < n; ++r)
            rhs[r] += 2.0 * m.delta * (ux[r] * ux[r] + uy[r] * uy[r]) * u[r];
    }

    SolverConfig sc;
    sc.rel_tol = solver_rel_tol;
    sc.abs_tol = 0.0;
    sc.precond = Precond::milu;
    sc.max_iters = 4000;   // boundary folding near pinned nodes is locally stiff
    std::vector<double> ut = u;   // warm start
    solve_linear(B, rhs, ut, sc);

    double norm = full_norm(gb, ut, order);
    if (norm < 1e-150) throw std::runtime_error("befd_step: field collapsed to zero");
    double scale = norm_target / norm;
    double res = 0.0;
    for (int r = 0; r < n; ++r) {
        double un = ut[r] * scale;
        res = std::max(res, std::abs(un - u[r]));
        u[r] = un;
    }
    return res / dt;
}

static std::vector<double> hamiltonian_apply(const GeometryBundle& gb, const ModelSpec& m,
                                             const std::vector<double>& V,
                                             const std::vector<double>& u, int order) {
    const int n = (int)u.size();
    const SparseOperator& L = order == 4 ? gb.lap4 : gb.lap2;
    std::vector<double> lu = L.folded.apply(u);
    std::vector<double> hu(n);
    for (int r = 0; r < n; ++r) {
        double u2 = u[r] * u[r];
        hu[r] = 0.5 * lu[r] + (V[r] + m.beta * u2 + m.gamma * u2 * u2) * u[r];
    }
    if (m.delta != 0.0) {
        const SparseOperator& gx = order == 4 ? gb.gx4 : gb.gx2;
        const SparseOperator& gy = order == 4 ? gb.gy4 : gb.gy2;
        std::vector<double> ux = gx.folded.apply(u), uy = gy.folded.apply(u);
        for (int r = 0; r < n; ++r)
            hu[r] += 2.0 * m.delta * u[r] * u[r] * lu[r]
                   - 2.0 * m.delta * (ux[r] * ux[r] + uy[r] * uy[r]) * u[r];
    }
    return hu;
}

Observables observables(const GeometryBundle& gb, const ModelSpec& m, const std::vector<double>& V,
                        const std::vector<double>& u, int order) {
    const int n = (int)u.size();
    Observables ob;

    // At a stationary point H u = mu u node by node, so the truncated weighted
    // Rayleigh quotient recovers mu without boundary-cell weight corrections.
    std::vector<double> hu = hamiltonian_apply(gb, m, V, u, order);
    double num = 0.0, den = 0.0;
    for (int r = 0; r < n; ++r) {
        num += gb.w_int[r] * u[r] * hu[r];
        den += gb.w_int[r] * u[r] * u[r];
    }
    if (den <= 0.0) throw std::runtime_error("observables: zero field");
    ob.mu = num / den;

    std::vector<double> full = scatter_full(gb, u, order);
    double l4 = lp_norm(gb.quad, full, 4.0);
    double l6 = lp_norm(gb.quad, full, 6.0);
    ob.l4 = l4 * l4 * l4 * l4;
    ob.l6 = l6 * l6 * l6 * l6 * l6 * l6;

    if (m.delta != 0.0) {
        // grad(u^2) through the split form: ghost values of the squared field
        // are the squares of the reconstructed ghost values.
        const SparseOperator& gx = order == 4 ? gb.gx4 : gb.gx2;
        const SparseOperator& gy = order == 4 ? gb.gy4 : gb.gy2;
        std::vector<double> v(n), vg = ghost_values(gb, u, order);
        for (int r = 0; r < n; ++r) v[r] = u[r] * u[r];
        for (size_t k = 0; k < vg.size(); ++k) vg[k] *= vg[k];
        std::vector<double> vx, vy;
        apply_split(gx, v, vg, vx);
        apply_split(gy, v, vg, vy);
        double acc = 0.0;
        for (int r = 0; r < n; ++r) acc += gb.w_int[r] * (vx[r] * vx[r] + vy[r] * vy[r]);
        ob.grad_sq = acc;
    }

    ob.energy = ob.mu - 0.5 * m.beta * ob.l4 - (2.0 / 3.0) * m.gamma * ob.l6
              - 0.5 * m.delta * ob.grad_sq;
    return ob;
}

FlowResult run_flow(const GeometryBundle& gb, const ModelSpec& m, const std::vector<double>& V,
                    std::vector<double> u0, const FlowConfig& cfg) {
    const int n = (int)gb.cls.interior_nodes.size();
    if ((int)u0.size() != n || (int)V.size() != n)
        throw std::invalid_argument("run_flow: size mismatch");
    double dt = cfg.dt > 0.0 ? cfg.dt : (m.kind == ModelKind::hoi ? 1e-3 : gb.grid.h);

    // The rescaled route evolves z = sqrt(beta) u with unit cubic coefficient
    // and norm target sqrt(beta); steps are algebraically those of the direct
    // cubic flow.
    ModelSpec ms = m;
    double target = 1.0;
    if (m.kind == ModelKind::cubic_rescaled) {
        if (m.beta <= 0.0)
            throw std::invalid_argument("run_flow: rescaled model needs beta > 0");
        if (m.gamma != 0.0 || m.delta != 0.0)
            throw std::invalid_argument("run_flow: rescaled model is cubic only");
        ms.beta = 1.0;
        target = std::sqrt(m.beta);
    }

    double norm = full_norm(gb, u0, 2);
    if (norm < 1e-150) throw std::invalid_argument("run_flow: zero initial field");
    for (double& v : u0) v *= target / norm;

    FlowResult out;
    out.u = std::move(u0);

    // Observables of the physical field; the rescaled route reports on u = z / sqrt(beta).
    auto physical_obs = [&](int order) {
        if (target == 1.0) return observables(gb, m, V, out.u, order);
        std::vector<double> w = out.u;
        for (double& v : w) v /= target;
        return observables(gb, m, V, w, order);
    };
    auto after_step = [&](int phase, int step, int order) {
        double nrm = full_norm(gb, out.u, order);
        out.norm_dev_max = std::max(out.norm_dev_max, std::abs(nrm - target));
        if (!std::isfinite(out.residual) || !std::isfinite(nrm)) {
            char msg[96];
            std::snprintf(msg, sizeof msg, "run_flow: non-finite field at phase %d step %d",
                          phase, step);
            throw std::runtime_error(msg);
        }
        if (cfg.record_history) {
            Observables ob = physical_obs(order);
            out.residual_history.push_back(out.residual);
            out.mu_history.push_back(ob.mu);
            out.energy_history.push_back(ob.energy);
        }
        if (cfg.log_every > 0 && step % cfg.log_every == 0)
            std::printf("phase%d step %d residual %.3e\n", phase, step, out.residual);
    };

    bool ok1 = false, ok2 = false;
    for (int s = 1; s <= cfg.max_steps; ++s) {
        out.residual = befd_step(gb, ms, V, dt, 2, out.u, target, cfg.solver_rel_tol);
        out.steps_phase1 = s;
        after_step(1, s, 2);
        if (out.residual < cfg.tol_phase1) { ok1 = true; break; }
    }
    {
        Observables ob = physical_obs(2);
        out.mu_phase1 = ob.mu;
        out.energy_phase1 = ob.energy;
    }
    for (int s = 1; s <= cfg.max_steps; ++s) {
        out.residual = befd_step(gb, ms, V, dt, 4, out.u, target, cfg.solver_rel_tol);
        out.steps_phase2 = s;
        after_step(2, s, 4);
        if (out.residual < cfg.tol_phase2) { ok2 = true; break; }
    }
    out.converged = ok1 && ok2;

    if (m.kind == ModelKind::cubic_rescaled)
        for (double& v : out.u) v /= target;
    double sgn = 0.0;
    for (int r = 0; r < n; ++r) sgn += gb.w_int[r] * out.u[r];
    if (sgn < 0.0)
        for (double& v : out.u) v = -v;

    Observables ob = observables(gb, m, V, out.u, 4);
    out.mu = ob.mu;
    out.energy = ob.energy;
    return out;
}

LinearModes linear_modes(const GeometryBundle& gb, const std::vector<double>& V, int count,
                         double tol, uint64_t seed) {
    const int n = (int)gb.cls.interior_nodes.size();
    if ((int)V.size() != n) throw std::invalid_argument("linear_modes: size mismatch");
    SparseMatrix H = gb.lap2.folded;
    for (int r = 0; r < n; ++r) {
        bool have_diag = false;
        for (int q = H.row_ptr[r]; q < H.row_ptr[r + 1]; ++q) {
            H.vals[q] *= 0.5;
            if (H.col_idx[q] == r) { H.vals[q] += V[r]; have_diag = true; }
        }
        if (!have_diag) throw std::logic_error("linear_modes: row without diagonal entry");
    }
    EigenConfig ec;
    ec.tol = tol;
    ec.seed = seed;
    ec.inner = SolverConfig{1e-13, 1e-16, 4000, Precond::milu};
    EigenResult er = smallest_eigenpairs(H, count, gb.w_int, ec);
    LinearModes lm;
    lm.values = std::move(er.values);
    lm.vectors = std::move(er.vectors);
    return lm;
}

std::vector<double> thomas_fermi_initial(const GeometryBundle& gb, const std::vector<double>& V,
                                         double beta) {
    const int n = (int)gb.cls.interior_nodes.size();
    if ((int)V.size() != n) throw std::invalid_argument("thomas_fermi_initial: size mismatch");
    if (beta <= 0.0) throw std::invalid_argument("thomas_fermi_initial: needs beta > 0");
    double vmin = V[0], vmax = V[0], area = 0.0;
    for (int r = 0; r < n; ++r) {
        vmin = std::min(vmin, V[r]);
        vmax = std::max(vmax, V[r]);
        area += gb.w_int[r];
    }
    if (area <= 0.0) throw std::runtime_error("thomas_fermi_initial: empty domain");
    auto mass = [&](double mu) {
        double acc = 0.0;
        for (int r = 0; r < n; ++r) acc += gb.w_int[r] * std::max(0.0, mu - V[r]);
        return acc / beta;
    };
    double lo = vmin, hi = vmax + beta / area + 1.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (mass(mid) < 1.0 ? lo : hi) = mid;
    }
    double mu = 0.5 * (lo + hi);
    std::vector<double> u(n);
    for (int r = 0; r < n; ++r) u[r] = std::sqrt(std::max(0.0, mu - V[r]) / beta);
    double norm = full_norm(gb, u, 2);
    for (double& v : u) v /= norm;
    return u;
}

std::vector<double> initial_field(const GeometryBundle& gb, const ModelSpec& m,
                                  const std::vector<double>& V, InitKind kind,
                                  const FlowConfig& cfg, int continuation_steps) {
    if (kind == InitKind::auto_pick)
        kind = m.beta <= 1.0 ? InitKind::linear
             : m.beta >= 100.0 ? InitKind::thomas_fermi
                               : InitKind::continuation;
    if (kind == InitKind::linear)
        return linear_modes(gb, V, 1, cfg.eigen_tol).vectors[0];
    if (kind == InitKind::thomas_fermi)
        return thomas_fermi_initial(gb, V, m.beta);

    // Continuation: start from the interaction-free mode and walk beta up a
    // short ladder with loosely converged compact-stencil flows.
    if (continuation_steps < 1) throw std::invalid_argument("initial_field: bad ladder length");
    std::vector<double> u = linear_modes(gb, V, 1, cfg.eigen_tol).vectors[0];
    double dt = cfg.dt > 0.0 ? cfg.dt : (m.kind == ModelKind::hoi ? 1e-3 : gb.grid.h);
    for (int i = 1; i <= continuation_steps; ++i) {
        ModelSpec ms = m;
        if (m.kind == ModelKind::cubic_rescaled) ms.kind = ModelKind::cubic;
        ms.beta = m.beta <= 10.0 ? m.beta * i / continuation_steps
                                 : std::pow(m.beta, double(i) / continuation_steps);
        bool settled = false;
        for (int s = 0; s < cfg.max_steps && !settled; ++s)
            settled = befd_step(gb, ms, V, dt, 2, u, 1.0, cfg.solver_rel_tol) < 1e-6;
        if (!settled) {
            char msg[96];
            std::snprintf(msg, sizeof msg,
                          "initial_field: ladder rung %d (beta %.6g) did not settle", i, ms.beta);
            throw std::runtime_error(msg);
        }
        if (cfg.log_every > 0) {
            Observables ob = observables(gb, ms, V, u, 2);
            std::printf("ladder rung %d beta %.6g energy %.12g\n", i, ms.beta, ob.energy);
        }
    }
    return u;
}

} // namespace lsbec
