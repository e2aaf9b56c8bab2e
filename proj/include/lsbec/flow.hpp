#pragma once

#include "lsbec/extension.hpp"
#include "lsbec/geometry.hpp"
#include "lsbec/operators.hpp"
#include "lsbec/quadrature.hpp"
#include "lsbec/sparse.hpp"

namespace lsbec {

enum class ModelKind { cubic, cubic_rescaled, cubic_quintic, hoi };

struct ModelSpec {
    ModelKind kind = ModelKind::cubic;
    double beta = 0.0;    // cubic interaction
    double gamma = 0.0;   // quintic interaction
    double delta = 0.0;   // higher-order interaction (gradient coupling)
};

// All geometry-dependent pieces of a solve, assembled once per grid/shape.
// The compact stencil is folded over the linear boundary map, the wide
// stencil over the cubic one; gradients match the wide phase.
struct GeometryBundle {
    Grid2D grid;
    LevelSetField ls;
    GridClassification cls;
    GeometryFields gf;
    QuadratureWeights quad;
    GhostMap map2, map4;
    SparseOperator lap2, lap4;
    SparseOperator gx2, gy2;
    SparseOperator gx4, gy4;
    std::vector<double> w_int;   // quadrature weights restricted to the unknowns
};

GeometryBundle build_geometry(const Grid2D& grid, const Shape& shape,
                              double curvature_cutoff = 0.0, const ExtensionConfig& ext = {});

// Scatter interior unknowns to a full-grid field, filling ghost nodes through
// the reconstruction map of the given stencil order; everything else is zero.
std::vector<double> scatter_full(const GeometryBundle& gb, const std::vector<double>& u, int order);

struct FlowConfig {
    double dt = 0.0;             // <= 0 picks h (1e-3 for the gradient-coupled model)
    double tol_phase1 = 1e-8;    // stop when max |u^{n+1}-u^n| / dt drops below
    double tol_phase2 = 1e-8;
    int max_steps = 1000000;     // per phase
    double solver_rel_tol = 1e-13;
    double eigen_tol = 1e-12;
    int log_every = 0;
    bool record_history = false; // keep per-step residual/mu/energy traces
};

struct FlowResult {
    std::vector<double> u;   // interior unknowns, unit weighted norm
    double mu = 0.0;
    double energy = 0.0;
    double residual = 0.0;
    int steps_phase1 = 0;
    int steps_phase2 = 0;
    bool converged = false;
    double mu_phase1 = 0.0;       // observables at the end of the compact-stencil phase
    double energy_phase1 = 0.0;
    double norm_dev_max = 0.0;    // max |weighted norm - target| seen after any step
    // Per-step traces over both phases (filled when record_history is set).
    std::vector<double> residual_history;
    std::vector<double> mu_history;
    std::vector<double> energy_history;
};

struct Observables {
    double mu = 0.0;
    double energy = 0.0;
    double l4 = 0.0;        // ||u||_4^4
    double l6 = 0.0;        // ||u||_6^6
    double grad_sq = 0.0;   // integral of |grad(u^2)|^2
};

// One normalized semi-implicit step of order 2 or 4. Solves
//   (1/dt + (1+4 delta u^2) L/2 + V + beta u^2 + gamma u^4) u~ = u/dt + 2 delta |grad u|^2 u
// then rescales u~ to the target weighted norm. Returns max |u_new - u| / dt.
double befd_step(const GeometryBundle& gb, const ModelSpec& m, const std::vector<double>& V,
                 double dt, int order, std::vector<double>& u, double norm_target = 1.0,
                 double solver_rel_tol = 1e-13);

Observables observables(const GeometryBundle& gb, const ModelSpec& m, const std::vector<double>& V,
                        const std::vector<double>& u, int order = 4);

// Two-phase drive to a stationary point: compact stencil to tol_phase1, then
// wide stencil to tol_phase2. u0 need not be normalized.
FlowResult run_flow(const GeometryBundle& gb, const ModelSpec& m, const std::vector<double>& V,
                    std::vector<double> u0, const FlowConfig& cfg = {});

// Smallest modes of the interaction-free Hamiltonian L/2 + V, weight-normalized.
struct LinearModes {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;
};
LinearModes linear_modes(const GeometryBundle& gb, const std::vector<double>& V, int count,
                         double tol = 1e-12, uint64_t seed = 0x5eed);

// Zero-kinetic-energy profile sqrt(max(0, mu - V)/beta), mu tuned so the
// weighted norm is 1.
std::vector<double> thomas_fermi_initial(const GeometryBundle& gb, const std::vector<double>& V,
                                         double beta);

enum class InitKind { auto_pick, linear, thomas_fermi, continuation };

// Starting field for the flow; continuation climbs an interaction ladder with
// cheap compact-stencil solves at each rung.
std::vector<double> initial_field(const GeometryBundle& gb, const ModelSpec& m,
                                  const std::vector<double>& V, InitKind kind,
                                  const FlowConfig& cfg = {}, int continuation_steps = 4);

} // namespace lsbec
