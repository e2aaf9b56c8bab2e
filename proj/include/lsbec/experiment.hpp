#pragma once

#include "lsbec/config.hpp"

#include <string>
#include <vector>

namespace lsbec {

struct RunRecord {
    double h = 0.0;
    double mu = 0.0, energy = 0.0;              // report_scale applied
    double mu_phase1 = 0.0, energy_phase1 = 0.0;
    double residual = 0.0;
    int steps_phase1 = 0, steps_phase2 = 0;
    bool converged = false;
    double norm_dev_max = 0.0;
    double min_u = 0.0, max_u = 0.0;            // over the interior unknowns
    double wall_seconds = 0.0;
    std::string tag;                             // ground | excited-like | collapsed-to-ground
    std::string error;                           // nonempty when the run failed
    FlowResult flow;
};

// One flow solve at the given spacing.
RunRecord run_single(const ExperimentConfig& cfg, double h, bool record_history = true);

struct ExperimentResult {
    std::vector<RunRecord> rows;   // one per resolution, coarse to fine
};

// All resolutions; failures are captured per row. When outdir is nonempty,
// writes results.csv, timing.csv, telemetry.csv and a field dump of the
// finest run. Result tables use fixed 15-digit formatting so identical
// configs produce identical bytes; wall times live in timing.csv only.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& outdir = "",
                                int workers = 1);

struct ConvergenceReport {
    std::vector<double> h, value, err;   // successful rows entering the fit
    double rate = NAN;                   // least squares slope of log err vs log h
    double reference = NAN;
    double extrapolated = NAN;           // Richardson limit: two finest values + fitted rate
    bool self_reference = false;         // finest run used as reference (and excluded)
    bool complete = false;               // every resolution converged
    ExperimentResult runs;
};

// Error-vs-spacing study against reference_mu, or against the finest run when
// no reference is configured. Adds study.csv to the output directory.
ConvergenceReport convergence_study(const ExperimentConfig& cfg, const std::string& outdir = "",
                                    int workers = 1);

// Least squares slope of log(err) against log(h).
double fit_rate(const std::vector<double>& h, const std::vector<double>& err);

// Full-grid field snapshot with the node classification.
struct FieldDump {
    int nx = 0, ny = 0;
    double h = 0.0, x0 = 0.0, y0 = 0.0;
    std::vector<double> u, phi;
    std::vector<int> mask;   // 0 regular, 1 irregular, 2 ghost1, 3 ghost2, 4 exterior
};

// Pinned nodes carry u = 0 and are written as exterior.
FieldDump make_field_dump(const GeometryBundle& gb, const std::vector<double>& full);
void write_field(const std::string& path, const FieldDump& fd);
FieldDump load_field(const std::string& path);

} // namespace lsbec
