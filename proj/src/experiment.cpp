#include "lsbec/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace lsbec {

namespace {

const char* kMaskNames[5] = {"regular", "irregular", "ghost1", "ghost2", "exterior"};

std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

struct FileCloser {
    std::FILE* f;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

std::FILE* open_out(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    return f;
}

} // namespace

RunRecord run_single(const ExperimentConfig& cfg, double h, bool record_history) {
    auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.h = h;

    Grid2D grid = make_grid(cfg.box[0], cfg.box[1], cfg.box[2], cfg.box[3], h);
    GeometryBundle gb = build_geometry(grid, cfg.shape.build(), cfg.curvature_cutoff);

    const int n = (int)gb.cls.interior_nodes.size();
    std::vector<double> V(n);
    for (int r = 0; r < n; ++r) {
        int node = gb.cls.interior_nodes[r];
        double x = grid.x(node % grid.nx), y = grid.y(node / grid.nx);
        V[r] = cfg.potential(x, y);
        if (!std::isfinite(V[r])) {
            char msg[96];
            std::snprintf(msg, sizeof msg, "potential is not finite at (%.6g, %.6g)", x, y);
            throw std::runtime_error(msg);
        }
    }

    ModelSpec model = cfg.model;
    if (model.kind == ModelKind::cubic &&
        (cfg.rescale == RescalePolicy::on ||
         (cfg.rescale == RescalePolicy::automatic && model.beta >= 100.0)))
        model.kind = ModelKind::cubic_rescaled;

    FlowConfig fc;
    fc.dt = cfg.dt(h);
    fc.tol_phase1 = cfg.tol_phase1;
    fc.tol_phase2 = cfg.tol_phase2;
    fc.max_steps = cfg.max_steps;
    fc.record_history = record_history;

    // Ask for one mode past the one we start from: the last vector of the
    // eigensolver block converges only to its certificate, and the leftover
    // ground component seeds a collapse during the flow.
    std::vector<double> u0 = cfg.excited_k > 0
        ? linear_modes(gb, V, cfg.excited_k + 2).vectors[cfg.excited_k]
        : initial_field(gb, model, V, cfg.init, fc, cfg.continuation_steps);

    rec.flow = run_flow(gb, model, V, std::move(u0), fc);
    rec.mu = cfg.report_scale * rec.flow.mu;
    rec.energy = cfg.report_scale * rec.flow.energy;
    rec.mu_phase1 = cfg.report_scale * rec.flow.mu_phase1;
    rec.energy_phase1 = cfg.report_scale * rec.flow.energy_phase1;
    rec.residual = rec.flow.residual;
    rec.steps_phase1 = rec.flow.steps_phase1;
    rec.steps_phase2 = rec.flow.steps_phase2;
    rec.converged = rec.flow.converged;
    rec.norm_dev_max = rec.flow.norm_dev_max;

    // Sign diagnostics over the unknowns only: ghost values extrapolate through
    // the boundary zero and go negative for any positive Dirichlet profile.
    rec.min_u = rec.max_u = 0.0;
    for (double v : rec.flow.u) {
        rec.min_u = std::min(rec.min_u, v);
        rec.max_u = std::max(rec.max_u, v);
    }
    double amp = std::max(std::abs(rec.min_u), std::abs(rec.max_u));
    rec.tag = cfg.excited_k == 0 ? "ground"
            : rec.min_u < -1e-6 * amp ? "excited-like" : "collapsed-to-ground";

    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& outdir,
                                int workers) {
    ExperimentResult res;
    const int nres = (int)cfg.resolutions.size();
    res.rows.resize(nres);

    std::atomic<int> next{0};
    std::mutex print_mtx;
    auto work = [&]() {
        for (;;) {
            int k = next.fetch_add(1);
            if (k >= nres) return;
            double h = cfg.resolutions[k];
            RunRecord& rec = res.rows[k];
            try {
                rec = run_single(cfg, h);
            } catch (const std::exception& e) {
                rec = RunRecord{};
                rec.h = h;
                rec.error = e.what();
            }
            std::string note;
            if (!rec.converged && rec.error.empty()) note += " NOT CONVERGED";
            if (rec.tag != "ground") note += " " + rec.tag;
            std::lock_guard<std::mutex> lk(print_mtx);
            if (!rec.error.empty())
                std::printf("[%s] h=%-10.6g failed: %s\n", cfg.name.c_str(), h, rec.error.c_str());
            else
                std::printf("[%s] h=%-10.6g mu=%.12g E=%.12g steps=%d+%d wall=%.1fs%s\n",
                            cfg.name.c_str(), h, rec.mu, rec.energy, rec.steps_phase1,
                            rec.steps_phase2, rec.wall_seconds, note.c_str());
        }
    };
    if (workers <= 1 || nres == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < std::min(workers, nres); ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    if (!outdir.empty()) {
        std::filesystem::create_directories(outdir);

        FileCloser rf{open_out(outdir + "/results.csv")};
        {
            // grid argmax of the trap over the whole box, a plot marker for
            // shaped potentials (obstacle peaks and the like)
            Grid2D fg = make_grid(cfg.box[0], cfg.box[1], cfg.box[2], cfg.box[3],
                                  cfg.resolutions.back());
            double px = fg.x(0), py = fg.y(0), pv = -HUGE_VAL;
            for (int j = 0; j < fg.ny; ++j)
                for (int i = 0; i < fg.nx; ++i) {
                    double v = cfg.potential(fg.x(i), fg.y(j));
                    if (v > pv) { pv = v; px = fg.x(i); py = fg.y(j); }
                }
            std::fprintf(rf.f, "# potential peak at (%.15g, %.15g), value %.15g\n", px, py, pv);
        }
        std::fprintf(rf.f, "h,mu,energy,mu_phase1,energy_phase1,steps_phase1,steps_phase2,"
                           "residual,norm_dev_max,min_u,max_u,converged,tag,error\n");
        for (const RunRecord& r : res.rows)
            std::fprintf(rf.f, "%.15g,%.15g,%.15g,%.15g,%.15g,%d,%d,%.15g,%.15g,%.15g,%.15g,%d,%s,%s\n",
                         r.h, r.mu, r.energy, r.mu_phase1, r.energy_phase1, r.steps_phase1,
                         r.steps_phase2, r.residual, r.norm_dev_max, r.min_u, r.max_u,
                         r.converged ? 1 : 0, csv_safe(r.tag).c_str(), csv_safe(r.error).c_str());

        FileCloser tf{open_out(outdir + "/timing.csv")};
        std::fprintf(tf.f, "h,wall_seconds\n");
        for (const RunRecord& r : res.rows)
            std::fprintf(tf.f, "%.15g,%.3f\n", r.h, r.wall_seconds);

        // Finest successful run: step telemetry and the field itself.
        const RunRecord* fin = nullptr;
        for (const RunRecord& r : res.rows)
            if (r.error.empty()) fin = &r;
        if (fin) {
            double dt = cfg.dt(fin->h);
            FileCloser mf{open_out(outdir + "/telemetry.csv")};
            std::fprintf(mf.f, "phase,step,t,residual,mu,energy\n");
            const FlowResult& fl = fin->flow;
            for (size_t s = 0; s < fl.residual_history.size(); ++s) {
                int phase = (int)s < fl.steps_phase1 ? 1 : 2;
                int step = phase == 1 ? (int)s + 1 : (int)s + 1 - fl.steps_phase1;
                std::fprintf(mf.f, "%d,%d,%.15g,%.15g,%.15g,%.15g\n", phase, step,
                             ((double)s + 1.0) * dt, fl.residual_history[s], fl.mu_history[s],
                             fl.energy_history[s]);
            }

            Grid2D grid = make_grid(cfg.box[0], cfg.box[1], cfg.box[2], cfg.box[3], fin->h);
            GeometryBundle gb = build_geometry(grid, cfg.shape.build(), cfg.curvature_cutoff);
            write_field(outdir + "/field_finest.txt",
                        make_field_dump(gb, scatter_full(gb, fin->flow.u, 4)));
        }
    }
    return res;
}

double fit_rate(const std::vector<double>& h, const std::vector<double>& err) {
    if (h.size() != err.size() || h.size() < 2) return NAN;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = (int)h.size();
    for (int k = 0; k < n; ++k) {
        double x = std::log(h[k]);
        double y = std::log(std::max(err[k], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double den = n * sxx - sx * sx;
    return den == 0.0 ? NAN : (n * sxy - sx * sy) / den;
}

ConvergenceReport convergence_study(const ExperimentConfig& cfg, const std::string& outdir,
                                    int workers) {
    ConvergenceReport rep;
    rep.runs = run_experiment(cfg, outdir, workers);

    std::vector<const RunRecord*> good;
    rep.complete = true;
    for (const RunRecord& r : rep.runs.rows) {
        if (r.error.empty() && r.converged)
            good.push_back(&r);
        else
            rep.complete = false;
    }

    rep.self_reference = std::isnan(cfg.reference_mu);
    if (rep.self_reference) {
        if (!good.empty()) {
            rep.reference = good.back()->mu;
            good.pop_back();   // the reference run itself stays out of the fit
        }
    } else {
        rep.reference = cfg.reference_mu;
    }
    for (const RunRecord* r : good) {
        rep.h.push_back(r->h);
        rep.value.push_back(r->mu);
        rep.err.push_back(std::abs(r->mu - rep.reference));
    }
    rep.rate = fit_rate(rep.h, rep.err);

    // Richardson limit from the two finest successful values and the fitted
    // rate; at coarse h this is usually far closer to the truth than the
    // finest value itself.
    std::vector<const RunRecord*> fine;
    for (const RunRecord& r : rep.runs.rows)
        if (r.error.empty() && r.converged) fine.push_back(&r);
    if (fine.size() >= 2 && std::isfinite(rep.rate) && rep.rate > 0.0) {
        const RunRecord* rc = fine[fine.size() - 2];
        const RunRecord* rf = fine[fine.size() - 1];
        double q = std::pow(rc->h / rf->h, rep.rate);
        rep.extrapolated = rf->mu + (rf->mu - rc->mu) / (q - 1.0);
    }

    if (!outdir.empty()) {
        std::filesystem::create_directories(outdir);
        FileCloser sf{open_out(outdir + "/study.csv")};
        std::fprintf(sf.f, "# rate = %.15g, reference = %.15g (%s), extrapolated = %.15g\n",
                     rep.rate, rep.reference, rep.self_reference ? "self-finest" : "external",
                     rep.extrapolated);
        std::fprintf(sf.f, "h,mu,err\n");
        for (size_t k = 0; k < rep.h.size(); ++k)
            std::fprintf(sf.f, "%.15g,%.15g,%.15g\n", rep.h[k], rep.value[k], rep.err[k]);
    }
    if (!std::isnan(rep.rate))
        std::printf("[%s] rate %.4g against %s reference %.12g\n", cfg.name.c_str(), rep.rate,
                    rep.self_reference ? "self-finest" : "external", rep.reference);
    return rep;
}

FieldDump make_field_dump(const GeometryBundle& gb, const std::vector<double>& full) {
    if ((int)full.size() != gb.grid.size())
        throw std::invalid_argument("make_field_dump: field size mismatch");
    FieldDump fd;
    fd.nx = gb.grid.nx;
    fd.ny = gb.grid.ny;
    fd.h = gb.grid.h;
    fd.x0 = gb.grid.x0;
    fd.y0 = gb.grid.y0;
    fd.u = full;
    fd.phi = gb.ls.phi;
    fd.mask.resize(gb.grid.size());
    for (int node = 0; node < gb.grid.size(); ++node) {
        switch (gb.cls.mask[node]) {
            case NodeClass::regular: fd.mask[node] = 0; break;
            case NodeClass::irregular: fd.mask[node] = 1; break;
            case NodeClass::ghost1: fd.mask[node] = 2; break;
            case NodeClass::ghost2: fd.mask[node] = 3; break;
            case NodeClass::pinned:   // held at zero, reported as exterior
            case NodeClass::exterior: fd.mask[node] = 4; break;
        }
        if (gb.cls.mask[node] == NodeClass::pinned) fd.u[node] = 0.0;
    }
    return fd;
}

void write_field(const std::string& path, const FieldDump& fd) {
    FileCloser fc{open_out(path)};
    std::fprintf(fc.f, "%d %d %.17g %.17g %.17g\n", fd.nx, fd.ny, fd.h, fd.x0, fd.y0);
    for (int j = 0; j < fd.ny; ++j)
        for (int i = 0; i < fd.nx; ++i) {
            int node = j * fd.nx + i;
            std::fprintf(fc.f, "%d %d %.17g %.17g %.17g %.17g %s\n", i, j, fd.x0 + i * fd.h,
                         fd.y0 + j * fd.h, fd.u[node], fd.phi[node], kMaskNames[fd.mask[node]]);
        }
}

FieldDump load_field(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "r");
    if (!f) throw std::runtime_error("cannot read '" + path + "'");
    FileCloser fc{f};
    FieldDump fd;
    if (std::fscanf(f, "%d %d %lg %lg %lg", &fd.nx, &fd.ny, &fd.h, &fd.x0, &fd.y0) != 5)
        throw std::runtime_error("bad field header in '" + path + "'");
    if (fd.nx <= 0 || fd.ny <= 0) throw std::runtime_error("bad field extents in '" + path + "'");
    const int total = fd.nx * fd.ny;
    fd.u.resize(total);
    fd.phi.resize(total);
    fd.mask.resize(total);
    char name[24];
    for (int k = 0; k < total; ++k) {
        int i, j;
        double x, y;
        if (std::fscanf(f, "%d %d %lg %lg %lg %lg %23s", &i, &j, &x, &y, &fd.u[k], &fd.phi[k],
                        name) != 7)
            throw std::runtime_error("truncated field file '" + path + "'");
        if (j * fd.nx + i != k) throw std::runtime_error("field rows out of order in '" + path + "'");
        int m = -1;
        for (int q = 0; q < 5; ++q)
            if (std::strcmp(name, kMaskNames[q]) == 0) m = q;
        if (m < 0) throw std::runtime_error("unknown mask label in '" + path + "'");
        fd.mask[k] = m;
    }
    return fd;
}

} // namespace lsbec
