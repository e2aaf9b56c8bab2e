#include "lsbec/catalog.hpp"
#include "lsbec/experiment.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace lsbec;

namespace {

ExperimentConfig load_or_die(const std::string& path) {
    try {
        return load_config(path);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s:%s\n", path.c_str(), e.what());
        std::exit(2);
    }
}

void apply_tol_override(ExperimentConfig& cfg, double tol) {
    if (tol > 0.0) cfg.tol_phase1 = cfg.tol_phase2 = tol;
}

void print_dry(const ExperimentConfig& cfg) {
    std::printf("%s", serialize_config(cfg).c_str());
    Shape shape = cfg.shape.build();
    for (double h : cfg.resolutions) {
        Grid2D g = make_grid(cfg.box[0], cfg.box[1], cfg.box[2], cfg.box[3], h);
        GeometryBundle gb = build_geometry(g, shape, cfg.curvature_cutoff);
        std::printf("# h = %-12.6g grid %4d x %-4d unknowns %-7zu irregular %-6zu ghosts %zu\n",
                    h, g.nx, g.ny, gb.cls.interior_nodes.size(), gb.cls.irregular_nodes.size(),
                    gb.cls.ghost_nodes.size());
    }
}

void print_rows(const ExperimentResult& res) {
    std::printf("%-12s %-16s %-16s %-11s %-9s %-12s %s\n", "h", "mu", "energy", "residual",
                "steps", "wall", "status");
    for (const RunRecord& r : res.rows) {
        if (!r.error.empty()) {
            std::printf("%-12.6g %-16s %-16s %-11s %-9s %-12s error: %s\n", r.h, "-", "-", "-",
                        "-", "-", r.error.c_str());
            continue;
        }
        char steps[32], wall[32];
        std::snprintf(steps, sizeof steps, "%d+%d", r.steps_phase1, r.steps_phase2);
        std::snprintf(wall, sizeof wall, "%.1fs", r.wall_seconds);
        std::printf("%-12.6g %-16.10f %-16.10f %-11.2e %-9s %-12s %s\n", r.h, r.mu, r.energy,
                    r.residual, steps, wall, r.tag.c_str());
    }
}

int count_errors(const ExperimentResult& res) {
    int bad = 0;
    for (const RunRecord& r : res.rows)
        if (!r.error.empty() || !r.converged) ++bad;
    return bad;
}

int do_run(const ExperimentConfig& cfg, const std::string& out, int workers) {
    ExperimentResult res = run_experiment(cfg, out, workers);
    print_rows(res);
    if (!out.empty()) std::printf("tables written to %s\n", out.c_str());
    return count_errors(res) ? 1 : 0;
}

int do_study(const ExperimentConfig& cfg, const std::string& out, int workers) {
    ConvergenceReport rep = convergence_study(cfg, out, workers);
    print_rows(rep.runs);
    if (!std::isnan(rep.reference))
        std::printf("reference %.12g (%s)\n", rep.reference,
                    rep.self_reference ? "self-finest" : "external");
    for (size_t i = 0; i < rep.h.size(); ++i)
        std::printf("  h %-12.6g value %-16.10f err %.3e\n", rep.h[i], rep.value[i], rep.err[i]);
    std::printf("fitted rate %.4f", rep.rate);
    if (!std::isnan(rep.extrapolated)) std::printf("   extrapolated %.10f", rep.extrapolated);
    std::printf("\n");
    if (!out.empty()) std::printf("tables written to %s\n", out.c_str());
    return rep.complete ? 0 : 1;
}

int do_dump_geometry(const ExperimentConfig& cfg, std::string out) {
    if (out.empty()) out = "runs/" + cfg.name;
    std::filesystem::create_directories(out);
    Shape shape = cfg.shape.build();
    for (size_t k = 0; k < cfg.resolutions.size(); ++k) {
        double h = cfg.resolutions[k];
        Grid2D g = make_grid(cfg.box[0], cfg.box[1], cfg.box[2], cfg.box[3], h);
        GeometryBundle gb = build_geometry(g, shape, cfg.curvature_cutoff);
        FieldDump fd = make_field_dump(gb, std::vector<double>(g.size(), 0.0));
        char name[64];
        std::snprintf(name, sizeof name, "geometry_%zu.txt", k);
        write_field(out + "/" + name, fd);
        std::printf("h %-12.6g grid %4d x %-4d unknowns %-7zu -> %s/%s\n", h, g.nx, g.ny,
                    gb.cls.interior_nodes.size(), out.c_str(), name);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ground and excited states of Gross-Pitaevskii problems on curved domains"};
    app.require_subcommand(1);

    std::string config_path, out_dir, label;
    int workers = 1;
    double tol_override = 0.0;
    bool dry = false;

    auto add_common = [&](CLI::App* c, bool with_config = true) {
        if (with_config)
            c->add_option("config", config_path, "config file")
                ->required()
                ->check(CLI::ExistingFile);
        c->add_option("--out", out_dir, "output directory (default runs/<name>)");
        c->add_option("--workers", workers, "parallel runs")->check(CLI::PositiveNumber);
        c->add_option("--tol-override", tol_override, "override both phase tolerances");
        c->add_flag("--dry-run", dry, "echo the canonical config and grid sizes, do not solve");
    };

    CLI::App* run = app.add_subcommand("run", "solve every resolution and write result tables");
    add_common(run);
    CLI::App* study =
        app.add_subcommand("study", "solve every resolution and fit the convergence rate");
    add_common(study);
    CLI::App* dump =
        app.add_subcommand("dump-geometry", "write grid classification and level set only");
    dump->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
    dump->add_option("--out", out_dir, "output directory (default runs/<name>)");

    CLI::App* cat = app.add_subcommand("catalog", "built-in experiment suite");
    cat->require_subcommand(1);
    CLI::App* cat_list = cat->add_subcommand("list", "list catalog entries");
    CLI::App* cat_run = cat->add_subcommand("run", "run one catalog entry");
    std::string entry_name;
    cat_run->add_option("name", entry_name, "catalog entry")->required();
    cat_run->add_option("--label", label, "run only the sub-run with this label");
    add_common(cat_run, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed() || study->parsed()) {
            ExperimentConfig cfg = load_or_die(config_path);
            apply_tol_override(cfg, tol_override);
            if (dry) {
                print_dry(cfg);
                return 0;
            }
            if (out_dir.empty()) out_dir = "runs/" + cfg.name;
            return run->parsed() ? do_run(cfg, out_dir, workers)
                                 : do_study(cfg, out_dir, workers);
        }
        if (dump->parsed()) {
            return do_dump_geometry(load_or_die(config_path), out_dir);
        }
        if (cat_list->parsed()) {
            for (const CatalogEntry& e : catalog()) {
                std::printf("%-18s %s\n", e.name.c_str(), e.title.c_str());
                for (const CatalogRun& r : e.runs)
                    std::printf("    %-18s %s%s\n", r.label.c_str(),
                                r.asserted ? "" : "[annotation only] ",
                                r.note.c_str());
            }
            return 0;
        }
        if (cat_run->parsed()) {
            const CatalogEntry* e = find_entry(entry_name);
            if (!e) {
                std::fprintf(stderr, "no catalog entry '%s' (see: lsbec catalog list)\n",
                             entry_name.c_str());
                return 2;
            }
            int bad = 0;
            bool matched = false;
            for (const CatalogRun& r : e->runs) {
                if (!label.empty() && r.label != label) continue;
                matched = true;
                ExperimentConfig cfg = parse_config(r.config_text);
                apply_tol_override(cfg, tol_override);
                std::printf("== %s / %s ==\n", e->name.c_str(), r.label.c_str());
                if (!r.note.empty()) std::printf("   %s\n", r.note.c_str());
                if (dry) {
                    print_dry(cfg);
                    continue;
                }
                std::string out = out_dir.empty()
                                      ? "runs/catalog/" + e->name + "/" + r.label
                                      : out_dir + "/" + r.label;
                bad += cfg.resolutions.size() > 1 && !std::isnan(cfg.reference_mu)
                           ? do_study(cfg, out, workers)
                           : do_run(cfg, out, workers);
            }
            if (!matched) {
                std::fprintf(stderr, "no sub-run labeled '%s' in '%s'\n", label.c_str(),
                             entry_name.c_str());
                return 2;
            }
            return bad ? 1 : 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
