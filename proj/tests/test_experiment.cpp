#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lsbec/experiment.hpp"

using namespace lsbec;

namespace {

constexpr double kJ01 = 2.404825557695773;   // first zero of J0

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fresh_dir(const char* name) {
    std::string dir = std::string("test_out/") + name;
    std::filesystem::remove_all(dir);
    return dir;
}

ExperimentConfig disk_config(const std::string& extra) {
    return parse_config("name = disk\n"
                        "shape = circle(0, 0, 1)\n"
                        "box = -1.5, -1.5, 1.5, 1.5\n" +
                        extra);
}

} // namespace

TEST_CASE("rate fit recovers a synthetic cubic error") {
    std::vector<double> h = {0.1, 0.05, 0.025, 0.0125};
    std::vector<double> err;
    for (double v : h) err.push_back(7.0 * v * v * v);
    CHECK(std::abs(fit_rate(h, err) - 3.0) < 1e-12);
    CHECK(std::isnan(fit_rate({0.1}, {1.0})));
    CHECK(std::isnan(fit_rate({0.1, 0.05}, {1.0})));   // size mismatch
}

TEST_CASE("field dump round trips bitwise and keeps the node counts") {
    ExperimentConfig cfg = disk_config("resolutions = 0.2\npotential = harmonic\nbeta = 1\n");
    Grid2D grid = make_grid(cfg.box[0], cfg.box[1], cfg.box[2], cfg.box[3], 0.2);
    GeometryBundle gb = build_geometry(grid, cfg.shape.build());
    std::vector<double> u(gb.cls.interior_nodes.size());
    for (size_t r = 0; r < u.size(); ++r) u[r] = std::sin(0.37 * (double)r) + 1.2;

    FieldDump fd = make_field_dump(gb, scatter_full(gb, u, 4));
    std::string dir = fresh_dir("dump");
    std::filesystem::create_directories(dir);
    write_field(dir + "/a.txt", fd);
    FieldDump back = load_field(dir + "/a.txt");
    write_field(dir + "/b.txt", back);
    CHECK(slurp(dir + "/a.txt") == slurp(dir + "/b.txt"));

    CHECK(back.nx == grid.nx);
    CHECK(back.ny == grid.ny);
    CHECK(back.h == grid.h);
    CHECK(back.x0 == grid.x0);

    int count[5] = {0, 0, 0, 0, 0};
    for (int m : back.mask) ++count[m];
    CHECK(count[0] == (int)gb.cls.regular_nodes.size());
    CHECK(count[1] == (int)gb.cls.irregular_nodes.size());
    CHECK(count[2] == (int)gb.cls.ghost1_nodes.size());
    CHECK(count[3] == (int)gb.cls.ghost2_nodes.size());
    int plain_exterior = grid.size() - (int)(gb.cls.interior_nodes.size() + gb.cls.ghost_nodes.size() +
                                             gb.cls.pinned_nodes.size());
    CHECK(count[4] == plain_exterior + (int)gb.cls.pinned_nodes.size());

    // Pinned nodes are written as zero-valued exterior.
    for (int node : gb.cls.pinned_nodes) {
        CHECK(back.mask[node] == 4);
        CHECK(back.u[node] == 0.0);
    }
}

TEST_CASE("experiment runner writes deterministic tables") {
    ExperimentConfig cfg = disk_config(
        "resolutions = 0.2, 0.15\npotential = harmonic\nbeta = 1\n");
    std::string d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
    ExperimentResult r1 = run_experiment(cfg, d1);
    ExperimentResult r2 = run_experiment(cfg, d2);

    REQUIRE(r1.rows.size() == 2);
    CHECK(r1.rows[0].converged);
    CHECK(r1.rows[1].converged);
    CHECK(r1.rows[0].error.empty());
    CHECK(r1.rows[1].h == 0.15);
    CHECK(r1.rows[1].mu > 0.0);
    CHECK(r1.rows[1].min_u > -1e-8);   // ground state stays signless
    CHECK(r1.rows[1].tag == "ground");
    CHECK(r1.rows[1].norm_dev_max < 1e-12);

    CHECK(slurp(d1 + "/results.csv") == slurp(d2 + "/results.csv"));
    CHECK(slurp(d1 + "/telemetry.csv") == slurp(d2 + "/telemetry.csv"));
    CHECK(slurp(d1 + "/field_finest.txt") == slurp(d2 + "/field_finest.txt"));

    // Telemetry has one row per step of the finest run plus the header.
    std::string tele = slurp(d1 + "/telemetry.csv");
    int lines = 0;
    for (char c : tele)
        if (c == '\n') ++lines;
    CHECK(lines == 1 + r1.rows[1].steps_phase1 + r1.rows[1].steps_phase2);

    FieldDump fd = load_field(d1 + "/field_finest.txt");
    Grid2D grid = make_grid(cfg.box[0], cfg.box[1], cfg.box[2], cfg.box[3], 0.15);
    CHECK(fd.nx == grid.nx);

    // Worker pool gives the same rows.
    ExperimentResult r3 = run_experiment(cfg, "", 2);
    CHECK(r3.rows[1].mu == r1.rows[1].mu);
}

TEST_CASE("results table records the potential's grid argmax") {
    ExperimentConfig cfg = disk_config(
        "resolutions = 0.2\npotential = 4*exp(-2*(x + 0.35)^2 - y^2)\nbeta = 1\n");
    std::string dir = fresh_dir("peak");
    run_experiment(cfg, dir);

    std::string head = slurp(dir + "/results.csv");
    head = head.substr(0, head.find('\n'));
    double px = 0.0, py = 0.0, pv = 0.0;
    REQUIRE(std::sscanf(head.c_str(), "# potential peak at (%lf, %lf), value %lf",
                        &px, &py, &pv) == 3);
    CHECK(std::abs(px + 0.35) <= 0.2);
    CHECK(std::abs(py) <= 0.1);
    CHECK(pv == doctest::Approx(cfg.potential(px, py)).epsilon(1e-12));
}

TEST_CASE("study measures the disk eigenvalue against the analytic reference") {
    char ref[40];
    std::snprintf(ref, sizeof ref, "reference_mu = %.17g\n", kJ01 * kJ01);
    ExperimentConfig cfg = disk_config("resolutions = 0.15, 0.1\nbeta = 0\npotential = zero\n"
                                       "dt = 10*h\nreport_scale = 2\n" +
                                       std::string(ref));
    std::string dir = fresh_dir("study");
    ConvergenceReport rep = convergence_study(cfg, dir);
    REQUIRE(rep.h.size() == 2);
    CHECK(rep.complete);
    CHECK_FALSE(rep.self_reference);
    CHECK(std::abs(rep.value[1] - kJ01 * kJ01) < 1e-3);
    CHECK(rep.rate > 2.5);
    CHECK(rep.rate < 3.8);
    // the Richardson limit beats the finest value
    CHECK(std::abs(rep.extrapolated - kJ01 * kJ01) < std::abs(rep.value[1] - kJ01 * kJ01));
    std::string study = slurp(dir + "/study.csv");
    CHECK(study.find("external") != std::string::npos);
    CHECK(study.find("# rate = ") == 0);
    CHECK(study.find("extrapolated = ") != std::string::npos);
}

TEST_CASE("study falls back to the finest run as reference") {
    ExperimentConfig cfg = disk_config("resolutions = 0.2, 0.15, 0.1\nbeta = 0\npotential = zero\n"
                                       "dt = 10*h\n");
    ConvergenceReport rep = convergence_study(cfg);
    CHECK(rep.self_reference);
    REQUIRE(rep.h.size() == 2);   // finest excluded from the fit
    CHECK(rep.h[1] == 0.15);
    CHECK(rep.reference == rep.runs.rows[2].mu);
    CHECK(rep.rate > 2.0);
    CHECK(rep.rate < 4.5);
}

TEST_CASE("failed runs are captured, not thrown") {
    ExperimentConfig cfg = disk_config("resolutions = 0.2\nbeta = 0\npotential = sqrt(x)\n");
    ConvergenceReport rep = convergence_study(cfg);
    REQUIRE(rep.runs.rows.size() == 1);
    CHECK_FALSE(rep.runs.rows[0].error.empty());
    CHECK(rep.runs.rows[0].error.find("not finite") != std::string::npos);
    CHECK_FALSE(rep.complete);
    CHECK(std::isnan(rep.rate));
}

TEST_CASE("excited start on a deformed disk is tagged excited-like") {
    // The ellipse splits the dipole degeneracy, so the first excited level is
    // isolated and the flow settles on it before ground contamination can grow.
    std::string body = "shape = ellipse(0.8, 1.1)\nbox = -1.5, -1.5, 1.5, 1.5\n"
                       "resolutions = 0.125\nbeta = 0.5\npotential = zero\n";
    ExperimentConfig cfg = parse_config(body + "excited_k = 1\n");
    RunRecord rec = run_single(cfg, 0.125);
    CHECK(rec.converged);
    CHECK(rec.tag == "excited-like");
    CHECK(rec.min_u < -0.1);                       // genuinely sign-changing
    CHECK(rec.min_u == doctest::Approx(-rec.max_u).epsilon(1e-6));
    RunRecord ground = run_single(parse_config(body), 0.125);
    CHECK(ground.tag == "ground");
    CHECK(rec.mu > ground.mu + 2.0);
}
