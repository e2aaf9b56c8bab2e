#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "lsbec/extension.hpp"

using namespace lsbec;

namespace {

struct Setup {
    Grid2D grid;
    LevelSetField ls;
    GridClassification cls;
    GeometryFields gf;
};

Setup circle_setup(double h, double r = 1.0) {
    Setup s;
    s.grid = make_grid(-2.0, -2.0, 2.0, 2.0, h);
    s.ls = build_level_set(s.grid, Shape::circle(0.0, 0.0, r));
    s.cls = classify(s.grid, s.ls);
    s.gf = geometry_fields(s.grid, s.ls);
    return s;
}

// worst ghost-node reconstruction error for the field u = phi - phi^2/2,
// whose boundary map with the disk curvature kappa=1 is exact
double ghost_error(const Setup& s, int order) {
    GhostMap gm = build_ghost_map(s.cls, s.ls, s.gf, order);
    std::vector<double> u_irr(s.cls.irregular_nodes.size());
    for (size_t k = 0; k < u_irr.size(); ++k) {
        double p = s.ls.phi[s.cls.irregular_nodes[k]];
        u_irr[k] = p - 0.5 * p * p;
    }
    std::vector<double> u_g(s.cls.ghost_nodes.size());
    gm.M.apply(u_irr.data(), u_g.data());
    double err = 0.0;
    for (size_t p = 0; p < u_g.size(); ++p) {
        double ph = s.ls.phi[s.cls.ghost_nodes[p]];
        err = std::max(err, std::abs(u_g[p] - (ph - 0.5 * ph * ph)));
    }
    return err;
}

} // namespace

TEST_CASE("transport extension preserves constants") {
    Setup s = circle_setup(0.05);
    std::vector<double> field(s.grid.size(), 0.0);
    for (int n : s.cls.irregular_nodes) field[n] = 1.0;
    extend_field(s.cls, s.ls, field);
    for (int n : s.cls.ghost_nodes) CHECK(std::abs(field[n] - 1.0) < 1e-9);
}

TEST_CASE("extension matrix is a convex combination of boundary data") {
    Grid2D g = make_grid(-2.0, -2.0, 2.0, 2.0, 0.05);
    LevelSetField ls = build_level_set(g, Shape::ellipse(1.5, 1.0));
    GridClassification cls = classify(g, ls);
    SparseMatrix A = build_extension_matrix(cls, ls);
    CHECK(A.rows == (int)cls.ghost_nodes.size());
    CHECK(A.cols == (int)cls.irregular_nodes.size());
    for (int r = 0; r < A.rows; ++r) {
        double sum = 0.0;
        CHECK(A.row_ptr[r + 1] > A.row_ptr[r]);
        for (int q = A.row_ptr[r]; q < A.row_ptr[r + 1]; ++q) {
            CHECK(A.vals[q] >= 0.0);
            sum += A.vals[q];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("linear ghost map reproduces u = -phi exactly") {
    Setup s = circle_setup(0.05);
    GhostMap gm = build_ghost_map(s.cls, s.ls, s.gf, 1);
    std::vector<double> u_irr(s.cls.irregular_nodes.size());
    for (size_t k = 0; k < u_irr.size(); ++k) u_irr[k] = -s.ls.phi[s.cls.irregular_nodes[k]];
    std::vector<double> u_g(s.cls.ghost_nodes.size());
    gm.M.apply(u_irr.data(), u_g.data());
    for (size_t p = 0; p < u_g.size(); ++p)
        CHECK(u_g[p] == doctest::Approx(-s.ls.phi[s.cls.ghost_nodes[p]]).epsilon(1e-8));
}

TEST_CASE("cubic ghost map converges at third order, linear at second") {
    double e3[3], e1[3];
    double hs[3] = {0.1, 0.05, 0.025};
    for (int k = 0; k < 3; ++k) {
        Setup s = circle_setup(hs[k]);
        e3[k] = ghost_error(s, 3);
        e1[k] = ghost_error(s, 1);
    }
    double slope3 = std::log2(e3[0] / e3[2]) / 2.0;
    double slope1 = std::log2(e1[0] / e1[2]) / 2.0;
    std::printf("ghost map error: cubic %.3e %.3e %.3e (slope %.2f), linear %.3e %.3e %.3e (slope %.2f)\n",
                e3[0], e3[1], e3[2], slope3, e1[0], e1[1], e1[2], slope1);
    CHECK(slope3 >= 2.7);
    CHECK(slope1 >= 1.7);
    CHECK(e3[2] < e1[2]);
}

TEST_CASE("matrix route agrees with the transport route") {
    Setup s = circle_setup(0.05);
    ExtensionConfig tight{1e-15, 500};
    size_t ni = s.cls.irregular_nodes.size(), ng = s.cls.ghost_nodes.size();
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> u(ni);
    for (double& v : u) v = dist(rng);

    for (int order : {1, 3}) {
        GhostMap gm = build_ghost_map(s.cls, s.ls, s.gf, order, tight);
        std::vector<double> via_matrix(ng);
        gm.M.apply(u.data(), via_matrix.data());

        DiagonalFactors f = build_diagonal_factors(s.cls, s.ls, s.gf, order);
        std::vector<double> v_field(s.grid.size(), 0.0), cv_field(s.grid.size(), 0.0);
        for (size_t k = 0; k < ni; ++k) {
            int n = s.cls.irregular_nodes[k];
            v_field[n] = u[k] * f.g[k];
            cv_field[n] = f.c[k] * u[k] * f.g[k];
        }
        extend_field(s.cls, s.ls, v_field, tight);
        if (order == 3) extend_field(s.cls, s.ls, cv_field, tight);
        for (size_t p = 0; p < ng; ++p) {
            int n = s.cls.ghost_nodes[p];
            double ph = s.ls.phi[n];
            double via_transport = order == 1 ? ph * v_field[n]
                                              : ph * v_field[n] - 0.5 * ph * ph * cv_field[n];
            CHECK(std::abs(via_matrix[p] - via_transport) < 1e-12);
        }
    }
}

TEST_CASE("extension matrix build is deterministic and round-trips through text") {
    Setup s = circle_setup(0.1);
    SparseMatrix a = build_extension_matrix(s.cls, s.ls);
    SparseMatrix b = build_extension_matrix(s.cls, s.ls);
    CHECK(a.vals == b.vals);
    CHECK(a.col_idx == b.col_idx);
    CHECK(a.row_ptr == b.row_ptr);

    std::string path = "/tmp/lsbec_ext_roundtrip.txt";
    save_triplets(a, path);
    SparseMatrix c = load_triplets(path);
    CHECK(c.vals == a.vals);
    CHECK(c.col_idx == a.col_idx);
    std::remove(path.c_str());
}

TEST_CASE("boundary map factors on a coarse disk") {
    Grid2D g = make_grid(-3.0, -3.0, 3.0, 3.0, 1.0);
    LevelSetField ls = build_level_set(g, Shape::circle(0.0, 0.0, 1.2));
    GridClassification cls = classify(g, ls);
    GeometryFields gf = geometry_fields(g, ls, 1.0);

    DiagonalFactors lin = build_diagonal_factors(cls, ls, gf, 1);
    int k = cls.irregular_index[g.idx(4, 3)];   // node (1, 0), phi = -0.2
    REQUIRE(k >= 0);
    CHECK(lin.g[k] == doctest::Approx(-5.0).epsilon(1e-12));

    DiagonalFactors cub = build_diagonal_factors(cls, ls, gf, 3);
    double c_expect = 2.0 * (std::sqrt(2.0) - 1.0);   // centered-difference curvature at (1,0)
    CHECK(cub.c[k] == doctest::Approx(c_expect).epsilon(1e-12));
    CHECK(cub.g[k] == doctest::Approx(1.0 / (-0.2 * (1.0 - 0.5 * c_expect * -0.2))).epsilon(1e-12));

    int p = cls.ghost_index[g.idx(5, 3)];   // ghost node (2, 0)
    REQUIRE(p >= 0);
    CHECK(cub.phi_ghost[p] == doctest::Approx(0.8).epsilon(1e-12));

    // factors at all irregular nodes of a resolved disk sit near the true curvature
    Setup s = circle_setup(0.05);
    DiagonalFactors f = build_diagonal_factors(s.cls, s.ls, s.gf, 3);
    for (double c : f.c) CHECK(std::abs(c - 1.0) < 5e-2);
}

TEST_CASE("sweep budget violation throws") {
    Setup s = circle_setup(0.05);
    std::vector<double> field(s.grid.size(), 0.0);
    for (int n : s.cls.irregular_nodes) field[n] = 1.0;
    CHECK_THROWS(extend_field(s.cls, s.ls, field, ExtensionConfig{1e-12, 1}));
}

TEST_CASE("fully pinned boundary yields an empty extension") {
    Grid2D g = make_grid(-3.0, -3.0, 3.0, 3.0, 1.0);
    LevelSetField ls = build_level_set(g, Shape::circle(0.0, 0.0, 1.0 + 1e-4));
    GridClassification cls = classify(g, ls);
    REQUIRE(cls.irregular_nodes.empty());
    SparseMatrix A = build_extension_matrix(cls, ls);
    CHECK(A.rows == (int)cls.ghost_nodes.size());
    CHECK(A.cols == 0);
    CHECK(A.nnz() == 0);
    std::vector<double> field(g.size(), 0.0);
    extend_field(cls, ls, field);   // converges immediately, everything stays zero
    for (int n : cls.ghost_nodes) CHECK(field[n] == 0.0);
}
