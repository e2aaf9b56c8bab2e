#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "lsbec/geometry.hpp"

using namespace lsbec;

namespace {

// slow distance-to-ellipse oracle: dense parameter scan plus local refinement
double ellipse_distance_scan(double a, double b, double x, double y) {
    double best = 1e300, tbest = 0.0;
    const int n = 20000;
    for (int k = 0; k <= n; ++k) {
        double t = 2.0 * M_PI * k / n;
        double d = std::hypot(x - a * std::cos(t), y - b * std::sin(t));
        if (d < best) { best = d; tbest = t; }
    }
    double lo = tbest - 2.0 * M_PI / n, hi = tbest + 2.0 * M_PI / n;
    for (int it = 0; it < 200; ++it) {
        double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        double d1 = std::hypot(x - a * std::cos(m1), y - b * std::sin(m1));
        double d2 = std::hypot(x - a * std::cos(m2), y - b * std::sin(m2));
        if (d1 < d2) hi = m2; else lo = m1;
    }
    double t = 0.5 * (lo + hi);
    return std::hypot(x - a * std::cos(t), y - b * std::sin(t));
}

std::set<std::pair<int, int>> node_set(const Grid2D& g, const std::vector<int>& nodes) {
    std::set<std::pair<int, int>> s;
    for (int n : nodes) s.insert({n % g.nx, n / g.nx});
    return s;
}

} // namespace

TEST_CASE("make_grid covers the requested box") {
    Grid2D g = make_grid(0.0, 0.0, 1.0, 1.0, 0.25);
    CHECK(g.nx == 5);
    CHECK(g.ny == 5);
    CHECK(g.x(g.nx - 1) == doctest::Approx(1.0).epsilon(1e-14));

    Grid2D g2 = make_grid(0.0, 0.0, 1.0, 1.0, 0.3);
    CHECK(g2.nx == 5);
    CHECK(g2.x(g2.nx - 1) >= 1.0);   // far edge pushed outward
}

TEST_CASE("circle and rectangle signed distances are exact") {
    Shape c = Shape::circle(0.5, -0.25, 2.0);
    CHECK(signed_distance(c, 0.5, -0.25) == doctest::Approx(-2.0));
    CHECK(signed_distance(c, 3.5, -0.25) == doctest::Approx(1.0));

    Shape r = Shape::rectangle(-1.0, -1.0, 1.0, 1.0);
    CHECK(signed_distance(r, 0.0, 0.0) == doctest::Approx(-1.0));
    CHECK(signed_distance(r, 0.5, 0.9) == doctest::Approx(-0.1));
    CHECK(signed_distance(r, 2.0, 0.0) == doctest::Approx(1.0));
    CHECK(signed_distance(r, 2.0, 2.0) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("lshape signed distance handles the reentrant corner") {
    Shape s = Shape::lshape(-1.0, -1.0, 1.0, 1.0, 0.0, 0.0);
    CHECK(signed_distance(s, 0.5, 0.5) == doctest::Approx(0.5));     // removed quadrant
    CHECK(signed_distance(s, 0.2, 0.1) == doctest::Approx(0.1));
    CHECK(signed_distance(s, -0.5, 0.5) == doctest::Approx(-0.5));
    CHECK(signed_distance(s, -0.5, -0.5) == doctest::Approx(-0.5));
    CHECK(signed_distance(s, 1.5, -0.5) == doctest::Approx(0.5));
    CHECK(signed_distance(s, 0.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("ellipse signed distance matches a dense scan oracle") {
    double a = 1.5, b = 2.0;
    Shape s = Shape::ellipse(a, b);
    CHECK(signed_distance(s, 0.0, 0.0) == doctest::Approx(-1.5).epsilon(1e-12));

    const double pts[][2] = {{0.3, 0.4},  {2.0, 1.0},  {1.0, 1.9},   {0.0, 2.5},
                             {1.4, 0.0},  {0.0, 0.5},  {-0.7, -1.2}, {1.49, 0.05},
                             {3.0, -2.0}, {0.05, 1.99}};
    for (auto& p : pts) {
        double d = signed_distance(s, p[0], p[1]);
        double ref = ellipse_distance_scan(a, b, p[0], p[1]);
        CHECK(std::abs(d) == doctest::Approx(ref).epsilon(0).scale(1).epsilon(1e-9));
        bool inside = (p[0] / a) * (p[0] / a) + (p[1] / b) * (p[1] / b) < 1.0;
        CHECK((d < 0.0) == inside);
    }

    // interior point near the major axis where the foot is not a vertex
    double d = signed_distance(s, 0.0, 0.5);
    double th = std::asin(b * 0.5 / (b * b - a * a));
    double ref = std::hypot(a * std::cos(th), b * std::sin(th) - 0.5);
    CHECK(d == doctest::Approx(-ref).epsilon(1e-12));
}

TEST_CASE("sector signed distance") {
    double R = 1.5, opening = 2.0 * M_PI / 3.0;
    Shape s = Shape::sector(R, opening);
    CHECK(signed_distance(s, 0.0, 0.0) == doctest::Approx(0.0));
    CHECK(signed_distance(s, 0.75, 0.0) == doctest::Approx(-0.75 * std::sin(M_PI / 3.0)));
    CHECK(signed_distance(s, 3.0, 0.0) == doctest::Approx(1.5));
    CHECK(signed_distance(s, -0.4, 0.0) == doctest::Approx(0.4));
    double edge = std::abs(0.5 * std::sin(M_PI / 3.0) - 1.0 * std::cos(M_PI / 3.0));
    CHECK(signed_distance(s, 0.5, 1.0) == doctest::Approx(edge));
    CHECK(signed_distance(s, 0.5, -1.0) == doctest::Approx(edge));   // mirror symmetry
}

TEST_CASE("csg difference builds a crescent") {
    Shape s = Shape::difference(Shape::circle(0.0, 0.0, 0.9), Shape::circle(0.4, 0.0, 0.7));
    CHECK(signed_distance(s, -0.5, 0.0) == doctest::Approx(-0.2));
    CHECK(signed_distance(s, 0.4, 0.0) == doctest::Approx(0.7));    // inside the hole
    CHECK(signed_distance(s, 1.2, 0.0) == doctest::Approx(0.3));    // outside everything
    CHECK(signed_distance(s, -0.85, 0.0) < 0.0);
}

TEST_CASE("classification on a coarse disk") {
    Grid2D g = make_grid(-3.0, -3.0, 3.0, 3.0, 1.0);
    LevelSetField ls = build_level_set(g, Shape::circle(0.0, 0.0, 1.2));
    GridClassification c = classify(g, ls);

    CHECK(c.interior_nodes.size() == 5);
    CHECK(c.regular_nodes.size() == 1);
    CHECK(c.irregular_nodes.size() == 4);
    CHECK(c.pinned_nodes.empty());

    auto reg = node_set(g, c.regular_nodes);
    CHECK(reg == std::set<std::pair<int, int>>{{3, 3}});
    auto irr = node_set(g, c.irregular_nodes);
    CHECK(irr == std::set<std::pair<int, int>>{{2, 3}, {4, 3}, {3, 2}, {3, 4}});
    auto g1 = node_set(g, c.ghost1_nodes);
    CHECK(g1 == std::set<std::pair<int, int>>{
                    {1, 3}, {5, 3}, {3, 1}, {3, 5}, {2, 2}, {2, 4}, {4, 2}, {4, 4}});
    auto g2 = node_set(g, c.ghost2_nodes);
    CHECK(g2 == std::set<std::pair<int, int>>{{0, 3}, {6, 3}, {3, 0}, {3, 6},
                                              {1, 2}, {1, 4}, {5, 2}, {5, 4},
                                              {2, 1}, {4, 1}, {2, 5}, {4, 5}});

    // index maps invert the orderings
    for (size_t k = 0; k < c.interior_nodes.size(); ++k)
        CHECK(c.interior_index[c.interior_nodes[k]] == (int)k);
    for (size_t k = 0; k < c.ghost_nodes.size(); ++k)
        CHECK(c.ghost_index[c.ghost_nodes[k]] == (int)k);
    CHECK(c.ghost_nodes.size() == c.ghost1_nodes.size() + c.ghost2_nodes.size());
}

TEST_CASE("classification matches a brute-force reimplementation") {
    Grid2D g = make_grid(-2.0, -2.0, 2.0, 2.0, 0.1);
    LevelSetField ls = build_level_set(g, Shape::circle(0.0, 0.0, 1.0));
    GridClassification c = classify(g, ls);
    CHECK(c.interior_nodes.size() == 305);   // lattice points with x^2+y^2 < 1

    auto inside = [&](int i, int j) { return ls.phi[g.idx(i, j)] < 0.0; };
    int n_reg = 0, n_irr = 0, n_pin = 0, n_g1 = 0, n_g2 = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            NodeClass m = c.mask[g.idx(i, j)];
            if (inside(i, j)) {
                bool reg = inside(i - 1, j) && inside(i + 1, j) && inside(i, j - 1) && inside(i, j + 1);
                bool pin = !reg && std::abs(ls.phi[g.idx(i, j)]) < 1e-3 * g.h;
                CHECK(m == (reg ? NodeClass::regular : pin ? NodeClass::pinned : NodeClass::irregular));
                if (reg) ++n_reg; else if (pin) ++n_pin; else ++n_irr;
            } else {
                bool near_irr = false, near_g1 = false;
                for (auto [di, dj] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
                    int a = i + di, b = j + dj;
                    if (a < 0 || b < 0 || a >= g.nx || b >= g.ny) continue;
                    if (inside(a, b) && !(inside(a - 1, b) && inside(a + 1, b) && inside(a, b - 1) &&
                                          inside(a, b + 1)))
                        near_irr = true;
                }
                if (near_irr) {
                    CHECK(m == NodeClass::ghost1);
                    ++n_g1;
                    continue;
                }
                for (auto [di, dj] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
                    int a = i + di, b = j + dj;
                    if (a < 0 || b < 0 || a >= g.nx || b >= g.ny) continue;
                    if (c.mask[g.idx(a, b)] == NodeClass::ghost1) near_g1 = true;
                }
                CHECK(m == (near_g1 ? NodeClass::ghost2 : NodeClass::exterior));
                if (near_g1) ++n_g2;
            }
        }
    CHECK(n_reg == (int)c.regular_nodes.size());
    CHECK(n_irr == (int)c.irregular_nodes.size());
    CHECK(n_pin == (int)c.pinned_nodes.size());
    CHECK(n_g1 == (int)c.ghost1_nodes.size());
    CHECK(n_g2 == (int)c.ghost2_nodes.size());
}

TEST_CASE("near-zero boundary nodes are pinned") {
    Grid2D g = make_grid(-3.0, -3.0, 3.0, 3.0, 1.0);
    LevelSetField ls = build_level_set(g, Shape::circle(0.0, 0.0, 1.0 + 1e-4));
    GridClassification c = classify(g, ls);
    CHECK(c.pinned_nodes.size() == 4);
    CHECK(c.irregular_nodes.empty());
    CHECK(c.interior_nodes.size() == 1);
    CHECK(c.ghost1_nodes.size() == 8);   // ghost layers keyed on sign, not pinning
}

TEST_CASE("classification rejects domains touching the box rim") {
    Grid2D g = make_grid(-3.0, -3.0, 3.0, 3.0, 1.0);
    LevelSetField ls = build_level_set(g, Shape::circle(0.0, 0.0, 2.9));
    CHECK_THROWS(classify(g, ls));
}

TEST_CASE("geometry fields recover circle normals and curvature") {
    Grid2D g = make_grid(-2.0, -2.0, 2.0, 2.0, 0.05);
    LevelSetField ls = build_level_set(g, Shape::circle(0.0, 0.0, 1.0));
    GeometryFields gf = geometry_fields(g, ls);
    CHECK(gf.band_width == doctest::Approx(0.15));

    int banded = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int n = g.idx(i, j);
            if (!gf.in_band[n]) continue;
            ++banded;
            double r = std::hypot(g.x(i), g.y(j));
            CHECK(std::abs(gf.normal_x[n] - g.x(i) / r) < 5e-3);
            CHECK(std::abs(gf.normal_y[n] - g.y(j) / r) < 5e-3);
            CHECK(std::abs(gf.kappa[n] - 1.0 / r) < 1e-2);
        }
    CHECK(banded > 100);

    // kappa at a chosen radius inside a widened band
    Grid2D gw = make_grid(-2.0, -2.0, 2.0, 2.0, 0.25);
    LevelSetField lw = build_level_set(gw, Shape::circle(0.0, 0.0, 1.0));
    GeometryFields gfw = geometry_fields(gw, lw, 0.9);   // keep the r=0 gradient singularity out
    int n = gw.idx(15, 8);   // node (1.75, 0)
    CHECK(gw.x(15) == doctest::Approx(1.75));
    CHECK(gfw.in_band[n] == 1);
    CHECK(gfw.kappa[n] == doctest::Approx(1.0 / 1.75).epsilon(0).scale(0).epsilon(2e-2 * 1.75));
}

TEST_CASE("curvature vanishes at a straight edge and can be clamped") {
    Grid2D g = make_grid(-2.0, -2.0, 2.0, 2.0, 0.1);
    LevelSetField ls = build_level_set(g, Shape::rectangle(-1.0, -1.0, 1.0, 1.0));
    GeometryFields gf = geometry_fields(g, ls);
    int n = g.idx(30, 20);   // node (1.0, 0.0), mid right edge
    CHECK(g.x(30) == doctest::Approx(1.0));
    CHECK(gf.in_band[n] == 1);
    CHECK(std::abs(gf.kappa[n]) < 1e-10);

    // corner curvature is huge; the cutoff caps it at cutoff/h
    GeometryFields gc = geometry_fields(g, ls, 0.0, 2.0);
    double kmax = 0.0;
    for (int k = 0; k < g.size(); ++k)
        if (gc.in_band[k]) kmax = std::max(kmax, std::abs(gc.kappa[k]));
    CHECK(kmax <= 2.0 / g.h + 1e-12);
    bool capped = false;
    for (int k = 0; k < g.size(); ++k)
        if (gc.in_band[k] && std::abs(gc.kappa[k]) == 2.0 / g.h) capped = true;
    CHECK(capped);
}

TEST_CASE("flat level set triggers the gradient guard") {
    Grid2D g = make_grid(-1.0, -1.0, 1.0, 1.0, 0.25);
    LevelSetField ls = build_level_set(g, Shape::analytic([](double, double) { return -0.5; }));
    CHECK_THROWS(geometry_fields(g, ls, 1.0));
}

TEST_CASE("normal derivative of curvature on a disk") {
    // kappa = 1/r so grad(kappa).n = -1/r^2
    Grid2D g = make_grid(-2.0, -2.0, 2.0, 2.0, 0.05);
    LevelSetField ls = build_level_set(g, Shape::circle(0.0, 0.0, 1.0));
    GeometryFields gf = geometry_fields(g, ls);
    int n = g.idx(60, 40);   // node (1.0, 0.0)
    CHECK(gf.has_kappa_dn[n] == 1);
    CHECK(gf.kappa_dn[n] == doctest::Approx(-1.0).epsilon(2e-2));
}

TEST_CASE("projection lands on the boundary") {
    Grid2D g = make_grid(-2.0, -2.0, 2.0, 2.0, 0.05);
    Shape circ = Shape::circle(0.0, 0.0, 1.0);
    LevelSetField ls = build_level_set(g, circ);
    GeometryFields gf = geometry_fields(g, ls, 0.5);
    Vec2 q = project_to_boundary({1.2, 0.0}, ls, gf);
    CHECK(q.x == doctest::Approx(1.0).epsilon(0).scale(0).epsilon(1e-3));
    CHECK(std::abs(q.y) < 1e-9);

    Shape ell = Shape::ellipse(1.5, 1.0);
    LevelSetField le = build_level_set(g, ell);
    GeometryFields ge = geometry_fields(g, le, 0.5);
    Vec2 p = project_to_boundary({1.6, 0.1}, le, ge);
    CHECK(std::abs(signed_distance(ell, p.x, p.y)) < 1e-3);
}
