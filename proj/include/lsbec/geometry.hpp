#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lsbec {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// Uniform node-centered grid: node (i,j) sits at (x0 + i h, y0 + j h).
struct Grid2D {
    double x0 = 0.0;
    double y0 = 0.0;
    double h = 1.0;
    int nx = 0;
    int ny = 0;

    double x(int i) const { return x0 + i * h; }
    double y(int j) const { return y0 + j * h; }
    int idx(int i, int j) const { return j * nx + i; }
    int size() const { return nx * ny; }
};

// Grid covering at least [x0,x1] x [y0,y1]; the far edge is pushed outward to
// the next multiple of h when the extent is not an exact multiple.
Grid2D make_grid(double x0, double y0, double x1, double y1, double h);

// Closed shape described by signed distance, negative inside.
struct Shape {
    enum class Kind { circle, ellipse, rectangle, lshape, sector, difference, intersection, analytic };
    Kind kind = Kind::circle;
    std::vector<double> p;
    std::vector<Shape> children;
    std::function<double(double, double)> fn;

    static Shape circle(double cx, double cy, double r);
    static Shape ellipse(double a, double b);                    // semi-axes, centered at 0
    static Shape rectangle(double x0, double y0, double x1, double y1);
    // outer rectangle minus its upper-right corner piece [qx,x1] x [qy,y1]
    static Shape lshape(double x0, double y0, double x1, double y1, double qx, double qy);
    // apex at the origin, bisector along +x, opening angle in radians (0, pi)
    static Shape sector(double radius, double opening);
    static Shape difference(Shape a, Shape b);
    static Shape intersection(Shape a, Shape b);
    static Shape analytic(std::function<double(double, double)> f);
};

// Exact for circle/rectangle/lshape/sector and the ellipse (Newton projection);
// CSG nodes use the max composition, which is a usable level set but not an
// exact distance in shadow regions.
double signed_distance(const Shape& s, double x, double y);

struct LevelSetField {
    Grid2D grid;
    std::vector<double> phi;   // one value per node
};

LevelSetField build_level_set(const Grid2D& grid, const Shape& shape);

enum class NodeClass : uint8_t { exterior = 0, regular, irregular, ghost1, ghost2, pinned };

struct GridClassification {
    Grid2D grid;
    std::vector<NodeClass> mask;        // per node
    std::vector<int> regular_nodes;     // ascending linear indices throughout
    std::vector<int> irregular_nodes;   // pinned nodes excluded
    std::vector<int> interior_nodes;    // regular + irregular, the unknown ordering
    std::vector<int> ghost1_nodes;
    std::vector<int> ghost2_nodes;
    std::vector<int> ghost_nodes;       // ghost1 + ghost2 combined ordering
    std::vector<int> pinned_nodes;
    std::vector<int> interior_index;    // node -> position in interior_nodes, -1 outside
    std::vector<int> irregular_index;   // node -> position in irregular_nodes, -1 outside
    std::vector<int> ghost_index;       // node -> position in ghost_nodes, -1 outside
};

// Splits nodes by the sign of phi and stencil adjacency. Interior nodes closer
// to the boundary than pin_tol*h are pinned to zero and dropped from the
// irregular ordering (they would blow up the boundary gain factors).
// Requires the outer two node rings of the box to be exterior.
GridClassification classify(const Grid2D& grid, const LevelSetField& ls, double pin_tol = 1e-3);

struct GeometryFields {
    Grid2D grid;
    double band_width = 0.0;
    std::vector<uint8_t> in_band;       // per node
    std::vector<double> normal_x;       // unit outward normal, band nodes only
    std::vector<double> normal_y;
    std::vector<double> kappa;          // level-set curvature, band nodes only
    std::vector<double> kappa_dn;       // grad(kappa).n where all four neighbors are banded
    std::vector<uint8_t> has_kappa_dn;
};

// Centered differences of phi inside the band |phi| <= band_width (one-sided at
// the box rim). band_width <= 0 picks the default 3h. curvature_cutoff > 0
// clamps |kappa| at cutoff/h.
GeometryFields geometry_fields(const Grid2D& grid, const LevelSetField& ls,
                               double band_width = 0.0, double curvature_cutoff = 0.0);

// First-order projection p - phi(p) n(p) with phi, n interpolated bilinearly.
// p must lie in the geometry band.
Vec2 project_to_boundary(const Vec2& p, const LevelSetField& ls, const GeometryFields& gf);

} // namespace lsbec
