#include "lsbec/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lsbec {

Grid2D make_grid(double x0, double y0, double x1, double y1, double h) {
    if (!(h > 0.0)) throw std::runtime_error("make_grid: h must be positive");
    if (!(x1 > x0) || !(y1 > y0)) throw std::runtime_error("make_grid: empty box");
    Grid2D g;
    g.x0 = x0;
    g.y0 = y0;
    g.h = h;
    g.nx = (int)std::ceil((x1 - x0) / h - 1e-9) + 1;
    g.ny = (int)std::ceil((y1 - y0) / h - 1e-9) + 1;
    if (g.nx < 5 || g.ny < 5) throw std::runtime_error("make_grid: grid needs at least 5 nodes per side");
    if ((long long)g.nx * g.ny > 4'000'000)
        throw std::runtime_error("make_grid: grid larger than 4M nodes, refusing");
    return g;
}

Shape Shape::circle(double cx, double cy, double r) {
    if (!(r > 0.0)) throw std::runtime_error("circle: radius must be positive");
    Shape s;
    s.kind = Kind::circle;
    s.p = {cx, cy, r};
    return s;
}

Shape Shape::ellipse(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::runtime_error("ellipse: semi-axes must be positive");
    Shape s;
    s.kind = Kind::ellipse;
    s.p = {a, b};
    return s;
}

Shape Shape::rectangle(double x0, double y0, double x1, double y1) {
    if (!(x1 > x0) || !(y1 > y0)) throw std::runtime_error("rectangle: empty rectangle");
    Shape s;
    s.kind = Kind::rectangle;
    s.p = {x0, y0, x1, y1};
    return s;
}

Shape Shape::lshape(double x0, double y0, double x1, double y1, double qx, double qy) {
    if (!(x1 > x0) || !(y1 > y0)) throw std::runtime_error("lshape: empty outer rectangle");
    if (!(qx > x0 && qx < x1 && qy > y0 && qy < y1))
        throw std::runtime_error("lshape: corner (qx,qy) must be strictly inside the outer rectangle");
    Shape s;
    s.kind = Kind::lshape;
    s.p = {x0, y0, x1, y1, qx, qy};
    return s;
}

Shape Shape::sector(double radius, double opening) {
    if (!(radius > 0.0)) throw std::runtime_error("sector: radius must be positive");
    if (!(opening > 0.0 && opening < M_PI))
        throw std::runtime_error("sector: opening angle must lie in (0, pi)");
    Shape s;
    s.kind = Kind::sector;
    s.p = {radius, opening};
    return s;
}

Shape Shape::difference(Shape a, Shape b) {
    Shape s;
    s.kind = Kind::difference;
    s.children = {std::move(a), std::move(b)};
    return s;
}

Shape Shape::intersection(Shape a, Shape b) {
    Shape s;
    s.kind = Kind::intersection;
    s.children = {std::move(a), std::move(b)};
    return s;
}

Shape Shape::analytic(std::function<double(double, double)> f) {
    Shape s;
    s.kind = Kind::analytic;
    s.fn = std::move(f);
    return s;
}

namespace {

double segment_distance(double x, double y, double ax, double ay, double bx, double by) {
    double ex = bx - ax, ey = by - ay;
    double t = ((x - ax) * ex + (y - ay) * ey) / (ex * ex + ey * ey);
    t = std::clamp(t, 0.0, 1.0);
    double dx = x - (ax + t * ex), dy = y - (ay + t * ey);
    return std::hypot(dx, dy);
}

double rectangle_sdf(double x0, double y0, double x1, double y1, double x, double y) {
    double dx = std::max(x0 - x, x - x1);
    double dy = std::max(y0 - y, y - y1);
    if (dx <= 0.0 && dy <= 0.0) return std::max(dx, dy);
    return std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
}

double lshape_sdf(const std::vector<double>& p, double x, double y) {
    double x0 = p[0], y0 = p[1], x1 = p[2], y1 = p[3], qx = p[4], qy = p[5];
    // six boundary edges, counterclockwise
    const double vx[6] = {x0, x1, x1, qx, qx, x0};
    const double vy[6] = {y0, y0, qy, qy, y1, y1};
    double d = 1e300;
    for (int e = 0; e < 6; ++e) {
        int f = (e + 1) % 6;
        d = std::min(d, segment_distance(x, y, vx[e], vy[e], vx[f], vy[f]));
    }
    bool inside = x > x0 && x < x1 && y > y0 && y < y1 && !(x >= qx && y >= qy);
    return inside ? -d : d;
}

// closest-point parameter on the first-quadrant arc of (a cos t, b sin t),
// safeguarded Newton on the stationarity residual
double ellipse_closest_theta(double a, double b, double px, double py, double fx, double fy) {
    auto f = [&](double t) {
        double s = std::sin(t), c = std::cos(t);
        return (b * b - a * a) * s * c + a * px * s - b * py * c;
    };
    auto fp = [&](double t) {
        double s = std::sin(t), c = std::cos(t);
        return (b * b - a * a) * (c * c - s * s) + a * px * c + b * py * s;
    };
    double lo = 0.0, hi = M_PI / 2.0;
    double scale = std::abs(b * b - a * a) + a * px + b * py;
    double t = std::atan2(a * py, b * px);   // angular parameter of the query point
    t = std::clamp(t, lo, hi);
    for (int it = 0; it < 100; ++it) {
        double ft = f(t);
        if (std::abs(ft) <= 1e-13 * scale) return t;
        if (ft < 0.0) lo = t; else hi = t;
        double d = fp(t);
        double tn = (d != 0.0) ? t - ft / d : -1.0;
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        if (hi - lo < 1e-16) return 0.5 * (lo + hi);
        t = tn;
    }
    throw std::runtime_error("ellipse projection: Newton failed to converge at point (" +
                             std::to_string(fx) + ", " + std::to_string(fy) + ")");
}

double ellipse_sdf(double a, double b, double x, double y) {
    double px = std::abs(x), py = std::abs(y);
    double eps = 1e-14 * (a + b);
    double best = 1e300;
    auto consider = [&](double t) {
        double d = std::hypot(px - a * std::cos(t), py - b * std::sin(t));
        best = std::min(best, d);
    };
    if (px <= eps && py <= eps) {
        best = std::min(a, b);
    } else if (px <= eps) {
        consider(M_PI / 2.0);
        if (b > a && b * py < b * b - a * a) consider(std::asin(b * py / (b * b - a * a)));
    } else if (py <= eps) {
        consider(0.0);
        if (a > b && a * px < a * a - b * b) consider(std::acos(a * px / (a * a - b * b)));
    } else {
        consider(ellipse_closest_theta(a, b, px, py, x, y));
        consider(0.0);
        consider(M_PI / 2.0);
    }
    double q = (x / a) * (x / a) + (y / b) * (y / b);
    return q < 1.0 ? -best : best;
}

double sector_sdf(double radius, double opening, double x, double y) {
    double ha = 0.5 * opening;
    double cx = std::sin(ha), cy = std::cos(ha);   // edge direction in (|y|, x) coordinates
    double qx = std::abs(y), qy = x;
    double l = std::hypot(qx, qy) - radius;
    double proj = std::clamp(qx * cx + qy * cy, 0.0, radius);
    double m = std::hypot(qx - cx * proj, qy - cy * proj);
    double side = cy * qx - cx * qy;
    return std::max(l, m * (side < 0.0 ? -1.0 : 1.0));
}

} // namespace

double signed_distance(const Shape& s, double x, double y) {
    switch (s.kind) {
        case Shape::Kind::circle:
            return std::hypot(x - s.p[0], y - s.p[1]) - s.p[2];
        case Shape::Kind::ellipse:
            return ellipse_sdf(s.p[0], s.p[1], x, y);
        case Shape::Kind::rectangle:
            return rectangle_sdf(s.p[0], s.p[1], s.p[2], s.p[3], x, y);
        case Shape::Kind::lshape:
            return lshape_sdf(s.p, x, y);
        case Shape::Kind::sector:
            return sector_sdf(s.p[0], s.p[1], x, y);
        case Shape::Kind::difference:
            return std::max(signed_distance(s.children[0], x, y),
                            -signed_distance(s.children[1], x, y));
        case Shape::Kind::intersection:
            return std::max(signed_distance(s.children[0], x, y),
                            signed_distance(s.children[1], x, y));
        case Shape::Kind::analytic:
            return s.fn(x, y);
    }
    throw std::runtime_error("signed_distance: unknown shape kind");
}

LevelSetField build_level_set(const Grid2D& grid, const Shape& shape) {
    LevelSetField ls;
    ls.grid = grid;
    ls.phi.resize(grid.size());
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            ls.phi[grid.idx(i, j)] = signed_distance(shape, grid.x(i), grid.y(j));
    return ls;
}

GridClassification classify(const Grid2D& grid, const LevelSetField& ls, double pin_tol) {
    if ((int)ls.phi.size() != grid.size()) throw std::runtime_error("classify: level set / grid mismatch");
    const std::vector<double>& phi = ls.phi;
    auto interior = [&](int i, int j) { return phi[grid.idx(i, j)] < 0.0; };

    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            if ((i < 2 || j < 2 || i >= grid.nx - 2 || j >= grid.ny - 2) && interior(i, j))
                throw std::runtime_error(
                    "classify: domain touches the computational box rim (node " + std::to_string(i) +
                    "," + std::to_string(j) + "); enlarge the box");

    GridClassification c;
    c.grid = grid;
    c.mask.assign(grid.size(), NodeClass::exterior);

    for (int j = 1; j < grid.ny - 1; ++j)
        for (int i = 1; i < grid.nx - 1; ++i) {
            if (!interior(i, j)) continue;
            bool reg = interior(i - 1, j) && interior(i + 1, j) && interior(i, j - 1) && interior(i, j + 1);
            int n = grid.idx(i, j);
            if (reg) c.mask[n] = NodeClass::regular;
            else c.mask[n] = std::abs(phi[n]) < pin_tol * grid.h ? NodeClass::pinned : NodeClass::irregular;
        }
    auto irregular_by_sign = [&](int i, int j) {
        NodeClass m = c.mask[grid.idx(i, j)];
        return m == NodeClass::irregular || m == NodeClass::pinned;
    };
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            int n = grid.idx(i, j);
            if (c.mask[n] != NodeClass::exterior) continue;
            bool g1 = (i > 0 && irregular_by_sign(i - 1, j)) || (i < grid.nx - 1 && irregular_by_sign(i + 1, j)) ||
                      (j > 0 && irregular_by_sign(i, j - 1)) || (j < grid.ny - 1 && irregular_by_sign(i, j + 1));
            if (g1) c.mask[n] = NodeClass::ghost1;
        }
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            int n = grid.idx(i, j);
            if (c.mask[n] != NodeClass::exterior) continue;
            auto is_g1 = [&](int a, int b) { return c.mask[grid.idx(a, b)] == NodeClass::ghost1; };
            bool g2 = (i > 0 && is_g1(i - 1, j)) || (i < grid.nx - 1 && is_g1(i + 1, j)) ||
                      (j > 0 && is_g1(i, j - 1)) || (j < grid.ny - 1 && is_g1(i, j + 1));
            if (g2) c.mask[n] = NodeClass::ghost2;
        }

    c.interior_index.assign(grid.size(), -1);
    c.irregular_index.assign(grid.size(), -1);
    c.ghost_index.assign(grid.size(), -1);
    for (int n = 0; n < grid.size(); ++n) {
        switch (c.mask[n]) {
            case NodeClass::regular:
                c.regular_nodes.push_back(n);
                c.interior_index[n] = (int)c.interior_nodes.size();
                c.interior_nodes.push_back(n);
                break;
            case NodeClass::irregular:
                c.irregular_index[n] = (int)c.irregular_nodes.size();
                c.irregular_nodes.push_back(n);
                c.interior_index[n] = (int)c.interior_nodes.size();
                c.interior_nodes.push_back(n);
                break;
            case NodeClass::ghost1:
                c.ghost1_nodes.push_back(n);
                c.ghost_index[n] = (int)c.ghost_nodes.size();
                c.ghost_nodes.push_back(n);
                break;
            case NodeClass::ghost2:
                c.ghost2_nodes.push_back(n);
                c.ghost_index[n] = (int)c.ghost_nodes.size();
                c.ghost_nodes.push_back(n);
                break;
            case NodeClass::pinned:
                c.pinned_nodes.push_back(n);
                break;
            case NodeClass::exterior:
                break;
        }
    }
    if (c.interior_nodes.empty()) throw std::runtime_error("classify: no interior nodes; domain unresolved");
    return c;
}

GeometryFields geometry_fields(const Grid2D& grid, const LevelSetField& ls,
                               double band_width, double curvature_cutoff) {
    if ((int)ls.phi.size() != grid.size())
        throw std::runtime_error("geometry_fields: level set / grid mismatch");
    GeometryFields gf;
    gf.grid = grid;
    gf.band_width = band_width > 0.0 ? band_width : 3.0 * grid.h;
    gf.in_band.assign(grid.size(), 0);
    gf.normal_x.assign(grid.size(), 0.0);
    gf.normal_y.assign(grid.size(), 0.0);
    gf.kappa.assign(grid.size(), 0.0);
    gf.kappa_dn.assign(grid.size(), 0.0);
    gf.has_kappa_dn.assign(grid.size(), 0);

    const std::vector<double>& phi = ls.phi;
    double h = grid.h;
    // one-sided fallbacks keep the rim usable when the exterior margin is thin
    auto dx = [&](int i, int j) {
        if (i > 0 && i < grid.nx - 1) return (phi[grid.idx(i + 1, j)] - phi[grid.idx(i - 1, j)]) / (2 * h);
        if (i == 0) return (-3 * phi[grid.idx(0, j)] + 4 * phi[grid.idx(1, j)] - phi[grid.idx(2, j)]) / (2 * h);
        return (3 * phi[grid.idx(i, j)] - 4 * phi[grid.idx(i - 1, j)] + phi[grid.idx(i - 2, j)]) / (2 * h);
    };
    auto dy = [&](int i, int j) {
        if (j > 0 && j < grid.ny - 1) return (phi[grid.idx(i, j + 1)] - phi[grid.idx(i, j - 1)]) / (2 * h);
        if (j == 0) return (-3 * phi[grid.idx(i, 0)] + 4 * phi[grid.idx(i, 1)] - phi[grid.idx(i, 2)]) / (2 * h);
        return (3 * phi[grid.idx(i, j)] - 4 * phi[grid.idx(i, j - 1)] + phi[grid.idx(i, j - 2)]) / (2 * h);
    };
    auto dxx = [&](int i, int j) {
        int a = std::clamp(i, 1, grid.nx - 2);
        return (phi[grid.idx(a - 1, j)] - 2 * phi[grid.idx(a, j)] + phi[grid.idx(a + 1, j)]) / (h * h);
    };
    auto dyy = [&](int i, int j) {
        int b = std::clamp(j, 1, grid.ny - 2);
        return (phi[grid.idx(i, b - 1)] - 2 * phi[grid.idx(i, b)] + phi[grid.idx(i, b + 1)]) / (h * h);
    };
    auto dxy = [&](int i, int j) {
        int a = std::clamp(i, 1, grid.nx - 2), b = std::clamp(j, 1, grid.ny - 2);
        return (phi[grid.idx(a + 1, b + 1)] - phi[grid.idx(a + 1, b - 1)] - phi[grid.idx(a - 1, b + 1)] +
                phi[grid.idx(a - 1, b - 1)]) /
               (4 * h * h);
    };

    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            int n = grid.idx(i, j);
            if (std::abs(phi[n]) > gf.band_width) continue;
            gf.in_band[n] = 1;
            double px = dx(i, j), py = dy(i, j);
            double g = std::hypot(px, py);
            if (g < 1e-8)
                throw std::runtime_error("geometry_fields: vanishing level-set gradient at node (" +
                                         std::to_string(i) + "," + std::to_string(j) + ")");
            gf.normal_x[n] = px / g;
            gf.normal_y[n] = py / g;
            double k = (dxx(i, j) * py * py - 2.0 * px * py * dxy(i, j) + dyy(i, j) * px * px) / (g * g * g);
            if (curvature_cutoff > 0.0) k = std::clamp(k, -curvature_cutoff / h, curvature_cutoff / h);
            gf.kappa[n] = k;
        }
    for (int j = 1; j < grid.ny - 1; ++j)
        for (int i = 1; i < grid.nx - 1; ++i) {
            int n = grid.idx(i, j);
            if (!gf.in_band[n]) continue;
            if (!gf.in_band[grid.idx(i - 1, j)] || !gf.in_band[grid.idx(i + 1, j)] ||
                !gf.in_band[grid.idx(i, j - 1)] || !gf.in_band[grid.idx(i, j + 1)])
                continue;
            double kx = (gf.kappa[grid.idx(i + 1, j)] - gf.kappa[grid.idx(i - 1, j)]) / (2 * h);
            double ky = (gf.kappa[grid.idx(i, j + 1)] - gf.kappa[grid.idx(i, j - 1)]) / (2 * h);
            gf.kappa_dn[n] = kx * gf.normal_x[n] + ky * gf.normal_y[n];
            gf.has_kappa_dn[n] = 1;
        }
    return gf;
}

Vec2 project_to_boundary(const Vec2& p, const LevelSetField& ls, const GeometryFields& gf) {
    const Grid2D& grid = ls.grid;
    double fi = (p.x - grid.x0) / grid.h, fj = (p.y - grid.y0) / grid.h;
    int i = std::clamp((int)std::floor(fi), 0, grid.nx - 2);
    int j = std::clamp((int)std::floor(fj), 0, grid.ny - 2);
    double a = fi - i, b = fj - j;
    int c00 = grid.idx(i, j), c10 = grid.idx(i + 1, j), c01 = grid.idx(i, j + 1), c11 = grid.idx(i + 1, j + 1);
    if (!(gf.in_band[c00] && gf.in_band[c10] && gf.in_band[c01] && gf.in_band[c11])) {
        // fall back to the nearest banded corner
        int best = -1;
        double bd = 1e300;
        for (int c : {c00, c10, c01, c11}) {
            if (!gf.in_band[c]) continue;
            double dxn = p.x - (grid.x0 + (c % grid.nx) * grid.h);
            double dyn = p.y - (grid.y0 + (c / grid.nx) * grid.h);
            double d = std::hypot(dxn, dyn);
            if (d < bd) { bd = d; best = c; }
        }
        if (best < 0) throw std::runtime_error("project_to_boundary: point outside the geometry band");
        double phi = ls.phi[best];
        return {p.x - phi * gf.normal_x[best], p.y - phi * gf.normal_y[best]};
    }
    auto blend = [&](const std::vector<double>& f) {
        return (1 - a) * (1 - b) * f[c00] + a * (1 - b) * f[c10] + (1 - a) * b * f[c01] + a * b * f[c11];
    };
    double phi = blend(ls.phi);
    double nx = blend(gf.normal_x), ny = blend(gf.normal_y);
    double g = std::hypot(nx, ny);
    if (g < 1e-12) throw std::runtime_error("project_to_boundary: degenerate interpolated normal");
    return {p.x - phi * nx / g, p.y - phi * ny / g};
}

} // namespace lsbec
