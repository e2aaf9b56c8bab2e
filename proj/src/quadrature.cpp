#include "lsbec/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lsbec {

namespace {

// A point inside the unit cell, carrying its interpolation weights over the
// four cell corners (SW, SE, NE, NW).
struct CutPoint {
    double x, y;
    double w[4];
};

CutPoint edge_cross(const CutPoint& a, const CutPoint& b, double pa, double pb) {
    double t = pa / (pa - pb);
    CutPoint c;
    c.x = a.x + t * (b.x - a.x);
    c.y = a.y + t * (b.y - a.y);
    for (int k = 0; k < 4; ++k) c.w[k] = (1 - t) * a.w[k] + t * b.w[k];
    return c;
}

// three-midpoint rule on the triangle, accumulated to the cell corners
void add_triangle(const CutPoint& a, const CutPoint& b, const CutPoint& c, double h2,
                  double* corner_w) {
    double area = 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)) * h2;
    if (area == 0.0) return;
    for (int k = 0; k < 4; ++k) {
        double mids = 0.5 * (a.w[k] + b.w[k]) + 0.5 * (b.w[k] + c.w[k]) + 0.5 * (c.w[k] + a.w[k]);
        corner_w[k] += area / 3.0 * mids;
    }
}

// negative subregion of a linearized triangle
void add_negative_part(const CutPoint& a, const CutPoint& b, const CutPoint& c, double pa,
                       double pb, double pc, double h2, double* corner_w) {
    int neg = (pa < 0) + (pb < 0) + (pc < 0);
    if (neg == 0) return;
    if (pa <= 0 && pb <= 0 && pc <= 0) {
        add_triangle(a, b, c, h2, corner_w);
        return;
    }
    // rotate so the minority vertex sits first
    const CutPoint* v[3] = {&a, &b, &c};
    double p[3] = {pa, pb, pc};
    auto rot = [&]() {
        const CutPoint* tv = v[0];
        double tp = p[0];
        v[0] = v[1]; p[0] = p[1];
        v[1] = v[2]; p[1] = p[2];
        v[2] = tv; p[2] = tp;
    };
    if (neg == 1) {
        while (!(p[0] < 0)) rot();
        CutPoint xab = edge_cross(*v[0], *v[1], p[0], p[1]);
        CutPoint xac = edge_cross(*v[0], *v[2], p[0], p[2]);
        add_triangle(*v[0], xab, xac, h2, corner_w);
    } else {
        while (p[2] < 0) rot();   // v[2] is the positive vertex
        CutPoint xbc = edge_cross(*v[1], *v[2], p[1], p[2]);
        CutPoint xac = edge_cross(*v[0], *v[2], p[0], p[2]);
        add_triangle(*v[0], *v[1], xbc, h2, corner_w);
        add_triangle(*v[0], xbc, xac, h2, corner_w);
    }
}

} // namespace

QuadratureWeights build_weights(const Grid2D& grid, const LevelSetField& ls) {
    if ((int)ls.phi.size() != grid.size())
        throw std::runtime_error("build_weights: level set / grid mismatch");
    QuadratureWeights q;
    q.grid = grid;
    q.w.assign(grid.size(), 0.0);
    double h2 = grid.h * grid.h;

    for (int j = 0; j < grid.ny - 1; ++j)
        for (int i = 0; i < grid.nx - 1; ++i) {
            int c[4] = {grid.idx(i, j), grid.idx(i + 1, j), grid.idx(i + 1, j + 1), grid.idx(i, j + 1)};
            double p[4] = {ls.phi[c[0]], ls.phi[c[1]], ls.phi[c[2]], ls.phi[c[3]]};
            bool any_neg = p[0] < 0 || p[1] < 0 || p[2] < 0 || p[3] < 0;
            if (!any_neg) continue;
            if (p[0] <= 0 && p[1] <= 0 && p[2] <= 0 && p[3] <= 0) {
                for (int k = 0; k < 4; ++k) q.w[c[k]] += 0.25 * h2;
                continue;
            }
            CutPoint sw{0, 0, {1, 0, 0, 0}}, se{1, 0, {0, 1, 0, 0}};
            CutPoint ne{1, 1, {0, 0, 1, 0}}, nw{0, 1, {0, 0, 0, 1}};
            double cw[4] = {0, 0, 0, 0};
            add_negative_part(sw, se, ne, p[0], p[1], p[2], h2, cw);
            add_negative_part(sw, ne, nw, p[0], p[2], p[3], h2, cw);
            for (int k = 0; k < 4; ++k) q.w[c[k]] += cw[k];
        }
    return q;
}

double integrate(const QuadratureWeights& q, const std::vector<double>& f) {
    if (f.size() != q.w.size()) throw std::runtime_error("integrate: field / weight size mismatch");
    double s = 0.0;
    for (size_t n = 0; n < q.w.size(); ++n) s += q.w[n] * f[n];
    return s;
}

double inner(const QuadratureWeights& q, const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != q.w.size() || b.size() != q.w.size())
        throw std::runtime_error("inner: field / weight size mismatch");
    double s = 0.0;
    for (size_t n = 0; n < q.w.size(); ++n) s += q.w[n] * a[n] * b[n];
    return s;
}

double lp_norm(const QuadratureWeights& q, const std::vector<double>& u, double p) {
    if (u.size() != q.w.size()) throw std::runtime_error("lp_norm: field / weight size mismatch");
    double s = 0.0;
    for (size_t n = 0; n < q.w.size(); ++n) s += q.w[n] * std::pow(std::abs(u[n]), p);
    return std::pow(s, 1.0 / p);
}

double normalize(const QuadratureWeights& q, std::vector<double>& u) {
    double nrm = std::sqrt(std::max(0.0, inner(q, u, u)));
    if (nrm < 1e-150) throw std::runtime_error("normalize: field has (near-)zero weighted norm");
    double inv = 1.0 / nrm;
    for (double& v : u) v *= inv;
    return nrm;
}

} // namespace lsbec
