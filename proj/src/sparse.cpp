#include "lsbec/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace lsbec {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double wdot(const std::vector<double>& w, const std::vector<double>& a,
            const std::vector<double>& b) {
    if (w.empty()) return dot(a, b);
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += w[i] * a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

} // namespace

void SparseMatrix::apply(const double* x, double* y) const {
    for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += vals[p] * x[col_idx[p]];
        y[i] = s;
    }
}

std::vector<double> SparseMatrix::apply(const std::vector<double>& x) const {
    if ((int)x.size() != cols) throw std::runtime_error("SparseMatrix::apply: size mismatch");
    std::vector<double> y(rows);
    apply(x.data(), y.data());
    return y;
}

double SparseMatrix::diag_entry(int i) const {
    for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
        if (col_idx[p] == i) return vals[p];
    return 0.0;
}

SparseMatrix csr_from_triplets(int rows, int cols, std::vector<Triplet> trips, double drop) {
    for (const Triplet& t : trips)
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
            throw std::runtime_error("csr_from_triplets: index out of range");
    std::sort(trips.begin(), trips.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.row_ptr.assign(rows + 1, 0);
    size_t i = 0;
    while (i < trips.size()) {
        size_t j = i;
        double v = 0.0;
        while (j < trips.size() && trips[j].row == trips[i].row && trips[j].col == trips[i].col)
            v += trips[j++].val;
        if (std::abs(v) > drop) {
            m.col_idx.push_back(trips[i].col);
            m.vals.push_back(v);
            m.row_ptr[trips[i].row + 1]++;
        }
        i = j;
    }
    for (int r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    return m;
}

void save_triplets(const SparseMatrix& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_triplets: cannot open " + path);
    out << a.rows << " " << a.cols << " " << a.nnz() << "\n";
    char buf[64];
    for (int i = 0; i < a.rows; ++i)
        for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
            std::snprintf(buf, sizeof buf, "%.17g", a.vals[p]);
            out << i << " " << a.col_idx[p] << " " << buf << "\n";
        }
    if (!out) throw std::runtime_error("save_triplets: write failed for " + path);
}

SparseMatrix load_triplets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_triplets: cannot open " + path);
    int rows, cols, nnz;
    if (!(in >> rows >> cols >> nnz)) throw std::runtime_error("load_triplets: bad header in " + path);
    std::vector<Triplet> trips;
    trips.reserve(nnz);
    for (int k = 0; k < nnz; ++k) {
        Triplet t;
        if (!(in >> t.row >> t.col >> t.val))
            throw std::runtime_error("load_triplets: truncated file " + path);
        trips.push_back(t);
    }
    return csr_from_triplets(rows, cols, std::move(trips));
}

namespace {

// MILU(0): incomplete LU on the pattern of A, fill lumped into the diagonal.
struct MiluFactor {
    SparseMatrix lu;            // L strictly below diag (unit), U on and above
    std::vector<int> diag_pos;

    void build(const SparseMatrix& a) {
        lu = a;
        int n = a.rows;
        diag_pos.assign(n, -1);
        for (int i = 0; i < n; ++i)
            for (int p = lu.row_ptr[i]; p < lu.row_ptr[i + 1]; ++p)
                if (lu.col_idx[p] == i) diag_pos[i] = p;
        for (int i = 0; i < n; ++i)
            if (diag_pos[i] < 0) throw std::runtime_error("milu: structurally zero diagonal");
        std::vector<int> pos(n, -1);
        for (int i = 0; i < n; ++i) {
            for (int p = lu.row_ptr[i]; p < lu.row_ptr[i + 1]; ++p) pos[lu.col_idx[p]] = p;
            for (int p = lu.row_ptr[i]; p < lu.row_ptr[i + 1]; ++p) {
                int k = lu.col_idx[p];
                if (k >= i) break;
                double piv = lu.vals[diag_pos[k]];
                if (piv == 0.0) throw std::runtime_error("milu: zero pivot");
                double lik = lu.vals[p] / piv;
                lu.vals[p] = lik;
                for (int q = diag_pos[k] + 1; q < lu.row_ptr[k + 1]; ++q) {
                    int j = lu.col_idx[q];
                    double upd = lik * lu.vals[q];
                    if (pos[j] >= 0) lu.vals[pos[j]] -= upd;
                    else lu.vals[diag_pos[i]] -= upd;   // dropped fill goes to the diagonal
                }
            }
            for (int p = lu.row_ptr[i]; p < lu.row_ptr[i + 1]; ++p) pos[lu.col_idx[p]] = -1;
        }
    }

    void solve(const std::vector<double>& r, std::vector<double>& z) const {
        int n = lu.rows;
        z = r;
        for (int i = 0; i < n; ++i) {
            double s = z[i];
            for (int p = lu.row_ptr[i]; lu.col_idx[p] < i; ++p) s -= lu.vals[p] * z[lu.col_idx[p]];
            z[i] = s;
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = z[i];
            for (int p = diag_pos[i] + 1; p < lu.row_ptr[i + 1]; ++p) s -= lu.vals[p] * z[lu.col_idx[p]];
            z[i] = s / lu.vals[diag_pos[i]];
        }
    }
};

} // namespace

SolveStats solve_linear(const SparseMatrix& a, const std::vector<double>& b,
                        std::vector<double>& x, const SolverConfig& cfg) {
    int n = a.rows;
    if (a.cols != n || (int)b.size() != n)
        throw std::runtime_error("solve_linear: dimension mismatch");
    if ((int)x.size() != n) x.assign(n, 0.0);

    std::vector<double> invdiag;
    MiluFactor milu;
    if (cfg.precond == Precond::jacobi) {
        invdiag.resize(n);
        for (int i = 0; i < n; ++i) {
            double d = a.diag_entry(i);
            invdiag[i] = (d != 0.0) ? 1.0 / d : 1.0;
        }
    } else if (cfg.precond == Precond::milu) {
        milu.build(a);
    }
    auto precond = [&](const std::vector<double>& r, std::vector<double>& z) {
        switch (cfg.precond) {
            case Precond::none: z = r; break;
            case Precond::jacobi:
                z.resize(n);
                for (int i = 0; i < n; ++i) z[i] = r[i] * invdiag[i];
                break;
            case Precond::milu: milu.solve(r, z); break;
        }
    };

    int max_iters = cfg.max_iters > 0 ? cfg.max_iters
                                      : std::max(50, (int)std::ceil(10.0 * std::sqrt((double)n)));
    double bnorm = norm2(b);
    double tol = cfg.rel_tol * bnorm + cfg.abs_tol;

    std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), phat(n), shat(n), tmp(n);
    a.apply(x.data(), tmp.data());
    for (int i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
    rhat = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    double res_best = norm2(r);
    int stall = 0;

    SolveStats st;
    st.residual = norm2(r);
    if (st.residual <= tol) {
        st.converged = true;
        return st;
    }
    // No iteration can push the residual below the rounding error of
    // evaluating A x - b itself; used to certify stalled solves.
    auto rounding_floor = [&]() {
        double axabs = 0.0;
        for (int i = 0; i < n; ++i) {
            double s2 = std::abs(b[i]);
            for (int q = a.row_ptr[i]; q < a.row_ptr[i + 1]; ++q)
                s2 += std::abs(a.vals[q] * x[a.col_idx[q]]);
            axabs += s2 * s2;
        }
        return 16.0 * 2.220446049250313e-16 * std::sqrt(axabs);
    };
    for (int it = 1; it <= max_iters; ++it) {
        double rho_new = dot(rhat, r);
        if (std::abs(rho_new) < 1e-300) {   // shadow residual lost; restart
            a.apply(x.data(), tmp.data());
            for (int i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
            rhat = r;
            rho_new = dot(r, r);
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            rho = alpha = omega = 1.0;
            if (std::sqrt(rho_new) <= tol) {
                st.iterations = it;
                st.residual = std::sqrt(rho_new);
                st.converged = true;
                return st;
            }
        }
        double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        precond(p, phat);
        a.apply(phat.data(), v.data());
        double rv = dot(rhat, v);
        if (std::abs(rv) < 1e-300) throw std::runtime_error("solve_linear: BiCGStab breakdown (rhat.v = 0)");
        alpha = rho / rv;
        for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (norm2(s) <= tol) {
            for (int i = 0; i < n; ++i) x[i] += alpha * phat[i];
        } else {
            precond(s, shat);
            a.apply(shat.data(), t.data());
            double tt = dot(t, t);
            if (tt < 1e-300) throw std::runtime_error("solve_linear: BiCGStab breakdown (t = 0)");
            omega = dot(t, s) / tt;
            for (int i = 0; i < n; ++i) {
                x[i] += alpha * phat[i] + omega * shat[i];
                r[i] = s[i] - omega * t[i];
            }
        }
        // accept only on the true residual; the recurrence drifts at tight tolerances
        a.apply(x.data(), tmp.data());
        for (int i = 0; i < n; ++i) tmp[i] = b[i] - tmp[i];
        double res = norm2(tmp);
        st.iterations = it;
        st.residual = res;
        if (res <= tol) {
            st.converged = true;
            return st;
        }
        if (norm2(s) <= tol) r = tmp;   // keep iterating from the corrected residual
        // The recurrence stagnates when b is close to an eigenvector (shadow
        // residual nearly orthogonal to the Krylov directions); restart from
        // the true residual with fresh directions.
        if (res < 0.5 * res_best) {
            res_best = res;
            stall = 0;
        } else if (++stall >= 25) {
            if (res <= rounding_floor()) {
                st.converged = true;
                return st;
            }
            r = tmp;
            rhat = tmp;
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            rho = alpha = omega = 1.0;
            res_best = res;
            stall = 0;
        }
    }
    // out of iterations; same certification before giving up
    double floor = rounding_floor();
    if (st.residual <= std::max(tol, floor)) {
        st.converged = true;
        return st;
    }
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "solve_linear: no convergence after %d iterations, residual %.3e "
                  "(target %.3e, rounding floor %.3e)",
                  max_iters, st.residual, tol, floor);
    throw std::runtime_error(msg);
}

namespace {

uint64_t splitmix64(uint64_t& s) {
    uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// cyclic Jacobi for small symmetric matrices, ascending eigenvalues
void jacobi_eig(std::vector<double> a, int m, std::vector<double>& lam,
                std::vector<double>& u) {
    u.assign(m * m, 0.0);
    for (int i = 0; i < m; ++i) u[i * m + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) off += a[i * m + j] * a[i * m + j];
        if (off < 1e-30) break;
        for (int pq = 0; pq < m * (m - 1) / 2; ++pq) {
            int p = 0, q = 1, c = pq;
            for (p = 0; p < m - 1; ++p) {
                if (c < m - 1 - p) { q = p + 1 + c; break; }
                c -= m - 1 - p;
            }
            double apq = a[p * m + q];
            if (std::abs(apq) < 1e-300) continue;
            double theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
            double tt = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
            double cc = 1.0 / std::sqrt(tt * tt + 1.0), ss = tt * cc;
            for (int k = 0; k < m; ++k) {
                double akp = a[k * m + p], akq = a[k * m + q];
                a[k * m + p] = cc * akp - ss * akq;
                a[k * m + q] = ss * akp + cc * akq;
            }
            for (int k = 0; k < m; ++k) {
                double apk = a[p * m + k], aqk = a[q * m + k];
                a[p * m + k] = cc * apk - ss * aqk;
                a[q * m + k] = ss * apk + cc * aqk;
            }
            for (int k = 0; k < m; ++k) {
                double ukp = u[k * m + p], ukq = u[k * m + q];
                u[k * m + p] = cc * ukp - ss * ukq;
                u[k * m + q] = ss * ukp + cc * ukq;
            }
        }
    }
    lam.resize(m);
    std::vector<int> ord(m);
    for (int i = 0; i < m; ++i) { lam[i] = a[i * m + i]; ord[i] = i; }
    std::sort(ord.begin(), ord.end(), [&](int i, int j) { return lam[i] < lam[j]; });
    std::vector<double> lam2(m), u2(m * m);
    for (int j = 0; j < m; ++j) {
        lam2[j] = lam[ord[j]];
        for (int i = 0; i < m; ++i) u2[i * m + j] = u[i * m + ord[j]];
    }
    lam = lam2;
    u = u2;
}

// LU with partial pivoting for the tiny projected systems.
bool small_lu_solve(std::vector<double> a, int m, std::vector<double>& x) {
    std::vector<int> piv(m);
    for (int c = 0; c < m; ++c) {
        int p = c;
        for (int r = c + 1; r < m; ++r)
            if (std::abs(a[r * m + c]) > std::abs(a[p * m + c])) p = r;
        if (std::abs(a[p * m + c]) < 1e-300) return false;
        piv[c] = p;
        if (p != c) {
            for (int j = 0; j < m; ++j) std::swap(a[c * m + j], a[p * m + j]);
            std::swap(x[c], x[p]);
        }
        for (int r = c + 1; r < m; ++r) {
            double f = a[r * m + c] / a[c * m + c];
            a[r * m + c] = f;
            for (int j = c + 1; j < m; ++j) a[r * m + j] -= f * a[c * m + j];
            x[r] -= f * x[c];
        }
    }
    for (int r = m - 1; r >= 0; --r) {
        for (int j = r + 1; j < m; ++j) x[r] -= a[r * m + j] * x[j];
        x[r] /= a[r * m + r];
    }
    return true;
}

// Eigen decomposition of a small dense matrix whose spectrum is expected to be
// real (projections of the folded operators are mildly nonsymmetric, so the
// symmetric Jacobi solver would bias the Ritz vectors). Hessenberg reduction,
// shifted QR for the values, inverse iteration for the vectors. Returns false
// when a complex pair survives; the caller treats that round as unconverged.
bool small_real_eig(const std::vector<double>& t_in, int m, std::vector<double>& lam,
                    std::vector<double>& u) {
    std::vector<double> h = t_in;
    double scale = 0.0;
    for (double v : t_in) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) {
        lam.assign(m, 0.0);
        u.assign(m * m, 0.0);
        for (int i = 0; i < m; ++i) u[i * m + i] = 1.0;
        return true;
    }

    for (int c = 0; c + 2 < m; ++c) {   // Householder Hessenberg
        double nrm = 0.0;
        for (int i = c + 1; i < m; ++i) nrm += h[i * m + c] * h[i * m + c];
        nrm = std::sqrt(nrm);
        if (nrm < 1e-300) continue;
        std::vector<double> v(m, 0.0);
        double a0 = h[(c + 1) * m + c];
        v[c + 1] = a0 + (a0 >= 0 ? nrm : -nrm);
        for (int i = c + 2; i < m; ++i) v[i] = h[i * m + c];
        double vn2 = 0.0;
        for (int i = c + 1; i < m; ++i) vn2 += v[i] * v[i];
        if (vn2 < 1e-300) continue;
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int i = c + 1; i < m; ++i) s += v[i] * h[i * m + j];
            s *= 2.0 / vn2;
            for (int i = c + 1; i < m; ++i) h[i * m + j] -= s * v[i];
        }
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int j = c + 1; j < m; ++j) s += h[i * m + j] * v[j];
            s *= 2.0 / vn2;
            for (int j = c + 1; j < m; ++j) h[i * m + j] -= s * v[j];
        }
    }

    lam.assign(m, 0.0);
    std::vector<double> cs(m, 1.0), sn(m, 0.0);
    int p = m - 1, guard = 0;
    bool real_ok = true;
    while (p > 0) {
        if (++guard > 60 * m * m) { real_ok = false; break; }
        int q = p;
        while (q > 0 && std::abs(h[q * m + q - 1]) >
                            1e-15 * (std::abs(h[q * m + q]) + std::abs(h[(q - 1) * m + q - 1]) + scale * 1e-6))
            --q;
        if (q == p) { lam[p] = h[p * m + p]; --p; continue; }
        double a = h[(p - 1) * m + p - 1], b = h[(p - 1) * m + p];
        double c2 = h[p * m + p - 1], d = h[p * m + p];
        double tr = a + d, det = a * d - b * c2, disc = 0.25 * tr * tr - det;
        if (q == p - 1) {
            if (disc >= 0.0) {
                double s = std::sqrt(disc);
                lam[p] = 0.5 * tr + s;
                lam[p - 1] = 0.5 * tr - s;
            } else {
                real_ok = false;
                lam[p] = lam[p - 1] = 0.5 * tr;
            }
            p -= 2;
            continue;
        }
        double sigma = d;   // Wilkinson: trailing root closest to the corner
        if (disc >= 0.0) {
            double s = std::sqrt(disc);
            double r1 = 0.5 * tr + s, r2 = 0.5 * tr - s;
            sigma = std::abs(r1 - d) < std::abs(r2 - d) ? r1 : r2;
        }
        for (int i = q; i <= p; ++i) h[i * m + i] -= sigma;
        for (int i = q; i < p; ++i) {
            double x = h[i * m + i], z = h[(i + 1) * m + i];
            double r = std::hypot(x, z);
            cs[i] = r < 1e-300 ? 1.0 : x / r;
            sn[i] = r < 1e-300 ? 0.0 : z / r;
            for (int j = i; j <= p; ++j) {
                double t1 = cs[i] * h[i * m + j] + sn[i] * h[(i + 1) * m + j];
                double t2 = -sn[i] * h[i * m + j] + cs[i] * h[(i + 1) * m + j];
                h[i * m + j] = t1;
                h[(i + 1) * m + j] = t2;
            }
        }
        for (int i = q; i < p; ++i)
            for (int r2 = q; r2 <= std::min(i + 1, p); ++r2) {
                double t1 = cs[i] * h[r2 * m + i] + sn[i] * h[r2 * m + i + 1];
                double t2 = -sn[i] * h[r2 * m + i] + cs[i] * h[r2 * m + i + 1];
                h[r2 * m + i] = t1;
                h[r2 * m + i + 1] = t2;
            }
        for (int i = q; i <= p; ++i) h[i * m + i] += sigma;
    }
    if (p == 0) lam[0] = h[0];
    if (!real_ok) return false;

    std::vector<int> ord(m);
    for (int i = 0; i < m; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](int i, int j) { return lam[i] < lam[j]; });
    std::vector<double> lam2(m);
    for (int j = 0; j < m; ++j) lam2[j] = lam[ord[j]];
    lam = lam2;

    // Vectors by shifted inverse iteration on the unreduced matrix; repeated
    // values are separated by orthogonalizing inside the near-degenerate group.
    u.assign(m * m, 0.0);
    uint64_t seed = 0x51e9a11ceULL;
    for (int j = 0; j < m; ++j) {
        std::vector<double> z(m);
        for (int i = 0; i < m; ++i)
            z[i] = (double)(splitmix64(seed) >> 11) * (1.0 / 9007199254740992.0) - 0.5;
        double jitter = 1e-12 * scale;
        for (int attempt = 0; attempt < 4; ++attempt) {
            std::vector<double> b = t_in;
            for (int i = 0; i < m; ++i) b[i * m + i] -= lam[j] + jitter;
            bool ok = true;
            for (int rep = 0; rep < 3 && ok; ++rep) {
                ok = small_lu_solve(b, m, z);
                if (!ok) break;
                for (int jj = 0; jj < j; ++jj) {
                    if (std::abs(lam[jj] - lam[j]) > 1e-8 * scale) continue;
                    double c = 0.0;
                    for (int i = 0; i < m; ++i) c += u[i * m + jj] * z[i];
                    for (int i = 0; i < m; ++i) z[i] -= c * u[i * m + jj];
                }
                double nrm = 0.0;
                for (double v : z) nrm += v * v;
                nrm = std::sqrt(nrm);
                if (nrm < 1e-150) { ok = false; break; }
                for (double& v : z) v /= nrm;
            }
            if (ok) break;
            jitter *= 137.0;
            for (int i = 0; i < m; ++i)
                z[i] = (double)(splitmix64(seed) >> 11) * (1.0 / 9007199254740992.0) - 0.5;
        }
        for (int i = 0; i < m; ++i) u[i * m + j] = z[i];
    }
    return true;
}

} // namespace

EigenResult smallest_eigenpairs(const SparseMatrix& a, int k,
                                const std::vector<double>& weights,
                                const EigenConfig& cfg) {
    int n = a.rows;
    if (a.cols != n) throw std::runtime_error("smallest_eigenpairs: matrix not square");
    if (k < 1 || k > n) throw std::runtime_error("smallest_eigenpairs: bad k");
    if (!weights.empty() && (int)weights.size() != n)
        throw std::runtime_error("smallest_eigenpairs: weight size mismatch");

    int m = std::min(n, k + 1);             // one guard vector past the requested pairs
    uint64_t seed = cfg.seed;
    std::vector<std::vector<double>> x(m, std::vector<double>(n));
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i)
            x[j][i] = (double)(splitmix64(seed) >> 11) * (1.0 / 9007199254740992.0) - 0.5;

    // the eigenproblem is plain A v = lambda v; the weights only fix the
    // output normalization, so all iteration geometry uses the plain dot
    auto orthonormalize = [&](std::vector<std::vector<double>>& q) {
        for (int j = 0; j < m; ++j) {
            for (int rep = 0; rep < 2; ++rep)
                for (int i = 0; i < j; ++i) {
                    double c = dot(q[i], q[j]);
                    for (int t = 0; t < n; ++t) q[j][t] -= c * q[i][t];
                }
            double nrm = norm2(q[j]);
            if (nrm < 1e-150) throw std::runtime_error("smallest_eigenpairs: rank-deficient block");
            for (int t = 0; t < n; ++t) q[j][t] /= nrm;
        }
    };
    orthonormalize(x);

    EigenResult res;
    std::vector<std::vector<double>> y(m, std::vector<double>(n));
    std::vector<double> av(n), lam(m);
    for (int j = 0; j < m; ++j) {
        a.apply(x[j].data(), av.data());
        lam[j] = dot(x[j], av);
    }
    for (int outer = 1; outer <= cfg.max_outer; ++outer) {
        for (int j = 0; j < m; ++j) {
            // warm start at x/lambda: once x nears an eigenvector the initial
            // residual is the (tiny) eigen residual, which spares the solver
            // the slow near-eigenvector rhs regime
            double th = std::abs(lam[j]) > 1e-30 ? lam[j] : 1.0;
            for (int i = 0; i < n; ++i) y[j][i] = x[j][i] / th;
            solve_linear(a, x[j], y[j], cfg.inner);
        }
        orthonormalize(y);
        std::vector<double> proj(m * m);
        std::vector<std::vector<double>> ay(m, std::vector<double>(n));
        for (int j = 0; j < m; ++j) a.apply(y[j].data(), ay[j].data());
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) proj[i * m + j] = dot(y[i], ay[j]);
        std::vector<double> u;
        if (!small_real_eig(proj, m, lam, u)) {
            // transient complex pair in the projection: use the symmetrized
            // problem for this round and keep iterating
            for (int i = 0; i < m; ++i)
                for (int j = i + 1; j < m; ++j) {
                    double s = 0.5 * (proj[i * m + j] + proj[j * m + i]);
                    proj[i * m + j] = proj[j * m + i] = s;
                }
            jacobi_eig(proj, m, lam, u);
        }
        for (int j = 0; j < m; ++j) {
            double nrm = 0.0;
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (int t = 0; t < m; ++t) s += y[t][i] * u[t * m + j];
                x[j][i] = s;
                nrm += s * s;
            }
            nrm = std::sqrt(nrm);
            if (nrm < 1e-150) throw std::runtime_error("smallest_eigenpairs: degenerate Ritz basis");
            for (int i = 0; i < n; ++i) x[j][i] /= nrm;
        }
        res.outer_iters = outer;
        // residuals of the k requested pairs
        bool ok = true;
        res.residuals.assign(k, 0.0);
        for (int j = 0; j < k && ok; ++j) {
            a.apply(x[j].data(), av.data());
            double num = 0.0, den = 0.0;
            for (int i = 0; i < n; ++i) {
                double d = av[i] - lam[j] * x[j][i];
                num += d * d;
                den += x[j][i] * x[j][i];
            }
            res.residuals[j] = std::sqrt(num / den);
            if (res.residuals[j] > cfg.tol * std::max(std::abs(lam[j]), 1e-30)) ok = false;
        }
        if (ok) {
            res.values.assign(lam.begin(), lam.begin() + k);
            res.vectors.assign(x.begin(), x.begin() + k);
            for (int j = 0; j + 1 < k; ++j)
                if (std::abs(lam[j + 1] - lam[j]) < 1e-10 * std::max(1.0, std::abs(lam[j])))
                    res.clustered = true;
            if (res.clustered)
                std::cerr << "smallest_eigenpairs: warning, clustered eigenvalues "
                             "(gap below 1e-10); pairing within the cluster is arbitrary\n";
            for (auto& v : res.vectors) {
                double nrm = std::sqrt(wdot(weights, v, v));
                if (nrm < 1e-150)
                    throw std::runtime_error("smallest_eigenpairs: zero weighted norm");
                int arg = 0;   // deterministic sign: largest entry positive
                for (int i = 1; i < n; ++i)
                    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
                double s = (v[arg] < 0.0 ? -1.0 : 1.0) / nrm;
                for (double& e : v) e *= s;
            }
            return res;
        }
    }
    throw std::runtime_error("smallest_eigenpairs: no convergence after " +
                             std::to_string(cfg.max_outer) + " outer iterations");
}

} // namespace lsbec
