#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "lsbec/sparse.hpp"

using namespace lsbec;

namespace {

// dense Gaussian elimination with partial pivoting, used as an oracle only
std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b) {
    int n = (int)b.size();
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(a[i * n + k]) > std::abs(a[piv * n + k])) piv = i;
        for (int j = 0; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
        std::swap(b[k], b[piv]);
        for (int i = k + 1; i < n; ++i) {
            double f = a[i * n + k] / a[k * n + k];
            for (int j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
            b[i] -= f * b[k];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j) b[i] -= a[i * n + j] * b[j];
        b[i] /= a[i * n + i];
    }
    return b;
}

SparseMatrix poisson_5pt(int m, double h) {
    // -Laplace on an m x m interior grid, Dirichlet 0 outside
    std::vector<Triplet> t;
    auto id = [m](int i, int j) { return j * m + i; };
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
            t.push_back({id(i, j), id(i, j), 4.0 / (h * h)});
            if (i > 0) t.push_back({id(i, j), id(i - 1, j), -1.0 / (h * h)});
            if (i < m - 1) t.push_back({id(i, j), id(i + 1, j), -1.0 / (h * h)});
            if (j > 0) t.push_back({id(i, j), id(i, j - 1), -1.0 / (h * h)});
            if (j < m - 1) t.push_back({id(i, j), id(i, j + 1), -1.0 / (h * h)});
        }
    return csr_from_triplets(m * m, m * m, std::move(t));
}

} // namespace

TEST_CASE("csr_from_triplets sums duplicates and sorts columns") {
    std::vector<Triplet> t = {{0, 2, 1.0}, {0, 0, 2.0}, {0, 2, 0.5}, {1, 1, -3.0}, {1, 0, 1e-20}};
    SparseMatrix a = csr_from_triplets(2, 3, t, 1e-15);
    CHECK(a.nnz() == 3);
    CHECK(a.col_idx[0] == 0);
    CHECK(a.vals[0] == 2.0);
    CHECK(a.col_idx[1] == 2);
    CHECK(a.vals[1] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(a.diag_entry(1) == -3.0);
    for (int i = 0; i < a.rows; ++i)
        for (int p = a.row_ptr[i] + 1; p < a.row_ptr[i + 1]; ++p)
            CHECK(a.col_idx[p] > a.col_idx[p - 1]);
}

TEST_CASE("triplet text round-trip is exact") {
    std::vector<Triplet> t;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int k = 0; k < 40; ++k) t.push_back({(int)(rng() % 9), (int)(rng() % 11), u(rng)});
    SparseMatrix a = csr_from_triplets(9, 11, t);
    save_triplets(a, "trip_roundtrip.txt");
    SparseMatrix b = load_triplets("trip_roundtrip.txt");
    REQUIRE(b.rows == a.rows);
    REQUIRE(b.cols == a.cols);
    REQUIRE(b.nnz() == a.nnz());
    CHECK(b.row_ptr == a.row_ptr);
    CHECK(b.col_idx == a.col_idx);
    CHECK(b.vals == a.vals);
    std::remove("trip_roundtrip.txt");
}

TEST_CASE("1D Poisson solve matches dense elimination") {
    // n = 4 interior nodes, h = 0.2, b = ones
    int n = 4;
    double h = 0.2;
    std::vector<Triplet> t;
    std::vector<double> dense(n * n, 0.0);
    for (int i = 0; i < n; ++i) {
        t.push_back({i, i, 2.0 / (h * h)});
        dense[i * n + i] = 2.0 / (h * h);
        if (i > 0) {
            t.push_back({i, i - 1, -1.0 / (h * h)});
            dense[i * n + i - 1] = -1.0 / (h * h);
        }
        if (i < n - 1) {
            t.push_back({i, i + 1, -1.0 / (h * h)});
            dense[i * n + i + 1] = -1.0 / (h * h);
        }
    }
    SparseMatrix a = csr_from_triplets(n, n, t);
    std::vector<double> b(n, 1.0), x;
    SolveStats st = solve_linear(a, b, x);
    CHECK(st.converged);
    std::vector<double> ref = dense_solve(dense, b);
    for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(ref[i]).epsilon(1e-9));
}

TEST_CASE("solve_linear meets its residual contract on a nonsymmetric system") {
    int n = 200;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i) {
        t.push_back({i, i, 6.0 + u(rng)});
        t.push_back({i, (i + 7) % n, u(rng)});
        t.push_back({i, (i + 31) % n, u(rng)});
        t.push_back({i, (i + n - 3) % n, u(rng)});
    }
    SparseMatrix a = csr_from_triplets(n, n, t);
    std::vector<double> b(n);
    for (int i = 0; i < n; ++i) b[i] = u(rng);
    for (Precond pc : {Precond::none, Precond::jacobi, Precond::milu}) {
        SolverConfig cfg;
        cfg.precond = pc;
        cfg.rel_tol = 1e-11;
        std::vector<double> x;
        SolveStats st = solve_linear(a, b, x, cfg);
        CHECK(st.converged);
        std::vector<double> r = a.apply(x);
        double rn = 0, bn = 0;
        for (int i = 0; i < n; ++i) {
            rn += (r[i] - b[i]) * (r[i] - b[i]);
            bn += b[i] * b[i];
        }
        CHECK(std::sqrt(rn) <= 1e-11 * std::sqrt(bn) + 1e-14);
    }
}

TEST_CASE("milu preconditioner agrees with jacobi on 2D Poisson") {
    SparseMatrix a = poisson_5pt(15, 1.0 / 16);
    std::vector<double> b(a.rows);
    for (int i = 0; i < a.rows; ++i) b[i] = std::sin(0.37 * i) + 0.2;
    SolverConfig cj, cm;
    cj.precond = Precond::jacobi;
    cm.precond = Precond::milu;
    std::vector<double> xj, xm;
    solve_linear(a, b, xj, cj);
    solve_linear(a, b, xm, cm);
    for (int i = 0; i < a.rows; ++i) CHECK(xj[i] == doctest::Approx(xm[i]).epsilon(1e-7));
}

TEST_CASE("smallest eigenpair of diag(3,1,2)") {
    std::vector<Triplet> t = {{0, 0, 3.0}, {1, 1, 1.0}, {2, 2, 2.0}};
    SparseMatrix a = csr_from_triplets(3, 3, t);
    EigenResult r = smallest_eigenpairs(a, 1, {});
    CHECK(r.values[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(r.vectors[0][1]) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(r.vectors[0][0]) < 1e-8);
    CHECK(std::abs(r.vectors[0][2]) < 1e-8);
    CHECK(r.vectors[0][1] > 0.0);   // deterministic sign
}

TEST_CASE("5-point Laplacian smallest eigenvalue matches the discrete formula") {
    double h = 1.0 / 8;
    SparseMatrix a = poisson_5pt(7, h);
    EigenResult r = smallest_eigenpairs(a, 1, {});
    double exact = 2.0 * (4.0 / (h * h)) * std::pow(std::sin(M_PI * h / 2.0), 2);
    CHECK(r.values[0] == doctest::Approx(exact).epsilon(1e-10));
    CHECK(r.residuals[0] <= 1e-12 * std::abs(r.values[0]));
}

TEST_CASE("eigensolver k=3 on 2D Poisson matches separable eigenvalues") {
    double h = 1.0 / 12;
    SparseMatrix a = poisson_5pt(11, h);
    EigenResult r = smallest_eigenpairs(a, 3, {});
    auto lam = [h](int i, int j) {
        return (4.0 / (h * h)) *
               (std::pow(std::sin(i * M_PI * h / 2.0), 2) + std::pow(std::sin(j * M_PI * h / 2.0), 2));
    };
    CHECK(r.values[0] == doctest::Approx(lam(1, 1)).epsilon(1e-10));
    // (1,2) and (2,1) are a degenerate pair
    CHECK(r.values[1] == doctest::Approx(lam(1, 2)).epsilon(1e-9));
    CHECK(r.values[2] == doctest::Approx(lam(2, 1)).epsilon(1e-9));
    CHECK(r.clustered);
}

TEST_CASE("eigensolver respects the weighted normalization") {
    SparseMatrix a = poisson_5pt(9, 0.1);
    std::vector<double> w(a.rows);
    for (int i = 0; i < a.rows; ++i) w[i] = 0.5 + 0.01 * (i % 7);
    EigenResult r = smallest_eigenpairs(a, 1, w);
    double s = 0.0;
    for (int i = 0; i < a.rows; ++i) s += w[i] * r.vectors[0][i] * r.vectors[0][i];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eigensolver output is bit-identical across repeated calls") {
    SparseMatrix a = poisson_5pt(9, 0.1);
    EigenResult r1 = smallest_eigenpairs(a, 2, {});
    EigenResult r2 = smallest_eigenpairs(a, 2, {});
    CHECK(r1.values == r2.values);
    CHECK(r1.vectors[0] == r2.vectors[0]);
    CHECK(r1.vectors[1] == r2.vectors[1]);
}
