#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lsbec {

// Compressed sparse row storage. Column indices are sorted and duplicate-free
// within each row; this is relied on throughout.
struct SparseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> row_ptr;   // size rows+1
    std::vector<int> col_idx;
    std::vector<double> vals;

    int nnz() const { return (int)col_idx.size(); }
    void apply(const double* x, double* y) const;   // y = A x
    std::vector<double> apply(const std::vector<double>& x) const;
    double diag_entry(int i) const;                 // 0 if the pattern has no (i,i)
};

struct Triplet {
    int row = 0;
    int col = 0;
    double val = 0.0;
};

// Duplicates are summed; entries with |v| <= drop are discarded after summing.
SparseMatrix csr_from_triplets(int rows, int cols, std::vector<Triplet> trips,
                               double drop = 0.0);

// Plain text triplet format: "rows cols nnz" header, then one "row col value"
// line per entry. Values are written with enough digits to round-trip exactly.
void save_triplets(const SparseMatrix& a, const std::string& path);
SparseMatrix load_triplets(const std::string& path);

enum class Precond { none, jacobi, milu };

struct SolverConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_iters = 0;          // 0 picks 10*sqrt(n), floored at 50
    Precond precond = Precond::jacobi;
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;      // true residual 2-norm at exit
    bool converged = false;
};

// BiCGStab. x carries the initial guess in and the solution out. Throws on
// breakdown that a restart cannot fix or when max_iters is exhausted without
// reaching rel_tol*|b| + abs_tol.
SolveStats solve_linear(const SparseMatrix& a, const std::vector<double>& b,
                        std::vector<double>& x, const SolverConfig& cfg = {});

struct EigenConfig {
    double tol = 1e-12;         // accept when |A v - lambda v| <= tol*max(|lambda|,1e-30)
    int max_outer = 400;
    uint64_t seed = 0x9e3779b97f4a7c15ULL;
    SolverConfig inner{1e-13, 1e-16, 0, Precond::jacobi};
};

struct EigenResult {
    std::vector<double> values;               // ascending
    std::vector<std::vector<double>> vectors; // weight-normalized, sign-fixed
    std::vector<double> residuals;
    int outer_iters = 0;
    bool clustered = false;                   // some gap below 1e-10 relative
};

// k smallest eigenpairs of a (nearly symmetric) matrix by inverse subspace
// iteration with block orthogonalization in the weighted inner product
// sum_i w_i x_i y_i. Pass an empty weight vector for the plain dot product.
EigenResult smallest_eigenpairs(const SparseMatrix& a, int k,
                                const std::vector<double>& weights,
                                const EigenConfig& cfg = {});

} // namespace lsbec
