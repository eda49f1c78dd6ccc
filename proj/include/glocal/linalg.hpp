#ifndef GLOCAL_LINALG_HPP
#define GLOCAL_LINALG_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "glocal/types.hpp"

namespace glocal {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed-row sparse matrix. Column indices are strictly increasing in
/// each row and exact zeros are not stored.
class SparseMatrix {
public:
    SparseMatrix() = default;

    /// Duplicates are summed; throws InputError on out-of-range indices.
    static SparseMatrix from_triplets(std::size_t n, std::span<const Triplet> entries, bool symmetric = false);

    std::size_t size() const { return n_; }
    std::size_t nonzeros() const { return values_.size(); }
    bool symmetric() const { return symmetric_; }

    const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
    const std::vector<std::uint32_t>& col_indices() const { return col_indices_; }
    const std::vector<double>& values() const { return values_; }

    /// Entry (i, j), zero when not stored.
    double at(std::size_t i, std::size_t j) const;
    std::vector<double> diagonal() const;

    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> operator*(std::span<const double> x) const;

    /// alpha * this + beta * other, over the union of both patterns.
    SparseMatrix combine(double alpha, const SparseMatrix& other, double beta) const;

    /// Zeroes rows and columns of the flagged indices and puts 1 on their
    /// diagonal; preserves symmetry and definiteness on the free indices.
    SparseMatrix eliminate(std::span<const char> fixed) const;

private:
    std::size_t n_ = 0;
    bool symmetric_ = false;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::uint32_t> col_indices_;
    std::vector<double> values_;
};

double dot(std::span<const double> a, std::span<const double> b);

/// 1 / diag(A); throws DefinitenessError on a non-positive diagonal entry.
std::vector<double> jacobi_inverse(const SparseMatrix& A);
double norm2(std::span<const double> a);

enum class Preconditioner { None, Jacobi, Custom };

/// z = B r for an SPD approximation B of the inverse.
using PreconditionerFn = std::function<void(std::span<const double> r, std::span<double> z)>;
/// Builds a preconditioner for a given matrix (after Dirichlet elimination).
using PreconditionerFactory = std::function<PreconditionerFn(const SparseMatrix&)>;

struct CgOptions {
    double tol = 1e-10;
    std::size_t max_iterations = 0; // 0 means 10 * n
    Preconditioner preconditioner = Preconditioner::Jacobi;
    /// Precomputed inverse diagonal for Jacobi, reused across repeated solves.
    std::shared_ptr<const std::vector<double>> jacobi_inverse;
    /// Used with Preconditioner::Custom. When empty, `factory` builds it
    /// from the matrix being solved.
    PreconditionerFn custom;
    PreconditionerFactory factory;
    /// Called after every iteration with the current iterate.
    std::function<void(std::size_t, std::span<const double>)> on_iterate;
};

struct SolveReport {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

struct CgResult {
    std::vector<double> x;
    SolveReport report;
};

/// Preconditioned conjugate gradients for an SPD matrix; x holds the initial
/// guess on entry. Throws DefinitenessError when p'Ap <= 0.
SolveReport cg_solve(const SparseMatrix& A, std::span<const double> b, std::span<double> x,
                     const CgOptions& options = {});

/// Same, from a zero initial guess.
CgResult cg_solve(const SparseMatrix& A, std::span<const double> b, const CgOptions& options = {});

} // namespace glocal

#endif
