#ifndef GLOCAL_MULTIGRID_HPP
#define GLOCAL_MULTIGRID_HPP

#include <memory>
#include <span>
#include <vector>

#include "glocal/linalg.hpp"
#include "glocal/mesh.hpp"

namespace glocal {

/// Rectangular CSR matrix, used for grid transfers.
struct TransferMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_offsets{0};
    std::vector<std::uint32_t> col_indices;
    std::vector<double> values;

    /// y = P x
    void prolong(std::span<const double> x, std::span<double> y) const;
    /// y = P' x
    void restrict_to(std::span<const double> x, std::span<double> y) const;
};

/// P1 prolongation from `coarse` to the nested mesh `fine`: row v holds the
/// barycentric weights of fine vertex v in its coarse element. Rows of fixed
/// fine vertices and columns of fixed coarse vertices are dropped (zero).
TransferMatrix prolongation(const Mesh& coarse, const Mesh& fine, std::span<const char> coarse_fixed,
                            std::span<const char> fine_fixed);

/// P' A P.
SparseMatrix galerkin_product(const TransferMatrix& P, const SparseMatrix& A);

/// Meshes from the structured base_n grid to spacing <= h by uniform
/// newest-vertex bisection, keeping every `stride`-th mesh (plus the last).
std::vector<std::shared_ptr<const Mesh>> uniform_hierarchy(std::size_t base_n, double h, std::size_t stride = 2);

struct MultigridOptions {
    std::size_t smoothing_steps = 2;
};

/// Galerkin V-cycle over a nested mesh hierarchy (coarse to fine) with
/// symmetric Gauss-Seidel smoothing and a dense Cholesky coarse solve. The
/// fine matrix must come from the finest mesh after Dirichlet elimination
/// of its boundary vertices. Applied as a CG preconditioner it is symmetric
/// and positive definite.
class Multigrid {
public:
    Multigrid(const std::vector<std::shared_ptr<const Mesh>>& hierarchy, const SparseMatrix& fine,
              MultigridOptions options = {});

    /// z = V-cycle(r) from a zero initial guess.
    void apply(std::span<const double> r, std::span<double> z) const;
    std::size_t levels() const { return matrices_.size(); }

    /// PreconditionerFactory building a Multigrid over `hierarchy`.
    static PreconditionerFactory factory(std::vector<std::shared_ptr<const Mesh>> hierarchy,
                                         MultigridOptions options = {});

private:
    void cycle(std::size_t level, std::span<const double> b, std::span<double> x) const;
    void smooth(std::size_t level, std::span<const double> b, std::span<double> x, bool forward) const;

    MultigridOptions options_;
    std::vector<SparseMatrix> matrices_;    // level 0 coarsest
    std::vector<TransferMatrix> transfers_; // transfers_[l]: level l -> l + 1
    std::vector<double> coarse_factor_;     // dense Cholesky factor, row-major
    std::size_t coarse_n_ = 0;
};

} // namespace glocal

#endif
