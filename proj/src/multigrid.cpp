#include "glocal/multigrid.hpp"

#include <cmath>

#include "glocal/fem.hpp"

namespace glocal {

void TransferMatrix::prolong(std::span<const double> x, std::span<double> y) const
{
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
            s += values[k] * x[col_indices[k]];
        y[i] = s;
    }
}

void TransferMatrix::restrict_to(std::span<const double> x, std::span<double> y) const
{
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
            y[col_indices[k]] += values[k] * x[i];
    }
}

TransferMatrix prolongation(const Mesh& coarse, const Mesh& fine, std::span<const char> coarse_fixed,
                            std::span<const char> fine_fixed)
{
    TransferMatrix P;
    P.rows = fine.num_vertices();
    P.cols = coarse.num_vertices();
    PointLocator locator(coarse);
    for (std::size_t v = 0; v < P.rows; ++v) {
        if (!fine_fixed[v]) {
            Point p = fine.vertex(v);
            auto e = locator.locate(p, 1e-10);
            if (!e)
                throw GeometryError("prolongation: meshes are not nested");
            auto w = locator.barycentric(*e, p);
            const auto& el = coarse.element(*e);
            std::array<std::pair<std::uint32_t, double>, 3> entries{};
            std::size_t count = 0;
            for (std::size_t i = 0; i < 3; ++i) {
                if (std::abs(w[i]) > 1e-12 && !coarse_fixed[el[i]])
                    entries[count++] = {el[i], w[i]};
            }
            std::sort(entries.begin(), entries.begin() + count);
            for (std::size_t i = 0; i < count; ++i) {
                P.col_indices.push_back(entries[i].first);
                P.values.push_back(entries[i].second);
            }
        }
        P.row_offsets.push_back(P.col_indices.size());
    }
    return P;
}

SparseMatrix galerkin_product(const TransferMatrix& P, const SparseMatrix& A)
{
    if (A.size() != P.rows)
        throw InputError("galerkin_product: dimension mismatch");
    const auto& ro = A.row_offsets();
    const auto& ci = A.col_indices();
    const auto& va = A.values();

    // B = A P, row by row with a dense accumulator
    std::vector<std::size_t> b_off{0};
    std::vector<std::uint32_t> b_col;
    std::vector<double> b_val;
    std::vector<double> acc(P.cols, 0.0);
    std::vector<std::int64_t> mark(P.cols, -1);
    std::vector<std::uint32_t> cols;
    for (std::size_t i = 0; i < P.rows; ++i) {
        cols.clear();
        for (std::size_t k = ro[i]; k < ro[i + 1]; ++k) {
            std::size_t j = ci[k];
            for (std::size_t q = P.row_offsets[j]; q < P.row_offsets[j + 1]; ++q) {
                auto c = P.col_indices[q];
                if (mark[c] != static_cast<std::int64_t>(i)) {
                    mark[c] = static_cast<std::int64_t>(i);
                    acc[c] = 0.0;
                    cols.push_back(c);
                }
                acc[c] += va[k] * P.values[q];
            }
        }
        for (auto c : cols) {
            b_col.push_back(c);
            b_val.push_back(acc[c]);
        }
        b_off.push_back(b_col.size());
    }

    // P' as CSR: coarse row -> fine rows
    std::vector<std::size_t> t_off(P.cols + 1, 0);
    for (auto c : P.col_indices)
        ++t_off[c + 1];
    for (std::size_t c = 0; c < P.cols; ++c)
        t_off[c + 1] += t_off[c];
    std::vector<std::uint32_t> t_row(P.col_indices.size());
    std::vector<double> t_val(P.col_indices.size());
    {
        std::vector<std::size_t> pos(t_off.begin(), t_off.end() - 1);
        for (std::size_t i = 0; i < P.rows; ++i) {
            for (std::size_t q = P.row_offsets[i]; q < P.row_offsets[i + 1]; ++q) {
                auto c = P.col_indices[q];
                t_row[pos[c]] = static_cast<std::uint32_t>(i);
                t_val[pos[c]++] = P.values[q];
            }
        }
    }

    std::vector<Triplet> triplets;
    std::fill(mark.begin(), mark.end(), -1);
    for (std::size_t c = 0; c < P.cols; ++c) {
        cols.clear();
        for (std::size_t q = t_off[c]; q < t_off[c + 1]; ++q) {
            std::size_t i = t_row[q];
            for (std::size_t k = b_off[i]; k < b_off[i + 1]; ++k) {
                auto d = b_col[k];
                if (mark[d] != static_cast<std::int64_t>(c)) {
                    mark[d] = static_cast<std::int64_t>(c);
                    acc[d] = 0.0;
                    cols.push_back(d);
                }
                acc[d] += t_val[q] * b_val[k];
            }
        }
        for (auto d : cols)
            triplets.push_back({c, d, acc[d]});
    }
    return SparseMatrix::from_triplets(P.cols, triplets, A.symmetric());
}

std::vector<std::shared_ptr<const Mesh>> uniform_hierarchy(std::size_t base_n, double h, std::size_t stride)
{
    if (stride == 0)
        throw InputError("uniform_hierarchy: stride must be positive");
    std::vector<std::shared_ptr<const Mesh>> out;
    auto mesh = std::make_shared<const Mesh>(build_structured_mesh(base_n));
    out.push_back(mesh);
    std::size_t since = 0;
    const double slack = 1.0 + 1e-10;
    while (mesh->max_spacing() > h * slack) {
        if (2 * mesh->num_elements() > kDefaultElementCap)
            throw CapacityError("uniform refinement would exceed the element cap of " +
                                std::to_string(kDefaultElementCap));
        std::vector<char> all(mesh->num_elements(), 1);
        mesh = std::make_shared<const Mesh>(refine_marked(*mesh, all));
        if (++since == stride) {
            out.push_back(mesh);
            since = 0;
        }
    }
    if (out.back() != mesh)
        out.push_back(mesh);
    return out;
}

Multigrid::Multigrid(const std::vector<std::shared_ptr<const Mesh>>& hierarchy, const SparseMatrix& fine,
                     MultigridOptions options)
    : options_(options)
{
    if (hierarchy.empty())
        throw InputError("multigrid: empty hierarchy");
    if (hierarchy.back()->num_vertices() != fine.size())
        throw InputError("multigrid: fine matrix does not match the finest mesh");
    const std::size_t L = hierarchy.size();
    matrices_.resize(L);
    transfers_.resize(L - 1);
    matrices_[L - 1] = fine;
    std::vector<char> fine_fixed = dirichlet_mask(*hierarchy[L - 1]);
    for (std::size_t l = L - 1; l > 0; --l) {
        std::vector<char> coarse_fixed = dirichlet_mask(*hierarchy[l - 1]);
        transfers_[l - 1] = prolongation(*hierarchy[l - 1], *hierarchy[l], coarse_fixed, fine_fixed);
        SparseMatrix Ac = galerkin_product(transfers_[l - 1], matrices_[l]);
        // identity on the dropped (fixed) coarse unknowns
        std::vector<Triplet> eye;
        for (std::size_t i = 0; i < coarse_fixed.size(); ++i) {
            if (coarse_fixed[i])
                eye.push_back({i, i, 1.0});
        }
        matrices_[l - 1] = Ac.combine(1.0, SparseMatrix::from_triplets(Ac.size(), eye, true), 1.0);
        fine_fixed = std::move(coarse_fixed);
    }

    const SparseMatrix& A0 = matrices_[0];
    coarse_n_ = A0.size();
    if (coarse_n_ > 4000)
        throw CapacityError("multigrid: coarsest level too large for a dense solve");
    auto& Lf = coarse_factor_;
    Lf.assign(coarse_n_ * coarse_n_, 0.0);
    for (std::size_t i = 0; i < coarse_n_; ++i) {
        for (std::size_t k = A0.row_offsets()[i]; k < A0.row_offsets()[i + 1]; ++k)
            Lf[i * coarse_n_ + A0.col_indices()[k]] = A0.values()[k];
    }
    for (std::size_t j = 0; j < coarse_n_; ++j) {
        double d = Lf[j * coarse_n_ + j];
        for (std::size_t k = 0; k < j; ++k)
            d -= Lf[j * coarse_n_ + k] * Lf[j * coarse_n_ + k];
        if (!(d > 0.0))
            throw DefinitenessError("multigrid: coarse matrix is not positive definite", j);
        d = std::sqrt(d);
        Lf[j * coarse_n_ + j] = d;
        for (std::size_t i = j + 1; i < coarse_n_; ++i) {
            double s = Lf[i * coarse_n_ + j];
            for (std::size_t k = 0; k < j; ++k)
                s -= Lf[i * coarse_n_ + k] * Lf[j * coarse_n_ + k];
            Lf[i * coarse_n_ + j] = s / d;
        }
    }
}

void Multigrid::smooth(std::size_t level, std::span<const double> b, std::span<double> x, bool forward) const
{
    const SparseMatrix& A = matrices_[level];
    const auto& ro = A.row_offsets();
    const auto& ci = A.col_indices();
    const auto& va = A.values();
    const std::size_t n = A.size();
    auto relax = [&](std::size_t i) {
        double s = b[i], d = 0.0;
        for (std::size_t k = ro[i]; k < ro[i + 1]; ++k) {
            if (ci[k] == i)
                d = va[k];
            else
                s -= va[k] * x[ci[k]];
        }
        x[i] = s / d;
    };
    if (forward) {
        for (std::size_t i = 0; i < n; ++i)
            relax(i);
    } else {
        for (std::size_t i = n; i-- > 0;)
            relax(i);
    }
}

void Multigrid::cycle(std::size_t level, std::span<const double> b, std::span<double> x) const
{
    if (level == 0) {
        const std::size_t n = coarse_n_;
        const auto& Lf = coarse_factor_;
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k)
                s -= Lf[i * n + k] * x[k];
            x[i] = s / Lf[i * n + i];
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = x[i];
            for (std::size_t k = i + 1; k < n; ++k)
                s -= Lf[k * n + i] * x[k];
            x[i] = s / Lf[i * n + i];
        }
        return;
    }
    const SparseMatrix& A = matrices_[level];
    const std::size_t n = A.size();
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t s = 0; s < options_.smoothing_steps; ++s)
        smooth(level, b, x, true);

    std::vector<double> r(n);
    A.multiply(x, r);
    for (std::size_t i = 0; i < n; ++i)
        r[i] = b[i] - r[i];
    const TransferMatrix& P = transfers_[level - 1];
    std::vector<double> bc(P.cols), xc(P.cols), corr(n);
    P.restrict_to(r, bc);
    cycle(level - 1, bc, xc);
    P.prolong(xc, corr);
    for (std::size_t i = 0; i < n; ++i)
        x[i] += corr[i];

    for (std::size_t s = 0; s < options_.smoothing_steps; ++s)
        smooth(level, b, x, false);
}

void Multigrid::apply(std::span<const double> r, std::span<double> z) const
{
    if (r.size() != matrices_.back().size() || z.size() != r.size())
        throw InputError("multigrid: vector length mismatch");
    cycle(matrices_.size() - 1, r, z);
}

PreconditionerFactory Multigrid::factory(std::vector<std::shared_ptr<const Mesh>> hierarchy, MultigridOptions options)
{
    return [hierarchy = std::move(hierarchy), options](const SparseMatrix& A) -> PreconditionerFn {
        auto mg = std::make_shared<const Multigrid>(hierarchy, A, options);
        return [mg](std::span<const double> r, std::span<double> z) { mg->apply(r, z); };
    };
}

} // namespace glocal
