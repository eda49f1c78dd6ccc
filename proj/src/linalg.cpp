#include "glocal/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace glocal {

SparseMatrix SparseMatrix::from_triplets(std::size_t n, std::span<const Triplet> entries, bool symmetric)
{
    SparseMatrix m;
    m.n_ = n;
    m.symmetric_ = symmetric;

    std::vector<std::size_t> count(n + 1, 0);
    for (const auto& t : entries) {
        if (t.row >= n || t.col >= n)
            throw InputError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                             ") out of range for dimension " + std::to_string(n));
        ++count[t.row + 1];
    }
    std::partial_sum(count.begin(), count.end(), count.begin());

    // bucket by row, keeping input order within a row so sums are deterministic
    std::vector<std::size_t> order(entries.size());
    std::vector<std::size_t> fill(count.begin(), count.end() - 1);
    for (std::size_t k = 0; k < entries.size(); ++k)
        order[fill[entries[k].row]++] = k;

    m.row_offsets_.assign(n + 1, 0);
    m.col_indices_.reserve(entries.size());
    m.values_.reserve(entries.size());
    std::vector<std::pair<std::uint32_t, double>> row;
    for (std::size_t i = 0; i < n; ++i) {
        row.clear();
        for (std::size_t k = count[i]; k < count[i + 1]; ++k) {
            const auto& t = entries[order[k]];
            row.emplace_back(static_cast<std::uint32_t>(t.col), t.value);
        }
        std::stable_sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::size_t k = 0;
        while (k < row.size()) {
            std::uint32_t col = row[k].first;
            double sum = 0.0;
            for (; k < row.size() && row[k].first == col; ++k)
                sum += row[k].second;
            if (sum != 0.0) {
                m.col_indices_.push_back(col);
                m.values_.push_back(sum);
            }
        }
        m.row_offsets_[i + 1] = m.values_.size();
    }
    return m;
}

double SparseMatrix::at(std::size_t i, std::size_t j) const
{
    auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(j));
    if (it == last || *it != j)
        return 0.0;
    return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

std::vector<double> SparseMatrix::diagonal() const
{
    std::vector<double> d(n_);
    for (std::size_t i = 0; i < n_; ++i)
        d[i] = at(i, i);
    return d;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
            s += values_[k] * x[col_indices_[k]];
        y[i] = s;
    }
}

std::vector<double> SparseMatrix::operator*(std::span<const double> x) const
{
    std::vector<double> y(n_);
    multiply(x, y);
    return y;
}

SparseMatrix SparseMatrix::combine(double alpha, const SparseMatrix& other, double beta) const
{
    if (other.n_ != n_)
        throw InputError("matrix dimensions differ");
    SparseMatrix m;
    m.n_ = n_;
    m.symmetric_ = symmetric_ && other.symmetric_;
    m.row_offsets_.assign(n_ + 1, 0);
    for (std::size_t i = 0; i < n_; ++i) {
        std::size_t a = row_offsets_[i], ae = row_offsets_[i + 1];
        std::size_t b = other.row_offsets_[i], be = other.row_offsets_[i + 1];
        while (a < ae || b < be) {
            std::uint32_t ca = a < ae ? col_indices_[a] : UINT32_MAX;
            std::uint32_t cb = b < be ? other.col_indices_[b] : UINT32_MAX;
            double v = 0.0;
            std::uint32_t c = std::min(ca, cb);
            if (ca == c)
                v += alpha * values_[a++];
            if (cb == c)
                v += beta * other.values_[b++];
            if (v != 0.0) {
                m.col_indices_.push_back(c);
                m.values_.push_back(v);
            }
        }
        m.row_offsets_[i + 1] = m.values_.size();
    }
    return m;
}

SparseMatrix SparseMatrix::eliminate(std::span<const char> fixed) const
{
    SparseMatrix m;
    m.n_ = n_;
    m.symmetric_ = symmetric_;
    m.row_offsets_.assign(n_ + 1, 0);
    for (std::size_t i = 0; i < n_; ++i) {
        if (fixed[i]) {
            m.col_indices_.push_back(static_cast<std::uint32_t>(i));
            m.values_.push_back(1.0);
        } else {
            for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
                if (!fixed[col_indices_[k]]) {
                    m.col_indices_.push_back(col_indices_[k]);
                    m.values_.push_back(values_[k]);
                }
            }
        }
        m.row_offsets_[i + 1] = m.values_.size();
    }
    return m;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

std::vector<double> jacobi_inverse(const SparseMatrix& A)
{
    auto d = A.diagonal();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(d[i] > 0.0))
            throw DefinitenessError("non-positive diagonal entry at row " + std::to_string(i), 0);
        d[i] = 1.0 / d[i];
    }
    return d;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

SolveReport cg_solve(const SparseMatrix& A, std::span<const double> b, std::span<double> x, const CgOptions& options)
{
    const std::size_t n = A.size();
    if (b.size() != n || x.size() != n)
        throw InputError("cg_solve: vector length does not match matrix dimension");
    for (double v : b) {
        if (!std::isfinite(v))
            throw InputError("cg_solve: right-hand side is not finite");
    }
    const std::size_t maxit = options.max_iterations != 0 ? options.max_iterations : 10 * std::max<std::size_t>(n, 1);

    SolveReport report;
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        report.converged = true;
        return report;
    }

    PreconditionerFn custom;
    if (options.preconditioner == Preconditioner::Custom) {
        custom = options.custom ? options.custom : options.factory ? options.factory(A) : PreconditionerFn{};
        if (!custom)
            throw InputError("cg_solve: custom preconditioner requested but none given");
    }
    std::vector<double> inv_diag;
    if (options.preconditioner == Preconditioner::Jacobi) {
        if (options.jacobi_inverse && options.jacobi_inverse->size() == n)
            inv_diag = *options.jacobi_inverse;
        else
            inv_diag = jacobi_inverse(A);
    } else if (options.preconditioner == Preconditioner::None) {
        inv_diag.assign(n, 1.0);
    }
    auto precondition = [&](const std::vector<double>& r, std::vector<double>& z) {
        if (custom) {
            custom(r, z);
            return;
        }
        for (std::size_t i = 0; i < n; ++i)
            z[i] = inv_diag[i] * r[i];
    };

    std::vector<double> r(n), z(n), p(n), q(n);
    A.multiply(x, r);
    for (std::size_t i = 0; i < n; ++i)
        r[i] = b[i] - r[i];
    report.relative_residual = norm2(r) / bnorm;
    if (report.relative_residual <= options.tol) {
        report.converged = true;
        return report;
    }
    precondition(r, z);
    p = z;
    double rz = dot(r, z);

    for (std::size_t it = 1; it <= maxit; ++it) {
        A.multiply(p, q);
        double pq = dot(p, q);
        if (!(pq > 0.0))
            throw DefinitenessError("cg_solve: breakdown, p'Ap <= 0 at iteration " + std::to_string(it), it);
        double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        report.iterations = it;
        report.relative_residual = norm2(r) / bnorm;
        if (options.on_iterate)
            options.on_iterate(it, x);
        if (report.relative_residual <= options.tol) {
            report.converged = true;
            break;
        }
        precondition(r, z);
        double rz_next = dot(r, z);
        double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i)
            p[i] = z[i] + beta * p[i];
    }
    return report;
}

CgResult cg_solve(const SparseMatrix& A, std::span<const double> b, const CgOptions& options)
{
    CgResult result;
    result.x.assign(A.size(), 0.0);
    result.report = cg_solve(A, b, result.x, options);
    return result;
}

} // namespace glocal
