#include <cmath>

#include "doctest.h"
#include "glocal/fem.hpp"
#include "glocal/linalg.hpp"
#include "glocal/multigrid.hpp"
#include "oracles.hpp"

using namespace glocal;

namespace {

SparseMatrix random_spd(std::size_t n, std::mt19937& rng)
{
    // B'B + n I over a random sparse B
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> idx(0, n - 1);
    oracle::Dense B(n, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < 3 * n; ++k)
        B[idx(rng)][idx(rng)] += u(rng);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = i == j ? 1.0 : 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += B[k][i] * B[k][j];
            if (s != 0.0)
                t.push_back({i, j, s});
        }
    }
    return SparseMatrix::from_triplets(n, t, true);
}

SparseMatrix tridiag(std::size_t n)
{
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) {
        t.push_back({i, i, 2.0});
        if (i > 0)
            t.push_back({i, i - 1, -1.0});
        if (i + 1 < n)
            t.push_back({i, i + 1, -1.0});
    }
    return SparseMatrix::from_triplets(n, t, true);
}

} // namespace

TEST_CASE("duplicate triplets are summed")
{
    std::vector<Triplet> t{{0, 0, 1.0}, {0, 0, 2.0}};
    auto A = SparseMatrix::from_triplets(2, t);
    CHECK(A.nonzeros() == 1);
    CHECK(A.at(0, 0) == 3.0);
    CHECK(A.at(1, 1) == 0.0);
}

TEST_CASE("empty matrix")
{
    auto A = SparseMatrix::from_triplets(4, std::vector<Triplet>{});
    std::vector<double> x{1, 2, 3, 4};
    auto y = A * x;
    for (double v : y)
        CHECK(v == 0.0);
}

TEST_CASE("out-of-range triplet")
{
    std::vector<Triplet> t{{0, 3, 1.0}};
    CHECK_THROWS_AS(SparseMatrix::from_triplets(3, t), InputError);
}

TEST_CASE("CSR invariants: sorted columns, no stored zeros")
{
    std::vector<Triplet> t{{1, 2, 1.0}, {1, 0, 1.0}, {1, 2, -1.0}, {0, 1, 5.0}, {2, 2, 0.0}};
    auto A = SparseMatrix::from_triplets(3, t);
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t k = A.row_offsets()[i]; k + 1 < A.row_offsets()[i + 1]; ++k)
            CHECK(A.col_indices()[k] < A.col_indices()[k + 1]);
    for (double v : A.values())
        CHECK(v != 0.0);
    CHECK(A.nonzeros() == 2);
}

TEST_CASE("matvec agrees with a dense oracle")
{
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> idx(0, 29);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Triplet> t;
        oracle::Dense D(30, std::vector<double>(30, 0.0));
        for (int k = 0; k < 200; ++k) {
            Triplet e{idx(rng), idx(rng), u(rng)};
            t.push_back(e);
            D[e.row][e.col] += e.value;
        }
        auto A = SparseMatrix::from_triplets(30, t);
        auto x = oracle::random_vector(30, rng);
        auto y = A * x;
        auto yd = oracle::matvec(D, x);
        for (std::size_t i = 0; i < 30; ++i)
            CHECK(std::abs(y[i] - yd[i]) <= 1e-14 * (1.0 + std::abs(yd[i])));
    }
}

TEST_CASE("matvec linearity")
{
    std::mt19937 rng(2);
    auto A = random_spd(40, rng);
    auto x = oracle::random_vector(40, rng), y = oracle::random_vector(40, rng);
    const double alpha = 0.37;
    std::vector<double> z(40);
    for (std::size_t i = 0; i < 40; ++i)
        z[i] = alpha * x[i] + y[i];
    auto Az = A * z, Ax = A * x, Ay = A * y;
    for (std::size_t i = 0; i < 40; ++i)
        CHECK(std::abs(Az[i] - (alpha * Ax[i] + Ay[i])) <= 1e-13 * (1.0 + std::abs(Az[i])));
}

TEST_CASE("CG on the identity takes one iteration")
{
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < 5; ++i)
        t.push_back({i, i, 1.0});
    auto I = SparseMatrix::from_triplets(5, t, true);
    std::vector<double> b{1, -2, 3, 0.5, 7};
    auto r = cg_solve(I, b);
    CHECK(r.report.converged);
    CHECK(r.report.iterations == 1);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(r.x[i] == doctest::Approx(b[i]).epsilon(1e-14));
}

TEST_CASE("CG on the [2,-1] tridiagonal of size 3")
{
    std::vector<double> b{1, 0, 0};
    auto r = cg_solve(tridiag(3), b);
    CHECK(r.x[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.x[2] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("CG matches a dense solve")
{
    std::mt19937 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        auto A = random_spd(25, rng);
        auto b = oracle::random_vector(25, rng);
        CgOptions opts;
        auto r = cg_solve(A, b, opts);
        REQUIRE(r.report.converged);
        CHECK(r.report.relative_residual <= opts.tol);
        auto x = oracle::solve(oracle::dense(A), b);
        double err = 0.0, nx = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            err = std::max(err, std::abs(r.x[i] - x[i]));
            nx = std::max(nx, std::abs(x[i]));
        }
        // relative residual 1e-10 on a well-conditioned matrix
        CHECK(err <= 10 * opts.tol * std::max(1.0, nx) * 10);
    }
}

TEST_CASE("CG error decreases monotonically in the A-norm")
{
    std::mt19937 rng(4);
    auto A = random_spd(30, rng);
    auto b = oracle::random_vector(30, rng);
    auto exact = oracle::solve(oracle::dense(A), b);
    std::vector<double> norms;
    CgOptions opts;
    opts.on_iterate = [&](std::size_t, std::span<const double> x) {
        std::vector<double> e(x.size());
        for (std::size_t i = 0; i < e.size(); ++i)
            e[i] = x[i] - exact[i];
        auto Ae = A * e;
        norms.push_back(std::sqrt(dot(e, Ae)));
    };
    cg_solve(A, b, opts);
    REQUIRE(norms.size() > 2);
    for (std::size_t i = 1; i < norms.size(); ++i)
        CHECK(norms[i] <= norms[i - 1] * (1 + 1e-12) + 1e-14);
}

TEST_CASE("Jacobi and unpreconditioned CG reach the same solution")
{
    std::mt19937 rng(5);
    auto A = random_spd(30, rng);
    auto b = oracle::random_vector(30, rng);
    CgOptions none;
    none.preconditioner = Preconditioner::None;
    auto a = cg_solve(A, b, none);
    auto j = cg_solve(A, b);
    for (std::size_t i = 0; i < 30; ++i)
        CHECK(std::abs(a.x[i] - j.x[i]) <= 1e-8);
}

TEST_CASE("breakdown names the iteration")
{
    std::vector<Triplet> t{{0, 0, 1.0}, {1, 1, -1.0}};
    auto A = SparseMatrix::from_triplets(2, t, true);
    std::vector<double> b{1.0, 1.0};
    CgOptions opts;
    opts.preconditioner = Preconditioner::None;
    try {
        cg_solve(A, b, opts);
        FAIL("expected a definiteness error");
    } catch (const DefinitenessError& e) {
        CHECK(e.iteration() == 1);
        CHECK(std::string(e.what()).find("iteration 1") != std::string::npos);
    }
    // Jacobi refuses the non-positive diagonal up front
    CHECK_THROWS_AS(jacobi_inverse(A), DefinitenessError);
}

TEST_CASE("non-convergence is reported, not thrown")
{
    CgOptions opts;
    opts.max_iterations = 2;
    std::vector<double> b(50, 1.0);
    auto r = cg_solve(tridiag(50), b, opts);
    CHECK_FALSE(r.report.converged);
    CHECK(r.report.relative_residual > opts.tol);
}

TEST_CASE("zero right-hand side")
{
    std::vector<double> b(4, 0.0);
    auto r = cg_solve(tridiag(4), b);
    CHECK(r.report.converged);
    for (double v : r.x)
        CHECK(v == 0.0);
}

TEST_CASE("elimination keeps symmetry and fixes the flagged unknowns")
{
    std::mt19937 rng(6);
    auto A = random_spd(10, rng);
    std::vector<char> fixed(10, 0);
    fixed[2] = fixed[7] = 1;
    auto E = A.eliminate(fixed);
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 10; ++j) {
            CHECK(E.at(i, j) == E.at(j, i));
            if (fixed[i] || fixed[j])
                CHECK(E.at(i, j) == (i == j ? 1.0 : 0.0));
            else
                CHECK(E.at(i, j) == A.at(i, j));
        }
    }
}

TEST_CASE("combine over the union of patterns")
{
    std::vector<Triplet> a{{0, 0, 1.0}, {0, 1, 2.0}}, b{{1, 1, 3.0}, {0, 1, -1.0}};
    auto A = SparseMatrix::from_triplets(2, a), B = SparseMatrix::from_triplets(2, b);
    auto C = A.combine(2.0, B, 2.0);
    CHECK(C.at(0, 0) == 2.0);
    CHECK(C.at(0, 1) == 2.0);
    CHECK(C.at(1, 1) == 6.0);
}

TEST_CASE("prolongation interpolates coarse P1 functions")
{
    auto h = uniform_hierarchy(2, 1.0 / 8, 2);
    REQUIRE(h.size() >= 2);
    const Mesh& coarse = *h[0];
    const Mesh& fine = *h[1];
    std::vector<char> none_c(coarse.num_vertices(), 0), none_f(fine.num_vertices(), 0);
    auto P = prolongation(coarse, fine, none_c, none_f);
    std::mt19937 rng(8);
    auto xc = oracle::random_vector(coarse.num_vertices(), rng);
    std::vector<double> xf(fine.num_vertices());
    P.prolong(xc, xf);
    for (std::size_t v = 0; v < fine.num_vertices(); ++v) {
        auto e = oracle::locate(coarse, fine.vertex(v));
        REQUIRE(e);
        auto l = oracle::barycentric(coarse.corners(*e), fine.vertex(v));
        const auto& el = coarse.element(*e);
        double expect = l[0] * xc[el[0]] + l[1] * xc[el[1]] + l[2] * xc[el[2]];
        CHECK(std::abs(xf[v] - expect) <= 1e-14);
    }
}

TEST_CASE("Galerkin product matches the dense triple product")
{
    auto h = uniform_hierarchy(2, 1.0 / 4, 1);
    const Mesh& coarse = *h[h.size() - 2];
    const Mesh& fine = *h.back();
    auto A = assemble_stiffness(fine, constant_coefficient(1.0));
    std::vector<char> none_c(coarse.num_vertices(), 0), none_f(fine.num_vertices(), 0);
    auto P = prolongation(coarse, fine, none_c, none_f);
    auto Ac = galerkin_product(P, A);
    auto D = oracle::dense(A);
    oracle::Dense Pd(P.rows, std::vector<double>(P.cols, 0.0));
    for (std::size_t i = 0; i < P.rows; ++i)
        for (std::size_t k = P.row_offsets[i]; k < P.row_offsets[i + 1]; ++k)
            Pd[i][P.col_indices[k]] = P.values[k];
    for (std::size_t a = 0; a < P.cols; ++a) {
        for (std::size_t b = 0; b < P.cols; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < P.rows; ++i)
                for (std::size_t j = 0; j < P.rows; ++j)
                    s += Pd[i][a] * D[i][j] * Pd[j][b];
            CHECK(std::abs(Ac.at(a, b) - s) <= 1e-13);
        }
    }
    // nested P1 spaces: the Galerkin operator is the coarse stiffness
    auto Kc = assemble_stiffness(coarse, constant_coefficient(1.0));
    for (std::size_t a = 0; a < P.cols; ++a)
        for (std::size_t b = 0; b < P.cols; ++b)
            CHECK(std::abs(Ac.at(a, b) - Kc.at(a, b)) <= 1e-13);
}

TEST_CASE("multigrid preconditioner is symmetric and solves to the same answer")
{
    auto h = uniform_hierarchy(4, 1.0 / 64, 2);
    const Mesh& fine = *h.back();
    auto K = assemble_stiffness(fine, two_scale_coefficient(0.1, 2.5, 1.5));
    auto M = assemble_mass(fine);
    auto A = M.combine(1.0, K, 0.01).eliminate(dirichlet_mask(fine));
    Multigrid mg(h, A);
    CHECK(mg.levels() == h.size());

    std::mt19937 rng(9);
    auto r1 = oracle::random_vector(A.size(), rng), r2 = oracle::random_vector(A.size(), rng);
    std::vector<double> z1(A.size()), z2(A.size());
    mg.apply(r1, z1);
    mg.apply(r2, z2);
    CHECK(std::abs(dot(r1, z2) - dot(r2, z1)) <= 1e-12 * std::abs(dot(r1, z2)));
    CHECK(dot(r1, z1) > 0.0);

    auto b = oracle::random_vector(A.size(), rng);
    auto fixed = dirichlet_mask(fine);
    for (std::size_t i = 0; i < b.size(); ++i)
        if (fixed[i])
            b[i] = 0.0;
    auto jac = cg_solve(A, b);
    CgOptions opts;
    opts.preconditioner = Preconditioner::Custom;
    opts.factory = Multigrid::factory(h);
    auto mgr = cg_solve(A, b, opts);
    REQUIRE(mgr.report.converged);
    CHECK(mgr.report.iterations < jac.report.iterations / 4);
    // both stop at a 1e-10 relative residual; the matrix condition number
    // is below 1e4 here, which bounds the relative difference
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        err = std::max(err, std::abs(mgr.x[i] - jac.x[i]));
        scale = std::max(scale, std::abs(jac.x[i]));
    }
    CHECK(err <= 2e-6 * scale);
}
