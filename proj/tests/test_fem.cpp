#include <cmath>
#include <numbers>

#include "doctest.h"
#include "glocal/errors.hpp"
#include "glocal/fem.hpp"
#include "oracles.hpp"

using namespace glocal;

namespace {

constexpr double pi = std::numbers::pi;

std::shared_ptr<const Mesh> unit_mesh(std::size_t n)
{
    return std::make_shared<const Mesh>(build_structured_mesh(n));
}

std::shared_ptr<const Mesh> hybrid_mesh()
{
    MeshSpec s;
    s.H_target = 1.0 / 8;
    s.h_target = 1.0 / 64;
    s.defect = well_defect();
    s.base_n = 4;
    return std::make_shared<const Mesh>(build_locally_refined_mesh(s));
}

double sum_all(const SparseMatrix& A)
{
    double s = 0.0;
    for (double v : A.values())
        s += v;
    return s;
}

} // namespace

TEST_CASE("local stiffness of the unit right triangle")
{
    std::array<Point, 3> c{Point{0, 0}, Point{1, 0}, Point{0, 1}};
    auto K = local_stiffness(c, SymTensor2::identity());
    const double expect[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(K[i][j] == doctest::Approx(expect[i][j]).epsilon(1e-15));
}

TEST_CASE("local mass of the unit right triangle")
{
    std::array<Point, 3> c{Point{0, 0}, Point{1, 0}, Point{0, 1}};
    auto M = local_mass(c);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(M[i][j] == doctest::Approx((i == j ? 2.0 : 1.0) * 0.5 / 12.0).epsilon(1e-15));
}

TEST_CASE("P1 gradients sum to zero and reproduce linears")
{
    std::array<Point, 3> c{Point{0.1, 0.2}, Point{0.7, 0.25}, Point{0.3, 0.9}};
    auto g = p1_gradients(c);
    Point s = g[0] + g[1] + g[2];
    CHECK(std::abs(s.x) < 1e-14);
    CHECK(std::abs(s.y) < 1e-14);
    // v = 2x - 3y
    Point grad = (2 * c[0].x - 3 * c[0].y) * g[0] + (2 * c[1].x - 3 * c[1].y) * g[1] + (2 * c[2].x - 3 * c[2].y) * g[2];
    CHECK(grad.x == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(grad.y == doctest::Approx(-3.0).epsilon(1e-13));
}

TEST_CASE("stiffness annihilates constants and is symmetric")
{
    auto m = hybrid_mesh();
    auto K = assemble_stiffness(*m, two_scale_coefficient(0.04, 2.5, 1.5));
    std::vector<double> one(m->num_vertices(), 1.0);
    auto r = K * one;
    double scale = 0.0;
    for (double v : K.values())
        scale = std::max(scale, std::abs(v));
    for (double v : r)
        CHECK(std::abs(v) <= 1e-12 * scale);
    for (std::size_t i = 0; i < K.size(); ++i)
        for (std::size_t k = K.row_offsets()[i]; k < K.row_offsets()[i + 1]; ++k)
            CHECK(K.at(K.col_indices()[k], i) == K.values()[k]);
}

TEST_CASE("stiffness is linear in the coefficient")
{
    auto m = unit_mesh(6);
    auto K1 = assemble_stiffness(*m, constant_coefficient(1.0));
    auto K3 = assemble_stiffness(*m, constant_coefficient(3.0));
    REQUIRE(K1.nonzeros() == K3.nonzeros());
    for (std::size_t k = 0; k < K1.nonzeros(); ++k)
        CHECK(K3.values()[k] == doctest::Approx(3.0 * K1.values()[k]).epsilon(1e-15));
}

TEST_CASE("mass matrix: symmetric, positive, total |D|")
{
    auto m = hybrid_mesh();
    auto M = assemble_mass(*m);
    CHECK(sum_all(M) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < M.size(); ++i)
        for (std::size_t k = M.row_offsets()[i]; k < M.row_offsets()[i + 1]; ++k)
            CHECK(M.at(M.col_indices()[k], i) == M.values()[k]);
    std::mt19937 rng(1);
    for (int t = 0; t < 5; ++t) {
        auto x = oracle::random_vector(M.size(), rng);
        auto Mx = M * x;
        CHECK(dot(x, Mx) > 0.0);
    }
}

TEST_CASE("load vectors")
{
    auto m = hybrid_mesh();
    auto M = assemble_mass(*m);
    auto one = assemble_load(*m, [](Point, double) { return 1.0; }, 0.0);
    auto rows = M * std::vector<double>(m->num_vertices(), 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i] == doctest::Approx(rows[i]).epsilon(1e-13));
        total += one[i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    auto zero = assemble_load(*m, [](Point, double) { return 0.0; }, 0.0);
    for (double v : zero)
        CHECK(v == 0.0);

    // f = a hat function: the load is the matching mass column
    PointLocator loc(*m);
    const std::size_t j = m->num_vertices() / 2;
    auto hat = [&](Point p, double) {
        auto e = loc.locate(p);
        auto l = loc.barycentric(*e, p);
        const auto& el = m->element(*e);
        double v = 0.0;
        for (int i = 0; i < 3; ++i)
            v += el[i] == j ? l[i] : 0.0;
        return v;
    };
    auto F = assemble_load(*m, hat, 0.0);
    for (std::size_t i = 0; i < F.size(); ++i)
        CHECK(std::abs(F[i] - M.at(i, j)) <= 1e-15);
}

TEST_CASE("time argument reaches the source")
{
    auto m = unit_mesh(4);
    auto F = assemble_load(*m, [](Point, double t) { return t; }, 2.0);
    double total = 0.0;
    for (double v : F)
        total += v;
    CHECK(total == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("dirichlet mask flags boundary vertices")
{
    auto m = hybrid_mesh();
    auto mask = dirichlet_mask(*m);
    for (std::size_t v = 0; v < m->num_vertices(); ++v)
        CHECK((mask[v] != 0) == m->is_boundary(v));
}

TEST_CASE("step count")
{
    ParabolicProblem p;
    p.T = 1.0;
    p.dt = 0.02;
    CHECK(p.steps() == 50);
    p.dt = 0.2;
    CHECK(p.steps() == 5);
    p.dt = 0.03;
    CHECK_THROWS_AS(p.steps(), ConfigError);
    p.dt = 2.0;
    CHECK_THROWS_AS(p.steps(), ConfigError);
}

TEST_CASE("projection of a discrete function is that function")
{
    auto m = hybrid_mesh();
    std::mt19937 rng(2);
    auto vals = oracle::random_vector(m->num_vertices(), rng);
    auto mask = dirichlet_mask(*m);
    for (std::size_t v = 0; v < vals.size(); ++v)
        if (mask[v])
            vals[v] = 0.0;
    PointLocator loc(*m);
    ParabolicProblem p;
    p.mesh = m;
    p.coefficient = two_scale_coefficient(0.04, 2.5, 1.5).per_element();
    p.u0 = [&](Point x) {
        auto e = *loc.locate(x);
        auto l = loc.barycentric(e, x);
        const auto& el = m->element(e);
        return l[0] * vals[el[0]] + l[1] * vals[el[1]] + l[2] * vals[el[2]];
    };
    p.grad_u0 = [&](Point x) {
        auto e = *loc.locate(x);
        auto g = p1_gradients(m->corners(e));
        const auto& el = m->element(e);
        return vals[el[0]] * g[0] + vals[el[1]] * g[1] + vals[el[2]] * g[2];
    };
    auto r = project_initial(p);
    CHECK(r.warnings.empty());
    for (std::size_t v = 0; v < vals.size(); ++v)
        CHECK(std::abs(r.U0.values[v] - vals[v]) <= 1e-8);

    // without the gradient the interpolant is used, with a warning
    p.grad_u0 = nullptr;
    auto w = project_initial(p);
    CHECK(w.warnings.size() == 1);
    for (std::size_t v = 0; v < vals.size(); ++v)
        CHECK(std::abs(w.U0.values[v] - vals[v]) <= 1e-8);
}

TEST_CASE("projection is invariant under coefficient scaling")
{
    auto m = hybrid_mesh();
    ParabolicProblem p;
    p.mesh = m;
    p.u0 = [](Point x) { return x.x * (1 - x.x) * x.y * (1 - x.y); };
    p.grad_u0 = [](Point x) { return Point{(1 - 2 * x.x) * x.y * (1 - x.y), x.x * (1 - x.x) * (1 - 2 * x.y)}; };
    auto a = two_scale_coefficient(0.04, 2.5, 1.5);
    p.coefficient = a.per_element();
    auto u1 = project_initial(p).U0;
    p.coefficient = [a](std::size_t, Point x) { return 7.5 * a(x); };
    auto u2 = project_initial(p).U0;
    double mx = 0.0;
    for (double v : u1.values)
        mx = std::max(mx, std::abs(v));
    for (std::size_t v = 0; v < u1.values.size(); ++v)
        CHECK(std::abs(u1.values[v] - u2.values[v]) <= 1e-8 * mx);
}

TEST_CASE("Ritz projection approaches the interpolant at first order or better")
{
    auto u0 = [](Point x) { return x.x * (1 - x.x) * x.y * (1 - x.y); };
    auto g0 = [](Point x) { return Point{(1 - 2 * x.x) * x.y * (1 - x.y), x.x * (1 - x.x) * (1 - 2 * x.y)}; };
    std::vector<double> errs, hs;
    for (std::size_t n : {8u, 16u, 32u, 64u}) {
        ParabolicProblem p;
        p.mesh = unit_mesh(n);
        p.coefficient = constant_coefficient(1.0).per_element();
        p.u0 = u0;
        p.grad_u0 = g0;
        auto U0 = project_initial(p).U0;
        std::vector<double> d(U0.values.size());
        for (std::size_t v = 0; v < d.size(); ++v)
            d[v] = U0.values[v] - u0(p.mesh->vertex(v));
        std::vector<char> all(p.mesh->num_elements(), 1);
        errs.push_back(std::sqrt(h1_semi_squared(*p.mesh, d, all)));
        hs.push_back(1.0 / n);
    }
    CHECK(errs[2] <= hs[2]);
    for (std::size_t i = 1; i < errs.size(); ++i)
        CHECK(std::log2(errs[i - 1] / errs[i]) >= 1.0);
}

TEST_CASE("zero data stays zero")
{
    auto m = unit_mesh(8);
    ParabolicProblem p;
    p.mesh = m;
    p.coefficient = constant_coefficient(1.0).per_element();
    p.T = 0.5;
    p.dt = 0.05;
    FeFunction U0(m, std::vector<double>(m->num_vertices(), 0.0), 0.0);
    auto r = backward_euler_march(p, U0);
    CHECK(r.history.size() == 10);
    for (const auto& u : r.history)
        for (double v : u.values)
            CHECK(v == 0.0);
}

TEST_CASE("discrete L2 and energy stability with f = 0")
{
    auto m = hybrid_mesh();
    auto micro = two_scale_coefficient(0.04, 2.5, 1.5);
    HybridField b = hybrid(micro, two_scale_effective(2.5, 1.5), *m);
    ParabolicProblem p;
    p.mesh = m;
    p.coefficient = b.as_element_coefficient();
    p.T = 2.0;
    p.dt = 0.02;
    std::mt19937 rng(3);
    auto vals = oracle::random_vector(m->num_vertices(), rng);
    auto mask = dirichlet_mask(*m);
    for (std::size_t v = 0; v < vals.size(); ++v)
        if (mask[v])
            vals[v] = 0.0;
    FeFunction U0(m, vals, 0.0);
    auto r = backward_euler_march(p, U0);
    REQUIRE(r.history.size() == 100);

    auto M = assemble_mass(*m);
    auto K = assemble_stiffness(*m, p.coefficient);
    double l2_prev = l2_norm(M, U0.values), en_prev = energy(K, U0.values);
    for (const auto& u : r.history) {
        double l2 = l2_norm(M, u.values), en = energy(K, u.values);
        CHECK(l2 <= l2_prev * (1 + 1e-12));
        CHECK(en <= en_prev * (1 + 1e-12));
        l2_prev = l2;
        en_prev = en;
    }
    for (double res : r.equation_residuals)
        CHECK(res <= 10 * 1e-10);
}

TEST_CASE("separable heat solution")
{
    auto exact = [](Point x, double t) { return std::exp(-2 * pi * pi * t) * std::sin(pi * x.x) * std::sin(pi * x.y); };
    std::vector<double> errs;
    for (std::size_t n : {8u, 16u, 32u}) {
        auto m = unit_mesh(n);
        ParabolicProblem p;
        p.mesh = m;
        p.coefficient = constant_coefficient(1.0).per_element();
        p.u0 = [&](Point x) { return exact(x, 0.0); };
        p.grad_u0 = [](Point x) { return Point{pi * std::cos(pi * x.x) * std::sin(pi * x.y), pi * std::sin(pi * x.x) * std::cos(pi * x.y)}; };
        p.T = 0.1;
        p.dt = 0.1 / (16.0 * (n / 8.0) * (n / 8.0));
        auto U0 = project_initial(p).U0;
        auto r = backward_euler_march(p, U0);
        double e = 0.0;
        for (std::size_t v = 0; v < m->num_vertices(); ++v)
            e = std::max(e, std::abs(r.last.values[v] - exact(m->vertex(v), 0.1)));
        errs.push_back(e);
    }
    for (std::size_t i = 1; i < errs.size(); ++i) {
        double order = std::log2(errs[i - 1] / errs[i]);
        CHECK(order > 1.7);
    }
}

TEST_CASE("a failing step is named")
{
    auto m = unit_mesh(16);
    ParabolicProblem p;
    p.mesh = m;
    p.coefficient = constant_coefficient(1.0).per_element();
    p.T = 0.1;
    p.dt = 0.05;
    std::vector<double> vals(m->num_vertices());
    for (std::size_t v = 0; v < vals.size(); ++v)
        vals[v] = m->is_boundary(v) ? 0.0 : std::sin(13.0 * v);
    MarchOptions opts;
    opts.cg.max_iterations = 1;
    CHECK_THROWS_WITH_AS(backward_euler_march(p, FeFunction(m, vals, 0.0), opts), doctest::Contains("step 1"),
                         SolverError);
}

TEST_CASE("observer sees every step")
{
    auto m = unit_mesh(4);
    ParabolicProblem p;
    p.mesh = m;
    p.coefficient = constant_coefficient(1.0).per_element();
    p.source = [](Point, double) { return 1.0; };
    p.T = 1.0;
    p.dt = 0.25;
    MarchOptions opts;
    opts.keep_history = false;
    std::vector<double> times;
    opts.observer = [&](std::size_t k, double t, const FeFunction& u) {
        times.push_back(t);
        CHECK(u.time == t);
        CHECK(k == times.size());
    };
    auto r = backward_euler_march(p, FeFunction(m, std::vector<double>(m->num_vertices(), 0.0), 0.0), opts);
    CHECK(times == std::vector<double>{0.25, 0.5, 0.75, 1.0});
    CHECK(r.history.empty());
    CHECK(r.last.time == 1.0);
}
