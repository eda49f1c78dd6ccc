#include "glocal/fem.hpp"

#include <cmath>

namespace glocal {

FeFunction::FeFunction(std::shared_ptr<const Mesh> m, std::vector<double> v, std::optional<double> t)
    : mesh(std::move(m)), values(std::move(v)), time(t)
{
    if (!mesh || values.size() != mesh->num_vertices())
        throw InputError("FE function length does not match the mesh vertex count");
}

FeFunction FeFunction::interpolate(std::shared_ptr<const Mesh> m, const std::function<double(Point)>& f)
{
    std::vector<double> v(m->num_vertices());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = f(m->vertex(i));
    return FeFunction(std::move(m), std::move(v));
}

std::array<Point, 3> quadrature_points(const std::array<Point, 3>& c)
{
    std::array<Point, 3> q;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& l = kQuadBarycentric[k];
        q[k] = {l[0] * c[0].x + l[1] * c[1].x + l[2] * c[2].x, l[0] * c[0].y + l[1] * c[1].y + l[2] * c[2].y};
    }
    return q;
}

std::array<Point, 3> p1_gradients(const std::array<Point, 3>& c)
{
    double twice_area = cross(c[1] - c[0], c[2] - c[0]);
    if (!(twice_area > 0.0))
        throw MeshError("degenerate or inverted element");
    std::array<Point, 3> g;
    for (std::size_t i = 0; i < 3; ++i) {
        Point e = c[(i + 2) % 3] - c[(i + 1) % 3];
        g[i] = {-e.y / twice_area, e.x / twice_area};
    }
    return g;
}

SymTensor2 element_mean_coefficient(const Mesh& mesh, std::size_t e, const ElementCoefficient& coeff)
{
    auto q = quadrature_points(mesh.corners(e));
    SymTensor2 s = coeff(e, q[0]) + coeff(e, q[1]) + coeff(e, q[2]);
    return (1.0 / 3.0) * s;
}

std::array<std::array<double, 3>, 3> local_stiffness(const std::array<Point, 3>& c, const SymTensor2& a)
{
    auto g = p1_gradients(c);
    double area = 0.5 * cross(c[1] - c[0], c[2] - c[0]);
    std::array<std::array<double, 3>, 3> k{};
    for (std::size_t i = 0; i < 3; ++i) {
        Point ag = a.apply(g[i]);
        for (std::size_t j = 0; j < 3; ++j)
            k[j][i] = area * dot(g[j], ag);
    }
    // exact symmetry regardless of rounding in the products
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j)
            k[j][i] = k[i][j];
    return k;
}

std::array<std::array<double, 3>, 3> local_mass(const std::array<Point, 3>& c)
{
    double area = 0.5 * cross(c[1] - c[0], c[2] - c[0]);
    if (!(area > 0.0))
        throw MeshError("degenerate or inverted element");
    double d = area / 6.0, o = area / 12.0;
    return {{{d, o, o}, {o, d, o}, {o, o, d}}};
}

SparseMatrix assemble_stiffness(const Mesh& mesh, const ElementCoefficient& coeff,
                                std::span<const std::uint32_t> dof_of_vertex, std::size_t num_dofs)
{
    std::vector<Triplet> t;
    t.reserve(9 * mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        auto k = local_stiffness(mesh.corners(e), element_mean_coefficient(mesh, e, coeff));
        const auto& el = mesh.element(e);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                t.push_back({dof_of_vertex[el[i]], dof_of_vertex[el[j]], k[i][j]});
    }
    return SparseMatrix::from_triplets(num_dofs, t, true);
}

SparseMatrix assemble_stiffness(const Mesh& mesh, const ElementCoefficient& coeff)
{
    std::vector<std::uint32_t> identity(mesh.num_vertices());
    for (std::uint32_t v = 0; v < identity.size(); ++v)
        identity[v] = v;
    return assemble_stiffness(mesh, coeff, identity, mesh.num_vertices());
}

SparseMatrix assemble_stiffness(const Mesh& mesh, const CoefficientField& coeff)
{
    return assemble_stiffness(mesh, coeff.per_element());
}

SparseMatrix assemble_mass(const Mesh& mesh)
{
    std::vector<Triplet> t;
    t.reserve(9 * mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        auto m = local_mass(mesh.corners(e));
        const auto& el = mesh.element(e);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                t.push_back({el[i], el[j], m[i][j]});
    }
    return SparseMatrix::from_triplets(mesh.num_vertices(), t, true);
}

std::vector<double> assemble_load(const Mesh& mesh, const SourceFunction& f, double t)
{
    std::vector<double> b(mesh.num_vertices(), 0.0);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        auto c = mesh.corners(e);
        auto q = quadrature_points(c);
        double w = mesh.area(e) / 3.0;
        const auto& el = mesh.element(e);
        for (std::size_t k = 0; k < 3; ++k) {
            double fq = w * f(q[k], t);
            for (std::size_t i = 0; i < 3; ++i)
                b[el[i]] += fq * kQuadBarycentric[k][i];
        }
    }
    return b;
}

std::vector<char> dirichlet_mask(const Mesh& mesh)
{
    std::vector<char> mask(mesh.num_vertices(), 0);
    for (auto v : mesh.boundary_vertices())
        mask[v] = 1;
    return mask;
}

std::size_t ParabolicProblem::steps() const
{
    if (!(dt > 0.0) || !(T > 0.0))
        throw ConfigError("time step and end time must be positive");
    double ratio = T / dt;
    double m = std::round(ratio);
    if (m < 1.0 || std::abs(ratio - m) > 1e-9 * ratio)
        throw ConfigError("T / dt must be a positive integer (T = " + std::to_string(T) +
                          ", dt = " + std::to_string(dt) + ")");
    return static_cast<std::size_t>(m);
}

ProjectionResult project_initial(const ParabolicProblem& problem, const CgOptions& cg)
{
    const Mesh& mesh = *problem.mesh;
    ProjectionResult result;
    SparseMatrix K = assemble_stiffness(mesh, problem.coefficient);
    auto fixed = dirichlet_mask(mesh);

    std::vector<double> rhs(mesh.num_vertices(), 0.0);
    if (problem.grad_u0) {
        for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
            auto c = mesh.corners(e);
            auto g = p1_gradients(c);
            auto q = quadrature_points(c);
            double w = mesh.area(e) / 3.0;
            Point flux{0.0, 0.0};
            for (std::size_t k = 0; k < 3; ++k)
                flux = flux + w * problem.coefficient(e, q[k]).apply(problem.grad_u0(q[k]));
            const auto& el = mesh.element(e);
            for (std::size_t i = 0; i < 3; ++i)
                rhs[el[i]] += dot(g[i], flux);
        }
    } else {
        result.warnings.emplace_back("no closed-form gradient of u0; projecting the nodal interpolant");
        std::vector<double> pi(mesh.num_vertices());
        for (std::size_t v = 0; v < pi.size(); ++v)
            pi[v] = problem.u0(mesh.vertex(v));
        K.multiply(pi, rhs);
    }
    for (std::size_t v = 0; v < rhs.size(); ++v) {
        if (fixed[v])
            rhs[v] = 0.0;
    }

    SparseMatrix Kf = K.eliminate(fixed);
    CgOptions opts = cg;
    if (opts.preconditioner == Preconditioner::Custom && !opts.custom && opts.factory)
        opts.custom = opts.factory(Kf);
    auto solved = cg_solve(Kf, rhs, opts);
    if (!solved.report.converged)
        throw SolverError("initial projection did not converge", solved.report.relative_residual);
    result.report = solved.report;
    result.U0 = FeFunction(problem.mesh, std::move(solved.x), 0.0);
    return result;
}

MarchResult backward_euler_march(const ParabolicProblem& problem, const FeFunction& U0, const MarchOptions& options)
{
    const Mesh& mesh = *problem.mesh;
    const std::size_t m = problem.steps();
    const std::size_t n = mesh.num_vertices();
    if (U0.values.size() != n)
        throw InputError("initial value does not live on the problem mesh");

    SparseMatrix M = assemble_mass(mesh);
    SparseMatrix K = assemble_stiffness(mesh, problem.coefficient);
    auto fixed = dirichlet_mask(mesh);
    SparseMatrix A = M.combine(1.0, K, problem.dt).eliminate(fixed);

    CgOptions cg = options.cg;
    if (cg.preconditioner == Preconditioner::Custom && !cg.custom && cg.factory)
        cg.custom = cg.factory(A);
    if (cg.preconditioner == Preconditioner::Jacobi && !cg.jacobi_inverse)
        cg.jacobi_inverse = std::make_shared<const std::vector<double>>(jacobi_inverse(A));

    MarchResult result;
    if (options.keep_history)
        result.history.reserve(m);
    result.reports.reserve(m);
    result.equation_residuals.reserve(m);

    std::vector<double> prev = U0.values;
    std::vector<double> rhs(n), Au(n);
    for (std::size_t k = 1; k <= m; ++k) {
        const double t = static_cast<double>(k) * problem.dt;
        M.multiply(prev, rhs);
        if (problem.source) {
            auto F = assemble_load(mesh, problem.source, t);
            for (std::size_t i = 0; i < n; ++i)
                rhs[i] += problem.dt * F[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (fixed[i])
                rhs[i] = 0.0;
        }

        std::vector<double> next = prev; // warm start
        for (std::size_t i = 0; i < n; ++i) {
            if (fixed[i])
                next[i] = 0.0;
        }
        SolveReport report = cg_solve(A, rhs, next, cg);
        if (!report.converged)
            throw SolverError("backward Euler step " + std::to_string(k) + " did not converge",
                              report.relative_residual);
        result.reports.push_back(report);

        A.multiply(next, Au);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!fixed[i]) {
                num += (Au[i] - rhs[i]) * (Au[i] - rhs[i]);
                den += rhs[i] * rhs[i];
            }
        }
        result.equation_residuals.push_back(den > 0.0 ? std::sqrt(num / den) : std::sqrt(num));

        prev = std::move(next);
        FeFunction Uk(problem.mesh, prev, t);
        if (options.observer)
            options.observer(k, t, Uk);
        if (options.keep_history)
            result.history.push_back(Uk);
        if (k == m)
            result.last = std::move(Uk);
    }
    return result;
}

double l2_norm(const SparseMatrix& mass, std::span<const double> u)
{
    auto Mu = mass * u;
    return std::sqrt(std::max(0.0, dot(u, Mu)));
}

double energy(const SparseMatrix& stiffness, std::span<const double> u)
{
    auto Ku = stiffness * u;
    return dot(u, Ku);
}

} // namespace glocal
