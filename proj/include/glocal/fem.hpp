#ifndef GLOCAL_FEM_HPP
#define GLOCAL_FEM_HPP

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glocal/coefficient.hpp"
#include "glocal/linalg.hpp"
#include "glocal/mesh.hpp"

namespace glocal {

/// Piecewise linear scalar field: one nodal value per mesh vertex.
struct FeFunction {
    std::shared_ptr<const Mesh> mesh;
    std::vector<double> values;
    std::optional<double> time;

    FeFunction() = default;
    FeFunction(std::shared_ptr<const Mesh> m, std::vector<double> v, std::optional<double> t = std::nullopt);

    /// Nodal interpolant of f.
    static FeFunction interpolate(std::shared_ptr<const Mesh> m, const std::function<double(Point)>& f);
};

// Reference-element quadrature used by every assembly routine: the interior
// 3-point rule (barycentric (2/3, 1/6, 1/6) and permutations, weights 1/3),
// exact for quadratics.
inline constexpr std::array<std::array<double, 3>, 3> kQuadBarycentric{{
    {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
    {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
    {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0},
}};

std::array<Point, 3> quadrature_points(const std::array<Point, 3>& corners);

/// Constant gradients of the three P1 hat functions on a triangle.
std::array<Point, 3> p1_gradients(const std::array<Point, 3>& corners);

/// Quadrature mean of the coefficient over element e.
SymTensor2 element_mean_coefficient(const Mesh& mesh, std::size_t e, const ElementCoefficient& coeff);

/// area * grad(phi_i) . a grad(phi_j) for a constant tensor a.
std::array<std::array<double, 3>, 3> local_stiffness(const std::array<Point, 3>& corners, const SymTensor2& a);
/// (area / 12) [[2,1,1],[1,2,1],[1,1,2]].
std::array<std::array<double, 3>, 3> local_mass(const std::array<Point, 3>& corners);

/// (coeff grad u, grad v) over all elements. Throws MeshError on degenerate
/// elements.
SparseMatrix assemble_stiffness(const Mesh& mesh, const ElementCoefficient& coeff);
SparseMatrix assemble_stiffness(const Mesh& mesh, const CoefficientField& coeff);

/// Stiffness with vertices mapped onto `num_dofs` degrees of freedom
/// (used for periodic identification).
SparseMatrix assemble_stiffness(const Mesh& mesh, const ElementCoefficient& coeff,
                                std::span<const std::uint32_t> dof_of_vertex, std::size_t num_dofs);

/// Consistent P1 mass matrix.
SparseMatrix assemble_mass(const Mesh& mesh);

using SourceFunction = std::function<double(Point, double)>;

/// (f(., t), phi_i) by element quadrature.
std::vector<double> assemble_load(const Mesh& mesh, const SourceFunction& f, double t);

/// Flags of the boundary vertices (homogeneous Dirichlet DOFs).
std::vector<char> dirichlet_mask(const Mesh& mesh);

struct ParabolicProblem {
    std::shared_ptr<const Mesh> mesh;
    ElementCoefficient coefficient;
    SourceFunction source;
    std::function<double(Point)> u0;
    /// Closed-form gradient of u0; when empty the projection falls back to
    /// the gradient of the nodal interpolant and logs a warning.
    std::function<Point(Point)> grad_u0;
    double T = 1.0;
    double dt = 0.02;

    /// m = T / dt; throws ConfigError unless it is a positive integer.
    std::size_t steps() const;
};

struct ProjectionResult {
    FeFunction U0;
    SolveReport report;
    std::vector<std::string> warnings;
};

/// Elliptic projection: (b grad U0, grad V) = (b grad u0, grad V) for all V in
/// the homogeneous space.
ProjectionResult project_initial(const ParabolicProblem& problem, const CgOptions& cg = {});

struct MarchOptions {
    CgOptions cg;
    bool keep_history = true;
    /// Called after every step with (k, t_k, U_k).
    std::function<void(std::size_t, double, const FeFunction&)> observer;
};

struct MarchResult {
    std::vector<FeFunction> history; // U_1 .. U_m when keep_history is set
    FeFunction last;
    std::vector<SolveReport> reports;
    /// ||(M + dt K) U_k - M U_{k-1} - dt F_k|| / ||M U_{k-1} + dt F_k|| on free DOFs.
    std::vector<double> equation_residuals;
};

/// Backward Euler: (M + dt K) U_k = M U_{k-1} + dt F_k on the free DOFs.
/// Throws SolverError naming the step when CG does not converge.
MarchResult backward_euler_march(const ParabolicProblem& problem, const FeFunction& U0,
                                 const MarchOptions& options = {});

/// sqrt(U' M U).
double l2_norm(const SparseMatrix& mass, std::span<const double> u);
/// U' K U.
double energy(const SparseMatrix& stiffness, std::span<const double> u);

} // namespace glocal

#endif
