#ifndef GLOCAL_ERRORS_HPP
#define GLOCAL_ERRORS_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glocal/fem.hpp"
#include "glocal/mesh.hpp"

namespace glocal {

/// Fine nodal value = coarse function at that point, by barycentric
/// interpolation in the containing coarse element (lowest id on ties).
/// Throws GeometryError for a fine vertex outside the coarse mesh.
FeFunction transfer_to_fine(const FeFunction& coarse, std::shared_ptr<const Mesh> fine_mesh);

enum class ErrorRegion { GlobalMinusK, Defect, All };

const char* to_string(ErrorRegion r);

struct RegionError {
    double e0 = 0.0; // relative L2
    double e1 = 0.0; // relative H1 seminorm
    ErrorRegion region = ErrorRegion::All;
    double H = 0.0, h = 0.0, dt = 0.0;
};

/// Relative errors of u_num against u_ref (same mesh) over the elements of
/// the region: Exterior tags for GlobalMinusK, Defect tags for Defect.
/// Throws DomainError when a reference norm vanishes on the region.
RegionError region_relative_errors(const FeFunction& u_ref, const FeFunction& u_num, ErrorRegion region);

/// Same, over an explicit element mask.
RegionError region_relative_errors(const FeFunction& u_ref, const FeFunction& u_num, std::span<const char> elements);

/// Squared absolute L2 norm of a P1 function over masked elements (exact).
double l2_squared(const Mesh& mesh, std::span<const double> v, std::span<const char> elements);
/// Squared H1 seminorm over masked elements (exact for P1).
double h1_semi_squared(const Mesh& mesh, std::span<const double> v, std::span<const char> elements);

std::vector<char> region_mask(const Mesh& mesh, ErrorRegion region);

/// Absolute errors against a closed-form function, integrated with a
/// degree-5 7-point rule per element.
struct AnalyticError {
    double l2 = 0.0;
    double h1_semi = 0.0;
};
AnalyticError analytic_errors(const FeFunction& u, const std::function<double(Point)>& exact,
                              const std::function<Point(Point)>& exact_grad);

enum class ParamAxis { H, h, dt };

struct ConvergenceRow {
    double parameter = 0.0;
    double error = 0.0;
    std::optional<double> order; // from the second row on
};

struct ConvergenceTable {
    ParamAxis axis = ParamAxis::H;
    std::vector<ConvergenceRow> rows;
};

/// order_i = log(e_{i-1} / e_i) / log(p_{i-1} / p_i). Parameters must be
/// strictly decreasing and errors positive, otherwise InputError.
ConvergenceTable convergence_orders(std::span<const std::pair<double, double>> pairs, ParamAxis axis = ParamAxis::H);

/// sqrt(|K| |ln |K||), the area-driven pollution factor in 2D. Throws
/// DomainError unless 0 < area < 1.
double eta_K(double area);

} // namespace glocal

#endif
