#include "glocal/errors.hpp"

#include <algorithm>
#include <cmath>

namespace glocal {

const char* to_string(ErrorRegion r)
{
    switch (r) {
    case ErrorRegion::GlobalMinusK: return "global_minus_k";
    case ErrorRegion::Defect: return "defect";
    case ErrorRegion::All: return "all";
    }
    return "all";
}

FeFunction transfer_to_fine(const FeFunction& coarse, std::shared_ptr<const Mesh> fine_mesh)
{
    const Mesh& cm = *coarse.mesh;
    PointLocator locator(cm);
    std::vector<double> values(fine_mesh->num_vertices());
    for (std::size_t v = 0; v < values.size(); ++v) {
        Point p = fine_mesh->vertex(v);
        auto e = locator.locate(p);
        if (!e)
            throw GeometryError("transfer: fine vertex (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                                ") lies outside the coarse mesh");
        auto l = locator.barycentric(*e, p);
        const auto& el = cm.element(*e);
        values[v] = l[0] * coarse.values[el[0]] + l[1] * coarse.values[el[1]] + l[2] * coarse.values[el[2]];
    }
    return FeFunction(std::move(fine_mesh), std::move(values), coarse.time);
}

std::vector<char> region_mask(const Mesh& mesh, ErrorRegion region)
{
    std::vector<char> mask(mesh.num_elements());
    for (std::size_t e = 0; e < mask.size(); ++e) {
        switch (region) {
        case ErrorRegion::GlobalMinusK: mask[e] = mesh.region(e) == Region::Exterior; break;
        case ErrorRegion::Defect: mask[e] = mesh.region(e) == Region::Defect; break;
        case ErrorRegion::All: mask[e] = 1; break;
        }
    }
    return mask;
}

double l2_squared(const Mesh& mesh, std::span<const double> v, std::span<const char> elements)
{
    double s = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        if (!elements[e])
            continue;
        const auto& el = mesh.element(e);
        double a = v[el[0]], b = v[el[1]], c = v[el[2]];
        // v' M_loc v with M_loc = area/12 (1 + I)
        s += mesh.area(e) / 12.0 * (a * a + b * b + c * c + (a + b + c) * (a + b + c));
    }
    return s;
}

double h1_semi_squared(const Mesh& mesh, std::span<const double> v, std::span<const char> elements)
{
    double s = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        if (!elements[e])
            continue;
        auto g = p1_gradients(mesh.corners(e));
        const auto& el = mesh.element(e);
        Point grad = v[el[0]] * g[0] + v[el[1]] * g[1] + v[el[2]] * g[2];
        s += mesh.area(e) * dot(grad, grad);
    }
    return s;
}

RegionError region_relative_errors(const FeFunction& u_ref, const FeFunction& u_num, std::span<const char> elements)
{
    if (u_ref.values.size() != u_num.values.size() || u_ref.mesh->num_vertices() != u_ref.values.size())
        throw InputError("region errors need both functions on the same mesh");
    const Mesh& mesh = *u_ref.mesh;
    std::vector<double> diff(u_ref.values.size());
    for (std::size_t i = 0; i < diff.size(); ++i)
        diff[i] = u_num.values[i] - u_ref.values[i];

    double ref0 = l2_squared(mesh, u_ref.values, elements);
    double ref1 = h1_semi_squared(mesh, u_ref.values, elements);
    if (!(ref0 > 0.0) || !(ref1 > 0.0))
        throw DomainError("degenerate reference: zero norm on the error region");
    RegionError r;
    r.e0 = std::sqrt(l2_squared(mesh, diff, elements) / ref0);
    r.e1 = std::sqrt(h1_semi_squared(mesh, diff, elements) / ref1);
    return r;
}

RegionError region_relative_errors(const FeFunction& u_ref, const FeFunction& u_num, ErrorRegion region)
{
    auto mask = region_mask(*u_ref.mesh, region);
    if (std::none_of(mask.begin(), mask.end(), [](char c) { return c != 0; }))
        throw DomainError(std::string("error region '") + to_string(region) + "' is empty");
    RegionError r = region_relative_errors(u_ref, u_num, std::span<const char>(mask));
    r.region = region;
    return r;
}

AnalyticError analytic_errors(const FeFunction& u, const std::function<double(Point)>& exact,
                              const std::function<Point(Point)>& exact_grad)
{
    struct Node {
        double l0, l1, l2, w;
    };
    constexpr double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
    constexpr double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
    static constexpr Node rule[7] = {
        {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225},
        {a1, b1, b1, w1}, {b1, a1, b1, w1}, {b1, b1, a1, w1},
        {a2, b2, b2, w2}, {b2, a2, b2, w2}, {b2, b2, a2, w2},
    };
    const Mesh& mesh = *u.mesh;
    AnalyticError err;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        auto c = mesh.corners(e);
        auto g = p1_gradients(c);
        const auto& el = mesh.element(e);
        double v0 = u.values[el[0]], v1 = u.values[el[1]], v2 = u.values[el[2]];
        Point grad = v0 * g[0] + v1 * g[1] + v2 * g[2];
        for (const auto& q : rule) {
            Point x{q.l0 * c[0].x + q.l1 * c[1].x + q.l2 * c[2].x, q.l0 * c[0].y + q.l1 * c[1].y + q.l2 * c[2].y};
            double d = q.l0 * v0 + q.l1 * v1 + q.l2 * v2 - exact(x);
            Point dg = grad - exact_grad(x);
            err.l2 += q.w * mesh.area(e) * d * d;
            err.h1_semi += q.w * mesh.area(e) * dot(dg, dg);
        }
    }
    err.l2 = std::sqrt(err.l2);
    err.h1_semi = std::sqrt(err.h1_semi);
    return err;
}

ConvergenceTable convergence_orders(std::span<const std::pair<double, double>> pairs, ParamAxis axis)
{
    ConvergenceTable table;
    table.axis = axis;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto [p, err] = pairs[i];
        if (!(p > 0.0) || !(err > 0.0))
            throw InputError("convergence orders need positive parameters and errors");
        ConvergenceRow row{p, err, std::nullopt};
        if (i > 0) {
            auto [pp, pe] = pairs[i - 1];
            if (!(p < pp))
                throw InputError("convergence orders need strictly decreasing parameters");
            row.order = std::log(pe / err) / std::log(pp / p);
        }
        table.rows.push_back(row);
    }
    return table;
}

double eta_K(double area)
{
    if (!(area > 0.0 && area < 1.0))
        throw DomainError("eta(K) needs 0 < |K| < 1");
    return std::sqrt(area * std::abs(std::log(area)));
}

} // namespace glocal
