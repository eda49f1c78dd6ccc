#include "glocal/homogenize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "glocal/fem.hpp"

namespace glocal {

const char* to_string(CellBc bc) { return bc == CellBc::Periodic ? "periodic" : "dirichlet"; }

CellBc cell_bc_from_string(const std::string& s)
{
    if (s == "periodic")
        return CellBc::Periodic;
    if (s == "dirichlet")
        return CellBc::Dirichlet;
    throw ConfigError("unknown cell boundary condition '" + s + "'");
}

Rect cell_box(const CellProblemSpec& spec)
{
    if (!(spec.delta > 0.0))
        throw GeometryError("cell size delta must be positive");
    Rect box{std::max(0.0, spec.center.x - 0.5 * spec.delta), std::max(0.0, spec.center.y - 0.5 * spec.delta),
             std::min(1.0, spec.center.x + 0.5 * spec.delta), std::min(1.0, spec.center.y + 0.5 * spec.delta)};
    if (!(box.xmax - box.xmin > 1e-12) || !(box.ymax - box.ymin > 1e-12))
        throw GeometryError("cell box degenerate after clipping at (" + std::to_string(spec.center.x) + ", " +
                            std::to_string(spec.center.y) + ")");
    return box;
}

CellResult solve_cell_problem(const CellProblemSpec& spec, const CoefficientField& micro, const CgOptions& cg)
{
    if (spec.cell_n < 8)
        throw ConfigError("cell mesh needs at least 8 subdivisions per side");
    if (auto eps = micro.epsilon(); eps && static_cast<double>(spec.cell_n) < 8.0 * spec.delta / *eps * (1.0 - 1e-12))
        throw ConfigError("cell mesh does not resolve eps: need cell_n >= 8 delta / eps = " +
                          std::to_string(8.0 * spec.delta / *eps));

    const Rect box = cell_box(spec);
    const std::size_t n = spec.cell_n;
    const Mesh mesh = build_box_mesh(n, box);
    const ElementCoefficient coeff = micro.per_element();

    std::vector<std::uint32_t> dof(mesh.num_vertices());
    std::size_t num_dofs = 0;
    std::vector<char> fixed;
    if (spec.bc == CellBc::Periodic) {
        // vertex (i, j) of the (n+1)^2 grid maps to (i mod n, j mod n)
        for (std::size_t j = 0; j <= n; ++j)
            for (std::size_t i = 0; i <= n; ++i)
                dof[j * (n + 1) + i] = static_cast<std::uint32_t>((j % n) * n + (i % n));
        num_dofs = n * n;
        fixed.assign(num_dofs, 0);
        fixed[0] = 1; // fixes the additive constant
    } else {
        for (std::uint32_t v = 0; v < dof.size(); ++v)
            dof[v] = v;
        num_dofs = mesh.num_vertices();
        fixed = dirichlet_mask(mesh);
    }

    std::vector<SymTensor2> mean(mesh.num_elements());
    std::vector<std::array<Point, 3>> grads(mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        mean[e] = element_mean_coefficient(mesh, e, coeff);
        grads[e] = p1_gradients(mesh.corners(e));
    }

    const SparseMatrix K = assemble_stiffness(mesh, coeff, dof, num_dofs).eliminate(fixed);
    CgOptions options = cg;
    if (options.preconditioner == Preconditioner::Jacobi && !options.jacobi_inverse)
        options.jacobi_inverse = std::make_shared<const std::vector<double>>(jacobi_inverse(K));

    const double cell_area = (box.xmax - box.xmin) * (box.ymax - box.ymin);
    Point column[2];
    for (int j = 0; j < 2; ++j) {
        const Point ej = j == 0 ? Point{1.0, 0.0} : Point{0.0, 1.0};
        std::vector<double> rhs(num_dofs, 0.0);
        for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
            Point flux = mesh.area(e) * mean[e].apply(ej);
            const auto& el = mesh.element(e);
            for (std::size_t a = 0; a < 3; ++a)
                rhs[dof[el[a]]] -= dot(grads[e][a], flux);
        }
        for (std::size_t i = 0; i < num_dofs; ++i) {
            if (fixed[i])
                rhs[i] = 0.0;
        }
        auto solved = cg_solve(K, rhs, options);
        if (!solved.report.converged)
            throw SolverError("cell problem at (" + std::to_string(spec.center.x) + ", " +
                                  std::to_string(spec.center.y) + ") did not converge",
                              solved.report.relative_residual);

        Point total{0.0, 0.0};
        for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
            const auto& el = mesh.element(e);
            Point g = ej;
            for (std::size_t a = 0; a < 3; ++a)
                g = g + solved.x[dof[el[a]]] * grads[e][a];
            total = total + mesh.area(e) * mean[e].apply(g);
        }
        column[j] = (1.0 / cell_area) * total;
    }

    CellResult result;
    const double a11 = column[0].x, a21 = column[0].y, a12 = column[1].x, a22 = column[1].y;
    const double scale = std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)});
    result.asymmetry = scale > 0.0 ? std::abs(a12 - a21) / scale : 0.0;
    result.tensor = {a11, 0.5 * (a12 + a21), a22};
    if (result.asymmetry > 1e-8) {
        std::ostringstream msg;
        msg << "cell tensor at (" << spec.center.x << ", " << spec.center.y << ") asymmetric by " << result.asymmetry
            << " (under-resolved cell?)";
        result.warnings.push_back(msg.str());
    }
    return result;
}

HmmPolicy default_hmm_policy(const CoefficientField& micro, bool periodic_media)
{
    auto eps = micro.epsilon();
    if (!eps)
        throw ConfigError("HMM needs a microscale coefficient with a known eps");
    HmmPolicy p;
    if (periodic_media) {
        p.bc = CellBc::Periodic;
        p.delta = *eps;
    } else {
        p.bc = CellBc::Dirichlet;
        p.delta = 5.0 * *eps;
    }
    p.cell_n = std::max<std::size_t>(32, static_cast<std::size_t>(std::ceil(8.0 * p.delta / *eps - 1e-9)));
    return p;
}

EffectiveFieldResult assemble_effective_field(const Mesh& mesh, const CoefficientField& micro, const HmmPolicy& policy,
                                              std::size_t threads)
{
    if (auto eps = micro.epsilon(); eps && policy.delta < *eps * (1.0 - 1e-12))
        throw ConfigError("HMM policy requires delta >= eps");
    if (policy.sampling == Sampling::PerPatch && policy.patch_n == 0)
        throw ConfigError("HMM policy: patch_n must be positive");

    // Distinct sample points first, so each cell problem is solved once.
    std::vector<Point> points;
    std::vector<std::int64_t> slot(mesh.num_elements(), -1);
    std::map<std::size_t, std::size_t> patch_slot;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        if (mesh.region(e) == Region::Defect)
            continue;
        Point b = mesh.barycenter(e);
        if (policy.sampling == Sampling::PerElement) {
            slot[e] = static_cast<std::int64_t>(points.size());
            points.push_back(b);
        } else {
            const auto pn = policy.patch_n;
            std::size_t pi = std::min(pn - 1, static_cast<std::size_t>(std::max(0.0, std::floor(b.x * pn))));
            std::size_t pj = std::min(pn - 1, static_cast<std::size_t>(std::max(0.0, std::floor(b.y * pn))));
            auto [it, inserted] = patch_slot.try_emplace(pj * pn + pi, points.size());
            if (inserted)
                points.push_back({(pi + 0.5) / static_cast<double>(pn), (pj + 0.5) / static_cast<double>(pn)});
            slot[e] = static_cast<std::int64_t>(it->second);
        }
    }

    std::vector<std::optional<CellResult>> solved(points.size());
    std::vector<std::string> errors(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < points.size(); k = next++) {
            try {
                solved[k] = solve_cell_problem({points[k], policy.delta, policy.bc, policy.cell_n}, micro);
            } catch (const Error& ex) {
                errors[k] = ex.what();
            }
        }
    };
    const std::size_t nthreads = std::max<std::size_t>(1, std::min(threads, points.size()));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < nthreads; ++t)
            pool.emplace_back(worker);
    }

    EffectiveFieldResult result;
    result.cell_solves = points.size();
    std::vector<std::optional<SymTensor2>> samples(mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        if (slot[e] < 0)
            continue;
        auto k = static_cast<std::size_t>(slot[e]);
        if (!solved[k])
            throw SolverError("effective field, element " + std::to_string(e) + ": " + errors[k], 0.0);
        samples[e] = solved[k]->tensor;
    }
    for (const auto& s : solved) {
        if (s)
            result.warnings.insert(result.warnings.end(), s->warnings.begin(), s->warnings.end());
    }
    result.field = std::make_shared<const EffectiveField>(std::move(samples));
    return result;
}

std::shared_ptr<const EffectiveField> effective_from_analytic(const Mesh& mesh, const CoefficientField& A)
{
    std::vector<std::optional<SymTensor2>> samples(mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        if (mesh.region(e) != Region::Defect)
            samples[e] = A(mesh.barycenter(e));
    }
    return std::make_shared<const EffectiveField>(std::move(samples));
}

double e_hmm_report(const EffectiveField& A_H, const CoefficientField& A, const Mesh& mesh)
{
    double worst = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        if (mesh.region(e) != Region::Exterior || !A_H.has(e))
            continue;
        worst = std::max(worst, (A(mesh.barycenter(e)) - A_H.at(e)).spectral_norm());
    }
    return worst;
}

std::string effective_field_header(const HmmPolicy& policy, const std::string& coefficient_id, std::size_t elements)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, "# hmm delta=%.17g bc=%s cell_n=%zu sampling=%s patch_n=%zu coefficient=%s elements=%zu",
                  policy.delta, to_string(policy.bc), policy.cell_n,
                  policy.sampling == Sampling::PerElement ? "element" : "patch", policy.patch_n, coefficient_id.c_str(),
                  elements);
    return buf;
}

void write_effective_field(const std::string& path, const EffectiveField& field, const HmmPolicy& policy,
                           const std::string& coefficient_id)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << effective_field_header(policy, coefficient_id, field.size()) << '\n';
    char buf[128];
    for (std::size_t e = 0; e < field.size(); ++e) {
        if (!field.has(e))
            continue;
        const auto& t = field.at(e);
        std::snprintf(buf, sizeof buf, "%zu %.17g %.17g %.17g\n", e, t.xx, t.xy, t.yy);
        out << buf;
    }
    if (!out)
        throw IoError("write failed: " + path);
}

std::optional<EffectiveField> read_effective_field(const std::string& path, const HmmPolicy& policy,
                                                   const std::string& coefficient_id, std::size_t elements)
{
    std::ifstream in(path);
    if (!in)
        return std::nullopt;
    std::string header;
    std::getline(in, header);
    if (header != effective_field_header(policy, coefficient_id, elements))
        return std::nullopt;
    std::vector<std::optional<SymTensor2>> samples(elements);
    std::size_t e = 0;
    SymTensor2 t;
    while (in >> e >> t.xx >> t.xy >> t.yy) {
        if (e >= elements)
            throw IoError(path + ": element id " + std::to_string(e) + " out of range");
        samples[e] = t;
    }
    if (!in.eof())
        throw IoError(path + ": malformed row");
    return EffectiveField(std::move(samples));
}

} // namespace glocal
