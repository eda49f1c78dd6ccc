#include "glocal/harness.hpp"

#include "glocal/multigrid.hpp"

#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace glocal {

namespace {

double u0_fn(Point p) { return p.x * (1.0 - p.x) * p.y * (1.0 - p.y); }

Point grad_u0_fn(Point p)
{
    return {(1.0 - 2.0 * p.x) * p.y * (1.0 - p.y), p.x * (1.0 - p.x) * (1.0 - 2.0 * p.y)};
}

double unit_source(Point, double) { return 1.0; }

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string defect_key(const DefectGeometry& d)
{
    std::ostringstream os;
    os << to_string(d.kind) << ":" << d.k0_shapes.size() << ":" << d.k_shapes.size();
    for (const auto* list : {&d.k0_shapes, &d.k_shapes}) {
        for (const auto& s : *list) {
            Rect b = bounding_box(s);
            os << ":" << fmt(b.xmin) << "," << fmt(b.ymin) << "," << fmt(b.xmax) << "," << fmt(b.ymax);
        }
    }
    return os.str();
}

// Patch grid used for the HMM homogenized reference.
constexpr std::size_t kReferencePatches = 64;

HmmPolicy reference_policy(const ExperimentConfig& config)
{
    HmmPolicy p = config.hmm_policy();
    p.sampling = Sampling::PerPatch;
    p.patch_n = kReferencePatches;
    return p;
}

std::string reference_key(const ExperimentConfig& c)
{
    std::ostringstream os;
    os << "ref v1 micro=" << c.micro_id() << " eps=" << fmt(c.eps) << " R1=" << fmt(c.R1) << " R2=" << fmt(c.R2)
       << " defect=" << defect_key(c.defect) << " T=" << fmt(c.T) << " h_ref=" << fmt(c.h_ref)
       << " dt_ref=" << fmt(c.dt_ref) << " base_n=" << c.base_n;
    if (c.effective_mode == EffectiveMode::Analytic) {
        os << " effective=" << (c.effective_coefficient.empty() ? "default" : c.effective_coefficient);
    } else {
        auto p = reference_policy(c);
        os << " effective=" << effective_field_header(p, c.micro_id(), 0);
    }
    return os.str();
}

std::mutex& reference_mutex()
{
    static std::mutex m;
    return m;
}

std::map<std::string, std::shared_ptr<const ReferenceSolutions>>& reference_memo()
{
    static std::map<std::string, std::shared_ptr<const ReferenceSolutions>> memo;
    return memo;
}

// Reference solves run on a uniformly refined mesh, so the refinement
// hierarchy doubles as a multigrid preconditioner.
FeFunction solve_on(const std::vector<std::shared_ptr<const Mesh>>& hierarchy, ElementCoefficient coeff, double T,
                    double dt)
{
    ParabolicProblem problem;
    problem.mesh = hierarchy.back();
    problem.coefficient = std::move(coeff);
    problem.source = unit_source;
    problem.u0 = u0_fn;
    problem.grad_u0 = grad_u0_fn;
    problem.T = T;
    problem.dt = dt;
    CgOptions cg;
    cg.preconditioner = Preconditioner::Custom;
    cg.factory = Multigrid::factory(hierarchy);
    auto projected = project_initial(problem, cg);
    MarchOptions opts;
    opts.keep_history = false;
    opts.cg = cg;
    return backward_euler_march(problem, projected.U0, opts).last;
}

bool read_reference_file(const std::string& path, const std::string& key, std::size_t nv, std::vector<double>& hom,
                         std::vector<double>& ms)
{
    std::ifstream in(path);
    if (!in)
        return false;
    std::string line;
    if (!std::getline(in, line) || line != "# " + key)
        return false;
    std::size_t n = 0;
    if (!(in >> n) || n != nv)
        return false;
    hom.resize(n);
    ms.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(in >> hom[i] >> ms[i]))
            return false;
    }
    return true;
}

void write_reference_file(const std::string& path, const std::string& key, const ReferenceSolutions& r)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write reference cache " + path);
    out << "# " << key << "\n" << r.homogenized.values.size() << "\n";
    char buf[64];
    for (std::size_t i = 0; i < r.homogenized.values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", r.homogenized.values[i], r.multiscale.values[i]);
        out << buf;
    }
    if (!out)
        throw IoError("write failed for reference cache " + path);
}

std::shared_ptr<const EffectiveField> level_effective_field(const ExperimentConfig& config, const Mesh& mesh,
                                                            std::size_t level, const RunOptions& options,
                                                            std::size_t threads, std::vector<std::string>& warnings)
{
    const CoefficientField micro = config.micro_coefficient();
    const HmmPolicy policy = config.hmm_policy();
    std::string path;
    if (!options.cache_dir.empty()) {
        auto [H, h] = config.level_sizes(level);
        std::string key = effective_field_header(policy, config.micro_id(), mesh.num_elements()) + " eps=" +
                          fmt(config.eps) + " R1=" + fmt(config.R1) + " R2=" + fmt(config.R2) +
                          " defect=" + defect_key(config.defect) + " H=" + fmt(H) + " h=" + fmt(h) +
                          " base_n=" + std::to_string(config.base_n) + " grading=" + fmt(config.grading_ratio);
        path = (std::filesystem::path(options.cache_dir) / ("hmm_" + hex(fnv1a(key)) + ".txt")).string();
        if (auto cached = read_effective_field(path, policy, config.micro_id(), mesh.num_elements()))
            return std::make_shared<const EffectiveField>(std::move(*cached));
    }
    auto result = assemble_effective_field(mesh, micro, policy, threads);
    warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());
    if (!path.empty())
        write_effective_field(path, *result.field, policy, config.micro_id());
    return result.field;
}

LevelResult run_level(const ExperimentConfig& config, std::size_t level, const ReferenceSolutions& refs,
                      const RunOptions& options, std::size_t hmm_threads)
{
    LevelResult r;
    r.param = config.sweep_values[level];
    r.dt = config.dt;
    const auto start = std::chrono::steady_clock::now();
    try {
        auto mesh = build_level_mesh(config, level, &r.warnings);
        r.vertices = mesh->num_vertices();
        r.elements = mesh->num_elements();
        r.H = mesh->max_spacing();
        r.h = mesh->max_spacing_in_k().value_or(r.H);

        const CoefficientField micro = config.micro_coefficient();
        auto analytic = config.analytic_effective();
        HybridField::Macro macro = micro;
        std::shared_ptr<const EffectiveField> field;
        if (config.effective_mode == EffectiveMode::Analytic) {
            macro = *analytic;
            r.e_hmm = 0.0;
        } else {
            field = level_effective_field(config, *mesh, level, options, hmm_threads, r.warnings);
            macro = field;
            if (analytic)
                r.e_hmm = e_hmm_report(*field, *analytic, *mesh);
        }
        HybridField b = hybrid(micro, macro, *mesh);

        double k_area = 0.0;
        for (std::size_t e = 0; e < mesh->num_elements(); ++e) {
            if (mesh->region(e) != Region::Exterior)
                k_area += mesh->area(e);
        }
        r.eta_K = eta_K(k_area);

        ParabolicProblem problem;
        problem.mesh = mesh;
        problem.coefficient = b.as_element_coefficient();
        problem.source = unit_source;
        problem.u0 = u0_fn;
        problem.grad_u0 = grad_u0_fn;
        problem.T = config.T;
        problem.dt = config.dt;

        auto projected = project_initial(problem);
        r.warnings.insert(r.warnings.end(), projected.warnings.begin(), projected.warnings.end());

        MarchOptions opts;
        opts.keep_history = false;
        std::ofstream dump;
        if (!options.dump_dir.empty()) {
            std::string path = (std::filesystem::path(options.dump_dir) / ("level_" + std::to_string(level) + ".txt")).string();
            dump.open(path);
            if (!dump)
                throw IoError("cannot write trajectory dump " + path);
            auto write_row = [&dump](std::size_t k, double t, const FeFunction& u) {
                dump << k << ' ' << fmt(t);
                for (double v : u.values)
                    dump << ' ' << fmt(v);
                dump << '\n';
            };
            write_row(0, 0.0, projected.U0);
            opts.observer = write_row;
        }
        auto march = backward_euler_march(problem, projected.U0, opts);

        FeFunction fine = transfer_to_fine(march.last, refs.mesh);

        // region of each reference element = region of the level element
        // holding its barycenter
        PointLocator locator(*mesh);
        const Mesh& ref = *refs.mesh;
        std::vector<char> outside_k(ref.num_elements()), in_k0(ref.num_elements());
        for (std::size_t e = 0; e < ref.num_elements(); ++e) {
            auto owner = locator.locate(ref.barycenter(e));
            if (!owner)
                throw GeometryError("reference element outside the level mesh");
            Region reg = mesh->region(*owner);
            outside_k[e] = reg == Region::Exterior;
            in_k0[e] = reg == Region::Defect;
        }
        auto any = [](const std::vector<char>& m) {
            return std::any_of(m.begin(), m.end(), [](char c) { return c != 0; });
        };
        if (!any(outside_k))
            throw DomainError("error region outside K is empty");
        if (!any(in_k0))
            throw DomainError("error region K0 is empty");

        RegionError g = region_relative_errors(refs.homogenized, fine, std::span<const char>(outside_k));
        g.region = ErrorRegion::GlobalMinusK;
        RegionError d = region_relative_errors(refs.multiscale, fine, std::span<const char>(in_k0));
        d.region = ErrorRegion::Defect;
        for (auto* e : {&g, &d}) {
            e->H = r.H;
            e->h = r.h;
            e->dt = r.dt;
        }
        r.global = g;
        r.defect = d;
    } catch (const std::exception& ex) {
        r.error = ex.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

} // namespace

std::shared_ptr<const Mesh> build_level_mesh(const ExperimentConfig& config, std::size_t level,
                                             std::vector<std::string>* warnings)
{
    auto [H, h] = config.level_sizes(level);
    MeshSpec spec;
    spec.H_target = H;
    spec.h_target = h;
    spec.grading_ratio = config.grading_ratio;
    spec.defect = config.defect;
    spec.base_n = config.base_n;
    try {
        Mesh mesh = build_locally_refined_mesh(spec);
        std::vector<std::string> local;
        Mesh tagged = tag_regions(mesh, config.defect, local);
        if (warnings)
            warnings->insert(warnings->end(), local.begin(), local.end());
        return std::make_shared<const Mesh>(std::move(tagged));
    } catch (const GeometryError& ex) {
        throw ConfigError("level " + std::to_string(level) + " (H = " + fmt(H) + ", h = " + fmt(h) + "): " + ex.what());
    }
}

ExampleSetup build_example(const ExperimentConfig& config)
{
    config.validate();
    ExampleSetup setup{{}, config.micro_coefficient(), config.analytic_effective(), config.defect, {}};
    for (std::size_t i = 0; i < config.sweep_values.size(); ++i)
        setup.level_meshes.push_back(build_level_mesh(config, i, &setup.warnings));
    return setup;
}

std::shared_ptr<const ReferenceSolutions> compute_references(const ExperimentConfig& config, const RunOptions& options)
{
    const std::string key = reference_key(config);
    std::lock_guard lock(reference_mutex());
    auto& memo = reference_memo();
    if (auto it = memo.find(key); it != memo.end())
        return it->second;

    // uniform newest-vertex refinement of the common base grid, so every
    // level mesh is nested in the reference mesh
    const auto hierarchy = uniform_hierarchy(config.base_n, config.h_ref);
    auto mesh = hierarchy.back();
    auto refs = std::make_shared<ReferenceSolutions>();
    refs->mesh = mesh;

    std::string path;
    if (!options.cache_dir.empty()) {
        std::filesystem::create_directories(options.cache_dir);
        path = (std::filesystem::path(options.cache_dir) / ("ref_" + hex(fnv1a(key)) + ".txt")).string();
        std::vector<double> hom, ms;
        if (read_reference_file(path, key, mesh->num_vertices(), hom, ms)) {
            refs->homogenized = FeFunction(mesh, std::move(hom), config.T);
            refs->multiscale = FeFunction(mesh, std::move(ms), config.T);
            memo.emplace(key, refs);
            return refs;
        }
    }

    const CoefficientField micro = config.micro_coefficient();
    ElementCoefficient effective;
    if (config.effective_mode == EffectiveMode::Analytic) {
        auto analytic = config.analytic_effective();
        if (!analytic)
            throw ConfigError("no analytic effective coefficient for the homogenized reference");
        effective = analytic->per_element();
    } else {
        auto result = assemble_effective_field(*mesh, micro, reference_policy(config), std::max<std::size_t>(1, options.threads));
        auto field = result.field;
        effective = [field](std::size_t e, Point) { return field->at(e); };
    }

    if (options.threads > 1) {
        std::jthread hom_worker([&] { refs->homogenized = solve_on(hierarchy, effective, config.T, config.dt_ref); });
        refs->multiscale = solve_on(hierarchy, micro.per_element(), config.T, config.dt_ref);
    } else {
        refs->homogenized = solve_on(hierarchy, effective, config.T, config.dt_ref);
        refs->multiscale = solve_on(hierarchy, micro.per_element(), config.T, config.dt_ref);
    }
    if (!path.empty())
        write_reference_file(path, key, *refs);
    memo.emplace(key, refs);
    return refs;
}

bool ErrorReport::all_levels_ok() const
{
    return std::all_of(levels.begin(), levels.end(), [](const LevelResult& l) { return l.error.empty(); });
}

ErrorReport run_experiment(const ExperimentConfig& config, const RunOptions& options)
{
    config.validate();
    ErrorReport report;
    report.config = config;
    const std::size_t n = config.sweep_values.size();
    if (n == 0)
        return report;

    if (!options.dump_dir.empty())
        std::filesystem::create_directories(options.dump_dir);

    // the references must exist before any level is measured
    std::shared_ptr<const ReferenceSolutions> refs;
    try {
        refs = compute_references(config, options);
    } catch (const std::exception& ex) {
        report.levels.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            report.levels[i].param = config.sweep_values[i];
            report.levels[i].dt = config.dt;
            report.levels[i].error = std::string("reference solve failed: ") + ex.what();
        }
        return report;
    }

    report.levels.resize(n);
    const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, n);
    const std::size_t hmm_threads = std::max<std::size_t>(1, options.threads / workers);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i)
            report.levels[i] = run_level(config, i, *refs, options, hmm_threads);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++)
                    report.levels[i] = run_level(config, i, *refs, options, hmm_threads);
            });
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& w : report.levels[i].warnings)
            report.warnings.push_back("level " + std::to_string(i) + ": " + w);
    }
    return report;
}

} // namespace glocal
