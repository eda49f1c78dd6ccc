#ifndef GLOCAL_HARNESS_HPP
#define GLOCAL_HARNESS_HPP

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glocal/coefficient.hpp"
#include "glocal/errors.hpp"
#include "glocal/fem.hpp"
#include "glocal/homogenize.hpp"
#include "glocal/mesh.hpp"

namespace glocal {

enum class ExampleId { TwoScaleWell, TwoScaleLShape, TwoScalePorous, NoScaleSepWell, Custom };

const char* to_string(ExampleId id);
ExampleId example_from_string(const std::string& s);

enum class EffectiveMode { Analytic, Hmm };

struct ExperimentConfig {
    ExampleId example = ExampleId::TwoScaleWell;
    double eps = 0.01;
    double R1 = 2.5;
    double R2 = 1.5;
    DefectGeometry defect;
    /// Microscale coefficient id; empty picks the example's coefficient.
    std::string coefficient;
    /// Analytic effective coefficient id; empty picks the example's (if any).
    std::string effective_coefficient;
    double T = 1.0;
    double dt = 0.02;
    ParamAxis sweep_axis = ParamAxis::H;
    std::vector<double> sweep_values;
    /// The mesh size that is not swept; nullopt means h = H (uniform mesh).
    std::optional<double> fixed;
    EffectiveMode effective_mode = EffectiveMode::Analytic;
    std::optional<HmmPolicy> hmm; // nullopt: default policy for the coefficient
    double h_ref = 1.0 / 512.0;
    double dt_ref = 0.005;
    std::size_t base_n = 4;
    double grading_ratio = 2.0;

    /// Throws ConfigError on violated invariants.
    void validate() const;

    /// (H, h) of sweep level i.
    std::pair<double, double> level_sizes(std::size_t i) const;

    CoefficientField micro_coefficient() const;
    /// Analytic effective coefficient, when the example has one.
    std::optional<CoefficientField> analytic_effective() const;
    std::string micro_id() const;
    HmmPolicy hmm_policy() const;
};

/// Parses the JSON config; unknown keys are rejected. Sizes may be numbers
/// or strings of the form "1/64".
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct ExampleSetup {
    std::vector<std::shared_ptr<const Mesh>> level_meshes;
    CoefficientField micro;
    std::optional<CoefficientField> effective;
    DefectGeometry defect;
    std::vector<std::string> warnings;
};

/// Meshes for every sweep level plus coefficients and defect geometry.
ExampleSetup build_example(const ExperimentConfig& config);
std::shared_ptr<const Mesh> build_level_mesh(const ExperimentConfig& config, std::size_t level,
                                             std::vector<std::string>* warnings = nullptr);

/// Reference solutions at T on the uniformly refined reference mesh:
/// homogenized (effective coefficient everywhere) and multiscale (a^eps
/// everywhere).
struct ReferenceSolutions {
    std::shared_ptr<const Mesh> mesh;
    FeFunction homogenized;
    FeFunction multiscale;
};

struct RunOptions {
    std::size_t threads = 1;
    /// Directory for trajectory dumps; empty disables them.
    std::string dump_dir;
    /// Directory for reference and effective-field caches; empty keeps
    /// caches in memory only.
    std::string cache_dir;
};

std::shared_ptr<const ReferenceSolutions> compute_references(const ExperimentConfig& config, const RunOptions& options);

struct LevelResult {
    double param = 0.0;
    double H = 0.0; // actual max spacing over D
    double h = 0.0; // actual max spacing over K
    double dt = 0.0;
    std::size_t vertices = 0;
    std::size_t elements = 0;
    std::optional<RegionError> global;
    std::optional<RegionError> defect;
    std::optional<double> e_hmm;
    std::optional<double> eta_K;
    double seconds = 0.0;
    std::string error;
    std::vector<std::string> warnings;
};

struct ErrorReport {
    ExperimentConfig config;
    std::vector<LevelResult> levels;
    std::vector<std::string> warnings;

    bool all_levels_ok() const;
};

/// Full sweep: per level build the mesh and hybrid coefficient, project
/// U0, march to T, transfer to the reference mesh, and measure e0/e1 on
/// D \ K (against the homogenized reference) and on K0 (against the
/// multiscale reference). A failing level is recorded and the rest continue.
ErrorReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Orders of one report column over consecutive successful levels.
enum class ErrorColumn { E0Global, E1Global, E0Defect, E1Defect };
std::vector<std::optional<double>> column_orders(const ErrorReport& report, ErrorColumn column);

inline constexpr const char* kCsvHeader =
    "level,param,H,h,dt,e0_global,ord_e0_global,e1_global,ord_e1_global,e0_defect,ord_e0_defect,e1_defect,"
    "ord_e1_defect,e_hmm,eta_K,seconds";

/// Writes the CSV table. The seconds column stays empty unless
/// include_timing is set, so repeated runs produce identical bytes.
void write_csv(std::ostream& out, const ErrorReport& report, bool include_timing = false);

/// Log-log SVG: one polyline per error column and a slope-1 guide.
void write_svg(std::ostream& out, const ErrorReport& report);

struct OutputPaths {
    std::string csv;
    std::string svg; // empty: no plot
};

void emit_outputs(const ErrorReport& report, const OutputPaths& paths, bool include_timing = false);

} // namespace glocal

#endif
