// glocal: run global-local parabolic experiments from JSON configs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "glocal/harness.hpp"

using namespace glocal;

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool plots, std::size_t threads, bool dump,
            bool timing, const std::string& cache_dir)
{
    ExperimentConfig config = load_config(config_path);
    std::filesystem::create_directories(out_dir);
    RunOptions options;
    options.threads = threads;
    if (dump)
        options.dump_dir = (std::filesystem::path(out_dir) / "dump").string();
    options.cache_dir = cache_dir;

    ErrorReport report = run_experiment(config, options);
    OutputPaths paths;
    paths.csv = (std::filesystem::path(out_dir) / "errors.csv").string();
    if (plots)
        paths.svg = (std::filesystem::path(out_dir) / "errors.svg").string();
    emit_outputs(report, paths, timing);

    write_csv(std::cout, report, timing);
    for (const auto& w : report.warnings)
        std::cerr << "warning: " << w << '\n';
    for (std::size_t i = 0; i < report.levels.size(); ++i) {
        if (!report.levels[i].error.empty())
            std::cerr << "level " << i << " failed: " << report.levels[i].error << '\n';
    }
    return report.all_levels_ok() ? 0 : 1;
}

int cmd_orders(const std::string& csv_path)
{
    std::ifstream in(csv_path);
    if (!in)
        throw IoError("cannot open " + csv_path);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw InputError(csv_path + ": unexpected CSV header");
    auto header = split_csv_line(line);
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty())
            rows.push_back(split_csv_line(line));
    }
    const char* columns[] = {"e0_global", "e1_global", "e0_defect", "e1_defect"};
    std::printf("%-10s %-12s %-12s %s\n", "column", "param", "error", "order");
    for (const char* name : columns) {
        std::size_t col = std::find(header.begin(), header.end(), name) - header.begin();
        std::vector<std::pair<double, double>> pairs;
        for (const auto& r : rows) {
            if (col < r.size() && !r[col].empty() && !r[1].empty())
                pairs.emplace_back(std::stod(r[1]), std::stod(r[col]));
        }
        if (pairs.empty())
            continue;
        auto table = convergence_orders(pairs);
        for (const auto& row : table.rows) {
            if (row.order)
                std::printf("%-10s %-12.6g %-12.6e %.4f\n", name, row.parameter, row.error, *row.order);
            else
                std::printf("%-10s %-12.6g %-12.6e\n", name, row.parameter, row.error);
        }
    }
    return 0;
}

int cmd_cellprobe(const std::string& config_path, double x, double y)
{
    ExperimentConfig config = load_config(config_path);
    auto micro = config.micro_coefficient();
    HmmPolicy policy = config.hmm_policy();
    CellProblemSpec spec{{x, y}, policy.delta, policy.bc, policy.cell_n};
    auto cell = solve_cell_problem(spec, micro);
    std::printf("cell: delta=%g bc=%s cell_n=%zu\n", spec.delta, to_string(spec.bc), spec.cell_n);
    std::printf("A_H = [[%.10g, %.10g], [%.10g, %.10g]] asymmetry=%.3e\n", cell.tensor.xx, cell.tensor.xy,
                cell.tensor.xy, cell.tensor.yy, cell.asymmetry);
    if (auto A = config.analytic_effective()) {
        SymTensor2 a = (*A)({x, y});
        std::printf("A    = [[%.10g, %.10g], [%.10g, %.10g]] |A - A_H| = %.3e\n", a.xx, a.xy, a.xy, a.yy,
                    (a - cell.tensor).spectral_norm());
    }
    for (const auto& w : cell.warnings)
        std::cerr << "warning: " << w << '\n';
    return 0;
}

int cmd_mesh_info(const std::string& config_path, std::size_t level)
{
    ExperimentConfig config = load_config(config_path);
    if (level >= config.sweep_values.size())
        throw ConfigError("level " + std::to_string(level) + " out of range");
    std::vector<std::string> warnings;
    auto mesh = build_level_mesh(config, level, &warnings);
    std::size_t count[3] = {0, 0, 0};
    double k_area = 0.0;
    for (std::size_t e = 0; e < mesh->num_elements(); ++e) {
        ++count[static_cast<int>(mesh->region(e))];
        if (mesh->region(e) != Region::Exterior)
            k_area += mesh->area(e);
    }
    auto q = inspect_mesh(*mesh);
    auto [H, h] = config.level_sizes(level);
    std::printf("level %zu: target H=%g h=%g\n", level, H, h);
    std::printf("vertices %zu elements %zu\n", mesh->num_vertices(), mesh->num_elements());
    std::printf("regions: defect %zu layer %zu exterior %zu\n", count[0], count[1], count[2]);
    std::printf("max spacing %g, in K %g\n", mesh->max_spacing(), mesh->max_spacing_in_k().value_or(0.0));
    std::printf("|K| = %.6g eta(K) = %.6g\n", k_area, eta_K(k_area));
    std::printf("conforming %s, oriented %s, area %.15g, max shape ratio %.3f\n", q.conforming ? "yes" : "no",
                q.positively_oriented ? "yes" : "no", q.area_sum, q.max_shape_ratio);
    for (const auto& w : warnings)
        std::cerr << "warning: " << w << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Global-local multiscale parabolic experiments"};
    app.require_subcommand(1);

    std::string config_path, csv_path, out_dir = "out", cache_dir;
    bool plots = false, dump = false, timing = false;
    std::size_t threads = 1, level = 0;
    std::vector<double> at;

    auto* run = app.add_subcommand("run", "Run a convergence sweep and write errors.csv");
    run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory");
    run->add_flag("--plots", plots, "Also write errors.svg");
    run->add_option("--threads", threads, "Worker threads (1 is the bit-exact reference)")->check(CLI::PositiveNumber);
    run->add_flag("--dump", dump, "Write per-level trajectories to <out>/dump");
    run->add_flag("--timing", timing, "Fill the seconds column");
    run->add_option("--cache", cache_dir, "Directory for reference and HMM caches");

    auto* orders = app.add_subcommand("orders", "Recompute convergence orders from a CSV");
    orders->add_option("csv", csv_path, "errors.csv")->required()->check(CLI::ExistingFile);

    auto* probe = app.add_subcommand("cellprobe", "Solve one HMM cell problem");
    probe->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    probe->add_option("--at", at, "Cell center x y")->required()->expected(2);

    auto* info = app.add_subcommand("mesh-info", "Describe a level mesh");
    info->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    info->add_option("--level", level, "Sweep level");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(config_path, out_dir, plots, threads, dump, timing, cache_dir);
        if (*orders)
            return cmd_orders(csv_path);
        if (*probe)
            return cmd_cellprobe(config_path, at[0], at[1]);
        if (*info)
            return cmd_mesh_info(config_path, level);
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << '\n';
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
