#pragma once

// Command-line front end:
//   stochopt run     [--config FILE] [--preset P] [--objective K] [--nx N] ...
//   stochopt compare DIR_A DIR_B
//
// Exit codes: 0 converged, 2 stopped without meeting the stopping rule
// (line-search stagnation or iteration cap), 1 on any error.

#include "stochopt/descent_optimizer.hpp"
#include "stochopt/errors.hpp"
#include "stochopt/gclosure.hpp"
#include "stochopt/io.hpp"
#include "stochopt/load_scenarios.hpp"
#include "stochopt/metrics.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <memory>
#include <string>
#include <vector>

namespace stochopt::cli {

struct RunConfig {
    std::size_t nx = 64;
    std::size_t ny = 64;
    double alpha = 1.0;
    double beta = 2.0;
    std::optional<double> mass;
    std::optional<double> penalty;
    std::string objective = "compliance";
    std::string preset = "deterministic";
    double eps = OptimizerConfig{}.eps;
    double eps1 = OptimizerConfig{}.eps1;
    std::size_t max_iters = OptimizerConfig{}.max_iters;
    std::string out = "out";

    [[nodiscard]] ObjectiveKind kind() const
    {
        if (objective == "compliance")
            return ObjectiveKind::compliance;
        if (objective == "energy")
            return ObjectiveKind::energy;
        throw InvalidInput("unknown objective '" + objective + "' (expected compliance or energy)");
    }

    [[nodiscard]] OptimizerConfig optimizer(const GridSpec& grid) const
    {
        if (mass && penalty)
            throw InvalidInput("set either --mass or --penalty, not both");
        OptimizerConfig cfg;
        cfg.alpha = alpha;
        cfg.beta = beta;
        cfg.eps = eps;
        cfg.eps1 = eps1;
        cfg.max_iters = max_iters;
        if (penalty) {
            cfg.mode = MassMode::penalized;
            cfg.penalty = *penalty;
        } else {
            cfg.mode = MassMode::constrained;
            cfg.m = mass ? *mass : 0.5 * (alpha + beta) * grid.area();
        }
        cfg.validate(grid);
        return cfg;
    }

    /// Key-value form accepted back by --config.
    [[nodiscard]] std::string to_config_text() const
    {
        std::string s;
        auto kv = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
        kv("preset", "\"" + preset + "\"");
        kv("objective", "\"" + objective + "\"");
        kv("nx", std::to_string(nx));
        kv("ny", std::to_string(ny));
        kv("alpha", io::format_double(alpha));
        kv("beta", io::format_double(beta));
        if (mass)
            kv("mass", io::format_double(*mass));
        if (penalty)
            kv("penalty", io::format_double(*penalty));
        kv("eps", io::format_double(eps));
        kv("eps1", io::format_double(eps1));
        kv("max-iters", std::to_string(max_iters));
        kv("out", "\"" + out + "\"");
        return s;
    }
};

/// Builds the scenario set named by the preset; may adopt the grid of a scenario file.
inline ScenarioSet build_scenarios(RunConfig& rc, bool grid_given)
{
    const std::string file_prefix = "file:";
    if (rc.preset.rfind(file_prefix, 0) == 0) {
        ScenarioSet set = io::load_scenario_file(rc.preset.substr(file_prefix.size()));
        if (grid_given && (set.grid().nx != rc.nx || set.grid().ny != rc.ny))
            throw InvalidInput("scenario file grid " + std::to_string(set.grid().nx) + "x" +
                               std::to_string(set.grid().ny) + " does not match --nx/--ny");
        rc.nx = set.grid().nx;
        rc.ny = set.grid().ny;
        return set;
    }
    const GridSpec grid = GridSpec::unit_square(rc.nx, rc.ny);
    if (rc.preset == "deterministic")
        return make_deterministic(CellField(grid, 1.0));
    if (rc.preset == "case1")
        return make_case1(grid);
    if (rc.preset == "case2")
        return make_case2(grid);
    throw InvalidInput("unknown preset '" + rc.preset + "' (expected deterministic, case1, case2 or file:<path>)");
}

namespace detail {

inline double quantile(std::vector<double> v, double q)
{
    if (v.empty())
        return 0.0;
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
    return v[idx];
}

inline void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream os(p, std::ios::binary);
    if (!os)
        throw InvalidInput("cannot write '" + p.string() + "'");
    os << text;
}

} // namespace detail

/// Writes the six output files for a finished run into rc.out.
inline void write_outputs(const RunConfig& rc, const OptimizerConfig& cfg, const RunResult& res, ObjectiveKind kind,
                          const std::filesystem::path& dir)
{
    {
        std::ofstream os(dir / "density.csv");
        io::write_density_csv(os, res.density);
    }
    {
        std::ofstream os(dir / "density.pgm", std::ios::binary);
        io::write_density_pgm(os, res.density, cfg.alpha, cfg.beta);
    }

    const std::vector<double> residual =
        optimality_residual(res.density, res.solutions, kind, PhasePair(cfg.alpha, cfg.beta));
    {
        std::ofstream os(dir / "residual.csv");
        io::write_density_csv(os, CellField(res.density.grid, residual));
    }

    const RegionMasses rm = region_masses(res.density);
    const SymmetryScores sym = symmetry_scores(res.density);
    std::size_t cg_iters = 0;
    for (const auto& s : res.solutions)
        cg_iters = std::max(cg_iters, s.report.iterations);

    // Residual histogram by decade: [0,1e-12), [1e-12,1e-11), ..., [1e-1, inf).
    std::vector<std::size_t> hist(13, 0);
    for (double r : residual) {
        std::size_t bin = 0;
        if (r >= 1e-12)
            bin = std::min<std::size_t>(12, static_cast<std::size_t>(std::floor(std::log10(r))) + 13);
        ++hist[bin];
    }

    const ConvergenceRecord& last = res.history.back();
    std::string d;
    auto kv = [&](const std::string& k, const std::string& v) { d += k + " = " + v + "\n"; };
    kv("status", to_string(res.status));
    kv("objective", to_string(kind));
    kv("preset", rc.preset);
    kv("iterations", std::to_string(last.iter));
    kv("final_cost", io::format_double(last.cost));
    kv("final_penalized_cost", io::format_double(last.penalized_cost));
    kv("final_mass", io::format_double(last.mass));
    kv("final_gamma", io::format_double(res.final_gamma));
    kv("stationarity_first", io::format_double(res.stationarity_first));
    kv("stationarity_final", io::format_double(res.stationarity_final));
    kv("stationarity_reduction",
       io::format_double(res.stationarity_final > 0.0 ? res.stationarity_first / res.stationarity_final
                                                      : std::numeric_limits<double>::infinity()));
    kv("residual_mean", io::format_double(integrate_cells(res.density.grid, residual) / res.density.grid.area()));
    kv("residual_median", io::format_double(detail::quantile(residual, 0.5)));
    kv("residual_p90", io::format_double(detail::quantile(residual, 0.9)));
    kv("residual_max", io::format_double(detail::quantile(residual, 1.0)));
    std::string h;
    for (std::size_t b = 0; b < hist.size(); ++b)
        h += (b ? " " : "") + std::to_string(hist[b]);
    kv("residual_histogram_decades", h);
    kv("mass_D0", io::format_double(rm.d0));
    kv("mass_D1", io::format_double(rm.d1));
    kv("mass_corners", io::format_double(rm.corners));
    kv("mass_cross_arms", io::format_double(rm.cross_arms));
    kv("symmetry_rotation_l1", io::format_double(sym.rotation));
    kv("symmetry_mirror_x_l1", io::format_double(sym.mirror_x));
    kv("symmetry_mirror_y_l1", io::format_double(sym.mirror_y));
    kv("final_cg_iterations", std::to_string(cg_iters));
    detail::write_file(dir / "diagnostics.txt", d);
    detail::write_file(dir / "run.cfg", rc.to_config_text());
}

inline int run_command(RunConfig rc, bool grid_given, std::ostream& out)
{
    const ObjectiveKind kind = rc.kind();
    ScenarioSet set = build_scenarios(rc, grid_given);
    const OptimizerConfig cfg = rc.optimizer(set.grid());

    const std::filesystem::path dir(rc.out);
    std::filesystem::create_directories(dir);
    std::ofstream log(dir / "convergence.log");
    if (!log)
        throw InvalidInput("cannot write into '" + rc.out + "'");
    io::write_log_header(log);

    const RunResult res = run(cfg, set, kind, uniform_initial_density(set.grid(), cfg),
                              [&](const ConvergenceRecord& r) { io::write_log_record(log, r); });
    log.close();
    write_outputs(rc, cfg, res, kind, dir);

    out << "status " << to_string(res.status) << ", " << res.history.back().iter << " iterations, cost "
        << io::format_double(res.history.back().cost) << ", output in " << dir.string() << '\n';
    return res.status == RunStatus::converged ? 0 : 2;
}

inline CellField read_density_dir(const std::filesystem::path& dir)
{
    std::ifstream is(dir / "density.csv");
    if (!is)
        throw InvalidInput("no density.csv in '" + dir.string() + "'");
    return io::read_density_csv(is);
}

/// Region-mass deltas (B - A), L1 distance and symmetry scores.
inline std::string compare_runs(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b)
{
    const CellField a = read_density_dir(dir_a);
    const CellField b = read_density_dir(dir_b);
    if (!(a.grid == b.grid))
        throw InvalidInput("grid mismatch: " + std::to_string(a.grid.nx) + "x" + std::to_string(a.grid.ny) +
                           " vs " + std::to_string(b.grid.nx) + "x" + std::to_string(b.grid.ny));
    const RegionMasses ra = region_masses(a), rb = region_masses(b);
    const SymmetryScores sa = symmetry_scores(a), sb = symmetry_scores(b);
    std::string s;
    auto kv = [&](const std::string& k, double v) { s += k + " = " + io::format_double(v) + "\n"; };
    kv("delta_mass_D0", rb.d0 - ra.d0);
    kv("delta_mass_D1", rb.d1 - ra.d1);
    kv("delta_mass_corners", rb.corners - ra.corners);
    kv("delta_mass_cross_arms", rb.cross_arms - ra.cross_arms);
    kv("delta_mass_total", rb.total - ra.total);
    kv("l1_distance", l1_distance(a, b));
    kv("symmetry_rotation_l1_A", sa.rotation);
    kv("symmetry_rotation_l1_B", sb.rotation);
    kv("symmetry_mirror_x_l1_A", sa.mirror_x);
    kv("symmetry_mirror_x_l1_B", sb.mirror_x);
    kv("symmetry_mirror_y_l1_A", sa.mirror_y);
    kv("symmetry_mirror_y_l1_B", sb.mirror_y);
    return s;
}

namespace detail {

/// TOML-style reader that files unsectioned keys under the "run" subcommand.
class RunConfigReader : public CLI::ConfigTOML {
public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
    {
        auto items = CLI::ConfigTOML::from_config(input);
        for (auto& item : items)
            if (item.parents.empty() || (item.parents.size() == 1 && item.parents.front() == "default"))
                item.parents = {"run"};
        return items;
    }
};

} // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Optimal two-phase coefficient design under random loads"};
    app.require_subcommand(1);
    // --config belongs to the top-level app (CLI11 only reads config files
    // there); fallthrough lets it follow "run", and unsectioned keys in the
    // file are read as options of "run".
    app.fallthrough();
    app.set_config("--config", "", "key = value configuration file for run; flags override it");
    app.config_formatter(std::make_shared<detail::RunConfigReader>());
    app.allow_config_extras(CLI::config_extras_mode::error);

    RunConfig rc;
    double mass = 0.0, penalty = 0.0;
    auto* run_cmd = app.add_subcommand("run", "optimize a design and write density, log and diagnostics");
    run_cmd->add_option("--preset", rc.preset, "deterministic | case1 | case2 | file:<path>");
    run_cmd->add_option("--objective", rc.objective, "compliance | energy");
    auto* nx_opt = run_cmd->add_option("--nx", rc.nx, "cells in x")->check(CLI::PositiveNumber);
    auto* ny_opt = run_cmd->add_option("--ny", rc.ny, "cells in y")->check(CLI::PositiveNumber);
    run_cmd->add_option("--alpha", rc.alpha, "weak phase");
    run_cmd->add_option("--beta", rc.beta, "strong phase");
    auto* mass_opt = run_cmd->add_option("--mass", mass, "mass target (constrained mode)");
    auto* pen_opt = run_cmd->add_option("--penalty", penalty, "fixed multiplier (penalized mode)");
    mass_opt->excludes(pen_opt);
    run_cmd->add_option("--eps", rc.eps, "initial step scale");
    run_cmd->add_option("--eps1", rc.eps1, "relative stopping tolerance");
    run_cmd->add_option("--max-iters", rc.max_iters, "iteration cap");
    run_cmd->add_option("--out", rc.out, "output directory");

    std::string dir_a, dir_b;
    auto* cmp_cmd = app.add_subcommand("compare", "region-mass deltas between two run directories");
    cmp_cmd->add_option("dir_a", dir_a)->required();
    cmp_cmd->add_option("dir_b", dir_b)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (run_cmd->parsed()) {
            if (mass_opt->count())
                rc.mass = mass;
            if (pen_opt->count())
                rc.penalty = penalty;
            return run_command(rc, nx_opt->count() > 0 || ny_opt->count() > 0, out);
        }
        if (app.get_config_ptr()->count())
            throw InvalidInput("--config applies to run only");
        out << compare_runs(dir_a, dir_b);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace stochopt::cli
