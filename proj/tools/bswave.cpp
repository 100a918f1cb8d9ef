// Command line front end: mesh generation, single solves and convergence
// studies for the bulk-surface wave solver.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "bswave/harness.hpp"

namespace {

struct GlobalOptions {
    int rk_stages = 1;
    std::string solver = "direct";
};

void apply_globals(bswave::StudyConfig& cfg, const GlobalOptions& g) {
    cfg.rk_stages = g.rk_stages;
    cfg.solver_mode = g.solver == "direct" ? bswave::SolverMode::DirectFactorization
                                           : bswave::SolverMode::IterativeSPD;
}

std::pair<int, int> parse_level_range(const std::string& text) {
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        const int l = std::stoi(text);
        return {l, l};
    }
    return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
}

void print_study(const bswave::StudyResult& result) {
    std::printf("%-10s %5s %10s %10s %8s %12s %8s\n", "scenario", "level", "h", "tau", "N",
                "err_l2", "eoc");
    const auto rates = result.table.eoc_l2();
    for (size_t i = 0; i < result.table.rows.size(); ++i) {
        const auto& r = result.table.rows[i];
        std::printf("%-10s %5d %10.4g %10.4g %8d %12.5g %8.3f\n", result.scenario.c_str(),
                    r.level, r.h, r.tau, r.n_dofs, r.err.combined_l2,
                    i == 0 ? std::nan("") : rates[i - 1]);
    }
    for (const auto& w : result.warnings) std::printf("warning: %s\n", w.c_str());
}

int run_mesh(int levels, int seed, const std::string& out) {
    const auto curve = bswave::BoundaryCurve::unit_circle();
    const auto hier = bswave::build_hierarchy(seed, levels + 1, curve);
    bswave::write_mesh_file(hier.level(levels), out);
    const auto& mesh = hier.level(levels);
    std::printf("level %d: %d vertices, %d triangles, %d boundary edges, h = %.6g -> %s\n",
                levels, mesh.n_vertices(), mesh.n_triangles(), mesh.n_boundary_edges(), mesh.h,
                out.c_str());
    return 0;
}

int run_solve(const std::string& config_path, const GlobalOptions& g) {
    bswave::StudyConfig cfg = bswave::config_from_ini_file(config_path);
    apply_globals(cfg, g);
    const auto curve = bswave::BoundaryCurve::unit_circle();
    const int level = cfg.level_min;
    const auto hier = bswave::build_hierarchy(cfg.seed_n, level + 1, curve);
    const auto& mesh = hier.level(level);
    const auto ops = bswave::assemble_operators(mesh, cfg.spec);
    const auto tableau = bswave::gauss_tableau(cfg.rk_stages);
    const double tau = cfg.tau0;

    const auto run = bswave::run_once(mesh, ops, cfg.spec, tableau, tau, cfg.T, cfg,
                                              cfg.track_energy);

    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    {
        std::ofstream f(cfg.output_dir + "/energy.csv", std::ios::binary);
        f << "step,t,energy\n";
        char buf[96];
        for (size_t i = 0; i < run.energies.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i, i * tau, run.energies[i]);
            f << buf;
        }
    }
    {
        std::ofstream f(cfg.output_dir + "/solution.txt", std::ios::binary);
        char buf[48];
        for (double v : run.final_state.u) {
            std::snprintf(buf, sizeof(buf), "%.17g\n", v);
            f << buf;
        }
    }
    std::printf("scenario %s level %d: N = %d, h = %.6g, tau = %.6g, %d steps\n",
                cfg.scenario_name.c_str(), level, ops.dofmap.size(), mesh.h, tau,
                static_cast<int>(std::llround(cfg.T / tau)));
    std::printf("energy drift (relative) = %.3g; outputs in %s/\n", run.energy_drift,
                cfg.output_dir.c_str());
    return 0;
}

int run_spatial(const std::string& name, const std::string& levels, const std::string& out,
                const GlobalOptions& g) {
    bswave::StudyConfig cfg = bswave::StudyConfig::from_scenario(name);
    apply_globals(cfg, g);
    if (!levels.empty()) {
        const auto [a, b] = parse_level_range(levels);
        cfg.level_min = a;
        cfg.level_max = b;
    }
    cfg.output_dir = out;
    const auto result = bswave::run_spatial_study(cfg);
    bswave::emit_outputs(result, out);
    print_study(result);
    std::printf("outputs written to %s/study.csv and %s/study.svg\n", out.c_str(), out.c_str());
    return 0;
}

int run_temporal(const std::string& name, int level, int halvings, const std::string& out,
                 const GlobalOptions& g) {
    bswave::StudyConfig cfg = bswave::StudyConfig::from_scenario(name);
    apply_globals(cfg, g);
    cfg.temporal_level = level;
    cfg.halvings = halvings;
    cfg.output_dir = out;
    const auto result = bswave::run_temporal_study(cfg);
    bswave::emit_outputs(result, out);
    print_study(result);
    std::printf("outputs written to %s/study.csv and %s/study.svg\n", out.c_str(), out.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bulk-surface wave equation solver and convergence studies"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--rk-stages", global.rk_stages, "Gauss collocation stages (1..3)")
        ->check(CLI::Range(1, 3));
    app.add_option("--solver", global.solver, "stage system solver")
        ->check(CLI::IsMember({"direct", "iterative"}));

    auto* mesh_cmd = app.add_subcommand("mesh", "write a refined disc mesh");
    int mesh_levels = 3, mesh_seed = 6;
    std::string mesh_out = "mesh.txt";
    mesh_cmd->add_option("--levels", mesh_levels, "refinement level")->required();
    mesh_cmd->add_option("--seed", mesh_seed, "seed fan size (>= 4)");
    mesh_cmd->add_option("--out", mesh_out, "output file")->required();

    auto* solve_cmd = app.add_subcommand("solve", "single solve from a config file");
    std::string solve_config;
    solve_cmd->add_option("--config", solve_config, "INI config file")->required();

    auto* spatial_cmd = app.add_subcommand("study-spatial", "paired h/tau convergence study");
    std::string sp_scenario, sp_levels, sp_out = "out";
    spatial_cmd->add_option("--scenario", sp_scenario, "scenario name")->required();
    spatial_cmd->add_option("--levels", sp_levels, "level range a..b");
    spatial_cmd->add_option("--out", sp_out, "output directory");

    auto* temporal_cmd = app.add_subcommand("study-temporal", "fixed-mesh tau halving study");
    std::string tp_scenario, tp_out = "out";
    int tp_level = 3, tp_halvings = 4;
    temporal_cmd->add_option("--scenario", tp_scenario, "scenario name")->required();
    temporal_cmd->add_option("--level", tp_level, "mesh level");
    temporal_cmd->add_option("--halvings", tp_halvings, "number of tau halvings");
    temporal_cmd->add_option("--out", tp_out, "output directory");

    try {
        app.parse(argc, argv);
        if (mesh_cmd->parsed()) return run_mesh(mesh_levels, mesh_seed, mesh_out);
        if (solve_cmd->parsed()) return run_solve(solve_config, global);
        if (spatial_cmd->parsed()) return run_spatial(sp_scenario, sp_levels, sp_out, global);
        if (temporal_cmd->parsed())
            return run_temporal(tp_scenario, tp_level, tp_halvings, tp_out, global);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const bswave::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const bswave::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
