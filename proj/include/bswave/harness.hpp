#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bswave/analysis.hpp"
#include "bswave/assembly.hpp"
#include "bswave/core.hpp"
#include "bswave/geometry.hpp"
#include "bswave/linalg.hpp"
#include "bswave/mesh.hpp"
#include "bswave/timestepping.hpp"

namespace bswave {

// ---------------------------------------------------------------------------
// Scenario catalog.
// ---------------------------------------------------------------------------

struct ScenarioInfo {
    std::string name;
    ProblemSpec spec;
    double T = 1.0;
    double tau0 = 1.0 / 32.0; // base step at the first study level
    bool has_exact = false;
    ExactSolution exact;
};

namespace detail {

inline double gaussian_iv(const Vec2& x) {
    return std::exp(-20.0 * ((x.x - 1.0) * (x.x - 1.0) + x.y * x.y));
}

/// Manufactured acoustic solution with r^k radial profile (k = 1.2):
///   u(x,t)     = sin(2 pi t) r^k
///   delta(x,t) = -(k / 2 pi) cos(2 pi t) r^k
/// The displacement sign makes the pair satisfy the coupling condition
/// d delta/dt = normal derivative of u on the unit circle.
struct AcousticManufactured {
    static constexpr double k = 1.2;

    static double u(const Vec2& x, double t) {
        return std::sin(2.0 * std::numbers::pi * t) * std::pow(x.norm2(), k / 2.0);
    }
    static double delta(const Vec2& x, double t) {
        return -(k / (2.0 * std::numbers::pi)) * std::cos(2.0 * std::numbers::pi * t) *
               std::pow(x.norm2(), k / 2.0);
    }
    static double udot(const Vec2& x, double t) {
        return 2.0 * std::numbers::pi * std::cos(2.0 * std::numbers::pi * t) *
               std::pow(x.norm2(), k / 2.0);
    }
    /// f_Omega = u'' + u - Laplace(u); the radial Laplacian of r^k is
    /// k^2 r^{k-2}, singular (but integrable) at the origin. Load assembly
    /// samples at edge midpoints only, so a guard value at r = 0 suffices.
    static double f_bulk(const Vec2& x, double t) {
        const double r2 = x.norm2();
        if (r2 < 1e-24) return 0.0;
        const double pi = std::numbers::pi;
        const double rk = std::pow(r2, k / 2.0);
        const double rkm2 = std::pow(r2, k / 2.0 - 1.0);
        return std::sin(2.0 * pi * t) * ((1.0 - 4.0 * pi * pi) * rk - k * k * rkm2);
    }
    /// f_Gamma = delta'' + delta - Laplace_Gamma(delta) + u' on the unit
    /// circle, where delta is spatially constant (so the surface Laplacian
    /// vanishes) and r = 1.
    static double f_surf(const Vec2&, double t) {
        const double pi = std::numbers::pi;
        return std::cos(2.0 * pi * t) * (2.0 * pi * k - k / (2.0 * pi) + 2.0 * pi);
    }
    static Vec2 grad_u(const Vec2& x, double t) {
        const double r2 = x.norm2();
        if (r2 < 1e-24) return {0.0, 0.0};
        const double f = std::sin(2.0 * std::numbers::pi * t) * k * std::pow(r2, k / 2.0 - 1.0);
        return {f * x.x, f * x.y};
    }
};

} // namespace detail

/// The built-in experiment configurations.
inline ScenarioInfo scenario(const std::string& name) {
    ScenarioInfo info;
    info.name = name;
    ProblemSpec& s = info.spec;
    if (name == "pure" || name == "adv-bulk" || name == "adv-surface" || name == "sdamp") {
        s.mu = 1.0;
        s.beta = 1.0;
        s.kappa = 0.0;
        s.u0 = detail::gaussian_iv;
        s.u1 = [](const Vec2&) { return 0.0; };
        info.T = 1.0;
        info.tau0 = 1.0 / 32.0;
        if (name == "pure") {
            s.variant = Variant::PureSecondOrder;
        } else if (name == "adv-bulk") {
            s.variant = Variant::Advective;
            s.alpha_bulk = s.alpha_surf = 0.0;
            s.v_bulk = [](const Vec2&) { return Vec2{2.0, 0.0}; };
            s.v_surf = [](const Vec2&) { return Vec2{0.0, 0.0}; };
        } else if (name == "adv-surface") {
            s.variant = Variant::Advective;
            s.alpha_bulk = s.alpha_surf = 0.0;
            s.v_bulk = [](const Vec2&) { return Vec2{0.0, 0.0}; };
            s.v_surf = [](const Vec2& x) { return Vec2{-x.y, x.x}; };
        } else {
            s.variant = Variant::StrongDamping;
            s.d_bulk = 0.1;
            s.d_surf = 0.2;
        }
        return info;
    }
    if (name == "acoustic") {
        using M = detail::AcousticManufactured;
        s.variant = Variant::Acoustic;
        s.c_bulk = s.c_surf = s.mu_surf = s.a_bulk = s.k_surf = 1.0;
        s.f_bulk = M::f_bulk;
        s.f_surf = M::f_surf;
        s.u0 = [](const Vec2& x) { return M::u(x, 0.0); };
        s.u1 = [](const Vec2& x) { return M::udot(x, 0.0); };
        s.delta0 = [](const Vec2& x) { return M::delta(x, 0.0); };
        s.delta1 = [](const Vec2&) { return 0.0; };
        info.T = 0.2;
        info.tau0 = 0.2 / 8.0; // must divide T; close to the dyadic base step
        info.has_exact = true;
        info.exact.bulk = M::u;
        info.exact.surf = M::delta;
        info.exact.grad_bulk = M::grad_u;
        info.exact.grad_surf = [](const Vec2&, double) { return Vec2{0.0, 0.0}; };
        return info;
    }
    throw UnknownScenario("unknown scenario '" + name +
                          "' (known: pure, adv-bulk, adv-surface, sdamp, acoustic)");
}

// ---------------------------------------------------------------------------
// Study driver.
// ---------------------------------------------------------------------------

enum class ComparisonMode { Exact, Reference };

struct StudyConfig {
    std::string scenario_name;
    ProblemSpec spec;
    double T = 1.0;
    ExactSolution exact;
    bool has_exact = false;

    int seed_n = 6;
    int level_min = 2;
    int level_max = 5;
    double tau0 = 1.0 / 32.0; // step at level_min, halved per level
    int rk_stages = 1;

    ComparisonMode comparison = ComparisonMode::Reference;
    int reference_gap = 2;

    SolverMode solver_mode = SolverMode::DirectFactorization;
    double solver_tol = 1e-12;
    /// Stacked stage systems above this size switch to the matching Krylov
    /// solver; direct band factorizations get large on fine levels.
    int direct_size_limit = 20000;

    bool track_energy = true;

    // temporal studies
    int temporal_level = 3;
    int halvings = 4;

    std::string output_dir = "out";

    static StudyConfig from_scenario(const std::string& name) {
        const ScenarioInfo info = scenario(name);
        StudyConfig cfg;
        cfg.scenario_name = info.name;
        cfg.spec = info.spec;
        cfg.T = info.T;
        cfg.tau0 = info.tau0;
        cfg.exact = info.exact;
        cfg.has_exact = info.has_exact;
        cfg.comparison = info.has_exact ? ComparisonMode::Exact : ComparisonMode::Reference;
        return cfg;
    }
};

/// One completed run: what a study appends per level (or per tau).
struct RunRecord {
    std::string scenario;
    int level = 0;
    double h = 0.0;
    double tau = 0.0;
    int n_dofs = 0;
    double wall_seconds = 0.0;
    ErrorReport errors;
    double energy_drift = 0.0;
};

struct StudyResult {
    std::string scenario;
    bool temporal = false;
    ConvergenceTable table;
    std::vector<RunRecord> records; // append-only, one per table row
    std::vector<std::string> warnings;
};

namespace detail {

inline SolverMode pick_solver(const StudyConfig& cfg, Variant variant, int stages,
                              int stacked_size) {
    // the stacked stage matrix is symmetric only for one Gauss stage and a
    // symmetric (or vanishing) velocity form
    const bool symmetric_stage =
        stages == 1 &&
        (variant == Variant::PureSecondOrder || variant == Variant::StrongDamping);
    const SolverMode krylov =
        symmetric_stage ? SolverMode::IterativeSPD : SolverMode::IterativeGeneral;
    if (cfg.solver_mode == SolverMode::DirectFactorization &&
        stacked_size <= cfg.direct_size_limit)
        return SolverMode::DirectFactorization;
    return krylov;
}

} // namespace detail

/// One solve of a scenario on one mesh: integrate to T, tracking the energy
/// history when asked.
struct SingleRun {
    RkState final_state;
    Vector initial_u;
    double energy_drift = 0.0;
    bool energy_monotone = true;
    std::vector<double> energies;
    double wall_seconds = 0.0;
};

inline SingleRun run_once(const Mesh2D& mesh, const AssembledOperators& ops,
                          const ProblemSpec& spec, const ButcherTableau& tableau, double tau,
                          double T, const StudyConfig& cfg, bool track_energy) {
    const auto t_start = std::chrono::steady_clock::now();
    FirstOrderSystem sys{&ops.M, &ops.A, &ops.B, ops.load};
    const Vector u0 = interpolate(mesh, ops.dofmap, spec.u0, spec.delta0);
    const Vector u1 = interpolate(mesh, ops.dofmap, spec.u1, spec.delta1);

    StepperConfig sc;
    sc.tau = tau;
    sc.T = T;
    sc.solver_mode =
        detail::pick_solver(cfg, spec.variant, tableau.s, tableau.s * ops.dofmap.size());
    sc.solver_tol = cfg.solver_tol;

    SingleRun run;
    SolverHandle mass_solver(SolverMode::IterativeSPD, cfg.solver_tol);
    if (track_energy) {
        sc.observer = [&](int, double, const RkState& y) {
            run.energies.push_back(discrete_energy(sys, y, mass_solver));
        };
    }
    run.initial_u = u0;
    run.final_state = integrate(sys, tableau, u0, u1, sc);
    if (track_energy && !run.energies.empty()) {
        const double e0 = run.energies.front();
        const double scale = std::max(std::abs(e0), 1e-30);
        for (size_t i = 0; i < run.energies.size(); ++i) {
            run.energy_drift =
                std::max(run.energy_drift, std::abs(run.energies[i] - e0) / scale);
            if (i > 0 && run.energies[i] > run.energies[i - 1] + 1e-10 * scale)
                run.energy_monotone = false;
        }
    }
    run.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return run;
}

/// Paired (h, tau) halving study: level j runs with tau_j = tau0 / 2^(j-min).
/// Errors at final time against the exact solution or against a reference
/// solution two levels finer (restricted by nodal injection).
inline StudyResult run_spatial_study(const StudyConfig& cfg) {
    if (cfg.level_min < 0 || cfg.level_max < cfg.level_min)
        throw ConfigError("invalid level range");
    if (cfg.comparison == ComparisonMode::Exact && !cfg.has_exact)
        throw ConfigError("exact comparison requested but the scenario has no exact solution");
    if (cfg.comparison == ComparisonMode::Reference && cfg.reference_gap < 1)
        throw ConfigError("reference gap must be >= 1");
    validate_spec(cfg.spec);
    for (int l = cfg.level_min; l <= cfg.level_max; ++l) {
        const double tau = cfg.tau0 / std::pow(2.0, l - cfg.level_min);
        const double steps = cfg.T / tau;
        if (std::abs(std::llround(steps) * tau - cfg.T) > 1e-12)
            throw ConfigError("tau does not divide T at level " + std::to_string(l));
    }

    const BoundaryCurve curve = BoundaryCurve::unit_circle();
    const int top_level =
        cfg.comparison == ComparisonMode::Reference ? cfg.level_max + cfg.reference_gap
                                                    : cfg.level_max;
    const RefinementHierarchy hier = build_hierarchy(cfg.seed_n, top_level + 1, curve);
    const ButcherTableau tableau = gauss_tableau(cfg.rk_stages);

    StudyResult result;
    result.scenario = cfg.scenario_name;
    if (cfg.spec.variant == Variant::Advective)
        result.warnings = check_monotonicity(hier.level(cfg.level_min), cfg.spec);

    struct LevelData {
        std::shared_ptr<AssembledOperators> ops;
        SingleRun run;
        double tau;
    };
    std::vector<LevelData> levels;
    const double tau_min = cfg.tau0 / std::pow(2.0, cfg.level_max - cfg.level_min);

    for (int l = cfg.level_min; l <= cfg.level_max; ++l) {
        const Mesh2D& mesh = hier.level(l);
        LevelData data;
        data.ops = std::make_shared<AssembledOperators>(assemble_operators(mesh, cfg.spec));
        data.tau = cfg.tau0 / std::pow(2.0, l - cfg.level_min);
        data.run = run_once(mesh, *data.ops, cfg.spec, tableau, data.tau, cfg.T, cfg,
                                    cfg.track_energy);
        levels.push_back(std::move(data));
    }

    // reference solution on the finest + gap level with the smallest step
    Vector reference;
    DofMap reference_dofmap;
    if (cfg.comparison == ComparisonMode::Reference) {
        const Mesh2D& mesh = hier.level(top_level);
        const AssembledOperators ops = assemble_operators(mesh, cfg.spec);
        reference_dofmap = ops.dofmap;
        const SingleRun run =
            run_once(mesh, ops, cfg.spec, tableau, tau_min, cfg.T, cfg, false);
        reference = run.final_state.u;
    }

    for (size_t i = 0; i < levels.size(); ++i) {
        const int l = cfg.level_min + static_cast<int>(i);
        ConvergenceTable::Row row;
        row.level = l;
        row.h = hier.level(l).h;
        row.tau = levels[i].tau;
        row.n_dofs = levels[i].ops->dofmap.size();
        row.energy_drift = levels[i].run.energy_drift;
        row.wall_seconds = levels[i].run.wall_seconds;
        if (cfg.comparison == ComparisonMode::Exact) {
            row.err = error_vs_exact(hier.level(l), *levels[i].ops, levels[i].run.final_state.u,
                                     cfg.exact, cfg.T, ErrorMetric::NodalDiscrete, curve);
        } else {
            row.err = error_vs_reference(hier, l, top_level, levels[i].run.final_state.u,
                                         reference, *levels[i].ops, reference_dofmap, cfg.T);
        }
        row.err.level = l;
        result.table.rows.push_back(row);
        result.records.push_back({cfg.scenario_name, l, row.h, row.tau, row.n_dofs,
                                  row.wall_seconds, row.err, row.energy_drift});
    }
    return result;
}

/// Fixed-mesh tau-halving study; errors against the smallest-tau run on the
/// same mesh, so the measured error is the pure time discretisation error.
inline StudyResult run_temporal_study(const StudyConfig& cfg) {
    if (cfg.halvings < 1) throw ConfigError("temporal study needs at least one halving");
    validate_spec(cfg.spec);
    for (int j = 0; j <= cfg.halvings; ++j) {
        const double tau = cfg.tau0 / std::pow(2.0, j);
        if (std::abs(std::llround(cfg.T / tau) * tau - cfg.T) > 1e-12)
            throw ConfigError("tau does not divide T at halving " + std::to_string(j));
    }

    const BoundaryCurve curve = BoundaryCurve::unit_circle();
    const RefinementHierarchy hier = build_hierarchy(cfg.seed_n, cfg.temporal_level + 1, curve);
    const Mesh2D& mesh = hier.level(cfg.temporal_level);
    const AssembledOperators ops = assemble_operators(mesh, cfg.spec);
    const ButcherTableau tableau = gauss_tableau(cfg.rk_stages);

    StudyResult result;
    result.scenario = cfg.scenario_name;
    result.temporal = true;

    std::vector<SingleRun> runs;
    std::vector<double> taus;
    for (int j = 0; j <= cfg.halvings; ++j) {
        const double tau = cfg.tau0 / std::pow(2.0, j);
        if (!taus.empty() && tau == taus.back())
            throw ConfigError("duplicate tau in temporal study");
        taus.push_back(tau);
        runs.push_back(run_once(mesh, ops, cfg.spec, tableau, tau, cfg.T, cfg,
                                        cfg.track_energy));
    }

    const Vector& ref = runs.back().final_state.u;
    for (int j = 0; j < cfg.halvings; ++j) {
        Vector e = ref;
        for (size_t i = 0; i < e.size(); ++i) e[i] -= runs[j].final_state.u[i];
        ConvergenceTable::Row row;
        row.level = cfg.temporal_level;
        row.h = mesh.h;
        row.tau = taus[j];
        row.n_dofs = ops.dofmap.size();
        row.energy_drift = runs[j].energy_drift;
        row.wall_seconds = runs[j].wall_seconds;
        row.err.metric = ErrorMetric::NodalDiscrete;
        row.err.t = cfg.T;
        row.err.level = cfg.temporal_level;
        row.err.err_l2_bulk = std::sqrt(dot(e, ops.parts.mass_bulk.apply(e)));
        row.err.err_l2_surf = std::sqrt(dot(e, ops.parts.mass_surf.apply(e)));
        row.err.err_h1_bulk = std::sqrt(dot(e, ops.parts.stiff_bulk.apply(e)));
        row.err.err_h1_surf = std::sqrt(dot(e, ops.parts.stiff_surf.apply(e)));
        row.err.combined_l2 =
            std::sqrt(row.err.err_l2_bulk * row.err.err_l2_bulk +
                      ops.mass_surface_weight * row.err.err_l2_surf * row.err.err_l2_surf);
        result.table.rows.push_back(row);
        result.records.push_back({cfg.scenario_name, row.level, row.h, row.tau, row.n_dofs,
                                  row.wall_seconds, row.err, row.energy_drift});
    }
    return result;
}

// ---------------------------------------------------------------------------
// Output emission: CSV (fixed schema) and a log-log SVG plot.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline std::string study_csv(const StudyResult& result) {
    std::ostringstream out;
    out << "scenario,level,h,tau,N,err_l2_bulk,err_l2_surf,err_h1_bulk,err_h1_surf,eoc_l2,"
           "energy_drift,wall_seconds\n";
    const auto rates = result.table.eoc_l2();
    for (size_t i = 0; i < result.table.rows.size(); ++i) {
        const auto& r = result.table.rows[i];
        const double rate = i == 0 ? std::numeric_limits<double>::quiet_NaN() : rates[i - 1];
        out << result.scenario << ',' << r.level << ',' << detail::fmt17(r.h) << ','
            << detail::fmt17(r.tau) << ',' << r.n_dofs << ','
            << detail::fmt17(r.err.err_l2_bulk) << ',' << detail::fmt17(r.err.err_l2_surf)
            << ',' << detail::fmt17(r.err.err_h1_bulk) << ','
            << detail::fmt17(r.err.err_h1_surf) << ',' << detail::fmt17(rate) << ','
            << detail::fmt17(r.energy_drift) << ',' << detail::fmt17(r.wall_seconds) << '\n';
    }
    return out.str();
}

/// Log-log polylines for the four error norms with slope guide lines of
/// order 1, 1.5 and 2.
inline std::string study_svg(const StudyResult& result) {
    const int W = 640, H = 480, ML = 70, MR = 160, MT = 30, MB = 50;
    std::vector<std::pair<std::string, std::vector<double>>> series = {
        {"err_l2_bulk", {}}, {"err_l2_surf", {}}, {"err_h1_bulk", {}}, {"err_h1_surf", {}}};
    std::vector<double> xs;
    for (const auto& r : result.table.rows) {
        xs.push_back(result.temporal ? r.tau : r.h);
        series[0].second.push_back(r.err.err_l2_bulk);
        series[1].second.push_back(r.err.err_l2_surf);
        series[2].second.push_back(r.err.err_h1_bulk);
        series[3].second.push_back(r.err.err_h1_surf);
    }
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (double x : xs) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
    }
    for (const auto& s : series)
        for (double v : s.second)
            if (v > 0.0) {
                ymin = std::min(ymin, v);
                ymax = std::max(ymax, v);
            }
    if (xs.empty() || ymin > ymax) {
        return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\"/>\n";
    }
    ymin /= 2.0;
    ymax *= 2.0;
    auto px = [&](double x) {
        return ML + (std::log10(x) - std::log10(xmin)) /
                        (std::log10(xmax) - std::log10(xmin) + 1e-300) * (W - ML - MR);
    };
    auto py = [&](double y) {
        return H - MB -
               (std::log10(y) - std::log10(ymin)) /
                   (std::log10(ymax) - std::log10(ymin) + 1e-300) * (H - MT - MB);
    };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\">\n";
    svg << "<rect x=\"" << ML << "\" y=\"" << MT << "\" width=\"" << W - ML - MR
        << "\" height=\"" << H - MT - MB << "\" fill=\"none\" stroke=\"black\"/>\n";
    const char* xlabel = result.temporal ? "tau" : "h";
    svg << "<text x=\"" << (ML + (W - ML - MR) / 2) << "\" y=\"" << (H - 12)
        << "\" font-size=\"14\">" << xlabel << " (log)</text>\n";
    svg << "<text x=\"14\" y=\"" << (MT + (H - MT - MB) / 2)
        << "\" font-size=\"14\" transform=\"rotate(-90 14," << (MT + (H - MT - MB) / 2)
        << ")\">error (log)</text>\n";

    // slope guides anchored at the first data point of the first series
    double anchor_y = 0.0;
    for (const auto& s : series)
        if (anchor_y == 0.0)
            for (double v : s.second)
                if (v > 0.0) {
                    anchor_y = v;
                    break;
                }
    const double slopes[3] = {1.0, 1.5, 2.0};
    for (double p : slopes) {
        const double y0 = anchor_y * 2.0, y1 = y0 * std::pow(xmin / xmax, p);
        svg << "<line x1=\"" << px(xmax) << "\" y1=\"" << py(y0) << "\" x2=\"" << px(xmin)
            << "\" y2=\"" << py(y1)
            << "\" stroke=\"gray\" stroke-dasharray=\"4,3\" class=\"slope-guide\"/>\n";
        svg << "<text x=\"" << px(xmin) + 3 << "\" y=\"" << py(y1) - 3
            << "\" font-size=\"11\" fill=\"gray\">order " << p << "</text>\n";
    }

    const char* colors[4] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    int ci = 0, legend_y = MT + 10;
    for (const auto& s : series) {
        bool any = false;
        for (double v : s.second) any = any || v > 0.0;
        if (!any) {
            ++ci;
            continue;
        }
        svg << "<polyline fill=\"none\" stroke=\"" << colors[ci % 4] << "\" points=\"";
        for (size_t i = 0; i < xs.size(); ++i)
            if (s.second[i] > 0.0) svg << px(xs[i]) << ',' << py(s.second[i]) << ' ';
        svg << "\"/>\n";
        for (size_t i = 0; i < xs.size(); ++i)
            if (s.second[i] > 0.0)
                svg << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(s.second[i])
                    << "\" r=\"3\" fill=\"" << colors[ci % 4] << "\"/>\n";
        svg << "<text x=\"" << W - MR + 10 << "\" y=\"" << legend_y << "\" font-size=\"12\" fill=\""
            << colors[ci % 4] << "\">" << s.first << "</text>\n";
        legend_y += 16;
        ++ci;
    }
    svg << "</svg>\n";
    return svg.str();
}

/// Write study.csv and study.svg into the directory.
inline void emit_outputs(const StudyResult& result, const std::string& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    {
        std::ofstream f(directory + "/study.csv", std::ios::binary);
        if (!f) throw IoError("cannot write " + directory + "/study.csv");
        f << study_csv(result);
    }
    {
        std::ofstream f(directory + "/study.svg", std::ios::binary);
        if (!f) throw IoError("cannot write " + directory + "/study.svg");
        f << study_svg(result);
    }
}

// ---------------------------------------------------------------------------
// INI-style configuration.
//   [problem] scenario = pure          (+ per-key coefficient overrides)
//   [mesh]    seed = 6, level_min/max or level
//   [time]    tau0, T, rk_stages, solver = direct|iterative, tol
//   [output]  dir
// ---------------------------------------------------------------------------

using IniData = std::map<std::string, std::map<std::string, std::string>>;

inline IniData parse_ini(std::istream& in) {
    IniData data;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(lineno));
        data[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return data;
}

inline StudyConfig config_from_ini(const IniData& ini) {
    auto get = [&](const std::string& sec, const std::string& key) -> const std::string* {
        const auto s = ini.find(sec);
        if (s == ini.end()) return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    };
    auto to_double = [](const std::string& s, const std::string& what) {
        try {
            size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("cannot parse number '" + s + "' for " + what);
        }
    };
    auto to_int = [&](const std::string& s, const std::string& what) {
        const double v = to_double(s, what);
        return static_cast<int>(std::llround(v));
    };

    const std::string* name = get("problem", "scenario");
    if (!name) throw ConfigError("[problem] scenario is required");
    StudyConfig cfg = StudyConfig::from_scenario(*name);

    static const char* coeff_keys[] = {"mu",     "beta",   "kappa",  "alpha_bulk", "alpha_surf",
                                       "d_bulk", "d_surf", "c_bulk", "c_surf",     "mu_surf",
                                       "a_bulk", "k_surf"};
    for (const char* key : coeff_keys) {
        const std::string* v = get("problem", key);
        if (!v) continue;
        const double val = to_double(*v, key);
        const std::string k = key;
        if (k == "mu") cfg.spec.mu = val;
        else if (k == "beta") cfg.spec.beta = val;
        else if (k == "kappa") cfg.spec.kappa = val;
        else if (k == "alpha_bulk") cfg.spec.alpha_bulk = val;
        else if (k == "alpha_surf") cfg.spec.alpha_surf = val;
        else if (k == "d_bulk") cfg.spec.d_bulk = val;
        else if (k == "d_surf") cfg.spec.d_surf = val;
        else if (k == "c_bulk") cfg.spec.c_bulk = val;
        else if (k == "c_surf") cfg.spec.c_surf = val;
        else if (k == "mu_surf") cfg.spec.mu_surf = val;
        else if (k == "a_bulk") cfg.spec.a_bulk = val;
        else if (k == "k_surf") cfg.spec.k_surf = val;
    }
    if (const auto* v = get("problem", "compare"))
        cfg.comparison = *v == "exact" ? ComparisonMode::Exact : ComparisonMode::Reference;
    if (const auto* v = get("problem", "reference_gap"))
        cfg.reference_gap = to_int(*v, "reference_gap");

    if (const auto* v = get("mesh", "seed")) cfg.seed_n = to_int(*v, "seed");
    if (const auto* v = get("mesh", "level_min")) cfg.level_min = to_int(*v, "level_min");
    if (const auto* v = get("mesh", "level_max")) cfg.level_max = to_int(*v, "level_max");
    if (const auto* v = get("mesh", "level")) {
        cfg.level_min = cfg.level_max = to_int(*v, "level");
        cfg.temporal_level = cfg.level_min;
    }

    if (const auto* v = get("time", "tau0")) cfg.tau0 = to_double(*v, "tau0");
    if (const auto* v = get("time", "T")) cfg.T = to_double(*v, "T");
    if (const auto* v = get("time", "rk_stages")) cfg.rk_stages = to_int(*v, "rk_stages");
    if (const auto* v = get("time", "halvings")) cfg.halvings = to_int(*v, "halvings");
    if (const auto* v = get("time", "solver")) {
        if (*v == "direct") cfg.solver_mode = SolverMode::DirectFactorization;
        else if (*v == "iterative") cfg.solver_mode = SolverMode::IterativeSPD;
        else throw ConfigError("solver must be direct or iterative, got '" + *v + "'");
    }
    if (const auto* v = get("time", "tol")) cfg.solver_tol = to_double(*v, "tol");

    if (const auto* v = get("output", "dir")) cfg.output_dir = *v;
    return cfg;
}

inline StudyConfig config_from_ini_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    const IniData ini = parse_ini(in);
    return config_from_ini(ini);
}

} // namespace bswave
