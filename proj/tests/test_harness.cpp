#include "doctest.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bswave/harness.hpp"

using namespace bswave;

namespace {

/// Strip the wall_seconds column (timing is the one non-deterministic field).
std::string mask_timing(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const auto last_comma = line.find_last_of(',');
        out << line.substr(0, last_comma) << '\n';
    }
    return out.str();
}

} // namespace

TEST_CASE("scenario catalog matches the experiment definitions") {
    const auto advb = scenario("adv-bulk");
    CHECK(advb.spec.variant == Variant::Advective);
    const Vec2 v = advb.spec.v_bulk({0.3, -0.2});
    CHECK(v.x == 2.0);
    CHECK(v.y == 0.0);
    CHECK(advb.spec.v_surf({0.3, -0.2}).norm() == 0.0);
    CHECK(advb.spec.mu == 1.0);
    CHECK(advb.spec.beta == 1.0);
    CHECK(advb.spec.kappa == 0.0);

    const auto advs = scenario("adv-surface");
    const Vec2 w = advs.spec.v_surf({0.6, 0.8});
    CHECK(w.x == -0.8);
    CHECK(w.y == 0.6);

    const auto sd = scenario("sdamp");
    CHECK(sd.spec.d_bulk == 0.1);
    CHECK(sd.spec.d_surf == 0.2);
    CHECK(sd.spec.variant == Variant::StrongDamping);

    const auto pure = scenario("pure");
    CHECK(pure.T == 1.0);
    CHECK(pure.tau0 == 1.0 / 32.0);
    CHECK(pure.spec.u0({1.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pure.spec.u1({0.3, 0.3}) == 0.0);

    const auto ac = scenario("acoustic");
    CHECK(ac.T == 0.2);
    CHECK(ac.has_exact);
    // u(x, t) = sin(2 pi t) (x1^2 + x2^2)^0.6
    const double t = 0.13;
    const Vec2 x{0.4, -0.5};
    const double expected =
        std::sin(2.0 * std::numbers::pi * t) * std::pow(x.x * x.x + x.y * x.y, 0.6);
    CHECK(ac.exact.bulk(x, t) == doctest::Approx(expected).epsilon(1e-14));
    // the displacement satisfies d(delta)/dt = normal derivative of u on the
    // circle (finite difference check at a boundary point)
    const Vec2 p{std::cos(0.7), std::sin(0.7)};
    const double dt = 1e-6;
    const double ddelta = (ac.exact.surf(p, t + dt) - ac.exact.surf(p, t - dt)) / (2 * dt);
    const double dn = 1.2 * std::sin(2.0 * std::numbers::pi * t); // du/dr at r = 1
    CHECK(ddelta == doctest::Approx(dn).epsilon(1e-7));

    CHECK_THROWS_AS(scenario("nope"), UnknownScenario);
}

TEST_CASE("spatial study: determinism and row consistency") {
    StudyConfig cfg = StudyConfig::from_scenario("pure");
    cfg.level_min = 2;
    cfg.level_max = 3;
    const auto r1 = run_spatial_study(cfg);
    const auto r2 = run_spatial_study(cfg);
    CHECK(mask_timing(study_csv(r1)) == mask_timing(study_csv(r2)));

    // first row reports the mesh/stepper values for its level
    const auto curve = BoundaryCurve::unit_circle();
    const auto hier = build_hierarchy(6, 3, curve);
    CHECK(r1.table.rows[0].level == 2);
    CHECK(r1.table.rows[0].h == hier.level(2).h);
    CHECK(r1.table.rows[0].tau == cfg.tau0);
    CHECK(r1.table.rows[0].n_dofs == hier.level(2).n_vertices());

    // one run record per table row, carrying the same values
    REQUIRE(r1.records.size() == r1.table.rows.size());
    for (size_t i = 0; i < r1.records.size(); ++i) {
        CHECK(r1.records[i].scenario == r1.scenario);
        CHECK(r1.records[i].level == r1.table.rows[i].level);
        CHECK(r1.records[i].h == r1.table.rows[i].h);
        CHECK(r1.records[i].n_dofs == r1.table.rows[i].n_dofs);
        CHECK(r1.records[i].errors.combined_l2 == r1.table.rows[i].err.combined_l2);
    }
}

TEST_CASE("spatial study: zero data gives zero errors and NaN rates") {
    StudyConfig cfg = StudyConfig::from_scenario("pure");
    cfg.spec.u0 = [](const Vec2&) { return 0.0; };
    cfg.spec.u1 = [](const Vec2&) { return 0.0; };
    cfg.level_min = 2;
    cfg.level_max = 3;
    const auto r = run_spatial_study(cfg);
    for (const auto& row : r.table.rows) CHECK(row.err.combined_l2 == 0.0);
    for (double rate : r.table.eoc_l2()) CHECK(std::isnan(rate));
    const std::string csv = study_csv(r);
    CHECK(csv.find("nan") != std::string::npos);
}

TEST_CASE("temporal study: config validation") {
    StudyConfig cfg = StudyConfig::from_scenario("pure");
    cfg.halvings = 0;
    CHECK_THROWS_AS(run_temporal_study(cfg), ConfigError);

    cfg = StudyConfig::from_scenario("pure");
    cfg.tau0 = 0.3; // does not divide T = 1
    CHECK_THROWS_AS(run_temporal_study(cfg), ConfigError);
}

TEST_CASE("temporal study: rows share h and halve tau") {
    StudyConfig cfg = StudyConfig::from_scenario("pure");
    cfg.temporal_level = 2;
    cfg.halvings = 2;
    const auto r = run_temporal_study(cfg);
    REQUIRE(r.table.rows.size() == 2);
    CHECK(r.table.rows[0].tau == cfg.tau0);
    CHECK(r.table.rows[1].tau == cfg.tau0 / 2.0);
    CHECK(r.table.rows[0].h == r.table.rows[1].h);
    CHECK(r.temporal);
    for (const auto& row : r.table.rows) CHECK(row.err.combined_l2 > 0.0);
}

TEST_CASE("CSV: exact schema and bitwise round-trip") {
    StudyConfig cfg = StudyConfig::from_scenario("pure");
    cfg.level_min = 2;
    cfg.level_max = 3;
    const auto result = run_spatial_study(cfg);
    const std::string csv = study_csv(result);

    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "scenario,level,h,tau,N,err_l2_bulk,err_l2_surf,err_h1_bulk,err_h1_surf,eoc_l2,"
          "energy_drift,wall_seconds");

    // parse rows back and re-serialize: bytes must match
    StudyResult parsed;
    parsed.scenario = result.scenario;
    parsed.temporal = result.temporal;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        REQUIRE(fields.size() == 12);
        ConvergenceTable::Row row;
        row.level = std::stoi(fields[1]);
        row.h = std::strtod(fields[2].c_str(), nullptr);
        row.tau = std::strtod(fields[3].c_str(), nullptr);
        row.n_dofs = std::stoi(fields[4]);
        row.err.err_l2_bulk = std::strtod(fields[5].c_str(), nullptr);
        row.err.err_l2_surf = std::strtod(fields[6].c_str(), nullptr);
        row.err.err_h1_bulk = std::strtod(fields[7].c_str(), nullptr);
        row.err.err_h1_surf = std::strtod(fields[8].c_str(), nullptr);
        row.err.combined_l2 = std::sqrt(
            row.err.err_l2_bulk * row.err.err_l2_bulk +
            1.0 * row.err.err_l2_surf * row.err.err_l2_surf);
        row.energy_drift = std::strtod(fields[10].c_str(), nullptr);
        row.wall_seconds = std::strtod(fields[11].c_str(), nullptr);
        parsed.table.rows.push_back(row);
    }
    CHECK(study_csv(parsed) == csv);
}

TEST_CASE("SVG: one polyline per norm plus slope guides") {
    StudyConfig cfg = StudyConfig::from_scenario("pure");
    cfg.level_min = 2;
    cfg.level_max = 3;
    const auto result = run_spatial_study(cfg);
    const std::string svg = study_svg(result);
    CHECK(svg.find("<svg") != std::string::npos);

    size_t polylines = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
        ++polylines;
        pos += 9;
    }
    CHECK(polylines == 4); // four error norms, all nonzero for this scenario

    size_t guides = 0;
    pos = 0;
    while ((pos = svg.find("slope-guide", pos)) != std::string::npos) {
        ++guides;
        pos += 11;
    }
    CHECK(guides == 3); // orders 1, 1.5, 2
}

TEST_CASE("emit_outputs writes both files") {
    StudyConfig cfg = StudyConfig::from_scenario("pure");
    cfg.level_min = 2;
    cfg.level_max = 3;
    const auto result = run_spatial_study(cfg);
    const std::string dir = "harness_test_out";
    emit_outputs(result, dir);
    std::ifstream csv(dir + "/study.csv");
    std::ifstream svg(dir + "/study.svg");
    CHECK(csv.good());
    CHECK(svg.good());
    std::stringstream buf;
    buf << csv.rdbuf();
    CHECK(buf.str() == study_csv(result));
}

TEST_CASE("INI parsing: sections, overrides, and errors") {
    std::istringstream in(
        "# comment\n"
        "[problem]\n"
        "scenario = sdamp\n"
        "beta = 2.0   ; matched damping ratio\n"
        "[mesh]\n"
        "seed = 6\n"
        "level_min = 2\n"
        "level_max = 4\n"
        "[time]\n"
        "tau0 = 0.015625\n"
        "rk_stages = 2\n"
        "solver = iterative\n"
        "[output]\n"
        "dir = somewhere\n");
    const StudyConfig cfg = config_from_ini(parse_ini(in));
    CHECK(cfg.scenario_name == "sdamp");
    CHECK(cfg.spec.beta == 2.0);
    CHECK(cfg.spec.d_bulk == 0.1);
    CHECK(cfg.level_min == 2);
    CHECK(cfg.level_max == 4);
    CHECK(cfg.tau0 == 0.015625);
    CHECK(cfg.rk_stages == 2);
    CHECK(cfg.solver_mode == SolverMode::IterativeSPD);
    CHECK(cfg.output_dir == "somewhere");

    std::istringstream single_level(
        "[problem]\nscenario = acoustic\n[mesh]\nlevel = 3\n");
    const StudyConfig one = config_from_ini(parse_ini(single_level));
    CHECK(one.level_min == 3);
    CHECK(one.level_max == 3);
    CHECK(one.temporal_level == 3);
    CHECK(one.comparison == ComparisonMode::Exact); // acoustic defaults to exact
    CHECK(one.tau0 == 0.2 / 8.0);

    std::istringstream bad1("[problem\nscenario = pure\n");
    CHECK_THROWS_AS(parse_ini(bad1), ConfigError);
    std::istringstream bad2("[problem]\nscenario pure\n");
    CHECK_THROWS_AS(parse_ini(bad2), ConfigError);
    std::istringstream bad3("[problem]\nscenario = pure\n[time]\ntau0 = abc\n");
    auto ini3 = parse_ini(bad3);
    CHECK_THROWS_AS(config_from_ini(ini3), ConfigError);
    std::istringstream bad4("[mesh]\nseed = 6\n");
    auto ini4 = parse_ini(bad4);
    CHECK_THROWS_AS(config_from_ini(ini4), ConfigError); // scenario is required
}

TEST_CASE("study validation errors") {
    StudyConfig cfg = StudyConfig::from_scenario("pure");
    cfg.level_min = 3;
    cfg.level_max = 2;
    CHECK_THROWS_AS(run_spatial_study(cfg), ConfigError);

    cfg = StudyConfig::from_scenario("pure");
    cfg.comparison = ComparisonMode::Exact; // pure has no exact solution
    CHECK_THROWS_AS(run_spatial_study(cfg), ConfigError);

    cfg = StudyConfig::from_scenario("pure");
    cfg.tau0 = 0.3; // 0.3 does not divide T = 1
    CHECK_THROWS_AS(run_spatial_study(cfg), ConfigError);
}
