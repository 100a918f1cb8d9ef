#include "doctest.h"

#include <cmath>
#include <numbers>

#include "bswave/assembly.hpp"
#include "bswave/harness.hpp"
#include "bswave/mesh.hpp"
#include "oracles.hpp"

using namespace bswave;

namespace {

/// One reference triangle (0,0), (1,0), (0,1); no boundary edges.
Mesh2D reference_triangle() {
    Mesh2D m;
    m.vertices = {{0, 0}, {1, 0}, {0, 1}};
    m.is_boundary = {false, false, false};
    m.triangles = {{0, 1, 2}};
    m.h = std::sqrt(2.0);
    return m;
}

/// Reference triangle with its unit edge (0,0)-(1,0) marked as boundary.
Mesh2D reference_triangle_with_edge() {
    Mesh2D m = reference_triangle();
    m.is_boundary = {true, true, false};
    m.boundary_edges = {{0, 1, 0}};
    return m;
}

} // namespace

TEST_CASE("local bulk mass and stiffness match the closed forms") {
    const Mesh2D mesh = reference_triangle();
    ProblemSpec spec; // pure, mu=1, beta=kappa=0
    const auto dofmap = DofMap::build(mesh, DofLayout::TraceCoupled);
    const auto m = assemble_mass(mesh, spec, dofmap);
    const double mexp[3][3] = {{2, 1, 1}, {1, 2, 1}, {1, 1, 2}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(m(i, j) == doctest::Approx(mexp[i][j] / 24.0).epsilon(1e-15));

    const auto a = assemble_stiffness(mesh, spec, dofmap);
    const double aexp[3][3] = {{2, -1, -1}, {-1, 1, 0}, {-1, 0, 1}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(a(i, j) == doctest::Approx(0.5 * aexp[i][j]).epsilon(1e-15));
}

TEST_CASE("local edge mass and tangential stiffness on a unit edge") {
    const Mesh2D mesh = reference_triangle_with_edge();
    const auto dofmap = DofMap::build(mesh, DofLayout::TraceCoupled);
    const auto parts = assemble_parts(mesh, dofmap);
    CHECK(parts.mass_surf(0, 0) == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
    CHECK(parts.mass_surf(0, 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(parts.mass_surf(1, 1) == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
    CHECK(parts.stiff_surf(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(parts.stiff_surf(0, 1) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("mass sums to |Omega_h| + mu |Gamma_h|") {
    const Mesh2D mesh = seed_disc_mesh(6);
    ProblemSpec spec;
    spec.mu = 1.0;
    const auto dofmap = DofMap::build(mesh, DofLayout::TraceCoupled);
    const auto m = assemble_mass(mesh, spec, dofmap);
    CHECK(m.entry_sum() ==
          doctest::Approx(3.0 * std::sqrt(3.0) / 2.0 + 6.0).epsilon(1e-14));

    spec.mu = 2.5;
    const auto m2 = assemble_mass(mesh, spec, dofmap);
    CHECK(m2.entry_sum() ==
          doctest::Approx(3.0 * std::sqrt(3.0) / 2.0 + 2.5 * 6.0).epsilon(1e-14));
}

TEST_CASE("stiffness kernel and boundary mass weights") {
    const auto curve = BoundaryCurve::unit_circle();
    const Mesh2D mesh = refine(seed_disc_mesh(6), curve);
    const auto dofmap = DofMap::build(mesh, DofLayout::TraceCoupled);

    ProblemSpec spec;
    spec.beta = 1.0;
    spec.kappa = 0.0;
    const auto a0 = assemble_stiffness(mesh, spec, dofmap);
    const Vector ones(dofmap.size(), 1.0);
    for (double v : a0.apply(ones)) CHECK(std::abs(v) < 1e-12);

    spec.kappa = 1.0;
    const auto a1 = assemble_stiffness(mesh, spec, dofmap);
    CHECK(dot(ones, a1.apply(ones)) == doctest::Approx(mesh.boundary_length()).epsilon(1e-12));
}

TEST_CASE("advective form on the reference triangle: constant field rows") {
    const Mesh2D mesh = reference_triangle();
    ProblemSpec spec;
    spec.variant = Variant::Advective;
    spec.alpha_bulk = spec.alpha_surf = 0.0;
    spec.v_bulk = [](const Vec2&) { return Vec2{1.0, 0.0}; };
    spec.v_surf = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    const auto dofmap = DofMap::build(mesh, DofLayout::TraceCoupled);
    const auto b = assemble_velocity_form(mesh, spec, dofmap);
    for (int k = 0; k < 3; ++k) {
        CHECK(b(k, 0) == doctest::Approx(-1.0 / 6.0).epsilon(1e-15));
        CHECK(b(k, 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
        CHECK(b(k, 2) == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("quadrature reproduces closed-form mass matrices for P1 data") {
    // alpha-only advective form with unit coefficients equals the mass parts
    const auto curve = BoundaryCurve::unit_circle();
    const Mesh2D mesh = refine(seed_disc_mesh(6), curve);
    ProblemSpec spec;
    spec.variant = Variant::Advective;
    spec.alpha_bulk = 1.0;
    spec.alpha_surf = 1.0;
    spec.v_bulk = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    spec.v_surf = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    const auto dofmap = DofMap::build(mesh, DofLayout::TraceCoupled);
    const auto b = assemble_velocity_form(mesh, spec, dofmap);
    const auto parts = assemble_parts(mesh, dofmap);
    const auto expected =
        SparseMatrix::combine({{1.0, &parts.mass_bulk}, {1.0, &parts.mass_surf}});
    for (int r = 0; r < b.size(); ++r)
        for (int k = b.row_ptr()[r]; k < b.row_ptr()[r + 1]; ++k)
            CHECK(b.values()[k] ==
                  doctest::Approx(expected(r, b.cols()[k])).epsilon(1e-15));
}

TEST_CASE("acoustic coupling block is exactly skew-symmetric") {
    const auto curve = BoundaryCurve::unit_circle();
    const Mesh2D mesh = refine(seed_disc_mesh(6), curve);
    ProblemSpec spec = scenario("acoustic").spec;
    const auto dofmap = DofMap::build(mesh, DofLayout::AcousticBlock);
    const auto b = assemble_velocity_form(mesh, spec, dofmap);
    CHECK(b.skew_defect() <= 1e-15 * b.max_abs());
    CHECK(b.nnz() > 0);

    // block layout: no coupling inside the bulk block or inside the delta block
    for (int r = 0; r < dofmap.n_vertices; ++r)
        for (int k = b.row_ptr()[r]; k < b.row_ptr()[r + 1]; ++k)
            CHECK(b.cols()[k] >= dofmap.delta_offset());
}

TEST_CASE("strong damping equals the rescaled stiffness entrywise") {
    const auto curve = BoundaryCurve::unit_circle();
    const Mesh2D mesh = refine(refine(seed_disc_mesh(6), curve), curve);
    ProblemSpec spec;
    spec.variant = Variant::StrongDamping;
    spec.mu = 1.0;
    spec.beta = 1.0;
    spec.kappa = 0.0;
    spec.d_bulk = 0.1;
    spec.d_surf = 0.2;
    const auto dofmap = DofMap::build(mesh, DofLayout::TraceCoupled);
    const auto b = assemble_velocity_form(mesh, spec, dofmap);

    ProblemSpec rescaled;
    rescaled.beta = spec.d_surf / spec.d_bulk;
    rescaled.kappa = 0.0;
    const auto a = assemble_stiffness(mesh, rescaled, dofmap);
    REQUIRE(b.nnz() == a.nnz());
    for (int r = 0; r < b.size(); ++r)
        for (int k = b.row_ptr()[r]; k < b.row_ptr()[r + 1]; ++k) {
            const double expected = spec.d_bulk * a.values()[k];
            CHECK(std::abs(b.values()[k] - expected) <=
                  1e-13 * std::max(1.0, std::abs(expected)));
        }
}

TEST_CASE("load vector: partition of unity and zero sources") {
    const auto curve = BoundaryCurve::unit_circle();
    const Mesh2D mesh = refine(seed_disc_mesh(6), curve);
    ProblemSpec spec;
    spec.f_bulk = [](const Vec2&, double) { return 1.0; };
    const auto dofmap = DofMap::build(mesh, DofLayout::TraceCoupled);
    const Vector load = assemble_load(mesh, spec, dofmap, 0.0);
    double sum = 0.0;
    for (double v : load) sum += v;
    CHECK(sum == doctest::Approx(mesh.polygon_area()).epsilon(1e-13));

    ProblemSpec none;
    const Vector zero = assemble_load(mesh, none, dofmap, 0.0);
    for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("acoustic manufactured load vs dense quadrature oracle") {
    const auto curve = BoundaryCurve::unit_circle();
    const Mesh2D mesh = refine(refine(seed_disc_mesh(6), curve), curve);
    const ProblemSpec spec = scenario("acoustic").spec;
    const auto dofmap = DofMap::build(mesh, DofLayout::AcousticBlock);

    // at t = 0 the bulk source vanishes and the surface source is constant:
    // each delta entry is f * (sum of adjacent half edge lengths)
    const Vector l0 = assemble_load(mesh, spec, dofmap, 0.0);
    const double k = 1.2, pi = std::numbers::pi;
    const double fsurf0 = 2.0 * pi * k - k / (2.0 * pi) + 2.0 * pi;
    for (int v = 0; v < dofmap.n_vertices; ++v) CHECK(l0[v] == 0.0);
    std::vector<double> vertex_weight(mesh.n_vertices(), 0.0);
    for (const auto& be : mesh.boundary_edges) {
        const double len = (mesh.vertices[be.b] - mesh.vertices[be.a]).norm();
        vertex_weight[be.a] += len / 2.0;
        vertex_weight[be.b] += len / 2.0;
    }
    for (int v : dofmap.boundary_vertex_order)
        CHECK(l0[dofmap.delta_dof_of_vertex[v]] ==
              doctest::Approx(fsurf0 * vertex_weight[v]).epsilon(1e-13));

    // at a generic time, compare against a much finer quadrature of the same
    // integrals (three nested subdivisions, degree-4 rule)
    const double t = 0.37;
    const Vector load = assemble_load(mesh, spec, dofmap, t);
    Vector ref(dofmap.size(), 0.0);
    using BaryCell = std::array<std::array<double, 3>, 3>;
    for (int tr = 0; tr < mesh.n_triangles(); ++tr) {
        const auto& tri = mesh.triangles[tr];
        const Vec2 p[3] = {mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                           mesh.vertices[tri[2]]};
        std::vector<BaryCell> stack;
        stack.push_back({{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
        for (int pass = 0; pass < 3; ++pass) {
            std::vector<BaryCell> next;
            for (const auto& cell : stack) {
                std::array<double, 3> m01, m12, m20;
                for (int i = 0; i < 3; ++i) {
                    m01[i] = 0.5 * (cell[0][i] + cell[1][i]);
                    m12[i] = 0.5 * (cell[1][i] + cell[2][i]);
                    m20[i] = 0.5 * (cell[2][i] + cell[0][i]);
                }
                next.push_back({{cell[0], m01, m20}});
                next.push_back({{cell[1], m12, m01}});
                next.push_back({{cell[2], m20, m12}});
                next.push_back({{m01, m12, m20}});
            }
            stack = std::move(next);
        }
        const double subarea = mesh.signed_area(tr) / 64.0;
        for (const auto& cell : stack) {
            for (const auto& q : quad::tri_degree4) {
                std::array<double, 3> lam{};
                for (int i = 0; i < 3; ++i)
                    lam[i] = q.l0 * cell[0][i] + q.l1 * cell[1][i] + q.l2 * cell[2][i];
                const Vec2 x = lam[0] * p[0] + lam[1] * p[1] + lam[2] * p[2];
                const double f = spec.f_bulk(x, t);
                for (int i = 0; i < 3; ++i)
                    ref[tri[i]] += q.w * subarea * f * lam[i];
            }
        }
    }
    double num = 0.0, den = 0.0;
    for (int v = 0; v < dofmap.n_vertices; ++v) {
        if (mesh.vertices[v].norm() < 0.3) continue; // origin patch is singular
        num += (load[v] - ref[v]) * (load[v] - ref[v]);
        den += ref[v] * ref[v];
    }
    CHECK(std::sqrt(num / den) < 2e-3);
}

TEST_CASE("interpolate: coordinates, Gaussian peak and constants") {
    const auto curve = BoundaryCurve::unit_circle();
    const Mesh2D mesh = refine(seed_disc_mesh(6), curve);
    const auto dofmap = DofMap::build(mesh, DofLayout::TraceCoupled);

    const Vector xs = interpolate(mesh, dofmap, [](const Vec2& x) { return x.x; });
    for (int v = 0; v < mesh.n_vertices(); ++v) CHECK(xs[v] == mesh.vertices[v].x);

    const Vector g = interpolate(mesh, dofmap, [](const Vec2& x) {
        return std::exp(-20.0 * ((x.x - 1.0) * (x.x - 1.0) + x.y * x.y));
    });
    CHECK(g[1] == doctest::Approx(1.0).epsilon(1e-15)); // vertex 1 is (1, 0)

    const Vector c = interpolate(mesh, dofmap, [](const Vec2&) { return 3.25; });
    for (double v : c) CHECK(v == 3.25);
}

TEST_CASE("acoustic interpolation fills delta dofs componentwise") {
    const auto curve = BoundaryCurve::unit_circle();
    const Mesh2D mesh = refine(seed_disc_mesh(6), curve);
    const auto dofmap = DofMap::build(mesh, DofLayout::AcousticBlock);
    CHECK(dofmap.size() == mesh.n_vertices() + 12);
    // delta dofs follow the bulk block in increasing vertex order
    for (size_t i = 1; i < dofmap.boundary_vertex_order.size(); ++i)
        CHECK(dofmap.boundary_vertex_order[i] > dofmap.boundary_vertex_order[i - 1]);

    const Vector u = interpolate(
        mesh, dofmap, [](const Vec2& x) { return x.x; }, [](const Vec2& x) { return x.y; });
    for (int v : dofmap.boundary_vertex_order)
        CHECK(u[dofmap.delta_dof_of_vertex[v]] == mesh.vertices[v].y);
}

TEST_CASE("mass and stiffness are positive definite (dense eigen oracle)") {
    const auto curve = BoundaryCurve::unit_circle();
    const Mesh2D mesh = refine(seed_disc_mesh(6), curve);
    const auto dofmap = DofMap::build(mesh, DofLayout::TraceCoupled);
    ProblemSpec spec;
    spec.mu = 1.0;
    spec.beta = 1.0;
    spec.kappa = 0.5;
    const auto m = assemble_mass(mesh, spec, dofmap);
    const auto a = assemble_stiffness(mesh, spec, dofmap);
    CHECK(m.asymmetry() <= 1e-13 * m.max_abs());
    CHECK(a.asymmetry() <= 1e-13 * a.max_abs());
    const auto em = oracle::sym_eigenvalues(oracle::to_dense(m));
    const auto ea = oracle::sym_eigenvalues(oracle::to_dense(a));
    CHECK(em.front() > 0.0);
    CHECK(ea.front() > 0.0);
}

TEST_CASE("assembly is deterministic") {
    const auto curve = BoundaryCurve::unit_circle();
    const Mesh2D mesh = refine(refine(seed_disc_mesh(6), curve), curve);
    const ProblemSpec spec = scenario("adv-surface").spec;
    const auto ops1 = assemble_operators(mesh, spec);
    const auto ops2 = assemble_operators(mesh, spec);
    CHECK(ops1.M.row_ptr() == ops2.M.row_ptr());
    CHECK(ops1.M.cols() == ops2.M.cols());
    CHECK(ops1.M.values() == ops2.M.values());
    CHECK(ops1.B.values() == ops2.B.values());
    CHECK(ops1.A.values() == ops2.A.values());
}

TEST_CASE("surface advection: symmetric part stays O(h) indefinite") {
    // dense eigensolve oracle; c measured once on level 1 and frozen
    const auto curve = BoundaryCurve::unit_circle();
    ProblemSpec spec;
    spec.variant = Variant::Advective;
    spec.alpha_bulk = 1.0;
    spec.alpha_surf = 1.0;
    spec.v_bulk = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    spec.v_surf = [](const Vec2& x) { return Vec2{-x.y, x.x}; };

    Mesh2D mesh = refine(seed_disc_mesh(6), curve);
    // measured on level 1: lambda_min = +0.082 (the alpha mass terms dominate
    // the rotation here), so the O(h) lower bound holds with ample margin
    const double c_frozen = 0.35;
    for (int level = 1; level <= 2; ++level) {
        const auto dofmap = DofMap::build(mesh, DofLayout::TraceCoupled);
        const auto b = assemble_velocity_form(mesh, spec, dofmap);
        const auto bt = b.transpose();
        const auto sym = SparseMatrix::combine({{0.5, &b}, {0.5, &bt}});
        const auto ev = oracle::sym_eigenvalues(oracle::to_dense(sym));
        CHECK(ev.front() >= -c_frozen * mesh.h);
        mesh = refine(mesh, curve);
    }
}

TEST_CASE("quasi-monotonicity shift diagnostic") {
    const auto curve = BoundaryCurve::unit_circle();
    const Mesh2D mesh = refine(seed_disc_mesh(6), curve);

    const auto pure_ops = assemble_operators(mesh, scenario("pure").spec);
    CHECK(pure_ops.rho_qm == 0.0);

    const auto adv_ops = assemble_operators(mesh, scenario("adv-bulk").spec);
    const auto bt = adv_ops.B.transpose();
    const auto sym = SparseMatrix::combine({{0.5, &adv_ops.B}, {0.5, &bt}});
    const double lmin = oracle::sym_eigenvalues(oracle::to_dense(sym)).front();
    CHECK(adv_ops.rho_qm >= 0.0);
    CHECK(adv_ops.rho_qm == doctest::Approx(std::max(0.0, -lmin)).epsilon(0.3));
}

TEST_CASE("problem spec validation") {
    ProblemSpec bad;
    bad.mu = 0.0;
    CHECK_THROWS_AS(validate_spec(bad), InvalidArgument);

    ProblemSpec adv;
    adv.variant = Variant::Advective;
    CHECK_THROWS_AS(validate_spec(adv), MissingField);

    ProblemSpec damped;
    damped.variant = Variant::StrongDamping;
    damped.beta = 0.0;
    damped.d_bulk = damped.d_surf = 0.1;
    CHECK_THROWS_AS(validate_spec(damped), InvalidArgument);

    ProblemSpec acoustic;
    acoustic.variant = Variant::Acoustic;
    acoustic.k_surf = -1.0;
    CHECK_THROWS_AS(validate_spec(acoustic), InvalidArgument);
}

TEST_CASE("monotonicity check warns for bulk advection only") {
    const auto curve = BoundaryCurve::unit_circle();
    const Mesh2D mesh = refine(seed_disc_mesh(6), curve);
    CHECK(!check_monotonicity(mesh, scenario("adv-bulk").spec).empty());
    CHECK(check_monotonicity(mesh, scenario("adv-surface").spec).empty());
    CHECK(check_monotonicity(mesh, scenario("pure").spec).empty());
}
