#include "doctest.h"

#include <cmath>
#include <numbers>

#include "bswave/geometry.hpp"
#include "bswave/mesh.hpp"
#include "bswave/quadrature.hpp"
#include "oracles.hpp"

using namespace bswave;

namespace {

CurvedTriangleMap boundary_map_of(const Mesh2D& mesh, int bedge, const BoundaryCurve& curve) {
    const auto& be = mesh.boundary_edges[bedge];
    const auto& tri = mesh.triangles[be.tri];
    int apex = -1;
    for (int i = 0; i < 3; ++i)
        if (tri[i] != be.a && tri[i] != be.b) apex = tri[i];
    return {mesh.vertices[apex], mesh.vertices[be.a], mesh.vertices[be.b], &curve};
}

} // namespace

TEST_CASE("project_to_boundary: radial projection on the circle") {
    const auto curve = BoundaryCurve::unit_circle();
    const Vec2 p1 = project_to_boundary({2.0, 0.0}, curve);
    CHECK(p1.x == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p1.y == doctest::Approx(0.0).epsilon(1e-15));
    const Vec2 p2 = project_to_boundary({0.0, 0.5}, curve);
    CHECK(p2.x == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(p2.y == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("project_to_boundary: dense parameter-sweep oracle on the annulus") {
    const auto curve = BoundaryCurve::unit_circle();
    oracle::Rng rng(42);
    auto dist2 = [](double t, const Vec2& x) {
        const Vec2 q{std::cos(t), std::sin(t)};
        return (q - x).norm2();
    };
    for (int trial = 0; trial < 50; ++trial) {
        const double r = rng.uniform(0.5, 1.5);
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const Vec2 x{r * std::cos(theta), r * std::sin(theta)};
        const Vec2 p = project_to_boundary(x, curve);

        // argmin over a dense parameter grid, then golden-section polish of
        // the bracketing interval
        const int n = 20000;
        double best = 1e300;
        int ibest = 0;
        for (int i = 0; i < n; ++i) {
            const double t = 2.0 * std::numbers::pi * i / n;
            if (dist2(t, x) < best) {
                best = dist2(t, x);
                ibest = i;
            }
        }
        double lo = 2.0 * std::numbers::pi * (ibest - 1) / n;
        double hi = 2.0 * std::numbers::pi * (ibest + 1) / n;
        for (int it = 0; it < 80; ++it) {
            const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (dist2(m1, x) < dist2(m2, x))
                hi = m2;
            else
                lo = m1;
        }
        const double tstar = 0.5 * (lo + hi);
        const Vec2 pbest{std::cos(tstar), std::sin(tstar)};
        CHECK((p - pbest).norm() < 1e-6);
        CHECK((p - x).norm() <= (pbest - x).norm() + 1e-12);
        CHECK(std::abs(p.norm() - 1.0) < 1e-14);
    }
}

TEST_CASE("project_to_boundary: ambiguous near the center") {
    const auto curve = BoundaryCurve::unit_circle();
    CHECK_THROWS_AS(project_to_boundary({0.0, 0.0}, curve), AmbiguousProjection);
    CHECK_THROWS_AS(project_to_boundary({0.05, 0.01}, curve), AmbiguousProjection);
}

TEST_CASE("project_to_boundary is idempotent") {
    const auto curve = BoundaryCurve::unit_circle();
    oracle::Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec2 x{rng.uniform(-1.4, 1.4), rng.uniform(-1.4, 1.4)};
        if (x.norm() < 0.2) continue;
        const Vec2 p = project_to_boundary(x, curve);
        const Vec2 pp = project_to_boundary(p, curve);
        CHECK((p - pp).norm() < 1e-14);
    }
}

TEST_CASE("parametrized curve agrees with the closed-form circle") {
    const auto generic = BoundaryCurve::parametrized(
        [](double t) { return Vec2{std::cos(t), std::sin(t)}; },
        [](double t) { return Vec2{-std::sin(t), std::cos(t)}; });
    const Vec2 p = project_to_boundary({0.3, 1.1}, generic);
    const Vec2 q = Vec2{0.3, 1.1} / Vec2{0.3, 1.1}.norm();
    CHECK((p - q).norm() < 1e-10);
}

TEST_CASE("curved_map: vertices fixed, interior edges are the identity") {
    const auto curve = BoundaryCurve::unit_circle();
    const Vec2 a0{0.1, -0.05};
    const Vec2 a1{1.0, 0.0};
    const Vec2 a2{std::cos(0.9), std::sin(0.9)};
    const CurvedTriangleMap map(a0, a1, a2, &curve);

    const auto [p0, det0] = curved_map(map, 1.0, 0.0, 0.0);
    CHECK((p0 - a0).norm() == 0.0);
    CHECK(det0 > 0.0);
    const auto [p1, det1] = curved_map(map, 0.0, 1.0, 0.0);
    CHECK((p1 - a1).norm() == 0.0);
    CHECK(det1 > 0.0);

    // interior edge a0-a1 (l2 = 0): exact identity
    for (double s : {0.25, 0.5, 0.9}) {
        const auto [p, det] = curved_map(map, 1.0 - s, s, 0.0);
        const Vec2 straight = a0 * (1.0 - s) + a1 * s;
        CHECK((p - straight).norm() == 0.0);
        CHECK(det > 0.0);
    }
    // boundary edge (l0 = 0) maps onto the arc
    for (double s : {0.1, 0.5, 0.77}) {
        const auto [p, det] = curved_map(map, 0.0, 1.0 - s, s);
        CHECK(std::abs(p.norm() - 1.0) < 1e-14);
        CHECK(det > 0.0);
    }
}

TEST_CASE("curved_map jacobian matches central finite differences") {
    const auto curve = BoundaryCurve::unit_circle();
    const Mesh2D mesh = refine(seed_disc_mesh(6), curve);
    REQUIRE(mesh.n_boundary_edges() > 3);
    const auto map = boundary_map_of(mesh, 3, curve);

    const double fd = 1e-6;
    for (const auto& q : quad::tri_degree4) {
        const Mat2 jac = map.jacobian(q.l1, q.l2);
        auto at = [&](double l1, double l2) { return map.point(1.0 - l1 - l2, l1, l2); };
        const Vec2 dxi = (at(q.l1 + fd, q.l2) - at(q.l1 - fd, q.l2)) / (2 * fd);
        const Vec2 deta = (at(q.l1, q.l2 + fd) - at(q.l1, q.l2 - fd)) / (2 * fd);
        const double det_fd = dxi.x * deta.y - dxi.y * deta.x;
        CHECK(jac.det() == doctest::Approx(det_fd).epsilon(1e-6));
        CHECK(jac.a == doctest::Approx(dxi.x).epsilon(1e-6));
        CHECK(jac.c == doctest::Approx(dxi.y).epsilon(1e-6));
        CHECK(jac.b == doctest::Approx(deta.x).epsilon(1e-6));
        CHECK(jac.d == doctest::Approx(deta.y).epsilon(1e-6));
    }
}

TEST_CASE("curved_map stays inside the closed unit disc") {
    const auto curve = BoundaryCurve::unit_circle();
    Mesh2D mesh = seed_disc_mesh(6);
    mesh = refine(mesh, curve);
    oracle::Rng rng(99);
    for (int e = 0; e < mesh.n_boundary_edges(); ++e) {
        const auto map = boundary_map_of(mesh, e, curve);
        for (int trial = 0; trial < 100; ++trial) {
            double l1 = rng.uniform(0.0, 1.0), l2 = rng.uniform(0.0, 1.0);
            if (l1 + l2 > 1.0) {
                l1 = 1.0 - l1;
                l2 = 1.0 - l2;
            }
            const auto [p, det] = curved_map(map, 1.0 - l1 - l2, l1, l2);
            CHECK(p.norm() <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("curved element areas plus interior areas converge to pi") {
    // recorded on first build; see the tighter margin below
    const auto curve = BoundaryCurve::unit_circle();
    Mesh2D mesh = seed_disc_mesh(6);
    for (int l = 0; l < 3; ++l) mesh = refine(mesh, curve);

    std::vector<bool> curved(mesh.n_triangles(), false);
    double total = 0.0;
    for (int e = 0; e < mesh.n_boundary_edges(); ++e) {
        curved[mesh.boundary_edges[e].tri] = true;
        const auto map = boundary_map_of(mesh, e, curve);
        double area = 0.0;
        for (const auto& q : quad::tri_degree4)
            area += q.w * 0.5 * map.jacobian(q.l1, q.l2).det();
        total += area;
    }
    for (int t = 0; t < mesh.n_triangles(); ++t)
        if (!curved[t]) total += mesh.signed_area(t);
    CHECK(std::abs(total - std::numbers::pi) < 5e-3);
}

TEST_CASE("degenerate curved triangle is rejected") {
    const auto curve = BoundaryCurve::unit_circle();
    const Vec2 a1{1.0, 0.0};
    const Vec2 a2{std::cos(0.5), std::sin(0.5)};
    // apex outside: negative orientation
    CHECK_THROWS_AS(CurvedTriangleMap((a1 + a2) * 0.7, a1, a2, &curve), DegenerateElement);
}

TEST_CASE("outward_normal: symmetry example and normalization") {
    const Vec2 p{1.0, 0.0}, q{0.0, 1.0};
    const Vec2 n = outward_normal(p, q, {0.0, 0.0});
    CHECK(n.x == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(n.y == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(outward_normal(p, p, {0.0, 0.0}), ZeroLengthEdge);
}

TEST_CASE("outward_normal: centroid half-plane oracle on the seed fan") {
    const Mesh2D mesh = seed_disc_mesh(6);
    for (const auto& be : mesh.boundary_edges) {
        const Vec2 pa = mesh.vertices[be.a], pb = mesh.vertices[be.b];
        const Vec2 c = mesh.centroid(be.tri);
        const Vec2 n = outward_normal(pa, pb, c);
        CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-14));
        const Vec2 mid = (pa + pb) * 0.5;
        CHECK(n.dot(mid - c) > 0.0);
        // all boundary normals of the disc point away from the origin
        CHECK(n.dot(mid) > 0.0);
    }
}
