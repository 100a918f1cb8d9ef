#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bswave/core.hpp"
#include "bswave/geometry.hpp"

namespace bswave {

/// Conforming triangulation of the polygonal disc approximation. Boundary
/// vertices lie exactly on the curve; triangles are counter-clockwise and
/// carry at most one boundary edge each.
struct Mesh2D {
    struct BoundaryEdge {
        int a = -1, b = -1; // vertex indices, oriented CCW along the boundary
        int tri = -1;       // owning triangle
    };

    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;
    std::vector<bool> is_boundary;
    double h = 0.0; // maximal element diameter

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    int n_boundary_edges() const { return static_cast<int>(boundary_edges.size()); }

    double signed_area(int t) const {
        const auto& tri = triangles[t];
        const Vec2 u = vertices[tri[1]] - vertices[tri[0]];
        const Vec2 v = vertices[tri[2]] - vertices[tri[0]];
        return 0.5 * u.cross(v);
    }

    Vec2 centroid(int t) const {
        const auto& tri = triangles[t];
        return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
    }

    /// Sum of triangle areas = |Omega_h|.
    double polygon_area() const {
        double a = 0.0;
        for (int t = 0; t < n_triangles(); ++t) a += signed_area(t);
        return a;
    }

    /// Total boundary length = |Gamma_h|.
    double boundary_length() const {
        double l = 0.0;
        for (const auto& e : boundary_edges) l += (vertices[e.b] - vertices[e.a]).norm();
        return l;
    }

    double min_angle() const {
        double amin = std::numbers::pi;
        for (const auto& tri : triangles) {
            for (int i = 0; i < 3; ++i) {
                const Vec2 u = vertices[tri[(i + 1) % 3]] - vertices[tri[i]];
                const Vec2 v = vertices[tri[(i + 2) % 3]] - vertices[tri[i]];
                const double ang = std::atan2(std::abs(u.cross(v)), u.dot(v));
                amin = std::min(amin, ang);
            }
        }
        return amin;
    }
};

/// Max edge length over all triangles.
inline double mesh_width(const Mesh2D& mesh) {
    if (mesh.triangles.empty()) throw InvalidArgument("mesh_width on empty mesh");
    double h = 0.0;
    for (const auto& tri : mesh.triangles) {
        for (int i = 0; i < 3; ++i) {
            const double len = (mesh.vertices[tri[(i + 1) % 3]] - mesh.vertices[tri[i]]).norm();
            h = std::max(h, len);
        }
    }
    return h;
}

/// Fan of n triangles around the origin with boundary vertices at angles
/// 2 pi k / n on the unit circle.
inline Mesh2D seed_disc_mesh(int n) {
    if (n < 4) throw InvalidArgument("seed_disc_mesh requires n >= 4, got " + std::to_string(n));
    Mesh2D mesh;
    mesh.vertices.push_back({0.0, 0.0});
    mesh.is_boundary.push_back(false);
    for (int k = 0; k < n; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / n;
        mesh.vertices.push_back({std::cos(theta), std::sin(theta)});
        mesh.is_boundary.push_back(true);
    }
    for (int k = 0; k < n; ++k) {
        const int a = 1 + k, b = 1 + (k + 1) % n;
        mesh.triangles.push_back({0, a, b});
        mesh.boundary_edges.push_back({a, b, k});
    }
    mesh.h = mesh_width(mesh);
    return mesh;
}

/// Uniform 1->4 midpoint refinement. Midpoints of boundary edges are
/// projected onto the curve; coarse vertex indices are preserved as a prefix
/// of the fine vertex list.
inline Mesh2D refine(const Mesh2D& mesh, const BoundaryCurve& curve) {
    Mesh2D fine;
    fine.vertices = mesh.vertices;
    fine.is_boundary = mesh.is_boundary;

    std::map<std::pair<int, int>, bool> boundary_edge_set;
    for (const auto& e : mesh.boundary_edges)
        boundary_edge_set[{std::min(e.a, e.b), std::max(e.a, e.b)}] = true;

    std::map<std::pair<int, int>, int> midpoint;
    auto midpoint_of = [&](int a, int b) {
        const auto key = std::make_pair(std::min(a, b), std::max(a, b));
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        Vec2 m = (mesh.vertices[a] + mesh.vertices[b]) * 0.5;
        const bool on_boundary = boundary_edge_set.count(key) > 0;
        if (on_boundary) m = project_to_boundary(m, curve);
        const int idx = fine.n_vertices();
        fine.vertices.push_back(m);
        fine.is_boundary.push_back(on_boundary);
        midpoint.emplace(key, idx);
        return idx;
    };

    for (const auto& tri : mesh.triangles) {
        const int i = tri[0], j = tri[1], k = tri[2];
        const int mij = midpoint_of(i, j);
        const int mjk = midpoint_of(j, k);
        const int mki = midpoint_of(k, i);
        fine.triangles.push_back({i, mij, mki});
        fine.triangles.push_back({j, mjk, mij});
        fine.triangles.push_back({k, mki, mjk});
        fine.triangles.push_back({mij, mjk, mki});
    }

    // Rebuild boundary edges from the fine triangles: an edge owned by
    // exactly one triangle is a boundary edge, oriented as in its owner.
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& tri : fine.triangles) {
        for (int e = 0; e < 3; ++e) {
            const int a = tri[e], b = tri[(e + 1) % 3];
            edge_count[{std::min(a, b), std::max(a, b)}]++;
        }
    }
    for (int t = 0; t < fine.n_triangles(); ++t) {
        const auto& tri = fine.triangles[t];
        for (int e = 0; e < 3; ++e) {
            const int a = tri[e], b = tri[(e + 1) % 3];
            if (edge_count[{std::min(a, b), std::max(a, b)}] == 1)
                fine.boundary_edges.push_back({a, b, t});
        }
    }
    fine.h = mesh_width(fine);
    return fine;
}

/// Check all Mesh2D invariants; returns human-readable violations.
inline std::vector<std::string> validate(const Mesh2D& mesh,
                                         const BoundaryCurve* curve = nullptr) {
    std::vector<std::string> issues;
    auto report = [&](const std::string& s) { issues.push_back(s); };

    for (int t = 0; t < mesh.n_triangles(); ++t) {
        if (!(mesh.signed_area(t) > 0.0))
            report("triangle " + std::to_string(t) + " has non-positive area " +
                   std::to_string(mesh.signed_area(t)));
    }

    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& tri : mesh.triangles)
        for (int e = 0; e < 3; ++e) {
            const int a = tri[e], b = tri[(e + 1) % 3];
            edge_count[{std::min(a, b), std::max(a, b)}]++;
        }
    std::map<std::pair<int, int>, bool> listed;
    for (const auto& be : mesh.boundary_edges)
        listed[{std::min(be.a, be.b), std::max(be.a, be.b)}] = true;
    for (const auto& [key, cnt] : edge_count) {
        if (cnt > 2)
            report("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                   ") shared by " + std::to_string(cnt) + " triangles");
        if (cnt == 1 && !listed.count(key))
            report("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                   ") is on the boundary but not listed");
        if (cnt == 2 && listed.count(key))
            report("interior edge (" + std::to_string(key.first) + "," +
                   std::to_string(key.second) + ") listed as boundary");
    }

    std::vector<int> bdry_edges_per_tri(mesh.n_triangles(), 0);
    for (const auto& be : mesh.boundary_edges) {
        if (be.tri < 0 || be.tri >= mesh.n_triangles()) {
            report("boundary edge references invalid triangle " + std::to_string(be.tri));
            continue;
        }
        bdry_edges_per_tri[be.tri]++;
    }
    for (int t = 0; t < mesh.n_triangles(); ++t)
        if (bdry_edges_per_tri[t] > 1)
            report("triangle " + std::to_string(t) + " has " +
                   std::to_string(bdry_edges_per_tri[t]) + " boundary edges");

    for (int v = 0; v < mesh.n_vertices(); ++v) {
        if (!mesh.is_boundary[v]) continue;
        double dist;
        if (curve) {
            dist = (mesh.vertices[v] - project_to_boundary(mesh.vertices[v], *curve)).norm();
        } else {
            dist = std::abs(mesh.vertices[v].norm() - 1.0);
        }
        if (dist > 1e-12)
            report("boundary vertex " + std::to_string(v) + " off the curve by " +
                   std::to_string(dist));
    }

    for (const auto& be : mesh.boundary_edges) {
        if (!mesh.is_boundary[be.a] || !mesh.is_boundary[be.b])
            report("boundary edge (" + std::to_string(be.a) + "," + std::to_string(be.b) +
                   ") has an unflagged endpoint");
    }
    return issues;
}

/// Nested mesh family; level l+1 refines level l and preserves coarse vertex
/// indices as a prefix.
struct RefinementHierarchy {
    std::vector<Mesh2D> levels;
    /// vertex_injection[l][i] is the index in level l+1 of coarse vertex i.
    std::vector<std::vector<int>> vertex_injection;

    const Mesh2D& level(int l) const { return levels.at(l); }
    int n_levels() const { return static_cast<int>(levels.size()); }
};

inline RefinementHierarchy build_hierarchy(int seed_n, int n_levels, const BoundaryCurve& curve) {
    if (n_levels < 1) throw InvalidArgument("hierarchy needs at least one level");
    RefinementHierarchy hier;
    hier.levels.push_back(seed_disc_mesh(seed_n));
    for (int l = 1; l < n_levels; ++l) {
        hier.levels.push_back(refine(hier.levels.back(), curve));
        std::vector<int> inj(hier.levels[l - 1].n_vertices());
        for (int i = 0; i < static_cast<int>(inj.size()); ++i) inj[i] = i;
        hier.vertex_injection.push_back(std::move(inj));
    }
    return hier;
}

// ---------------------------------------------------------------------------
// Plain text mesh exchange format:
//   line 1: nv nt nb
//   nv lines: x y is_boundary
//   nt lines: i j k          (0-based, CCW)
//   nb lines: i j tri        (boundary edges)
// ---------------------------------------------------------------------------

inline void write_mesh(const Mesh2D& mesh, std::ostream& out) {
    char buf[128];
    out << mesh.n_vertices() << ' ' << mesh.n_triangles() << ' ' << mesh.n_boundary_edges()
        << '\n';
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %d\n", mesh.vertices[v].x,
                      mesh.vertices[v].y, mesh.is_boundary[v] ? 1 : 0);
        out << buf;
    }
    for (const auto& tri : mesh.triangles)
        out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
    for (const auto& be : mesh.boundary_edges)
        out << be.a << ' ' << be.b << ' ' << be.tri << '\n';
}

inline void write_mesh_file(const Mesh2D& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_mesh(mesh, out);
}

inline Mesh2D read_mesh(std::istream& in) {
    Mesh2D mesh;
    int nv = 0, nt = 0, nb = 0;
    if (!(in >> nv >> nt >> nb)) throw IoError("mesh header unreadable");
    mesh.vertices.resize(nv);
    mesh.is_boundary.resize(nv);
    for (int v = 0; v < nv; ++v) {
        int flag = 0;
        if (!(in >> mesh.vertices[v].x >> mesh.vertices[v].y >> flag))
            throw IoError("mesh vertex line " + std::to_string(v) + " unreadable");
        mesh.is_boundary[v] = flag != 0;
    }
    mesh.triangles.resize(nt);
    for (int t = 0; t < nt; ++t)
        if (!(in >> mesh.triangles[t][0] >> mesh.triangles[t][1] >> mesh.triangles[t][2]))
            throw IoError("mesh triangle line " + std::to_string(t) + " unreadable");
    mesh.boundary_edges.resize(nb);
    for (int b = 0; b < nb; ++b)
        if (!(in >> mesh.boundary_edges[b].a >> mesh.boundary_edges[b].b >>
              mesh.boundary_edges[b].tri))
            throw IoError("mesh boundary edge line " + std::to_string(b) + " unreadable");
    mesh.h = mesh_width(mesh);
    return mesh;
}

inline Mesh2D read_mesh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_mesh(in);
}

} // namespace bswave
