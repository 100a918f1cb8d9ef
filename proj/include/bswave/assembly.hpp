#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "bswave/core.hpp"
#include "bswave/geometry.hpp"
#include "bswave/linalg.hpp"
#include "bswave/mesh.hpp"
#include "bswave/quadrature.hpp"

namespace bswave {

enum class Variant { PureSecondOrder, Advective, StrongDamping, Acoustic };

inline std::string variant_name(Variant v) {
    switch (v) {
        case Variant::PureSecondOrder: return "pure-second-order";
        case Variant::Advective: return "advective";
        case Variant::StrongDamping: return "strong-damping";
        case Variant::Acoustic: return "acoustic";
    }
    return "?";
}

using ScalarField = std::function<double(const Vec2&)>;
using TimeScalarField = std::function<double(const Vec2&, double)>;
using VectorField = std::function<Vec2(const Vec2&)>;

/// Variant tag plus every coefficient, field, source and initial-data
/// callable needed by one of the four problems.
struct ProblemSpec {
    Variant variant = Variant::PureSecondOrder;

    // trace-coupled problems (pure / advective / strongly damped)
    double mu = 1.0;    // boundary inertia weight, > 0
    double beta = 0.0;  // surface diffusion, >= 0
    double kappa = 0.0; // boundary reaction, >= 0

    // advective
    double alpha_bulk = 0.0, alpha_surf = 0.0;
    VectorField v_bulk, v_surf;

    // strong damping
    double d_bulk = 0.0, d_surf = 0.0;

    // acoustic
    double c_bulk = 1.0, c_surf = 1.0, mu_surf = 1.0, a_bulk = 1.0, k_surf = 1.0;

    // sources (null means zero)
    TimeScalarField f_bulk, f_surf;

    // initial data
    ScalarField u0, u1;
    ScalarField delta0, delta1; // acoustic only
};

inline void validate_spec(const ProblemSpec& spec) {
    switch (spec.variant) {
        case Variant::PureSecondOrder:
        case Variant::Advective:
        case Variant::StrongDamping:
            if (!(spec.mu > 0.0)) throw InvalidArgument("mu must be positive");
            if (spec.beta < 0.0) throw InvalidArgument("beta must be non-negative");
            if (spec.kappa < 0.0) throw InvalidArgument("kappa must be non-negative");
            break;
        case Variant::Acoustic:
            if (!(spec.c_bulk > 0.0 && spec.c_surf > 0.0 && spec.mu_surf > 0.0 &&
                  spec.a_bulk > 0.0 && spec.k_surf > 0.0))
                throw InvalidArgument("acoustic coefficients must be positive");
            break;
    }
    if (spec.variant == Variant::Advective) {
        if (spec.alpha_bulk < 0.0 || spec.alpha_surf < 0.0)
            throw InvalidArgument("advective alpha coefficients must be non-negative");
        if (!spec.v_bulk || !spec.v_surf)
            throw MissingField("advective variant requires v_bulk and v_surf fields");
    }
    if (spec.variant == Variant::StrongDamping) {
        if (!(spec.d_bulk > 0.0 && spec.d_surf > 0.0))
            throw InvalidArgument("damping coefficients must be positive");
        if (!(spec.beta > 0.0))
            throw InvalidArgument("strong damping requires beta > 0");
    }
}

enum class DofLayout { TraceCoupled, AcousticBlock };

/// Dof numbering. TraceCoupled uses one dof per vertex. AcousticBlock puts
/// all bulk dofs first, then one displacement dof per boundary vertex in
/// increasing vertex order.
struct DofMap {
    DofLayout layout = DofLayout::TraceCoupled;
    int n_vertices = 0;
    std::vector<int> boundary_vertex_order;
    std::vector<int> delta_dof_of_vertex; // -1 for interior vertices

    static DofMap build(const Mesh2D& mesh, DofLayout layout) {
        DofMap d;
        d.layout = layout;
        d.n_vertices = mesh.n_vertices();
        d.delta_dof_of_vertex.assign(mesh.n_vertices(), -1);
        for (int v = 0; v < mesh.n_vertices(); ++v)
            if (mesh.is_boundary[v]) d.boundary_vertex_order.push_back(v);
        if (layout == DofLayout::AcousticBlock) {
            for (size_t i = 0; i < d.boundary_vertex_order.size(); ++i)
                d.delta_dof_of_vertex[d.boundary_vertex_order[i]] =
                    d.n_vertices + static_cast<int>(i);
        }
        return d;
    }

    int n_boundary() const { return static_cast<int>(boundary_vertex_order.size()); }
    int size() const {
        return layout == DofLayout::TraceCoupled ? n_vertices : n_vertices + n_boundary();
    }
    int delta_offset() const { return n_vertices; }
};

inline DofLayout layout_for(Variant v) {
    return v == Variant::Acoustic ? DofLayout::AcousticBlock : DofLayout::TraceCoupled;
}

// ---------------------------------------------------------------------------
// Local element matrices (closed forms, exact for P1).
// ---------------------------------------------------------------------------

namespace detail {

inline std::array<Vec2, 3> p1_gradients(const Vec2& p0, const Vec2& p1, const Vec2& p2,
                                        double area2) {
    auto perp = [](const Vec2& v) { return Vec2{-v.y, v.x}; };
    return {perp(p2 - p1) / area2, perp(p0 - p2) / area2, perp(p1 - p0) / area2};
}

struct TriGeom {
    std::array<int, 3> v;
    std::array<Vec2, 3> p;
    std::array<Vec2, 3> grad;
    double area;
};

inline TriGeom tri_geom(const Mesh2D& mesh, int t) {
    TriGeom g;
    g.v = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) g.p[i] = mesh.vertices[g.v[i]];
    const double area2 = (g.p[1] - g.p[0]).cross(g.p[2] - g.p[0]);
    if (!(area2 > 0.0))
        throw DegenerateElement("triangle " + std::to_string(t) + " has area " +
                                std::to_string(0.5 * area2));
    g.area = 0.5 * area2;
    g.grad = p1_gradients(g.p[0], g.p[1], g.p[2], area2);
    return g;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Part matrices: plain bulk/surface mass and stiffness, embedded into the
// full dof numbering. Every composed operator is a weighted sum of these.
// ---------------------------------------------------------------------------

struct OperatorParts {
    SparseMatrix mass_bulk;   // \int_Omega_h w v
    SparseMatrix mass_surf;   // \int_Gamma_h w v      (at trace / delta dofs)
    SparseMatrix stiff_bulk;  // \int_Omega_h grad w . grad v
    SparseMatrix stiff_surf;  // \int_Gamma_h (d w/ds)(d v/ds)
};

inline OperatorParts assemble_parts(const Mesh2D& mesh, const DofMap& dofmap) {
    const int n = dofmap.size();
    std::vector<SparseMatrix::Triplet> tm, ts;
    tm.reserve(9 * mesh.n_triangles());
    ts.reserve(9 * mesh.n_triangles());
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto g = detail::tri_geom(mesh, t);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                tm.push_back({g.v[i], g.v[j], g.area / 12.0 * (i == j ? 2.0 : 1.0)});
                ts.push_back({g.v[i], g.v[j], g.area * g.grad[i].dot(g.grad[j])});
            }
    }
    // Surface dofs: the trace dof is the vertex itself for TraceCoupled and
    // the delta dof for AcousticBlock.
    auto surf_dof = [&](int vertex) {
        return dofmap.layout == DofLayout::TraceCoupled ? vertex
                                                        : dofmap.delta_dof_of_vertex[vertex];
    };
    std::vector<SparseMatrix::Triplet> em, es;
    for (const auto& be : mesh.boundary_edges) {
        const double len = (mesh.vertices[be.b] - mesh.vertices[be.a]).norm();
        if (!(len > 0.0)) throw ZeroLengthEdge("boundary edge has zero length");
        const int d[2] = {surf_dof(be.a), surf_dof(be.b)};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                em.push_back({d[i], d[j], len / 6.0 * (i == j ? 2.0 : 1.0)});
                es.push_back({d[i], d[j], (i == j ? 1.0 : -1.0) / len});
            }
    }
    OperatorParts parts;
    parts.mass_bulk = SparseMatrix::from_triplets(n, std::move(tm));
    parts.stiff_bulk = SparseMatrix::from_triplets(n, std::move(ts));
    parts.mass_surf = SparseMatrix::from_triplets(n, std::move(em));
    parts.stiff_surf = SparseMatrix::from_triplets(n, std::move(es));
    return parts;
}

// ---------------------------------------------------------------------------
// Operations: M, A, B and the load vector.
// ---------------------------------------------------------------------------

inline SparseMatrix assemble_mass(const Mesh2D& mesh, const ProblemSpec& spec,
                                  const DofMap& dofmap) {
    const OperatorParts parts = assemble_parts(mesh, dofmap);
    const double w = spec.variant == Variant::Acoustic ? spec.mu_surf : spec.mu;
    return SparseMatrix::combine({{1.0, &parts.mass_bulk}, {w, &parts.mass_surf}});
}

inline SparseMatrix assemble_stiffness(const Mesh2D& mesh, const ProblemSpec& spec,
                                       const DofMap& dofmap) {
    const OperatorParts parts = assemble_parts(mesh, dofmap);
    if (spec.variant == Variant::Acoustic)
        return SparseMatrix::combine({{spec.a_bulk, &parts.mass_bulk},
                                      {spec.c_bulk, &parts.stiff_bulk},
                                      {spec.k_surf, &parts.mass_surf},
                                      {spec.c_surf, &parts.stiff_surf}});
    return SparseMatrix::combine({{1.0, &parts.stiff_bulk},
                                  {spec.beta, &parts.stiff_surf},
                                  {spec.kappa, &parts.mass_surf}});
}

namespace detail {

/// Advective form: \int (alpha w + Iv . grad w) v over triangles plus the
/// surface analogue over boundary edges. Vector fields are nodally
/// interpolated, quadrature is degree 2 (edge midpoints / 2-point Gauss).
inline SparseMatrix assemble_advective(const Mesh2D& mesh, const ProblemSpec& spec,
                                       const DofMap& dofmap) {
    std::vector<SparseMatrix::Triplet> tb;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto g = tri_geom(mesh, t);
        std::array<Vec2, 3> vnod;
        for (int i = 0; i < 3; ++i) vnod[i] = spec.v_bulk(g.p[i]);
        for (const auto& q : quad::tri_degree2) {
            const double lam[3] = {q.l0, q.l1, q.l2};
            const Vec2 vq = lam[0] * vnod[0] + lam[1] * vnod[1] + lam[2] * vnod[2];
            for (int k = 0; k < 3; ++k)
                for (int j = 0; j < 3; ++j) {
                    const double val = q.w * g.area * lam[k] *
                                       (spec.alpha_bulk * lam[j] + vq.dot(g.grad[j]));
                    tb.push_back({g.v[k], g.v[j], val});
                }
        }
    }
    for (const auto& be : mesh.boundary_edges) {
        const Vec2 pa = mesh.vertices[be.a], pb = mesh.vertices[be.b];
        const double len = (pb - pa).norm();
        const Vec2 tang = (pb - pa) / len;
        const Vec2 vnod[2] = {spec.v_surf(pa), spec.v_surf(pb)};
        const int idx[2] = {be.a, be.b};
        const double dphi[2] = {-1.0 / len, 1.0 / len};
        for (const auto& q : quad::line_gauss2) {
            const double phi[2] = {1.0 - q.s, q.s};
            const Vec2 vq = phi[0] * vnod[0] + phi[1] * vnod[1];
            const double vt = vq.dot(tang);
            for (int k = 0; k < 2; ++k)
                for (int j = 0; j < 2; ++j) {
                    const double val =
                        q.w * len * phi[k] * (spec.alpha_surf * phi[j] + vt * dphi[j]);
                    tb.push_back({idx[k], idx[j], val});
                }
        }
    }
    return SparseMatrix::from_triplets(dofmap.size(), std::move(tb));
}

inline SparseMatrix assemble_acoustic_coupling(const Mesh2D& mesh, const ProblemSpec& spec,
                                               const DofMap& dofmap) {
    std::vector<SparseMatrix::Triplet> tb;
    for (const auto& be : mesh.boundary_edges) {
        const double len = (mesh.vertices[be.b] - mesh.vertices[be.a]).norm();
        const int u[2] = {be.a, be.b};
        const int d[2] = {dofmap.delta_dof_of_vertex[be.a], dofmap.delta_dof_of_vertex[be.b]};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const double e = spec.c_bulk * len / 6.0 * (i == j ? 2.0 : 1.0);
                tb.push_back({d[i], u[j], e});  //  c  \int (gamma w) psi
                tb.push_back({u[i], d[j], -e}); // -c  \int omega (gamma v)
            }
    }
    return SparseMatrix::from_triplets(dofmap.size(), std::move(tb));
}

} // namespace detail

inline SparseMatrix assemble_velocity_form(const Mesh2D& mesh, const ProblemSpec& spec,
                                           const DofMap& dofmap) {
    switch (spec.variant) {
        case Variant::PureSecondOrder:
            return SparseMatrix(dofmap.size());
        case Variant::Advective:
            if (!spec.v_bulk || !spec.v_surf)
                throw MissingField("advective variant requires v_bulk and v_surf");
            return detail::assemble_advective(mesh, spec, dofmap);
        case Variant::StrongDamping: {
            const OperatorParts parts = assemble_parts(mesh, dofmap);
            return SparseMatrix::combine(
                {{spec.d_bulk, &parts.stiff_bulk}, {spec.d_surf, &parts.stiff_surf}});
        }
        case Variant::Acoustic:
            return detail::assemble_acoustic_coupling(mesh, spec, dofmap);
    }
    throw InvalidArgument("unknown variant");
}

/// Nodal interpolation into the dof vector. For the acoustic layout the
/// surface function fills the delta dofs; otherwise it is ignored.
inline Vector interpolate(const Mesh2D& mesh, const DofMap& dofmap, const ScalarField& f_bulk,
                          const ScalarField& f_surf = nullptr) {
    Vector u(dofmap.size(), 0.0);
    if (f_bulk)
        for (int v = 0; v < mesh.n_vertices(); ++v) u[v] = f_bulk(mesh.vertices[v]);
    if (dofmap.layout == DofLayout::AcousticBlock && f_surf)
        for (int v : dofmap.boundary_vertex_order)
            u[dofmap.delta_dof_of_vertex[v]] = f_surf(mesh.vertices[v]);
    return u;
}

/// Load vector at time t, the PDE duality convention (no mu factor on the
/// surface term): l_k = \int f_bulk phi_k + \int_Gamma f_surf phi_k with the
/// degree-2 rules. The edge-midpoint triangle rule never evaluates the
/// source at a vertex, which keeps sources with isolated vertex
/// singularities (the manufactured acoustic f_bulk at the origin) integrable.
inline Vector assemble_load(const Mesh2D& mesh, const ProblemSpec& spec, const DofMap& dofmap,
                            double t) {
    Vector load(dofmap.size(), 0.0);
    if (spec.f_bulk) {
        for (int tr = 0; tr < mesh.n_triangles(); ++tr) {
            const auto g = detail::tri_geom(mesh, tr);
            for (const auto& q : quad::tri_degree2) {
                const double lam[3] = {q.l0, q.l1, q.l2};
                const Vec2 x = lam[0] * g.p[0] + lam[1] * g.p[1] + lam[2] * g.p[2];
                const double f = spec.f_bulk(x, t);
                for (int i = 0; i < 3; ++i) load[g.v[i]] += q.w * g.area * f * lam[i];
            }
        }
    }
    if (spec.f_surf) {
        auto surf_dof = [&](int vertex) {
            return dofmap.layout == DofLayout::TraceCoupled ? vertex
                                                            : dofmap.delta_dof_of_vertex[vertex];
        };
        for (const auto& be : mesh.boundary_edges) {
            const Vec2 pa = mesh.vertices[be.a], pb = mesh.vertices[be.b];
            const double len = (pb - pa).norm();
            const int d[2] = {surf_dof(be.a), surf_dof(be.b)};
            for (const auto& q : quad::line_gauss2) {
                const Vec2 x = pa + q.s * (pb - pa);
                const double f = spec.f_surf(x, t);
                const double phi[2] = {1.0 - q.s, q.s};
                for (int i = 0; i < 2; ++i) load[d[i]] += q.w * len * f * phi[i];
            }
        }
    }
    return load;
}

// ---------------------------------------------------------------------------
// AssembledOperators: composed matrices plus a reusable load evaluator and
// the quasi-monotonicity shift diagnostic.
// ---------------------------------------------------------------------------

struct AssembledOperators {
    DofMap dofmap;
    OperatorParts parts;
    SparseMatrix M, A, B;
    std::function<Vector(double)> load;
    double rho_qm = 0.0;

    /// Surface inertia weight used by the combined L2 norm.
    double mass_surface_weight = 1.0;
};

namespace detail {

/// Estimate max(0, -lambda_min(sym(B))) with a fixed-iteration power method.
inline double quasi_monotonicity_shift(const SparseMatrix& b) {
    if (b.nnz() == 0) return 0.0;
    const int n = b.size();
    const SparseMatrix bt = b.transpose();
    const SparseMatrix s = SparseMatrix::combine({{0.5, &b}, {0.5, &bt}});
    auto normalize = [](Vector& v) {
        const double nv = norm2(v);
        if (nv > 0.0)
            for (double& x : v) x /= nv;
    };
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = 1.0 + static_cast<double>(i % 7) / 7.0;
    normalize(x);
    double sigma = 0.0;
    for (int it = 0; it < 40; ++it) {
        Vector y = s.apply(x);
        sigma = std::abs(dot(x, y));
        normalize(y);
        x = y;
    }
    // shift so the most negative eigenvalue becomes dominant
    for (int i = 0; i < n; ++i) x[i] = 1.0 + static_cast<double>(i % 5) / 5.0;
    normalize(x);
    double nu = 0.0;
    for (int it = 0; it < 60; ++it) {
        Vector y = s.apply(x);
        for (int i = 0; i < n; ++i) y[i] = sigma * x[i] - y[i];
        nu = dot(x, y);
        normalize(y);
        x = y;
    }
    const double lambda_min = sigma - nu;
    return std::max(0.0, -lambda_min);
}

} // namespace detail

inline AssembledOperators assemble_operators(const Mesh2D& mesh, const ProblemSpec& spec) {
    validate_spec(spec);
    AssembledOperators ops;
    ops.dofmap = DofMap::build(mesh, layout_for(spec.variant));
    ops.parts = assemble_parts(mesh, ops.dofmap);
    const OperatorParts& p = ops.parts;
    if (spec.variant == Variant::Acoustic) {
        ops.M = SparseMatrix::combine({{1.0, &p.mass_bulk}, {spec.mu_surf, &p.mass_surf}});
        ops.A = SparseMatrix::combine({{spec.a_bulk, &p.mass_bulk},
                                       {spec.c_bulk, &p.stiff_bulk},
                                       {spec.k_surf, &p.mass_surf},
                                       {spec.c_surf, &p.stiff_surf}});
        ops.mass_surface_weight = spec.mu_surf;
    } else {
        ops.M = SparseMatrix::combine({{1.0, &p.mass_bulk}, {spec.mu, &p.mass_surf}});
        ops.A = SparseMatrix::combine({{1.0, &p.stiff_bulk},
                                       {spec.beta, &p.stiff_surf},
                                       {spec.kappa, &p.mass_surf}});
        ops.mass_surface_weight = spec.mu;
    }
    ops.B = assemble_velocity_form(mesh, spec, ops.dofmap);
    ops.rho_qm = detail::quasi_monotonicity_shift(ops.B);

    const DofMap dofmap = ops.dofmap;
    const Mesh2D mesh_copy = mesh; // captured by value: the load outlives callers
    const ProblemSpec spec_copy = spec;
    ops.load = [dofmap, mesh_copy, spec_copy](double t) {
        return assemble_load(mesh_copy, spec_copy, dofmap, t);
    };
    return ops;
}

/// Sampled check of the monotonicity condition for advective problems.
/// Violations are reported as warnings; the bulk-advection benchmark itself
/// violates the condition on part of the boundary.
inline std::vector<std::string> check_monotonicity(const Mesh2D& mesh, const ProblemSpec& spec,
                                                   double eps = 1e-10) {
    std::vector<std::string> warnings;
    if (spec.variant != Variant::Advective) return warnings;
    const double fd = 1e-6;
    auto div_bulk = [&](const Vec2& x) {
        const Vec2 dx{fd, 0.0}, dy{0.0, fd};
        return (spec.v_bulk(x + dx).x - spec.v_bulk(x - dx).x) / (2 * fd) +
               (spec.v_bulk(x + dy).y - spec.v_bulk(x - dy).y) / (2 * fd);
    };
    int bulk_bad = 0, surf_bad = 0;
    double bulk_worst = 0.0, surf_worst = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto g = detail::tri_geom(mesh, t);
        for (const auto& q : quad::tri_degree2) {
            const Vec2 x = q.l0 * g.p[0] + q.l1 * g.p[1] + q.l2 * g.p[2];
            const double val = spec.alpha_bulk - 0.5 * div_bulk(x);
            if (val < -eps) {
                ++bulk_bad;
                bulk_worst = std::min(bulk_worst, val);
            }
        }
    }
    for (const auto& be : mesh.boundary_edges) {
        const Vec2 pa = mesh.vertices[be.a], pb = mesh.vertices[be.b];
        const Vec2 tang = (pb - pa) / (pb - pa).norm();
        const Vec2 nu = outward_normal(pa, pb, mesh.centroid(be.tri));
        for (const auto& q : quad::line_gauss2) {
            const Vec2 x = pa + q.s * (pb - pa);
            const Vec2 dv = (spec.v_surf(x + tang * fd) - spec.v_surf(x - tang * fd)) / (2 * fd);
            const double div_surf = dv.dot(tang);
            const double val =
                spec.alpha_surf + 0.5 * (spec.v_bulk(x).dot(nu) - div_surf);
            if (val < -eps) {
                ++surf_bad;
                surf_worst = std::min(surf_worst, val);
            }
        }
    }
    if (bulk_bad > 0)
        warnings.push_back("monotonicity violated at " + std::to_string(bulk_bad) +
                           " bulk quadrature points (worst " + std::to_string(bulk_worst) + ")");
    if (surf_bad > 0)
        warnings.push_back("monotonicity violated at " + std::to_string(surf_bad) +
                           " surface quadrature points (worst " + std::to_string(surf_worst) +
                           ")");
    return warnings;
}

} // namespace bswave
