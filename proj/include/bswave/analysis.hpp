#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bswave/assembly.hpp"
#include "bswave/core.hpp"
#include "bswave/geometry.hpp"
#include "bswave/linalg.hpp"
#include "bswave/mesh.hpp"
#include "bswave/quadrature.hpp"

namespace bswave {

enum class NormKind { Mh, Ah, DualAh, S };

/// Discrete norms of a dof vector. DualAh is the dual norm
/// sup m_h(d, v)/||v||_h, evaluated in closed form as sqrt(d'M A^{-1} M d);
/// S takes a stacked (v, u) vector and returns sqrt(v'A^{-1}v + u'M u).
inline double discrete_norm(const Vector& v, NormKind kind, const AssembledOperators& ops,
                            const SolverHandle& solver) {
    switch (kind) {
        case NormKind::Mh:
            return std::sqrt(dot(v, ops.M.apply(v)));
        case NormKind::Ah:
            return std::sqrt(dot(v, ops.A.apply(v)));
        case NormKind::DualAh: {
            const Vector mv = ops.M.apply(v);
            const Vector x = solver.solve(ops.A, mv);
            return std::sqrt(dot(mv, x));
        }
        case NormKind::S: {
            const int n = ops.M.size();
            if (static_cast<int>(v.size()) != 2 * n)
                throw DimensionMismatch("S norm expects a stacked (v, u) vector");
            const Vector vv(v.begin(), v.begin() + n), uu(v.begin() + n, v.end());
            const Vector x = solver.solve(ops.A, vv);
            return std::sqrt(dot(vv, x) + dot(uu, ops.M.apply(uu)));
        }
    }
    throw InvalidArgument("unknown norm kind");
}

enum class ErrorMetric { NodalDiscrete, LiftedQuadrature };

struct ErrorReport {
    double err_l2_bulk = 0.0;
    double err_l2_surf = 0.0;
    double err_h1_bulk = 0.0;
    double err_h1_surf = 0.0;
    double combined_l2 = 0.0; // sqrt(bulk^2 + mu surf^2), the M-norm for nodal errors
    ErrorMetric metric = ErrorMetric::NodalDiscrete;
    int level = -1;
    double t = 0.0;
};

/// Exact solution callables: bulk value, and for the acoustic layout the
/// boundary displacement. Gradients are only needed for lifted H1 errors
/// and may be left empty otherwise.
struct ExactSolution {
    TimeScalarField bulk;
    TimeScalarField surf; // acoustic displacement; ignored for TraceCoupled
    std::function<Vec2(const Vec2&, double)> grad_bulk;
    std::function<Vec2(const Vec2&, double)> grad_surf;
};

namespace detail {

/// Boundary edge index owned by each triangle (-1 for interior triangles).
inline std::vector<int> triangle_boundary_edge(const Mesh2D& mesh) {
    std::vector<int> map(mesh.n_triangles(), -1);
    for (int e = 0; e < mesh.n_boundary_edges(); ++e) map[mesh.boundary_edges[e].tri] = e;
    return map;
}

/// Local vertex order (a0 interior, a1, a2 the boundary edge) for a curved
/// triangle; preserves CCW orientation.
inline std::array<int, 3> curved_local_order(const Mesh2D& mesh, int tri, int bedge) {
    const auto& t = mesh.triangles[tri];
    const auto& be = mesh.boundary_edges[bedge];
    for (int i = 0; i < 3; ++i) {
        if (t[i] != be.a && t[i] != be.b) return {t[i], t[(i + 1) % 3], t[(i + 2) % 3]};
    }
    throw NumericalError("boundary edge does not belong to its owning triangle");
}

} // namespace detail

/// Error of the dof vector u_h against an exact solution at time t.
///
/// NodalDiscrete measures I_h(exact) - u_h in the split discrete M/A norms.
/// LiftedQuadrature integrates |u_h - exact o G_h|^2 det DG_h over the mesh
/// (curved maps on boundary triangles) plus the arc-length boundary
/// integral of the trace/displacement error.
inline ErrorReport error_vs_exact(const Mesh2D& mesh, const AssembledOperators& ops,
                                  const Vector& u_h, const ExactSolution& exact, double t,
                                  ErrorMetric metric, const BoundaryCurve& curve) {
    ErrorReport rep;
    rep.metric = metric;
    rep.t = t;
    const DofMap& dofmap = ops.dofmap;
    if (static_cast<int>(u_h.size()) != dofmap.size())
        throw DimensionMismatch("error_vs_exact: dof vector size mismatch");

    if (metric == ErrorMetric::NodalDiscrete) {
        ScalarField fb = exact.bulk ? ScalarField([&](const Vec2& x) { return exact.bulk(x, t); })
                                    : ScalarField();
        ScalarField fs = exact.surf ? ScalarField([&](const Vec2& x) { return exact.surf(x, t); })
                                    : ScalarField();
        Vector e = interpolate(mesh, dofmap, fb, fs);
        for (size_t i = 0; i < e.size(); ++i) e[i] -= u_h[i];
        rep.err_l2_bulk = std::sqrt(dot(e, ops.parts.mass_bulk.apply(e)));
        rep.err_l2_surf = std::sqrt(dot(e, ops.parts.mass_surf.apply(e)));
        rep.err_h1_bulk = std::sqrt(dot(e, ops.parts.stiff_bulk.apply(e)));
        rep.err_h1_surf = std::sqrt(dot(e, ops.parts.stiff_surf.apply(e)));
    } else {
        if (!exact.bulk) throw InvalidArgument("lifted error needs the exact bulk solution");
        const auto tri_bedge = detail::triangle_boundary_edge(mesh);
        double l2b = 0.0, h1b = 0.0;
        for (int tr = 0; tr < mesh.n_triangles(); ++tr) {
            const int be = tri_bedge[tr];
            if (be < 0) {
                const auto g = detail::tri_geom(mesh, tr);
                Vec2 grad_uh{0, 0};
                for (int i = 0; i < 3; ++i) grad_uh += g.grad[i] * u_h[g.v[i]];
                for (const auto& q : quad::tri_degree4) {
                    const double lam[3] = {q.l0, q.l1, q.l2};
                    const Vec2 x = lam[0] * g.p[0] + lam[1] * g.p[1] + lam[2] * g.p[2];
                    double uh = 0.0;
                    for (int i = 0; i < 3; ++i) uh += lam[i] * u_h[g.v[i]];
                    const double d = uh - exact.bulk(x, t);
                    l2b += q.w * g.area * d * d;
                    if (exact.grad_bulk) {
                        const Vec2 gd = grad_uh - exact.grad_bulk(x, t);
                        h1b += q.w * g.area * gd.norm2();
                    }
                }
            } else {
                const auto order = detail::curved_local_order(mesh, tr, be);
                const Vec2 a0 = mesh.vertices[order[0]], a1 = mesh.vertices[order[1]],
                           a2 = mesh.vertices[order[2]];
                const CurvedTriangleMap cmap(a0, a1, a2, &curve);
                const auto g = detail::tri_geom(mesh, tr);
                Vec2 grad_uh{0, 0};
                for (int i = 0; i < 3; ++i) grad_uh += g.grad[i] * u_h[g.v[i]];
                const Mat2 straight = cmap.straight_jacobian();
                for (const auto& q : quad::tri_degree4) {
                    const double lam[3] = {q.l0, q.l1, q.l2};
                    const Vec2 p = cmap.point(lam[0], lam[1], lam[2]);
                    const Mat2 jac = cmap.jacobian(lam[1], lam[2]);
                    const double detj = jac.det();
                    double uh = 0.0;
                    for (int i = 0; i < 3; ++i) uh += lam[i] * u_h[order[i]];
                    const double d = uh - exact.bulk(p, t);
                    l2b += q.w * 0.5 * d * d * detj;
                    if (exact.grad_bulk) {
                        // grad of the lifted function: DG^{-T} grad u_h
                        const Mat2 dginv_t = straight.mul(jac.inverse()).transpose();
                        const Vec2 gd = dginv_t.apply(grad_uh) - exact.grad_bulk(p, t);
                        h1b += q.w * 0.5 * gd.norm2() * detj;
                    }
                }
            }
        }
        const bool acoustic = dofmap.layout == DofLayout::AcousticBlock;
        const TimeScalarField& surf_exact = acoustic ? exact.surf : exact.bulk;
        const auto& surf_grad = acoustic ? exact.grad_surf : exact.grad_bulk;
        double l2s = 0.0, h1s = 0.0;
        if (surf_exact) {
            for (const auto& bed : mesh.boundary_edges) {
                const Vec2 pa = mesh.vertices[bed.a], pb = mesh.vertices[bed.b];
                const int da = acoustic ? dofmap.delta_dof_of_vertex[bed.a] : bed.a;
                const int db = acoustic ? dofmap.delta_dof_of_vertex[bed.b] : bed.b;
                const Vec2 chord = pb - pa;
                for (const auto& q : quad::line_gauss3) {
                    const Vec2 x = pa + q.s * chord;
                    const Vec2 p = project_to_boundary(x, curve);
                    const Vec2 dp = curve.projection_jacobian(x).apply(chord);
                    const double speed = dp.norm();
                    const double uh = (1.0 - q.s) * u_h[da] + q.s * u_h[db];
                    const double d = uh - surf_exact(p, t);
                    l2s += q.w * d * d * speed;
                    if (surf_grad) {
                        const Vec2 tangent = dp / speed;
                        const double duh_ds = (u_h[db] - u_h[da]) / speed;
                        const double gd = duh_ds - surf_grad(p, t).dot(tangent);
                        h1s += q.w * gd * gd * speed;
                    }
                }
            }
        }
        rep.err_l2_bulk = std::sqrt(l2b);
        rep.err_l2_surf = std::sqrt(l2s);
        rep.err_h1_bulk = std::sqrt(h1b);
        rep.err_h1_surf = std::sqrt(h1s);
    }
    rep.combined_l2 = std::sqrt(rep.err_l2_bulk * rep.err_l2_bulk +
                                ops.mass_surface_weight * rep.err_l2_surf * rep.err_l2_surf);
    return rep;
}

/// Restrict a fine-level dof vector to a coarse level of the hierarchy by
/// nodal injection (coarse vertices are a prefix of the fine vertex list).
inline Vector restrict_to_level(const RefinementHierarchy& hier, int fine_level,
                                int coarse_level, const Vector& fine, const DofMap& fine_dofmap,
                                const DofMap& coarse_dofmap) {
    if (coarse_level < 0 || fine_level >= hier.n_levels() || coarse_level >= fine_level)
        throw HierarchyMismatch("restriction requires coarse_level < fine_level within the hierarchy");
    if (static_cast<int>(fine.size()) != fine_dofmap.size())
        throw HierarchyMismatch("fine vector does not match the fine dof map");
    if (fine_dofmap.layout != coarse_dofmap.layout)
        throw HierarchyMismatch("dof layouts differ between levels");

    // compose the per-level injections (each is the identity prefix)
    const int ncv = coarse_dofmap.n_vertices;
    std::vector<int> vmap(ncv);
    for (int i = 0; i < ncv; ++i) vmap[i] = i;
    for (int l = coarse_level; l < fine_level; ++l) {
        const auto& inj = hier.vertex_injection[l];
        for (int i = 0; i < ncv; ++i) vmap[i] = inj[vmap[i]];
    }

    Vector coarse(coarse_dofmap.size(), 0.0);
    for (int i = 0; i < ncv; ++i) coarse[i] = fine[vmap[i]];
    if (coarse_dofmap.layout == DofLayout::AcousticBlock) {
        for (int v : coarse_dofmap.boundary_vertex_order) {
            const int fine_delta = fine_dofmap.delta_dof_of_vertex[vmap[v]];
            if (fine_delta < 0)
                throw HierarchyMismatch("coarse boundary vertex not on the fine boundary");
            coarse[coarse_dofmap.delta_dof_of_vertex[v]] = fine[fine_delta];
        }
    }
    return coarse;
}

/// Error of a coarse solution against a reference solution on a finer level
/// of the same hierarchy, measured in the coarse discrete norms.
inline ErrorReport error_vs_reference(const RefinementHierarchy& hier, int coarse_level,
                                      int fine_level, const Vector& coarse_solution,
                                      const Vector& fine_reference,
                                      const AssembledOperators& ops_coarse,
                                      const DofMap& fine_dofmap, double t) {
    Vector e = restrict_to_level(hier, fine_level, coarse_level, fine_reference, fine_dofmap,
                                 ops_coarse.dofmap);
    if (e.size() != coarse_solution.size())
        throw HierarchyMismatch("coarse solution does not match the coarse dof map");
    for (size_t i = 0; i < e.size(); ++i) e[i] -= coarse_solution[i];
    ErrorReport rep;
    rep.metric = ErrorMetric::NodalDiscrete;
    rep.t = t;
    rep.level = coarse_level;
    rep.err_l2_bulk = std::sqrt(dot(e, ops_coarse.parts.mass_bulk.apply(e)));
    rep.err_l2_surf = std::sqrt(dot(e, ops_coarse.parts.mass_surf.apply(e)));
    rep.err_h1_bulk = std::sqrt(dot(e, ops_coarse.parts.stiff_bulk.apply(e)));
    rep.err_h1_surf = std::sqrt(dot(e, ops_coarse.parts.stiff_surf.apply(e)));
    rep.combined_l2 =
        std::sqrt(rep.err_l2_bulk * rep.err_l2_bulk +
                  ops_coarse.mass_surface_weight * rep.err_l2_surf * rep.err_l2_surf);
    return rep;
}

enum class RitzGeometry { Curved, PolygonalExact };

/// Ritz projection R_h u: solve a_h(R_h u, phi_k) = a(u, phi_k^l) with the
/// right side integrated on the curved domain (degree-4 rules, lifted basis
/// gradients through the element maps). PolygonalExact integrates on Omega_h
/// instead, which turns the projection into a plain Galerkin projection.
inline Vector ritz_project(const Mesh2D& mesh, const BoundaryCurve& curve,
                           const ProblemSpec& spec, const ScalarField& u,
                           const std::function<Vec2(const Vec2&)>& grad_u,
                           const std::function<Vec2(const Vec2&)>& surf_grad_u,
                           const SolverHandle& solver,
                           RitzGeometry geometry = RitzGeometry::Curved) {
    if (spec.variant == Variant::Acoustic)
        throw InvalidArgument("ritz_project supports trace-coupled layouts only");
    if (!(spec.kappa > 0.0))
        throw SingularMatrix("ritz_project requires kappa > 0: the stiffness form has the "
                             "constants in its kernel");
    if (!u) throw MissingGradient("ritz_project requires the exact function");
    if (!grad_u) throw MissingGradient("ritz_project requires the exact gradient");
    if (geometry == RitzGeometry::Curved && !surf_grad_u && spec.beta != 0.0)
        throw MissingGradient("ritz_project requires the surface gradient for beta > 0");

    const DofMap dofmap = DofMap::build(mesh, DofLayout::TraceCoupled);
    Vector g(dofmap.size(), 0.0);
    const auto tri_bedge = detail::triangle_boundary_edge(mesh);

    for (int tr = 0; tr < mesh.n_triangles(); ++tr) {
        const int be = tri_bedge[tr];
        const auto geom = detail::tri_geom(mesh, tr);
        if (geometry == RitzGeometry::PolygonalExact || be < 0) {
            for (const auto& q : quad::tri_degree4) {
                const double lam[3] = {q.l0, q.l1, q.l2};
                const Vec2 x = lam[0] * geom.p[0] + lam[1] * geom.p[1] + lam[2] * geom.p[2];
                const Vec2 gu = grad_u(x);
                for (int i = 0; i < 3; ++i)
                    g[geom.v[i]] += q.w * geom.area * gu.dot(geom.grad[i]);
            }
        } else {
            const auto order = detail::curved_local_order(mesh, tr, be);
            const Vec2 a0 = mesh.vertices[order[0]], a1 = mesh.vertices[order[1]],
                       a2 = mesh.vertices[order[2]];
            const CurvedTriangleMap cmap(a0, a1, a2, &curve);
            const Mat2 straight = cmap.straight_jacobian();
            const auto lgrad = detail::p1_gradients(a0, a1, a2, straight.det());
            for (const auto& q : quad::tri_degree4) {
                const Vec2 p = cmap.point(q.l0, q.l1, q.l2);
                const Mat2 jac = cmap.jacobian(q.l1, q.l2);
                const Mat2 dginv_t = straight.mul(jac.inverse()).transpose();
                const Vec2 gu = grad_u(p);
                const double w = q.w * 0.5 * jac.det();
                for (int i = 0; i < 3; ++i)
                    g[order[i]] += w * gu.dot(dginv_t.apply(lgrad[i]));
            }
        }
    }

    for (const auto& bed : mesh.boundary_edges) {
        const Vec2 pa = mesh.vertices[bed.a], pb = mesh.vertices[bed.b];
        const Vec2 chord = pb - pa;
        const int idx[2] = {bed.a, bed.b};
        const double dphi[2] = {-1.0, 1.0}; // d phi / d sigma along the edge
        for (const auto& q : quad::line_gauss3) {
            const Vec2 x = pa + q.s * chord;
            const double phi[2] = {1.0 - q.s, q.s};
            if (geometry == RitzGeometry::PolygonalExact) {
                const double len = chord.norm();
                const Vec2 tangent = chord / len;
                const double duds = grad_u(x).dot(tangent);
                for (int i = 0; i < 2; ++i) {
                    g[idx[i]] += q.w * spec.kappa * u(x) * phi[i] * len;
                    g[idx[i]] += q.w * spec.beta * duds * dphi[i];
                }
            } else {
                const Vec2 p = project_to_boundary(x, curve);
                const Vec2 dp = curve.projection_jacobian(x).apply(chord);
                const double speed = dp.norm();
                const Vec2 tangent = dp / speed;
                const double duds = spec.beta != 0.0 ? surf_grad_u(p).dot(tangent) : 0.0;
                for (int i = 0; i < 2; ++i) {
                    g[idx[i]] += q.w * spec.kappa * u(p) * phi[i] * speed;
                    g[idx[i]] += q.w * spec.beta * duds * dphi[i];
                }
            }
        }
    }

    const SparseMatrix a_h = assemble_stiffness(mesh, spec, dofmap);
    return solver.solve(a_h, g);
}

/// Estimated orders of convergence: rate_i = log(e_i/e_{i+1})/log(h_i/h_{i+1}).
inline std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& hs) {
    if (errors.size() != hs.size() || errors.size() < 2)
        throw InvalidArgument("eoc needs matching lists of length >= 2");
    for (size_t i = 0; i + 1 < hs.size(); ++i)
        if (!(hs[i + 1] < hs[i])) throw InvalidArgument("eoc needs strictly decreasing h");
    for (double e : errors)
        if (!(e > 0.0)) throw NonPositiveError("eoc needs positive errors");
    std::vector<double> rates(errors.size() - 1);
    for (size_t i = 0; i + 1 < errors.size(); ++i)
        rates[i] = std::log(errors[i] / errors[i + 1]) / std::log(hs[i] / hs[i + 1]);
    return rates;
}

/// Per-level study results plus estimated orders for the combined L2 error.
struct ConvergenceTable {
    struct Row {
        int level = 0;
        double h = 0.0;
        double tau = 0.0;
        int n_dofs = 0;
        ErrorReport err;
        double energy_drift = 0.0;
        double wall_seconds = 0.0;
    };
    std::vector<Row> rows;

    /// EOC of the combined L2 error per consecutive pair; NaN where the
    /// errors vanish.
    std::vector<double> eoc_l2() const {
        std::vector<double> rates;
        for (size_t i = 0; i + 1 < rows.size(); ++i) {
            const double e0 = rows[i].err.combined_l2, e1 = rows[i + 1].err.combined_l2;
            const double x0 = rows[i].tau > 0.0 && rows[i].h == rows[i + 1].h ? rows[i].tau
                                                                              : rows[i].h;
            const double x1 = rows[i].tau > 0.0 && rows[i].h == rows[i + 1].h ? rows[i + 1].tau
                                                                              : rows[i + 1].h;
            if (e0 > 0.0 && e1 > 0.0 && x1 < x0)
                rates.push_back(std::log(e0 / e1) / std::log(x0 / x1));
            else
                rates.push_back(std::numeric_limits<double>::quiet_NaN());
        }
        return rates;
    }
};

} // namespace bswave
