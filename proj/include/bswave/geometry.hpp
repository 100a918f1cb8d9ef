#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <utility>

#include "bswave/core.hpp"

namespace bswave {

/// Smooth closed boundary curve. The unit circle is the reference geometry
/// and gets exact closed-form projection; arbitrary parametrizations fall
/// back to a sampled search with Newton polish.
class BoundaryCurve {
  public:
    enum class Kind { UnitCircle, Parametrized };

    static BoundaryCurve unit_circle() { return BoundaryCurve(Kind::UnitCircle); }

    static BoundaryCurve parametrized(std::function<Vec2(double)> gamma,
                                      std::function<Vec2(double)> dgamma) {
        BoundaryCurve c(Kind::Parametrized);
        c.gamma_ = std::move(gamma);
        c.dgamma_ = std::move(dgamma);
        return c;
    }

    Kind kind() const { return kind_; }

    Vec2 parametrization(double theta) const {
        if (kind_ == Kind::UnitCircle) return {std::cos(theta), std::sin(theta)};
        return gamma_(theta);
    }

    Vec2 derivative(double theta) const {
        if (kind_ == Kind::UnitCircle) return {-std::sin(theta), std::cos(theta)};
        return dgamma_(theta);
    }

    /// Closest point on the curve and its parameter value.
    std::pair<Vec2, double> closest_point(const Vec2& x) const {
        if (kind_ == Kind::UnitCircle) {
            const double r = x.norm();
            // Near the circle center the minimizer is not unique; only
            // boundary-adjacent points are ever projected in valid runs.
            if (r < 0.1)
                throw AmbiguousProjection("projection onto unit circle near center, |x| = " +
                                          std::to_string(r));
            return {x / r, std::atan2(x.y, x.x)};
        }
        return closest_point_sampled(x);
    }

    /// Derivative of the projection map x -> closest_point(x).
    /// For the circle this is (I - p p^T)/|x| at p = x/|x|.
    Mat2 projection_jacobian(const Vec2& x) const {
        if (kind_ == Kind::UnitCircle) {
            const double r = x.norm();
            if (r < 0.1)
                throw AmbiguousProjection("projection jacobian near circle center");
            const Vec2 p = x / r;
            return {(1.0 - p.x * p.x) / r, -p.x * p.y / r,
                    -p.x * p.y / r, (1.0 - p.y * p.y) / r};
        }
        // Central differences; adequate for the generic parametrized path.
        const double eps = 1e-6;
        const Vec2 px1 = closest_point({x.x + eps, x.y}).first;
        const Vec2 px0 = closest_point({x.x - eps, x.y}).first;
        const Vec2 py1 = closest_point({x.x, x.y + eps}).first;
        const Vec2 py0 = closest_point({x.x, x.y - eps}).first;
        return {(px1.x - px0.x) / (2 * eps), (py1.x - py0.x) / (2 * eps),
                (px1.y - px0.y) / (2 * eps), (py1.y - py0.y) / (2 * eps)};
    }

  private:
    explicit BoundaryCurve(Kind k) : kind_(k) {}

    std::pair<Vec2, double> closest_point_sampled(const Vec2& x) const {
        const int n = 720;
        double best_t = 0.0;
        double best_d = std::numeric_limits<double>::max();
        const double two_pi = 2.0 * std::numbers::pi;
        for (int i = 0; i < n; ++i) {
            const double t = two_pi * i / n;
            const double d = (gamma_(t) - x).norm2();
            if (d < best_d) {
                best_d = d;
                best_t = t;
            }
        }
        // Newton on g(t) = (gamma(t) - x) . gamma'(t), g' by finite differences.
        double t = best_t;
        for (int it = 0; it < 50; ++it) {
            const Vec2 g = gamma_(t), dg = dgamma_(t);
            const double f = (g - x).dot(dg);
            const double dt = 1e-7;
            const Vec2 g1 = gamma_(t + dt), dg1 = dgamma_(t + dt);
            const double f1 = (g1 - x).dot(dg1);
            const double fp = (f1 - f) / dt;
            if (std::abs(fp) < 1e-300) break;
            const double step = f / fp;
            t -= step;
            if (std::abs(step) < 1e-15) break;
        }
        return {gamma_(t), t};
    }

    Kind kind_;
    std::function<Vec2(double)> gamma_;
    std::function<Vec2(double)> dgamma_;
};

/// Project x onto the boundary curve.
inline Vec2 project_to_boundary(const Vec2& x, const BoundaryCurve& curve) {
    return curve.closest_point(x).first;
}

/// Element-wise curved lift map G_h for a triangle with exactly one boundary
/// edge (a1, a2 on the curve, a0 interior). The map fixes the vertices, is
/// the identity on the two interior edges, and carries the straight edge
/// a1-a2 onto the boundary arc:
///
///   G_h(l) = l0 a0 + (l1 + l2) P(y),  y = (l1 a1 + l2 a2)/(l1 + l2),
///
/// with P the closest-point projection onto the curve.
class CurvedTriangleMap {
  public:
    CurvedTriangleMap(Vec2 a0, Vec2 a1, Vec2 a2, const BoundaryCurve* curve)
        : a0_(a0), a1_(a1), a2_(a2), curve_(curve) {
        const double area2 = (a1_ - a0_).cross(a2_ - a0_);
        if (!(area2 > 0.0))
            throw DegenerateElement("curved triangle has non-positive area " +
                                    std::to_string(0.5 * area2));
    }

    const Vec2& a0() const { return a0_; }
    const Vec2& a1() const { return a1_; }
    const Vec2& a2() const { return a2_; }

    /// Image of the barycentric point (l0, l1, l2).
    Vec2 point(double l0, double l1, double l2) const {
        const double mu = l1 + l2;
        const double s = mu > 0.0 ? l2 / mu : 0.5;
        const Vec2 y = a1_ + s * (a2_ - a1_);
        const Vec2 p = project_to_boundary(y, *curve_);
        return l0 * a0_ + mu * p;
    }

    /// Derivative of the map with respect to the reference coordinates
    /// (xi, eta) = (l1, l2); columns are dF/dxi and dF/deta. At the interior
    /// vertex (l1 = l2 = 0) the directional limit along the median is used.
    Mat2 jacobian(double l1, double l2) const {
        const double mu = l1 + l2;
        const double r1 = mu > 0.0 ? l1 / mu : 0.5;
        const double r2 = mu > 0.0 ? l2 / mu : 0.5;
        const Vec2 y = a1_ + r2 * (a2_ - a1_);
        const Vec2 p = project_to_boundary(y, *curve_);
        const Mat2 dp = curve_->projection_jacobian(y);
        const Vec2 e12 = a1_ - a2_;
        const Vec2 col_common = p - a0_;
        const Vec2 dxi = col_common + dp.apply(e12 * r2);
        const Vec2 deta = col_common + dp.apply(e12 * (-r1));
        return {dxi.x, deta.x, dxi.y, deta.y};
    }

    /// Jacobian of the straight (affine) map from the reference triangle.
    Mat2 straight_jacobian() const {
        const Vec2 u = a1_ - a0_, v = a2_ - a0_;
        return {u.x, v.x, u.y, v.y};
    }

  private:
    Vec2 a0_, a1_, a2_;
    const BoundaryCurve* curve_;
};

/// Map a barycentric point through G_h; returns the image point and the
/// determinant of the map's derivative with respect to the reference
/// coordinates (so integrating it over the reference triangle yields the
/// curved element area).
inline std::pair<Vec2, double> curved_map(const CurvedTriangleMap& map, double l0, double l1,
                                          double l2) {
    return {map.point(l0, l1, l2), map.jacobian(l1, l2).det()};
}

/// Outer unit normal of the boundary edge (p, q); oriented away from the
/// adjacent triangle's centroid.
inline Vec2 outward_normal(const Vec2& p, const Vec2& q, const Vec2& centroid) {
    const Vec2 e = q - p;
    const double len = e.norm();
    if (len <= 0.0) throw ZeroLengthEdge("boundary edge has zero length");
    Vec2 n{e.y / len, -e.x / len};
    const Vec2 mid = (p + q) * 0.5;
    if (n.dot(mid - centroid) < 0.0) n = n * -1.0;
    return n;
}

} // namespace bswave
