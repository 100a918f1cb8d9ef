#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace bswave {

/// Plain 2D point/vector.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double norm2() const { return x * x + y * y; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Column-major 2x2 matrix, enough for element Jacobians.
struct Mat2 {
    // [a b; c d]
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

    double det() const { return a * d - b * c; }
    Vec2 apply(const Vec2& v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    Mat2 mul(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    Mat2 inverse() const {
        const double dt = det();
        return {d / dt, -b / dt, -c / dt, a / dt};
    }
    Mat2 transpose() const { return {a, c, b, d}; }
};

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps ConfigError-like failures to exit code 2 and
// NumericalError-like failures to exit code 3.
// ---------------------------------------------------------------------------

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidArgument : ConfigError {
    explicit InvalidArgument(const std::string& msg) : ConfigError(msg) {}
};

struct UnknownScenario : ConfigError {
    explicit UnknownScenario(const std::string& msg) : ConfigError(msg) {}
};

struct MissingField : ConfigError {
    explicit MissingField(const std::string& msg) : ConfigError(msg) {}
};

struct MissingGradient : ConfigError {
    explicit MissingGradient(const std::string& msg) : ConfigError(msg) {}
};

struct HierarchyMismatch : ConfigError {
    explicit HierarchyMismatch(const std::string& msg) : ConfigError(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct AmbiguousProjection : NumericalError {
    explicit AmbiguousProjection(const std::string& msg) : NumericalError(msg) {}
};

struct DegenerateElement : NumericalError {
    explicit DegenerateElement(const std::string& msg) : NumericalError(msg) {}
};

struct ZeroLengthEdge : NumericalError {
    explicit ZeroLengthEdge(const std::string& msg) : NumericalError(msg) {}
};

struct DimensionMismatch : NumericalError {
    explicit DimensionMismatch(const std::string& msg) : NumericalError(msg) {}
};

struct SingularMatrix : NumericalError {
    explicit SingularMatrix(const std::string& msg) : NumericalError(msg) {}
};

struct SingularStageMatrix : SingularMatrix {
    explicit SingularStageMatrix(const std::string& msg) : SingularMatrix(msg) {}
};

struct NoConvergence : NumericalError {
    int iterations;
    NoConvergence(const std::string& msg, int iters)
        : NumericalError(msg + " (after " + std::to_string(iters) + " iterations)"),
          iterations(iters) {}
};

struct NonPositiveError : NumericalError {
    explicit NonPositiveError(const std::string& msg) : NumericalError(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace bswave
