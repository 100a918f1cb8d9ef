#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "bswave/core.hpp"
#include "bswave/linalg.hpp"

namespace bswave {

/// Runge-Kutta coefficients (A, b, c).
struct ButcherTableau {
    int s = 0;
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    std::vector<double> c;
};

namespace detail {

/// Solve a small dense system in place (partial pivoting).
inline std::vector<double> dense_solve(std::vector<std::vector<double>> m,
                                       std::vector<double> rhs) {
    const int n = static_cast<int>(rhs.size());
    for (int j = 0; j < n; ++j) {
        int p = j;
        for (int i = j + 1; i < n; ++i)
            if (std::abs(m[i][j]) > std::abs(m[p][j])) p = i;
        if (m[p][j] == 0.0) throw SingularMatrix("dense solve: singular");
        std::swap(m[p], m[j]);
        std::swap(rhs[p], rhs[j]);
        for (int i = j + 1; i < n; ++i) {
            const double f = m[i][j] / m[j][j];
            for (int k = j; k < n; ++k) m[i][k] -= f * m[j][k];
            rhs[i] -= f * rhs[j];
        }
    }
    for (int j = n - 1; j >= 0; --j) {
        for (int k = j + 1; k < n; ++k) rhs[j] -= m[j][k] * rhs[k];
        rhs[j] /= m[j][j];
    }
    return rhs;
}

/// Roots of the Legendre polynomial P_s on [-1,1] by Newton iteration.
inline std::vector<double> legendre_roots(int s) {
    std::vector<double> roots(s);
    for (int i = 0; i < s; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (s + 0.5));
        for (int it = 0; it < 100; ++it) {
            // evaluate P_s and P_s' by the three-term recurrence
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= s; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double ps = (s == 0) ? p0 : p1;
            const double dps = s * (x * p1 - p0) / (x * x - 1.0);
            const double dx = ps / dps;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        roots[i] = x;
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

} // namespace detail

/// Gauss collocation tableau for s stages: nodes are the roots of the
/// shifted Legendre polynomial, weights and coefficients solve the
/// collocation (Vandermonde) conditions.
inline ButcherTableau gauss_tableau(int s) {
    if (s < 1 || s > 3)
        throw InvalidArgument("gauss_tableau: unsupported stage count " + std::to_string(s));
    ButcherTableau tb;
    tb.s = s;
    tb.c.resize(s);
    const auto roots = detail::legendre_roots(s);
    for (int i = 0; i < s; ++i) tb.c[i] = 0.5 * (roots[i] + 1.0);

    std::vector<std::vector<double>> vandermonde(s, std::vector<double>(s));
    for (int k = 0; k < s; ++k)
        for (int j = 0; j < s; ++j) vandermonde[k][j] = std::pow(tb.c[j], k);

    std::vector<double> rhs(s);
    for (int k = 0; k < s; ++k) rhs[k] = 1.0 / (k + 1);
    tb.b = detail::dense_solve(vandermonde, rhs);

    tb.a.assign(s, std::vector<double>(s));
    for (int i = 0; i < s; ++i) {
        for (int k = 0; k < s; ++k) rhs[k] = std::pow(tb.c[i], k + 1) / (k + 1);
        tb.a[i] = detail::dense_solve(vandermonde, rhs);
    }
    return tb;
}

/// max_k |sum_i b_i c_i^{k-1} - 1/k| over k = 1..kmax.
inline double quadrature_order_residual(const ButcherTableau& tb, int kmax) {
    double worst = 0.0;
    for (int k = 1; k <= kmax; ++k) {
        double s = 0.0;
        for (int i = 0; i < tb.s; ++i) s += tb.b[i] * std::pow(tb.c[i], k - 1);
        worst = std::max(worst, std::abs(s - 1.0 / k));
    }
    return worst;
}

/// max_{i,k} |sum_j a_ij c_j^{k-1} - c_i^k / k| over k = 1..s.
inline double stage_order_residual(const ButcherTableau& tb) {
    double worst = 0.0;
    for (int i = 0; i < tb.s; ++i)
        for (int k = 1; k <= tb.s; ++k) {
            double s = 0.0;
            for (int j = 0; j < tb.s; ++j) s += tb.a[i][j] * std::pow(tb.c[j], k - 1);
            worst = std::max(worst, std::abs(s - std::pow(tb.c[i], k) / k));
        }
    return worst;
}

/// Entries b_i a_ij + b_j a_ji - b_i b_j; positive semi-definite for
/// algebraically stable methods (identically zero for Gauss).
inline std::vector<std::vector<double>> algebraic_stability_matrix(const ButcherTableau& tb) {
    std::vector<std::vector<double>> m(tb.s, std::vector<double>(tb.s));
    for (int i = 0; i < tb.s; ++i)
        for (int j = 0; j < tb.s; ++j)
            m[i][j] = tb.b[i] * tb.a[i][j] + tb.b[j] * tb.a[j][i] - tb.b[i] * tb.b[j];
    return m;
}

// ---------------------------------------------------------------------------
// First-order system for M u'' + B u' + A u = load(t), with state
// y = (v, u), v = M u' + B u. The block operators of the first-order form
// are never materialized; the stage systems below are algebraically
// equivalent and stay sparse.
// ---------------------------------------------------------------------------

struct FirstOrderSystem {
    const SparseMatrix* M = nullptr;
    const SparseMatrix* A = nullptr;
    const SparseMatrix* B = nullptr;
    std::function<Vector(double)> load; // null means zero

    int n() const { return M->size(); }
    bool has_velocity_term() const { return B && B->nnz() > 0; }

    Vector load_at(double t) const {
        if (load) return load(t);
        return Vector(n(), 0.0);
    }
};

struct RkState {
    Vector v, u;
    double t = 0.0;
};

/// Stacked stage matrix  I_s (x) M + tau (A_rk (x) B) + tau^2 (A_rk^2 (x) A).
/// Built once per (tableau, tau) and reused across steps; the direct solver
/// caches its factorization against this object.
struct StageSystem {
    SparseMatrix matrix;
    ButcherTableau tableau;
    double tau = 0.0;
};

inline StageSystem build_stage_system(const FirstOrderSystem& sys, const ButcherTableau& tb,
                                      double tau) {
    const int s = tb.s, n = sys.n();
    std::vector<std::vector<double>> a2(s, std::vector<double>(s, 0.0));
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
            for (int k = 0; k < s; ++k) a2[i][j] += tb.a[i][k] * tb.a[k][j];

    std::vector<SparseMatrix::Triplet> trips;
    auto add_block = [&](int bi, int bj, const SparseMatrix& m, double w) {
        if (w == 0.0 || m.nnz() == 0) return;
        for (int r = 0; r < n; ++r)
            for (int k = m.row_ptr()[r]; k < m.row_ptr()[r + 1]; ++k)
                trips.push_back({bi * n + r, bj * n + m.cols()[k], w * m.values()[k]});
    };
    for (int i = 0; i < s; ++i) {
        add_block(i, i, *sys.M, 1.0);
        for (int j = 0; j < s; ++j) {
            if (sys.B) add_block(i, j, *sys.B, tau * tb.a[i][j]);
            add_block(i, j, *sys.A, tau * tau * a2[i][j]);
        }
    }
    StageSystem st;
    st.matrix = SparseMatrix::from_triplets(s * n, std::move(trips));
    st.tableau = tb;
    st.tau = tau;
    return st;
}

/// One implicit Runge-Kutta step. The stages are eliminated to one linear
/// solve for the stacked stage derivatives Udot:
///   [I (x) M + tau (A (x) B) + tau^2 (A^2 (x) A)] Udot = r,
///   r_i = v_n - B u_n - tau (sum_j a_ij) A u_n + tau sum_j a_ij load(t_n + c_j tau).
inline RkState rk_step(const FirstOrderSystem& sys, const StageSystem& stage,
                       const RkState& yn, const SolverHandle& solver) {
    const int s = stage.tableau.s, n = sys.n();
    const double tau = stage.tau;
    const auto& a = stage.tableau.a;

    const Vector au = sys.A->apply(yn.u);
    Vector bu(n, 0.0);
    if (sys.has_velocity_term()) bu = sys.B->apply(yn.u);

    std::vector<Vector> loads(s);
    for (int j = 0; j < s; ++j) loads[j] = sys.load_at(yn.t + stage.tableau.c[j] * tau);

    Vector rhs(static_cast<size_t>(s) * n);
    for (int i = 0; i < s; ++i) {
        double arow = 0.0;
        for (int j = 0; j < s; ++j) arow += a[i][j];
        for (int r = 0; r < n; ++r) {
            double val = yn.v[r] - bu[r] - tau * arow * au[r];
            for (int j = 0; j < s; ++j) val += tau * a[i][j] * loads[j][r];
            rhs[static_cast<size_t>(i) * n + r] = val;
        }
    }

    Vector udot;
    try {
        udot = solver.solve(stage.matrix, rhs);
    } catch (const SingularMatrix& e) {
        throw SingularStageMatrix(std::string("stage system singular: ") + e.what());
    }

    RkState next;
    next.t = yn.t + tau;
    next.u = yn.u;
    next.v = yn.v;
    for (int i = 0; i < s; ++i) {
        // U_i = u_n + tau sum_j a_ij Udot_j, then Vdot_i = -A U_i + load_i
        Vector ui = yn.u;
        for (int j = 0; j < s; ++j)
            for (int r = 0; r < n; ++r)
                ui[r] += tau * a[i][j] * udot[static_cast<size_t>(j) * n + r];
        Vector vdot = sys.A->apply(ui);
        for (int r = 0; r < n; ++r) vdot[r] = -vdot[r] + loads[i][r];
        const double bi = stage.tableau.b[i];
        for (int r = 0; r < n; ++r) {
            next.v[r] += tau * bi * vdot[r];
            next.u[r] += tau * bi * udot[static_cast<size_t>(i) * n + r];
        }
    }
    return next;
}

/// Convenience overload that assembles the stage system on the fly.
inline RkState rk_step(const FirstOrderSystem& sys, const ButcherTableau& tb, const RkState& yn,
                       double tau, const SolverHandle& solver) {
    return rk_step(sys, build_stage_system(sys, tb, tau), yn, solver);
}

struct StepperConfig {
    double tau = 0.0;
    double T = 0.0;
    SolverMode solver_mode = SolverMode::DirectFactorization;
    double solver_tol = 1e-12;
    int solver_max_iter = 20000;
    /// Called with (step, t, state) at step 0 and after every step.
    std::function<void(int, double, const RkState&)> observer;

    int n_steps() const {
        if (!(tau > 0.0) || !(T > 0.0)) throw ConfigError("tau and T must be positive");
        const double steps = T / tau;
        const long long n = std::llround(steps);
        if (std::abs(n * tau - T) > 1e-12)
            throw ConfigError("T/tau must be an integer: T = " + std::to_string(T) +
                              ", tau = " + std::to_string(tau));
        return static_cast<int>(n);
    }
};

/// Integrate from nodal initial data (u0, u1). The first-order initial
/// value is y(0) = (M u1 + B u0, u0).
inline RkState integrate(const FirstOrderSystem& sys, const ButcherTableau& tb,
                         const Vector& u0, const Vector& u1, const StepperConfig& config) {
    const int n_steps = config.n_steps();
    if (static_cast<int>(u0.size()) != sys.n() || static_cast<int>(u1.size()) != sys.n())
        throw DimensionMismatch("integrate: initial data size mismatch");

    RkState y;
    y.u = u0;
    y.v = sys.M->apply(u1);
    if (sys.has_velocity_term()) {
        const Vector bu = sys.B->apply(u0);
        for (int r = 0; r < sys.n(); ++r) y.v[r] += bu[r];
    }
    y.t = 0.0;

    const SolverHandle solver(config.solver_mode, config.solver_tol, config.solver_max_iter);
    const StageSystem stage = build_stage_system(sys, tb, config.tau);
    if (config.observer) config.observer(0, 0.0, y);
    for (int step = 1; step <= n_steps; ++step) {
        y = rk_step(sys, stage, y, solver);
        if (config.observer) config.observer(step, y.t, y);
    }
    return y;
}

/// E = 1/2 udot' M udot + 1/2 u' A u with M udot = v - B u. The first term
/// is evaluated as 1/2 udot' (v - B u), which is the same product without a
/// second mass application.
inline double discrete_energy(const FirstOrderSystem& sys, const RkState& y,
                              const SolverHandle& solver) {
    Vector rhs = y.v;
    if (sys.has_velocity_term()) {
        const Vector bu = sys.B->apply(y.u);
        for (int r = 0; r < sys.n(); ++r) rhs[r] -= bu[r];
    }
    const Vector udot = solver.solve(*sys.M, rhs);
    const Vector au = sys.A->apply(y.u);
    return 0.5 * dot(udot, rhs) + 0.5 * dot(y.u, au);
}

/// || y ||_S^2 = v' A^{-1} v + u' M u; needs A nonsingular (kappa > 0 or
/// acoustic).
inline double s_norm(const FirstOrderSystem& sys, const RkState& y, const SolverHandle& solver) {
    const Vector ainv_v = solver.solve(*sys.A, y.v);
    const Vector mu = sys.M->apply(y.u);
    return std::sqrt(dot(y.v, ainv_v) + dot(y.u, mu));
}

} // namespace bswave
