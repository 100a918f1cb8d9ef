#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <numeric>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "bswave/core.hpp"

namespace bswave {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const Vector& x, Vector& y) {
    for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// Square sparse matrix in compressed row storage. Column indices are
/// strictly increasing within each row; duplicate entries are summed at
/// construction.
class SparseMatrix {
  public:
    struct Triplet {
        int row, col;
        double value;
    };

    SparseMatrix() = default;

    explicit SparseMatrix(int n) : n_(n), row_ptr_(n + 1, 0) {}

    static SparseMatrix from_triplets(int n, std::vector<Triplet> triplets) {
        std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return std::tie(a.row, a.col) < std::tie(b.row, b.col);
        });
        SparseMatrix m(n);
        m.col_.reserve(triplets.size());
        m.val_.reserve(triplets.size());
        for (size_t i = 0; i < triplets.size();) {
            const int r = triplets[i].row, c = triplets[i].col;
            if (r < 0 || r >= n || c < 0 || c >= n)
                throw DimensionMismatch("triplet (" + std::to_string(r) + "," +
                                        std::to_string(c) + ") outside " + std::to_string(n) +
                                        "x" + std::to_string(n));
            double v = 0.0;
            while (i < triplets.size() && triplets[i].row == r && triplets[i].col == c)
                v += triplets[i++].value;
            m.col_.push_back(c);
            m.val_.push_back(v);
            m.row_ptr_[r + 1]++;
        }
        for (int r = 0; r < n; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
        return m;
    }

    static SparseMatrix identity(int n) {
        std::vector<Triplet> t;
        t.reserve(n);
        for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
        return from_triplets(n, std::move(t));
    }

    int size() const { return n_; }
    int nnz() const { return static_cast<int>(val_.size()); }
    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& cols() const { return col_; }
    const std::vector<double>& values() const { return val_; }

    double operator()(int r, int c) const {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            if (col_[k] == c) return val_[k];
        return 0.0;
    }

    Vector apply(const Vector& x) const {
        if (static_cast<int>(x.size()) != n_)
            throw DimensionMismatch("matvec: vector size " + std::to_string(x.size()) +
                                    " vs matrix dimension " + std::to_string(n_));
        Vector y(n_, 0.0);
        for (int r = 0; r < n_; ++r) {
            double s = 0.0;
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += val_[k] * x[col_[k]];
            y[r] = s;
        }
        return y;
    }

    SparseMatrix transpose() const {
        std::vector<Triplet> t;
        t.reserve(val_.size());
        for (int r = 0; r < n_; ++r)
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                t.push_back({col_[k], r, val_[k]});
        return from_triplets(n_, std::move(t));
    }

    Vector diagonal() const {
        Vector d(n_, 0.0);
        for (int r = 0; r < n_; ++r)
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                if (col_[k] == r) d[r] = val_[k];
        return d;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : val_) m = std::max(m, std::abs(v));
        return m;
    }

    /// max |A_ij - A_ji| over all entries (0 for symmetric matrices).
    double asymmetry() const {
        const SparseMatrix at = transpose();
        double m = 0.0;
        for (int r = 0; r < n_; ++r)
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                m = std::max(m, std::abs(val_[k] - at(r, col_[k])));
        return m;
    }

    /// max |A_ij + A_ji| (0 for skew-symmetric matrices).
    double skew_defect() const {
        const SparseMatrix at = transpose();
        double m = 0.0;
        for (int r = 0; r < n_; ++r)
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                m = std::max(m, std::abs(val_[k] + at(r, col_[k])));
        return m;
    }

    /// Weighted sum of matrices with merged sparsity patterns.
    static SparseMatrix combine(const std::vector<std::pair<double, const SparseMatrix*>>& terms) {
        if (terms.empty()) throw InvalidArgument("combine of no matrices");
        const int n = terms.front().second->size();
        std::vector<Triplet> t;
        for (const auto& [alpha, m] : terms) {
            if (m->size() != n) throw DimensionMismatch("combine dimension mismatch");
            for (int r = 0; r < n; ++r)
                for (int k = m->row_ptr_[r]; k < m->row_ptr_[r + 1]; ++k)
                    t.push_back({r, m->col_[k], alpha * m->val_[k]});
        }
        return from_triplets(n, std::move(t));
    }

    /// Sum of all entries (equals m(1,1) for mass matrices).
    double entry_sum() const { return std::accumulate(val_.begin(), val_.end(), 0.0); }

    uint64_t fingerprint() const {
        uint64_t h = 1469598103934665603ull;
        auto mix = [&h](const void* data, size_t bytes) {
            const unsigned char* p = static_cast<const unsigned char*>(data);
            for (size_t i = 0; i < bytes; ++i) {
                h ^= p[i];
                h *= 1099511628211ull;
            }
        };
        mix(&n_, sizeof(n_));
        mix(row_ptr_.data(), row_ptr_.size() * sizeof(int));
        mix(col_.data(), col_.size() * sizeof(int));
        mix(val_.data(), val_.size() * sizeof(double));
        return h;
    }

  private:
    int n_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> col_;
    std::vector<double> val_;
};

inline Vector matvec(const SparseMatrix& m, const Vector& x) { return m.apply(x); }

/// Debug export: one `row col value` line per stored entry.
inline void write_coordinate_format(const SparseMatrix& m, std::ostream& out) {
    char buf[64];
    for (int r = 0; r < m.size(); ++r)
        for (int k = m.row_ptr()[r]; k < m.row_ptr()[r + 1]; ++k) {
            std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", r, m.cols()[k], m.values()[k]);
            out << buf;
        }
}

// ---------------------------------------------------------------------------
// Reverse Cuthill-McKee ordering: keeps the factorization bandwidth near
// O(sqrt(N)) on planar meshes.
// ---------------------------------------------------------------------------

inline std::vector<int> reverse_cuthill_mckee(const SparseMatrix& m) {
    const int n = m.size();
    std::vector<std::vector<int>> adj(n);
    for (int r = 0; r < n; ++r)
        for (int k = m.row_ptr()[r]; k < m.row_ptr()[r + 1]; ++k) {
            const int c = m.cols()[k];
            if (c != r) {
                adj[r].push_back(c);
                adj[c].push_back(r);
            }
        }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    auto degree = [&](int v) { return static_cast<int>(adj[v].size()); };

    std::vector<int> order;
    order.reserve(n);
    std::vector<bool> visited(n, false);

    auto bfs_component = [&](int start) {
        // Pseudo-peripheral start: walk to a farthest min-degree vertex twice.
        for (int sweep = 0; sweep < 2; ++sweep) {
            std::vector<int> dist(n, -1), frontier{start};
            dist[start] = 0;
            int last = start;
            while (!frontier.empty()) {
                std::vector<int> next;
                for (int v : frontier)
                    for (int w : adj[v])
                        if (dist[w] < 0 && !visited[w]) {
                            dist[w] = dist[v] + 1;
                            next.push_back(w);
                        }
                if (!next.empty()) {
                    last = *std::min_element(next.begin(), next.end(), [&](int a, int b) {
                        return std::make_pair(degree(a), a) < std::make_pair(degree(b), b);
                    });
                }
                frontier = std::move(next);
            }
            start = last;
        }
        std::vector<int> queue{start};
        visited[start] = true;
        size_t head = 0;
        while (head < queue.size()) {
            const int v = queue[head++];
            order.push_back(v);
            std::vector<int> nbrs;
            for (int w : adj[v])
                if (!visited[w]) nbrs.push_back(w);
            std::sort(nbrs.begin(), nbrs.end(), [&](int a, int b) {
                return std::make_pair(degree(a), a) < std::make_pair(degree(b), b);
            });
            for (int w : nbrs) {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    };

    for (int v = 0; v < n; ++v)
        if (!visited[v]) bfs_component(v);
    std::reverse(order.begin(), order.end());

    // order[k] = old index at new position k; return new position of each old index
    std::vector<int> perm(n);
    for (int k = 0; k < n; ++k) perm[order[k]] = k;
    return perm;
}

// ---------------------------------------------------------------------------
// Banded LU with partial pivoting (LAPACK-style band storage). The matrix is
// RCM-permuted before factorization.
// ---------------------------------------------------------------------------

class BandLU {
  public:
    explicit BandLU(const SparseMatrix& m) : n_(m.size()), perm_(reverse_cuthill_mckee(m)) {
        kl_ = 0;
        for (int r = 0; r < n_; ++r)
            for (int k = m.row_ptr()[r]; k < m.row_ptr()[r + 1]; ++k)
                kl_ = std::max(kl_, std::abs(perm_[r] - perm_[m.cols()[k]]));
        ku_ = kl_;
        ldab_ = 2 * kl_ + ku_ + 1;
        ab_.assign(static_cast<size_t>(ldab_) * n_, 0.0);
        for (int r = 0; r < n_; ++r)
            for (int k = m.row_ptr()[r]; k < m.row_ptr()[r + 1]; ++k)
                at(perm_[r], perm_[m.cols()[k]]) = m.values()[k];
        amax_ = m.max_abs();
        factorize();
    }

    int bandwidth() const { return kl_; }

    Vector solve(const Vector& rhs) const {
        if (static_cast<int>(rhs.size()) != n_)
            throw DimensionMismatch("BandLU::solve dimension mismatch");
        Vector b(n_);
        for (int i = 0; i < n_; ++i) b[perm_[i]] = rhs[i];
        const int kv = kl_ + ku_;
        // forward substitution with pivots
        for (int j = 0; j < n_ - 1; ++j) {
            const int p = ipiv_[j];
            if (p != j) std::swap(b[p], b[j]);
            const int km = std::min(kl_, n_ - 1 - j);
            for (int i = 1; i <= km; ++i) b[j + i] -= ab_[idx(kv + i, j)] * b[j];
        }
        // backward substitution
        for (int j = n_ - 1; j >= 0; --j) {
            b[j] /= ab_[idx(kv, j)];
            const int imin = std::max(0, j - kv);
            for (int i = imin; i < j; ++i) b[i] -= ab_[idx(kv + i - j, j)] * b[j];
        }
        Vector x(n_);
        for (int i = 0; i < n_; ++i) x[i] = b[perm_[i]];
        return x;
    }

  private:
    size_t idx(int r, int j) const { return static_cast<size_t>(j) * ldab_ + r; }

    double& at(int i, int j) { return ab_[idx(kl_ + ku_ + i - j, j)]; }

    void factorize() {
        const int kv = kl_ + ku_;
        ipiv_.resize(n_);
        int ju = 0;
        for (int j = 0; j < n_; ++j) {
            const int km = std::min(kl_, n_ - 1 - j);
            int jp = 0;
            double pmax = std::abs(ab_[idx(kv, j)]);
            for (int i = 1; i <= km; ++i) {
                const double v = std::abs(ab_[idx(kv + i, j)]);
                if (v > pmax) {
                    pmax = v;
                    jp = i;
                }
            }
            ipiv_[j] = j + jp;
            if (pmax <= 1e-13 * amax_)
                throw SingularMatrix("band LU: negligible pivot " + std::to_string(pmax) +
                                     " at column " + std::to_string(j));
            ju = std::max(ju, std::min(j + ku_ + jp, n_ - 1));
            if (jp != 0) {
                for (int jj = j; jj <= ju; ++jj)
                    std::swap(ab_[idx(kv + j + jp - jj, jj)], ab_[idx(kv + j - jj, jj)]);
            }
            const double piv = ab_[idx(kv, j)];
            for (int i = 1; i <= km; ++i) ab_[idx(kv + i, j)] /= piv;
            for (int jj = j + 1; jj <= ju; ++jj) {
                const double m = ab_[idx(kv + j - jj, jj)];
                if (m != 0.0)
                    for (int i = 1; i <= km; ++i)
                        ab_[idx(kv + j + i - jj, jj)] -= ab_[idx(kv + i, j)] * m;
            }
        }
    }

    int n_, kl_ = 0, ku_ = 0, ldab_ = 0;
    double amax_ = 0.0;
    std::vector<int> perm_;
    std::vector<double> ab_;
    std::vector<int> ipiv_;
};

// ---------------------------------------------------------------------------
// Krylov solvers with Jacobi preconditioning.
// ---------------------------------------------------------------------------

inline Vector conjugate_gradient(const SparseMatrix& m, const Vector& b, double tol,
                                 int max_iter) {
    const int n = m.size();
    const double bnorm = norm2(b);
    Vector x(n, 0.0);
    if (bnorm == 0.0) return x;
    Vector dinv = m.diagonal();
    for (double& d : dinv) d = (d != 0.0) ? 1.0 / d : 1.0;

    Vector r = b;
    Vector z(n);
    for (int i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
    Vector p = z;
    double rz = dot(r, z);
    for (int it = 0; it < max_iter; ++it) {
        const Vector ap = m.apply(p);
        const double pap = dot(p, ap);
        if (pap <= 0.0)
            throw SingularMatrix("CG: matrix not positive definite (p'Ap = " +
                                 std::to_string(pap) + ")");
        const double alpha = rz / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        if (norm2(r) <= tol * bnorm) {
            // confirm with a fresh residual
            Vector res = m.apply(x);
            for (int i = 0; i < n; ++i) res[i] -= b[i];
            if (norm2(res) <= tol * bnorm * 10.0) return x;
        }
        for (int i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw NoConvergence("CG did not reach tolerance " + std::to_string(tol), max_iter);
}

inline Vector bicgstab(const SparseMatrix& m, const Vector& b, double tol, int max_iter) {
    const int n = m.size();
    const double bnorm = norm2(b);
    Vector x(n, 0.0);
    if (bnorm == 0.0) return x;
    Vector dinv = m.diagonal();
    for (double& d : dinv) d = (d != 0.0) ? 1.0 / d : 1.0;

    Vector r = b;
    const Vector r0 = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    Vector v(n, 0.0), p(n, 0.0), phat(n), shat(n);
    for (int it = 0; it < max_iter; ++it) {
        const double rho_new = dot(r0, r);
        if (rho_new == 0.0) throw NoConvergence("BiCGSTAB breakdown (rho = 0)", it);
        if (it == 0) {
            p = r;
        } else {
            const double beta = (rho_new / rho) * (alpha / omega);
            for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho_new;
        for (int i = 0; i < n; ++i) phat[i] = dinv[i] * p[i];
        v = m.apply(phat);
        alpha = rho / dot(r0, v);
        Vector s = r;
        axpy(-alpha, v, s);
        if (norm2(s) <= tol * bnorm) {
            axpy(alpha, phat, x);
            return x;
        }
        for (int i = 0; i < n; ++i) shat[i] = dinv[i] * s[i];
        const Vector t = m.apply(shat);
        const double tt = dot(t, t);
        if (tt == 0.0) throw NoConvergence("BiCGSTAB breakdown (t = 0)", it);
        omega = dot(t, s) / tt;
        axpy(alpha, phat, x);
        axpy(omega, shat, x);
        r = s;
        axpy(-omega, t, r);
        if (norm2(r) <= tol * bnorm) {
            Vector res = m.apply(x);
            for (int i = 0; i < n; ++i) res[i] -= b[i];
            if (norm2(res) <= tol * bnorm * 10.0) return x;
        }
        if (omega == 0.0) throw NoConvergence("BiCGSTAB breakdown (omega = 0)", it);
    }
    throw NoConvergence("BiCGSTAB did not reach tolerance " + std::to_string(tol), max_iter);
}

// ---------------------------------------------------------------------------
// Solver front end with factorization caching.
// ---------------------------------------------------------------------------

enum class SolverMode { DirectFactorization, IterativeSPD, IterativeGeneral };

class SolverHandle {
  public:
    explicit SolverHandle(SolverMode mode = SolverMode::DirectFactorization, double tol = 1e-12,
                          int max_iter = 20000)
        : mode_(mode), tol_(tol), max_iter_(max_iter) {}

    SolverMode mode() const { return mode_; }
    double tolerance() const { return tol_; }

    /// Solve M x = b. In direct mode the factorization is cached and reused
    /// only while the matrix object and its contents are unchanged.
    Vector solve(const SparseMatrix& m, const Vector& b) const {
        if (m.size() != static_cast<int>(b.size()))
            throw DimensionMismatch("solve: rhs size " + std::to_string(b.size()) +
                                    " vs matrix dimension " + std::to_string(m.size()));
        switch (mode_) {
            case SolverMode::IterativeSPD:
                return conjugate_gradient(m, b, tol_, max_iter_);
            case SolverMode::IterativeGeneral:
                return bicgstab(m, b, tol_, max_iter_);
            case SolverMode::DirectFactorization:
                break;
        }
        const uint64_t fp = m.fingerprint();
        if (!cache_ || cache_key_ != &m || cache_fp_ != fp) {
            cache_ = std::make_shared<BandLU>(m);
            cache_key_ = &m;
            cache_fp_ = fp;
        }
        return cache_->solve(b);
    }

    void drop_cache() const {
        cache_.reset();
        cache_key_ = nullptr;
    }

  private:
    SolverMode mode_;
    double tol_;
    int max_iter_;
    mutable std::shared_ptr<BandLU> cache_;
    mutable const SparseMatrix* cache_key_ = nullptr;
    mutable uint64_t cache_fp_ = 0;
};

inline Vector solve(const SparseMatrix& m, const Vector& b, const SolverHandle& handle) {
    return handle.solve(m, b);
}

} // namespace bswave
