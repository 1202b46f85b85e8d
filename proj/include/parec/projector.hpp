#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "parec/errors.hpp"
#include "parec/forward_model.hpp"
#include "parec/operators.hpp"
#include "parec/vec.hpp"

extern "C" {
void dpotrf_(const char* uplo, const int* n, double* a, const int* lda, int* info);
void dpotrs_(const char* uplo, const int* n, const int* nrhs, const double* a, const int* lda,
             double* b, const int* ldb, int* info);
}

namespace parec {

namespace detail {

// Conjugate gradients on the Gram system (A A^T) z = b, matrix-free.
// Stops when ||b - (A A^T) z|| <= tol_abs; throws past max_iters, carrying
// the best iterate seen.
template <LinearOperator Op>
std::vector<double> cg_gram_solve(const Op& A, std::span<const double> b, double tol_abs,
                                  std::size_t max_iters) {
    const std::size_t n = b.size();
    std::vector<double> z(n, 0.0);
    std::vector<double> r(b.begin(), b.end());
    std::vector<double> p = r;
    std::vector<double> z_best = z;
    double rr = dot(r, r);
    double best = std::sqrt(rr);
    if (best <= tol_abs) return z;

    for (std::size_t it = 0; it < max_iters; ++it) {
        const std::vector<double> q = A.apply(A.apply_adjoint(p));
        const double pq = dot(p, q);
        if (!(pq > 0.0)) break;  // breakdown on a (numerically) singular system
        const double alpha = rr / pq;
        axpy(alpha, p, z);
        axpy(-alpha, q, r);
        const double rr_next = dot(r, r);
        const double res = std::sqrt(rr_next);
        if (res < best) {
            best = res;
            z_best = z;
        }
        if (res <= tol_abs) return z;
        const double beta = rr_next / rr;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        rr = rr_next;
    }
    throw ConvergenceError("least-norm projection: CG did not reach tolerance " +
                               std::to_string(tol_abs) + " (best residual " +
                               std::to_string(best) + ")",
                           std::move(z_best), max_iters, best);
}

}  // namespace detail

// Orthogonal projection of theta onto the affine solution set {s : A s = y},
// i.e. theta - A^T z with (A A^T) z = A theta - y solved by conjugate
// gradients. For theta = 0 this returns the minimum-l2-norm solution.
// The stopping tolerance is relative to ||y|| (so the projected point is
// feasible to tol in the usual relative sense); if y = 0 it falls back to
// the initial residual norm.
template <LinearOperator Op>
std::vector<double> min_l2_projection(const Op& A, std::span<const double> y,
                                      std::span<const double> theta, double tol,
                                      std::size_t max_iters) {
    require(tol > 0.0, "min_l2_projection: tol must be positive");
    require(y.size() == A.rows(), "min_l2_projection: y length must equal rows");
    require(theta.size() == A.cols(), "min_l2_projection: theta length must equal cols");

    std::vector<double> b = A.apply(theta);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= y[i];
    const double ny = norm2(y);
    const double tol_abs = tol * (ny > 0.0 ? ny : norm2(b));
    if (norm2(b) <= tol_abs) return std::vector<double>(theta.begin(), theta.end());

    std::vector<double> z;
    try {
        z = detail::cg_gram_solve(A, b, tol_abs, max_iters);
    } catch (ConvergenceError& e) {
        // Re-throw with the best *projected* iterate rather than the dual z.
        std::vector<double> best(theta.begin(), theta.end());
        const std::vector<double> corr = A.apply_adjoint(e.best_iterate);
        axpy(-1.0, corr, best);
        throw ConvergenceError(e.what(), std::move(best), e.iterations_run, e.residual);
    }
    std::vector<double> out(theta.begin(), theta.end());
    const std::vector<double> corr = A.apply_adjoint(z);
    axpy(-1.0, corr, out);
    return out;
}

// Projector backed by min_l2_projection; one CG solve per call.
class CgProjector {
public:
    CgProjector(double tol, std::size_t max_iters) : tol_(tol), max_iters_(max_iters) {}

    template <LinearOperator Op>
    std::vector<double> project(const Op& A, std::span<const double> y,
                                std::span<const double> theta) const {
        return min_l2_projection(A, y, theta, tol_, max_iters_);
    }

private:
    double tol_;
    std::size_t max_iters_;
};

// Projector backed by a one-time dense Cholesky factorization of the Gram
// matrix K K^T (equal to A A^T for any orthonormal basis). The measured CG
// iteration counts on the full-scale circular-array model are in the tens of
// thousands per projection; factoring the Gram once (n^2 doubles, one
// LAPACK dpotrf) makes every subsequent projection essentially exact at the
// cost of two triangular solves.
class GramCholeskyProjector {
public:
    explicit GramCholeskyProjector(const ModelMatrix& K) : n_(K.rows()) {
        // Row-index/weight list per model column; each column contributes
        // the outer product of its list to the lower triangle of K K^T.
        std::vector<std::vector<std::pair<std::uint32_t, double>>> by_col(K.cols());
        for (std::size_t r = 0; r < K.rows(); ++r)
            for (std::uint64_t k = K.row_ptr[r]; k < K.row_ptr[r + 1]; ++k)
                by_col[K.col_idx[k]].push_back({static_cast<std::uint32_t>(r), K.weights[k]});

        auto build_gram = [&] {
            factor_.assign(n_ * n_, 0.0);
            for (const auto& entries : by_col) {
                for (std::size_t a = 0; a < entries.size(); ++a) {
                    const auto [ra, wa] = entries[a];
                    double* col = factor_.data() + static_cast<std::size_t>(ra) * n_;
                    for (std::size_t b = a; b < entries.size(); ++b)
                        col[entries[b].first] += wa * entries[b].second;
                }
            }
        };

        build_gram();
        double max_diag = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            max_diag = std::max(max_diag, factor_[i * n_ + i]);
        require(max_diag > 0.0, "GramCholeskyProjector: zero model matrix");

        // Ridge the diagonal: the Gram is singular whenever the time window
        // has empty rows or the derivative null space intersects the data.
        double ridge = 1e-12 * max_diag;
        for (int attempt = 0; attempt < 5; ++attempt) {
            if (attempt > 0) build_gram();
            for (std::size_t i = 0; i < n_; ++i) factor_[i * n_ + i] += ridge;
            const int n = static_cast<int>(n_);
            int info = 0;
            dpotrf_("L", &n, factor_.data(), &n, &info);
            if (info == 0) return;
            ridge *= 100.0;
        }
        throw NumericalError("GramCholeskyProjector: Cholesky factorization failed");
    }

    template <LinearOperator Op>
    std::vector<double> project(const Op& A, std::span<const double> y,
                                std::span<const double> theta) const {
        require(A.rows() == n_, "GramCholeskyProjector: operator size mismatch");
        std::vector<double> b = A.apply(theta);
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= y[i];
        solve_in_place(b);
        std::vector<double> out(theta.begin(), theta.end());
        const std::vector<double> corr = A.apply_adjoint(b);
        axpy(-1.0, corr, out);
        return out;
    }

    void solve_in_place(std::vector<double>& rhs) const {
        require(rhs.size() == n_, "GramCholeskyProjector: rhs size mismatch");
        const int n = static_cast<int>(n_);
        const int one = 1;
        int info = 0;
        dpotrs_("L", &n, &one, factor_.data(), &n, rhs.data(), &n, &info);
        if (info != 0) throw NumericalError("GramCholeskyProjector: dpotrs failed");
    }

    std::size_t size() const { return n_; }

private:
    std::size_t n_;
    std::vector<double> factor_;  // column-major lower Cholesky factor
};

}  // namespace parec
