#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "parec/errors.hpp"
#include "parec/forward_model.hpp"
#include "parec/grid.hpp"
#include "parec/operators.hpp"
#include "parec/projector.hpp"
#include "parec/rng.hpp"
#include "parec/vec.hpp"
#include "parec/wavelet.hpp"

namespace parec {

enum class Method { sl0, bp, ir };

inline Method method_from_string(const std::string& s) {
    if (s == "sl0") return Method::sl0;
    if (s == "bp") return Method::bp;
    if (s == "ir") return Method::ir;
    throw std::invalid_argument("unknown reconstruction method: " + s);
}

inline std::string to_string(Method m) {
    switch (m) {
        case Method::sl0: return "sl0";
        case Method::bp: return "bp";
        case Method::ir: return "ir";
    }
    throw std::invalid_argument("unknown reconstruction method tag");
}

enum class ProjectorBackend {
    automatic,  // Gram factorization when affordable, else CG
    cg,
    gram,
};

struct Sl0Params {
    double sigma_min_ratio = 0.01;   // sigma floor as a fraction of sigma_1
    double sigma_decrease = 0.5;     // geometric schedule factor
    double step_mu = 2.0;            // gradient step scale of the inner loop
    std::size_t inner_iterations = 3;
    double projection_tolerance = 1e-6;  // relative feasibility ||y - A theta|| / ||y||
    std::size_t projection_max_iters = 2000;
    ProjectorBackend projector = ProjectorBackend::automatic;

    void validate() const {
        require(sigma_decrease > 0.0 && sigma_decrease < 1.0,
                "sl0: sigma_decrease must be in (0,1)");
        require(sigma_min_ratio > 0.0 && sigma_min_ratio < 1.0,
                "sl0: sigma_min_ratio must be in (0,1)");
        require(step_mu > 0.0, "sl0: step_mu must be positive");
        require(inner_iterations >= 1, "sl0: inner_iterations must be >= 1");
        require(projection_tolerance > 0.0, "sl0: projection_tolerance must be positive");
        require(projection_max_iters >= 1, "sl0: projection_max_iters must be >= 1");
    }
};

struct BpParams {
    double lambda_final = 1e-3;
    // When set, lambda_final is a fraction of ||A^T y||_inf rather than an
    // absolute weight; the continuation start 0.5*||A^T y||_inf is data-scaled
    // either way.
    bool lambda_is_relative = true;
    std::size_t continuation_steps = 8;
    std::size_t max_iterations = 300;  // per continuation stage
    double tolerance = 1e-8;           // relative iterate change floor

    void validate() const {
        require(lambda_final > 0.0, "bp: lambda_final must be positive");
        require(continuation_steps >= 1, "bp: continuation_steps must be >= 1");
        require(max_iterations >= 1, "bp: max_iterations must be >= 1");
        require(tolerance >= 0.0, "bp: tolerance must be >= 0");
    }
};

struct IrParams {
    std::size_t iterations = 20;
    double step = 0.0;  // 0 = auto (1/L with L from power iteration)
    double tikhonov_mu = 0.0;
    bool nonneg = false;

    void validate() const {
        require(iterations >= 1, "ir: iterations must be >= 1");
        require(step >= 0.0, "ir: step must be positive or 0 (auto)");
        require(tikhonov_mu >= 0.0, "ir: tikhonov_mu must be >= 0");
    }
};

using SolverParams = std::variant<Sl0Params, BpParams, IrParams>;

struct TraceEntry {
    std::size_t iteration = 0;
    double control = 0.0;  // sigma (SL0), lambda (BP) or step (IR)
    double objective = 0.0;
    double residual = 0.0;
};

struct ReconResult {
    Image image;
    std::optional<std::vector<double>> coefficients;
    std::size_t iterations_run = 0;
    double residual_norm = 0.0;
    std::vector<TraceEntry> objective_trace;
};

// ---------------------------------------------------------------------------
// Smoothed l0 surrogate
// ---------------------------------------------------------------------------

// m - sum_i exp(-theta_i^2 / (2 sigma^2)): approaches ||theta||_0 as sigma -> 0.
inline double smoothed_l0_value(std::span<const double> theta, double sigma) {
    require(sigma > 0.0, "smoothed_l0_value: sigma must be positive");
    double f = 0.0;
    for (double t : theta) f += std::exp(-t * t / (2.0 * sigma * sigma));
    return static_cast<double>(theta.size()) - f;
}

// Gradient of the surrogate: component i is (theta_i / sigma^2) exp(-theta_i^2 / 2 sigma^2).
inline std::vector<double> smoothed_l0_gradient(std::span<const double> theta, double sigma) {
    require(sigma > 0.0, "smoothed_l0_gradient: sigma must be positive");
    std::vector<double> g(theta.size());
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t i = 0; i < theta.size(); ++i)
        g[i] = theta[i] / (sigma * sigma) * std::exp(-theta[i] * theta[i] * inv2s2);
    return g;
}

// ---------------------------------------------------------------------------
// Power iteration
// ---------------------------------------------------------------------------

// Largest eigenvalue of A^T A; the start vector is drawn from a fixed seed so
// the whole solver stack stays deterministic.
template <LinearOperator Op>
double power_iteration_lmax(const Op& A, std::size_t max_iters = 100, double rel_tol = 1e-6,
                            std::uint64_t seed = 0x9e3779b97f4a7c15ull) {
    GaussianSampler gauss(seed);
    std::vector<double> v(A.cols());
    for (double& x : v) x = gauss();
    const double nv = norm2(v);
    if (nv == 0.0) return 0.0;
    scale(v, 1.0 / nv);

    double lambda = 0.0;
    for (std::size_t it = 0; it < max_iters; ++it) {
        std::vector<double> w = A.apply_adjoint(A.apply(v));
        const double rayleigh = dot(v, w);
        const double nw = norm2(w);
        if (nw == 0.0) return 0.0;
        scale(w, 1.0 / nw);
        v = std::move(w);
        if (it > 0 && std::abs(rayleigh - lambda) <= rel_tol * std::abs(rayleigh)) {
            return rayleigh;
        }
        lambda = rayleigh;
    }
    return lambda;
}

// ---------------------------------------------------------------------------
// Result assembly helpers
// ---------------------------------------------------------------------------

namespace detail {

template <LinearOperator Op>
Image coefficients_to_image(const Op& A, std::span<const double> theta) {
    if constexpr (requires { A.synthesize_image(theta); }) {
        return A.synthesize_image(theta);
    } else if constexpr (requires { A.grid; }) {
        return Image{A.grid, std::vector<double>(theta.begin(), theta.end())};
    } else {
        return Image{ImagingGrid{theta.size(), 1, 1.0, 0.0, 0.0},
                     std::vector<double>(theta.begin(), theta.end())};
    }
}

template <LinearOperator Op>
const ModelMatrix* model_of(const Op& A) {
    if constexpr (std::same_as<Op, ModelMatrix>) {
        return &A;
    } else if constexpr (requires { A.model(); }) {
        return &A.model();
    } else {
        return nullptr;
    }
}

inline void check_finite(std::span<const double> v, const char* where) {
    if (!all_finite(v)) throw NumericalError(std::string(where) + ": iterate is not finite");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SL0
// ---------------------------------------------------------------------------

// Smoothed-l0 minimization of ||theta||_0 s.t. A theta = y:
// start from the least-norm solution, anneal sigma geometrically from
// 2*max|theta| down to sigma_min_ratio times that, and for each sigma take
// inner_iterations steps of
//     theta <- theta - step_mu * theta .* exp(-theta^2 / 2 sigma^2)
// (the sigma^2-scaled surrogate gradient), re-projecting onto the solution
// set after every step.
template <LinearOperator Op, class Projector>
ReconResult sl0_solve(const Op& A, const Sinogram& y, const Sl0Params& params,
                      const Projector& projector) {
    params.validate();
    require(y.values.size() == A.rows(), "sl0_solve: measurement length mismatch");
    require(all_finite(y.values), "sl0_solve: measurements must be finite");

    const std::size_t m = A.cols();
    const double norm_y = norm2(y.values);

    ReconResult result;
    std::vector<double> theta(m, 0.0);
    std::size_t gradient_steps = 0;

    theta = projector.project(A, y.values, theta);
    detail::check_finite(theta, "sl0_solve");

    const double sigma1 = 2.0 * max_abs(theta);
    if (sigma1 > 0.0) {
        const double sigma_min = params.sigma_min_ratio * sigma1;
        for (double sigma = sigma1; sigma >= sigma_min * (1.0 - 1e-12);
             sigma *= params.sigma_decrease) {
            for (std::size_t inner = 0; inner < params.inner_iterations; ++inner) {
                const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
                for (std::size_t i = 0; i < m; ++i)
                    theta[i] -= params.step_mu * theta[i] * std::exp(-theta[i] * theta[i] * inv2s2);
                theta = projector.project(A, y.values, theta);
                ++gradient_steps;
            }
            detail::check_finite(theta, "sl0_solve");
            std::vector<double> r = A.apply(theta);
            axpy(-1.0, y.values, r);
            result.objective_trace.push_back(
                {gradient_steps, sigma, smoothed_l0_value(theta, sigma), norm2(r)});
        }
    }

    // Post-condition: the returned point is feasible to the requested
    // tolerance (one extra projection pass covers backends that do not
    // control the residual directly).
    std::vector<double> r = A.apply(theta);
    axpy(-1.0, y.values, r);
    double res = norm2(r);
    if (res > params.projection_tolerance * norm_y) {
        theta = projector.project(A, y.values, theta);
        r = A.apply(theta);
        axpy(-1.0, y.values, r);
        res = norm2(r);
        if (res > params.projection_tolerance * norm_y)
            throw ConvergenceError("sl0_solve: final iterate is not feasible to tolerance",
                                   std::move(theta), gradient_steps, res);
    }

    result.image = detail::coefficients_to_image(A, theta);
    result.coefficients = std::move(theta);
    result.iterations_run = gradient_steps;
    result.residual_norm = res;
    return result;
}

template <LinearOperator Op>
ReconResult sl0_solve(const Op& A, const Sinogram& y, const Sl0Params& params) {
    params.validate();
    ProjectorBackend backend = params.projector;
    const ModelMatrix* model = detail::model_of(A);
    if (backend == ProjectorBackend::automatic) {
        // The Gram factor costs rows^2 doubles and one dpotrf; past ~12k rows
        // that stops being worth it and CG is the only option anyway.
        backend = (model != nullptr && A.rows() <= 12000) ? ProjectorBackend::gram
                                                          : ProjectorBackend::cg;
    }
    if (backend == ProjectorBackend::gram) {
        require(model != nullptr, "sl0_solve: gram projector needs a model matrix");
        const GramCholeskyProjector projector(*model);
        return sl0_solve(A, y, params, projector);
    }
    const CgProjector projector(params.projection_tolerance, params.projection_max_iters);
    return sl0_solve(A, y, params, projector);
}

// ---------------------------------------------------------------------------
// Basis pursuit (l1) via accelerated proximal gradient with continuation
// ---------------------------------------------------------------------------

// min_theta 0.5 ||y - A theta||^2 + lambda ||theta||_1 solved by FISTA with a
// monotone safeguard, warm-started along a geometric lambda continuation from
// 0.5 * ||A^T y||_inf down to the final weight.
template <LinearOperator Op>
ReconResult basis_pursuit_solve(const Op& A, const Sinogram& y, const BpParams& params) {
    params.validate();
    require(y.values.size() == A.rows(), "basis_pursuit_solve: measurement length mismatch");
    require(all_finite(y.values), "basis_pursuit_solve: measurements must be finite");

    const std::size_t m = A.cols();
    ReconResult result;

    const std::vector<double> aty = A.apply_adjoint(y.values);
    const double aty_inf = max_abs(aty);
    std::vector<double> theta(m, 0.0);
    if (aty_inf == 0.0) {
        // A^T y = 0: theta = 0 already minimizes every stage objective.
        result.image = detail::coefficients_to_image(A, theta);
        result.coefficients = std::move(theta);
        result.residual_norm = norm2(y.values);
        return result;
    }

    const double lmax = power_iteration_lmax(A);
    require(lmax > 0.0, "basis_pursuit_solve: operator has zero spectral norm");
    // 1% headroom over the power-iteration estimate keeps the plain proximal
    // step a guaranteed descent step.
    const double step = 1.0 / (lmax * 1.01);

    const double lambda0 = 0.5 * aty_inf;
    double lambda_final =
        params.lambda_is_relative ? params.lambda_final * aty_inf : params.lambda_final;
    lambda_final = std::min(lambda_final, lambda0);

    auto soft = [](double x, double t) { return x > t ? x - t : (x < -t ? x + t : 0.0); };

    auto objective = [&](std::span<const double> th, double lambda,
                         std::vector<double>& r_out) {
        r_out = A.apply(th);
        axpy(-1.0, y.values, r_out);
        double l1 = 0.0;
        for (double v : th) l1 += std::abs(v);
        return 0.5 * dot(r_out, r_out) + lambda * l1;
    };

    std::size_t total_iters = 0;
    std::vector<double> r;
    double residual = norm2(y.values);

    for (std::size_t stage = 0; stage < params.continuation_steps; ++stage) {
        double lambda = lambda_final;
        if (params.continuation_steps > 1) {
            const double f = static_cast<double>(stage) /
                             static_cast<double>(params.continuation_steps - 1);
            lambda = lambda0 * std::pow(lambda_final / lambda0, f);
        }

        std::vector<double> x = theta;
        std::vector<double> yk = theta;
        double t = 1.0;
        double obj_prev = objective(x, lambda, r);

        for (std::size_t it = 0; it < params.max_iterations; ++it) {
            std::vector<double> grad_pt = A.apply(yk);
            axpy(-1.0, y.values, grad_pt);
            std::vector<double> g = A.apply_adjoint(grad_pt);
            std::vector<double> cand(m);
            for (std::size_t i = 0; i < m; ++i) cand[i] = soft(yk[i] - step * g[i], lambda * step);
            double obj = objective(cand, lambda, r);

            if (obj > obj_prev) {
                // Monotone restart: discard the momentum point and take a
                // plain proximal step from the last accepted iterate.
                grad_pt = A.apply(x);
                axpy(-1.0, y.values, grad_pt);
                g = A.apply_adjoint(grad_pt);
                for (std::size_t i = 0; i < m; ++i)
                    cand[i] = soft(x[i] - step * g[i], lambda * step);
                obj = objective(cand, lambda, r);
                t = 1.0;
                if (obj > obj_prev) {
                    // Floating-point floor reached for this stage.
                    ++total_iters;
                    break;
                }
                yk = cand;
            } else {
                const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
                yk.resize(m);
                for (std::size_t i = 0; i < m; ++i)
                    yk[i] = cand[i] + ((t - 1.0) / t_next) * (cand[i] - x[i]);
                t = t_next;
            }

            double diff = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double d = cand[i] - x[i];
                diff += d * d;
            }
            const double nx = norm2(x);
            x = std::move(cand);
            obj_prev = obj;
            residual = norm2(r);
            ++total_iters;
            result.objective_trace.push_back({total_iters, lambda, obj, residual});
            if (std::sqrt(diff) < params.tolerance * std::max(nx, 1e-300)) break;
        }
        detail::check_finite(x, "basis_pursuit_solve");
        theta = std::move(x);
    }

    result.image = detail::coefficients_to_image(A, theta);
    result.coefficients = std::move(theta);
    result.iterations_run = total_iters;
    result.residual_norm = residual;
    return result;
}

// ---------------------------------------------------------------------------
// Iterative least squares / Tikhonov (Landweber)
// ---------------------------------------------------------------------------

// Gradient descent on 0.5||y - K x||^2 + 0.5 mu ||x||^2 from x = 0, run for
// exactly params.iterations steps, optionally projected onto x >= 0.
inline ReconResult ir_solve(const ModelMatrix& K, const Sinogram& y, const IrParams& params) {
    params.validate();
    require(y.values.size() == K.rows(), "ir_solve: measurement length mismatch");
    require(all_finite(y.values), "ir_solve: measurements must be finite");

    double step = params.step;
    if (step == 0.0) {
        const double lmax = power_iteration_lmax(K);
        require(lmax > 0.0, "ir_solve: operator has zero spectral norm");
        step = 1.0 / lmax;
    }

    ReconResult result;
    std::vector<double> x(K.cols(), 0.0);
    double residual = norm2(y.values);

    for (std::size_t it = 0; it < params.iterations; ++it) {
        std::vector<double> r = K.apply(x);
        axpy(-1.0, y.values, r);
        residual = norm2(r);
        const double obj = 0.5 * residual * residual + 0.5 * params.tikhonov_mu * dot(x, x);
        result.objective_trace.push_back({it, step, obj, residual});

        std::vector<double> g = K.apply_adjoint(r);
        if (params.tikhonov_mu != 0.0) axpy(params.tikhonov_mu, x, g);
        axpy(-step, g, x);
        if (params.nonneg)
            for (double& v : x) v = std::max(v, 0.0);
        detail::check_finite(x, "ir_solve");
    }

    std::vector<double> r = K.apply(x);
    axpy(-1.0, y.values, r);
    result.residual_norm = norm2(r);
    result.iterations_run = params.iterations;
    result.image = Image{K.grid, std::move(x)};
    return result;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

inline ReconResult reconstruct(Method method, const ModelMatrix& K, const WaveletBasis& basis,
                               const Sinogram& y, const SolverParams& params) {
    switch (method) {
        case Method::sl0: {
            require(std::holds_alternative<Sl0Params>(params),
                    "reconstruct: params do not match method sl0");
            const CsOperator A(K, basis);
            return sl0_solve(A, y, std::get<Sl0Params>(params));
        }
        case Method::bp: {
            require(std::holds_alternative<BpParams>(params),
                    "reconstruct: params do not match method bp");
            const CsOperator A(K, basis);
            return basis_pursuit_solve(A, y, std::get<BpParams>(params));
        }
        case Method::ir: {
            require(std::holds_alternative<IrParams>(params),
                    "reconstruct: params do not match method ir");
            return ir_solve(K, y, std::get<IrParams>(params));
        }
    }
    throw std::invalid_argument("reconstruct: unknown method tag");
}

}  // namespace parec
