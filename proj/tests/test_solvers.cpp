#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "parec/operators.hpp"
#include "parec/projector.hpp"
#include "parec/rng.hpp"
#include "parec/solvers.hpp"

using namespace parec;

namespace {

Sinogram as_sinogram(std::vector<double> values) {
    Sinogram y;
    y.num_sensors = values.size();
    y.num_samples = 1;
    y.values = std::move(values);
    return y;
}

Eigen::MatrixXd to_eigen(const ModelMatrix& K) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K.rows()),
                                              static_cast<Eigen::Index>(K.cols()));
    for (std::size_t r = 0; r < K.rows(); ++r)
        for (std::uint64_t k = K.row_ptr[r]; k < K.row_ptr[r + 1]; ++k)
            M(static_cast<Eigen::Index>(r), K.col_idx[k]) = K.weights[k];
    return M;
}

std::vector<double> random_vector(std::size_t n, GaussianSampler& gauss) {
    std::vector<double> v(n);
    for (double& x : v) x = gauss();
    return v;
}

double rel_error(std::span<const double> a, std::span<const double> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

}  // namespace

// ---------------------------------------------------------------------------
// Smoothed-l0 surrogate
// ---------------------------------------------------------------------------

TEST_CASE("smoothed_l0_value on reference points") {
    const std::vector<double> zeros(7, 0.0);
    CHECK(smoothed_l0_value(zeros, 1.0) == Catch::Approx(0.0).margin(1e-15));

    const double sigma = 0.37;
    const std::vector<double> single = {sigma};
    CHECK(smoothed_l0_value(single, sigma) ==
          Catch::Approx(1.0 - std::exp(-0.5)).epsilon(1e-12));

    // Well-separated support: the surrogate counts the nonzeros.
    const double s = 1e-3;
    const std::vector<double> sparse = {100 * s, 0.0, -250 * s, 0.0, 0.0, 400 * s};
    CHECK(std::abs(smoothed_l0_value(sparse, s) - 3.0) <= 1e-10);

    CHECK_THROWS_AS(smoothed_l0_value(zeros, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(smoothed_l0_value(zeros, -1.0), std::invalid_argument);
}

TEST_CASE("surrogate gradient matches central finite differences") {
    GaussianSampler gauss(2024);
    for (double sigma : {0.1, 1.0, 10.0}) {
        for (int pt = 0; pt < 50; ++pt) {
            std::vector<double> theta = random_vector(12, gauss);
            for (double& v : theta) v *= 2.0 * sigma;
            const std::vector<double> grad = smoothed_l0_gradient(theta, sigma);
            const double h = 1e-6 * sigma;
            for (std::size_t i = 0; i < theta.size(); ++i) {
                std::vector<double> plus = theta, minus = theta;
                plus[i] += h;
                minus[i] -= h;
                const double fd =
                    (smoothed_l0_value(plus, sigma) - smoothed_l0_value(minus, sigma)) / (2 * h);
                if (std::abs(fd) > 1e-12)
                    REQUIRE(std::abs(grad[i] - fd) <= 1e-6 * std::abs(fd));
                else
                    REQUIRE(std::abs(grad[i]) <= 1e-9);
            }
        }
    }
}

TEST_CASE("surrogate approaches the l0 norm monotonically as sigma shrinks") {
    const std::vector<double> theta = {3.0, 0.0, -1.5, 0.0, 0.25, 0.0, 0.0};
    double prev = -1.0;
    for (double sigma = 4.0; sigma > 1e-4; sigma *= 0.5) {
        const double v = smoothed_l0_value(theta, sigma);
        REQUIRE(v >= prev);
        prev = v;
    }
    CHECK(prev == Catch::Approx(3.0).margin(1e-9));
}

// ---------------------------------------------------------------------------
// Least-norm projection
// ---------------------------------------------------------------------------

TEST_CASE("min_l2_projection leaves feasible points unchanged") {
    const ModelMatrix K = ModelMatrix::from_dense(2, 3, std::vector<double>{1, 0, 1, 0, 1, 1});
    const WaveletBasis basis = identity_basis(K);
    const CsOperator A(K, basis);
    const std::vector<double> theta = {0.0, 0.0, 1.0};
    const std::vector<double> y = {1.0, 1.0};
    const std::vector<double> out = min_l2_projection(A, y, theta, 1e-10, 50);
    for (std::size_t i = 0; i < 3; ++i)
        REQUIRE(std::abs(out[i] - theta[i]) <= 1e-12);
}

TEST_CASE("min_l2_projection splits the symmetric 1x2 system evenly") {
    const ModelMatrix K = ModelMatrix::from_dense(1, 2, std::vector<double>{1, 1});
    const WaveletBasis basis = identity_basis(K);
    const CsOperator A(K, basis);
    const std::vector<double> out =
        min_l2_projection(A, std::vector<double>{2.0}, std::vector<double>{0.0, 0.0}, 1e-12, 50);
    CHECK(out[0] == Catch::Approx(1.0).margin(1e-10));
    CHECK(out[1] == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("min_l2_projection reproduces the hand-solved 2x3 least-norm point") {
    const ModelMatrix K = ModelMatrix::from_dense(2, 3, std::vector<double>{1, 0, 1, 0, 1, 1});
    const WaveletBasis basis = identity_basis(K);
    const CsOperator A(K, basis);
    const std::vector<double> out = min_l2_projection(
        A, std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 0.0, 0.0}, 1e-12, 50);
    CHECK(out[0] == Catch::Approx(1.0 / 3.0).margin(1e-10));
    CHECK(out[1] == Catch::Approx(1.0 / 3.0).margin(1e-10));
    CHECK(out[2] == Catch::Approx(2.0 / 3.0).margin(1e-10));
}

TEST_CASE("min_l2_projection reports CG stagnation with the best iterate") {
    const ModelMatrix K = ModelMatrix::from_dense(2, 3, std::vector<double>{1, 0, 1, 0, 1, 1});
    const WaveletBasis basis = identity_basis(K);
    const CsOperator A(K, basis);
    try {
        min_l2_projection(A, std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 0.0, 0.0},
                          1e-30, 1);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.best_iterate.size() == 3);
        CHECK(e.iterations_run == 1);
    }
}

// ---------------------------------------------------------------------------
// SL0
// ---------------------------------------------------------------------------

TEST_CASE("sl0 on a determined system pins the unique solution") {
    const ModelMatrix K = ModelMatrix::identity(5);
    const WaveletBasis basis = identity_basis(K);
    const CsOperator A(K, basis);
    const Sinogram y = as_sinogram({0.3, -1.2, 0.0, 2.5, 0.7});
    Sl0Params params;
    params.projector = ProjectorBackend::cg;
    const ReconResult result = sl0_solve(A, y, params);
    REQUIRE(result.coefficients.has_value());
    for (std::size_t i = 0; i < 5; ++i)
        REQUIRE((*result.coefficients)[i] == Catch::Approx(y.values[i]).margin(1e-9));
}

TEST_CASE("sl0 recovers the sparsest solution of the 2x3 example") {
    const ModelMatrix K = ModelMatrix::from_dense(2, 3, std::vector<double>{1, 0, 1, 0, 1, 1});
    const WaveletBasis basis = identity_basis(K);
    const CsOperator A(K, basis);
    const Sinogram y = as_sinogram({1.0, 1.0});

    // Certify by exhaustive support enumeration that [0,0,1] is the unique
    // sparsest feasible point.
    const Eigen::MatrixXd M = to_eigen(K);
    Eigen::Vector2d b(1.0, 1.0);
    int sparsest_support = -1;
    for (int j = 0; j < 3; ++j) {
        const Eigen::VectorXd c = M.col(j).colPivHouseholderQr().solve(b);
        if ((M.col(j) * c - b).norm() < 1e-12) {
            REQUIRE(sparsest_support == -1);
            sparsest_support = j;
        }
    }
    REQUIRE(sparsest_support == 2);

    for (ProjectorBackend backend : {ProjectorBackend::cg, ProjectorBackend::gram}) {
        Sl0Params params;
        params.projector = backend;
        params.sigma_min_ratio = 1e-4;
        const ReconResult result = sl0_solve(A, y, params);
        REQUIRE(result.coefficients.has_value());
        const auto& theta = *result.coefficients;
        const std::vector<double> expected = {0.0, 0.0, 1.0};
        double err = 0.0;
        for (std::size_t i = 0; i < 3; ++i) err += (theta[i] - expected[i]) * (theta[i] - expected[i]);
        REQUIRE(std::sqrt(err) <= 1e-4);
    }
}

TEST_CASE("sl0 final iterate is feasible to the projection tolerance") {
    GaussianSampler gauss(7);
    const std::size_t rows = 20, cols = 50;
    const std::vector<double> dense = random_vector(rows * cols, gauss);
    const ModelMatrix K = ModelMatrix::from_dense(rows, cols, dense);
    const WaveletBasis basis = identity_basis(K);
    const CsOperator A(K, basis);

    std::vector<double> truth(cols, 0.0);
    truth[3] = 1.4;
    truth[17] = -0.8;
    truth[31] = 2.2;
    const Sinogram y = as_sinogram(K.apply(truth));

    Sl0Params params;
    params.sigma_min_ratio = 1e-4;
    for (ProjectorBackend backend : {ProjectorBackend::cg, ProjectorBackend::gram}) {
        params.projector = backend;
        const ReconResult result = sl0_solve(A, y, params);
        REQUIRE(result.residual_norm <= params.projection_tolerance * norm2(y.values));
        REQUIRE(result.coefficients.has_value());
        CHECK(rel_error(*result.coefficients, truth) < 1e-3);
    }
}

TEST_CASE("sl0 is scale equivariant when the schedule derives from the data") {
    GaussianSampler gauss(12);
    const std::size_t rows = 15, cols = 40;
    const std::vector<double> dense = random_vector(rows * cols, gauss);
    const ModelMatrix K = ModelMatrix::from_dense(rows, cols, dense);
    const WaveletBasis basis = identity_basis(K);
    const CsOperator A(K, basis);

    std::vector<double> truth(cols, 0.0);
    truth[5] = 0.9;
    truth[21] = -1.7;
    const std::vector<double> y1 = K.apply(truth);
    std::vector<double> y2 = y1;
    scale(y2, 2.0);

    Sl0Params params;
    params.projector = ProjectorBackend::cg;
    const ReconResult a = sl0_solve(A, as_sinogram(y1), params);
    const ReconResult b = sl0_solve(A, as_sinogram(y2), params);
    REQUIRE(a.coefficients.has_value());
    REQUIRE(b.coefficients.has_value());
    std::vector<double> doubled = *a.coefficients;
    scale(doubled, 2.0);
    CHECK(rel_error(*b.coefficients, doubled) <= 1e-8);
}

TEST_CASE("sl0 recovers sparse vectors from random Gaussian measurements") {
    GaussianSampler gauss(404);
    const std::size_t rows = 40, cols = 100, sparsity = 5;
    int success = 0;
    const int trials = 10;
    for (int t = 0; t < trials; ++t) {
        const std::vector<double> dense = random_vector(rows * cols, gauss);
        const ModelMatrix K = ModelMatrix::from_dense(rows, cols, dense);
        const WaveletBasis basis = identity_basis(K);
        const CsOperator A(K, basis);

        std::vector<double> truth(cols, 0.0);
        std::size_t placed = 0;
        while (placed < sparsity) {
            const auto idx = static_cast<std::size_t>(gauss.engine()() % cols);
            if (truth[idx] != 0.0) continue;
            double v = gauss();
            if (std::abs(v) < 0.1) v = v < 0 ? v - 0.1 : v + 0.1;
            truth[idx] = v;
            ++placed;
        }
        const Sinogram y = as_sinogram(K.apply(truth));
        Sl0Params params;
        params.sigma_min_ratio = 1e-4;
        params.projector = ProjectorBackend::gram;
        const ReconResult result = sl0_solve(A, y, params);
        if (rel_error(*result.coefficients, truth) < 1e-3) ++success;
    }
    CHECK(success >= 9);
}

// ---------------------------------------------------------------------------
// Basis pursuit
// ---------------------------------------------------------------------------

TEST_CASE("bp on the identity reduces to soft thresholding") {
    const ModelMatrix K = ModelMatrix::identity(6);
    const WaveletBasis basis = identity_basis(K);
    const CsOperator A(K, basis);
    const Sinogram y = as_sinogram({1.0, -0.2, 0.45, -2.0, 0.05, 0.0});

    BpParams params;
    params.lambda_final = 0.3;
    params.lambda_is_relative = false;
    params.continuation_steps = 1;
    params.max_iterations = 2000;
    params.tolerance = 1e-14;
    const ReconResult result = basis_pursuit_solve(A, y, params);
    REQUIRE(result.coefficients.has_value());
    auto soft = [](double v, double t) { return v > t ? v - t : (v < -t ? v + t : 0.0); };
    for (std::size_t i = 0; i < 6; ++i)
        REQUIRE((*result.coefficients)[i] ==
                Catch::Approx(soft(y.values[i], 0.3)).margin(1e-8));
}

TEST_CASE("bp drives lambda to zero and finds the minimum-l1 feasible point") {
    // Feasible line x0 + 0.5 x1 = 1; vertex enumeration gives |x|_1 = 1 at
    // (1, 0) versus 2 at (0, 2), so the limit solution is (1, 0).
    const ModelMatrix K = ModelMatrix::from_dense(1, 2, std::vector<double>{1.0, 0.5});
    const WaveletBasis basis = identity_basis(K);
    const CsOperator A(K, basis);
    const Sinogram y = as_sinogram({1.0});

    BpParams params;
    params.lambda_final = 1e-9;
    params.continuation_steps = 8;
    params.max_iterations = 4000;
    params.tolerance = 1e-14;
    const ReconResult result = basis_pursuit_solve(A, y, params);
    CHECK((*result.coefficients)[0] == Catch::Approx(1.0).margin(1e-3));
    CHECK(std::abs((*result.coefficients)[1]) <= 1e-3);
}

TEST_CASE("bp objective is non-increasing within every continuation stage") {
    GaussianSampler gauss(555);
    const std::size_t rows = 30, cols = 60;
    const std::vector<double> dense = random_vector(rows * cols, gauss);
    const ModelMatrix K = ModelMatrix::from_dense(rows, cols, dense);
    const WaveletBasis basis = identity_basis(K);
    const CsOperator A(K, basis);
    std::vector<double> truth(cols, 0.0);
    truth[4] = 1.0;
    truth[44] = -2.0;
    const Sinogram y = as_sinogram(K.apply(truth));

    BpParams params;
    params.max_iterations = 200;
    const ReconResult result = basis_pursuit_solve(A, y, params);
    REQUIRE(result.objective_trace.size() > 10);
    for (std::size_t i = 1; i < result.objective_trace.size(); ++i) {
        const auto& prev = result.objective_trace[i - 1];
        const auto& cur = result.objective_trace[i];
        if (cur.control == prev.control)
            REQUIRE(cur.objective <= prev.objective * (1.0 + 1e-12));
    }
}

TEST_CASE("bp recovers sparse vectors from random Gaussian measurements") {
    GaussianSampler gauss(808);
    const std::size_t rows = 40, cols = 100, sparsity = 5;
    int success = 0;
    const int trials = 10;
    for (int t = 0; t < trials; ++t) {
        const std::vector<double> dense = random_vector(rows * cols, gauss);
        const ModelMatrix K = ModelMatrix::from_dense(rows, cols, dense);
        const WaveletBasis basis = identity_basis(K);
        const CsOperator A(K, basis);
        std::vector<double> truth(cols, 0.0);
        std::size_t placed = 0;
        while (placed < sparsity) {
            const auto idx = static_cast<std::size_t>(gauss.engine()() % cols);
            if (truth[idx] != 0.0) continue;
            double v = gauss();
            if (std::abs(v) < 0.1) v = v < 0 ? v - 0.1 : v + 0.1;
            truth[idx] = v;
            ++placed;
        }
        const Sinogram y = as_sinogram(K.apply(truth));
        BpParams params;
        params.lambda_final = 1e-6;
        params.continuation_steps = 10;
        params.max_iterations = 1000;
        params.tolerance = 1e-12;
        const ReconResult result = basis_pursuit_solve(A, y, params);
        if (rel_error(*result.coefficients, truth) < 1e-2) ++success;
    }
    CHECK(success >= 9);
}

// ---------------------------------------------------------------------------
// Iterative least squares (Landweber)
// ---------------------------------------------------------------------------

TEST_CASE("ir single iteration is the scaled backprojection") {
    GaussianSampler gauss(33);
    const std::size_t rows = 12, cols = 20;
    const std::vector<double> dense = random_vector(rows * cols, gauss);
    const ModelMatrix K = ModelMatrix::from_dense(rows, cols, dense);
    const Sinogram y = as_sinogram(random_vector(rows, gauss));

    IrParams params;
    params.iterations = 1;
    params.step = 0.05;
    const ReconResult result = ir_solve(K, y, params);
    const std::vector<double> bp = apply_adjoint(K, y);
    for (std::size_t i = 0; i < cols; ++i)
        REQUIRE(result.image.values[i] == Catch::Approx(0.05 * bp[i]).margin(1e-15));
}

TEST_CASE("ir on the identity solves in one unit step") {
    const ModelMatrix K = ModelMatrix::identity(8);
    GaussianSampler gauss(3);
    const Sinogram y = as_sinogram(random_vector(8, gauss));
    IrParams params;
    params.iterations = 1;
    params.step = 1.0;
    const ReconResult result = ir_solve(K, y, params);
    for (std::size_t i = 0; i < 8; ++i) REQUIRE(result.image.values[i] == y.values[i]);
    CHECK(result.residual_norm <= 1e-14);
}

TEST_CASE("ir with ridge converges to the directly solved ridge solution") {
    GaussianSampler gauss(60120);
    const std::size_t rows = 60, cols = 120;
    const std::vector<double> dense = random_vector(rows * cols, gauss);
    const ModelMatrix K = ModelMatrix::from_dense(rows, cols, dense);
    const Sinogram y = as_sinogram(random_vector(rows, gauss));

    IrParams params;
    params.iterations = 4000;
    params.tikhonov_mu = 20.0;
    const ReconResult result = ir_solve(K, y, params);

    const Eigen::MatrixXd M = to_eigen(K);
    const Eigen::VectorXd b =
        Eigen::Map<const Eigen::VectorXd>(y.values.data(), static_cast<Eigen::Index>(rows));
    const Eigen::MatrixXd normal =
        M.transpose() * M + params.tikhonov_mu * Eigen::MatrixXd::Identity(cols, cols);
    const Eigen::VectorXd direct = normal.ldlt().solve(M.transpose() * b);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < cols; ++i) {
        num += (result.image.values[i] - direct(static_cast<Eigen::Index>(i))) *
               (result.image.values[i] - direct(static_cast<Eigen::Index>(i)));
        den += direct(static_cast<Eigen::Index>(i)) * direct(static_cast<Eigen::Index>(i));
    }
    CHECK(std::sqrt(num / den) <= 1e-6);
}

TEST_CASE("ir residual is non-increasing at the automatic step") {
    GaussianSampler gauss(2718);
    const std::size_t rows = 60, cols = 120;
    const std::vector<double> dense = random_vector(rows * cols, gauss);
    const ModelMatrix K = ModelMatrix::from_dense(rows, cols, dense);
    const Sinogram y = as_sinogram(random_vector(rows, gauss));

    IrParams params;
    params.iterations = 20;
    const ReconResult result = ir_solve(K, y, params);
    REQUIRE(result.objective_trace.size() == 20);
    for (std::size_t i = 1; i < result.objective_trace.size(); ++i)
        REQUIRE(result.objective_trace[i].residual <=
                result.objective_trace[i - 1].residual * (1.0 + 1e-12));
    REQUIRE(result.residual_norm <= result.objective_trace.back().residual * (1.0 + 1e-12));
}

TEST_CASE("ir nonneg projection clamps negatives") {
    const ModelMatrix K = ModelMatrix::identity(4);
    const Sinogram y = as_sinogram({1.0, -2.0, 3.0, -0.5});
    IrParams params;
    params.iterations = 1;
    params.step = 1.0;
    params.nonneg = true;
    const ReconResult result = ir_solve(K, y, params);
    const std::vector<double> expected = {1.0, 0.0, 3.0, 0.0};
    CHECK(result.image.values == expected);
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

TEST_CASE("reconstruct dispatches transparently") {
    const ModelMatrix K = ModelMatrix::identity(8);
    const WaveletBasis basis = identity_basis(K);
    GaussianSampler gauss(5);
    const Sinogram y = as_sinogram(random_vector(8, gauss));

    IrParams ir;
    ir.iterations = 1;
    ir.step = 1.0;
    const ReconResult via_dispatch = reconstruct(Method::ir, K, basis, y, SolverParams{ir});
    const ReconResult direct = ir_solve(K, y, ir);
    CHECK(via_dispatch.image.values == direct.image.values);
}

TEST_CASE("reconstruct rejects mismatched parameter types") {
    const ModelMatrix K = ModelMatrix::identity(4);
    const WaveletBasis basis = identity_basis(K);
    const Sinogram y = as_sinogram({1, 2, 3, 4});
    CHECK_THROWS_AS(reconstruct(Method::sl0, K, basis, y, SolverParams{IrParams{}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(reconstruct(Method::ir, K, basis, y, SolverParams{BpParams{}}),
                    std::invalid_argument);
}

TEST_CASE("unknown method tags are rejected") {
    CHECK_THROWS_AS(method_from_string("landweber"), std::invalid_argument);
    CHECK(method_from_string("sl0") == Method::sl0);
    CHECK(method_from_string("bp") == Method::bp);
    CHECK(method_from_string("ir") == Method::ir);
}

TEST_CASE("power iteration matches a known spectrum") {
    const ModelMatrix K =
        ModelMatrix::from_dense(3, 3, std::vector<double>{1, 0, 0, 0, 2, 0, 0, 0, 3});
    const double lmax = power_iteration_lmax(K, 500, 1e-12);
    CHECK(lmax == Catch::Approx(9.0).epsilon(1e-6));
}

TEST_CASE("invalid solver parameters are rejected") {
    Sl0Params sl0;
    sl0.sigma_decrease = 1.0;
    CHECK_THROWS_AS(sl0.validate(), std::invalid_argument);
    sl0 = Sl0Params{};
    sl0.sigma_min_ratio = 0.0;
    CHECK_THROWS_AS(sl0.validate(), std::invalid_argument);

    BpParams bp;
    bp.lambda_final = 0.0;
    CHECK_THROWS_AS(bp.validate(), std::invalid_argument);

    IrParams ir;
    ir.iterations = 0;
    CHECK_THROWS_AS(ir.validate(), std::invalid_argument);
}
