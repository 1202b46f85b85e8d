#pragma once

#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "parec/forward_model.hpp"
#include "parec/vec.hpp"
#include "parec/wavelet.hpp"

namespace parec {

// Anything that can act as a linear map and its adjoint on double vectors.
template <class Op>
concept LinearOperator = requires(const Op& op, std::span<const double> v) {
    { op.rows() } -> std::convertible_to<std::size_t>;
    { op.cols() } -> std::convertible_to<std::size_t>;
    { op.apply(v) } -> std::same_as<std::vector<double>>;
    { op.apply_adjoint(v) } -> std::same_as<std::vector<double>>;
};

// The compressed-sensing operator A = K * phi, applied matrix-free:
// coefficients are synthesized to an image before the forward projection,
// and the adjoint analyzes the backprojection. A is never materialized.
class CsOperator {
public:
    CsOperator(const ModelMatrix& model, const WaveletBasis& basis)
        : model_(&model), basis_(&basis) {
        basis.validate();
        require(basis.size() == model.cols(),
                "CsOperator: basis dimensions must match the model columns");
    }

    std::size_t rows() const { return model_->rows(); }
    std::size_t cols() const { return model_->cols(); }

    std::vector<double> apply(std::span<const double> theta) const {
        return model_->apply(wavelet_synthesize(theta, *basis_));
    }

    std::vector<double> apply_adjoint(std::span<const double> r) const {
        return wavelet_analyze(model_->apply_adjoint(r), *basis_);
    }

    const ModelMatrix& model() const { return *model_; }
    const WaveletBasis& basis() const { return *basis_; }

    Image synthesize_image(std::span<const double> theta) const {
        return Image{model_->grid, wavelet_synthesize(theta, *basis_)};
    }

private:
    const ModelMatrix* model_;
    const WaveletBasis* basis_;
};

// Identity sparsifying basis over the model's grid (levels = 0), useful
// when solving directly in the pixel domain.
inline WaveletBasis identity_basis(const ModelMatrix& model) {
    return WaveletBasis{WaveletFamily::haar, 0, model.grid.nx, model.grid.ny};
}

static_assert(LinearOperator<ModelMatrix>);
static_assert(LinearOperator<CsOperator>);

}  // namespace parec
