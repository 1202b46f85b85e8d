#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "parec/vec.hpp"

namespace parec {

enum class WaveletFamily { haar };

inline std::string to_string(WaveletFamily f) {
    switch (f) {
        case WaveletFamily::haar: return "haar";
    }
    return "unknown";
}

// Orthonormal separable 2-D wavelet transform on an nx-by-ny image, stored
// row-major. The analysis output keeps the standard nested quadrant layout:
// at each level the low-pass (approximation) block occupies the top-left
// quadrant, details the other three; levels = 0 is the identity transform.
struct WaveletBasis {
    WaveletFamily family = WaveletFamily::haar;
    std::size_t levels = 3;
    std::size_t nx = 0;
    std::size_t ny = 0;

    void validate() const {
        require(nx >= 1 && ny >= 1, "wavelet: image dimensions must be >= 1");
        const std::size_t div = std::size_t{1} << levels;
        require(nx % div == 0 && ny % div == 0,
                "wavelet: dimensions must be divisible by 2^levels");
    }

    std::size_t size() const { return nx * ny; }
};

namespace detail {

// One orthonormal Haar split along x for rows [0, ch) of the working block:
// pairs (2t, 2t+1) -> (sum, difference) / sqrt(2), averages packed first.
inline void haar_rows_forward(std::vector<double>& a, std::size_t stride, std::size_t cw,
                              std::size_t ch, std::vector<double>& tmp) {
    const double s = std::numbers::sqrt2 / 2.0;
    const std::size_t half = cw / 2;
    tmp.resize(cw);
    for (std::size_t iy = 0; iy < ch; ++iy) {
        double* row = a.data() + iy * stride;
        for (std::size_t t = 0; t < half; ++t) {
            tmp[t] = (row[2 * t] + row[2 * t + 1]) * s;
            tmp[half + t] = (row[2 * t] - row[2 * t + 1]) * s;
        }
        for (std::size_t t = 0; t < cw; ++t) row[t] = tmp[t];
    }
}

inline void haar_rows_inverse(std::vector<double>& a, std::size_t stride, std::size_t cw,
                              std::size_t ch, std::vector<double>& tmp) {
    const double s = std::numbers::sqrt2 / 2.0;
    const std::size_t half = cw / 2;
    tmp.resize(cw);
    for (std::size_t iy = 0; iy < ch; ++iy) {
        double* row = a.data() + iy * stride;
        for (std::size_t t = 0; t < half; ++t) {
            tmp[2 * t] = (row[t] + row[half + t]) * s;
            tmp[2 * t + 1] = (row[t] - row[half + t]) * s;
        }
        for (std::size_t t = 0; t < cw; ++t) row[t] = tmp[t];
    }
}

inline void haar_cols_forward(std::vector<double>& a, std::size_t stride, std::size_t cw,
                              std::size_t ch, std::vector<double>& tmp) {
    const double s = std::numbers::sqrt2 / 2.0;
    const std::size_t half = ch / 2;
    tmp.resize(ch);
    for (std::size_t ix = 0; ix < cw; ++ix) {
        for (std::size_t t = 0; t < half; ++t) {
            const double u = a[(2 * t) * stride + ix];
            const double v = a[(2 * t + 1) * stride + ix];
            tmp[t] = (u + v) * s;
            tmp[half + t] = (u - v) * s;
        }
        for (std::size_t t = 0; t < ch; ++t) a[t * stride + ix] = tmp[t];
    }
}

inline void haar_cols_inverse(std::vector<double>& a, std::size_t stride, std::size_t cw,
                              std::size_t ch, std::vector<double>& tmp) {
    const double s = std::numbers::sqrt2 / 2.0;
    const std::size_t half = ch / 2;
    tmp.resize(ch);
    for (std::size_t ix = 0; ix < cw; ++ix) {
        for (std::size_t t = 0; t < half; ++t) {
            const double u = a[t * stride + ix];
            const double v = a[(half + t) * stride + ix];
            tmp[2 * t] = (u + v) * s;
            tmp[2 * t + 1] = (u - v) * s;
        }
        for (std::size_t t = 0; t < ch; ++t) a[t * stride + ix] = tmp[t];
    }
}

}  // namespace detail

// theta = phi^T x (orthonormal analysis).
inline std::vector<double> wavelet_analyze(std::span<const double> x, const WaveletBasis& basis) {
    basis.validate();
    require(x.size() == basis.size(), "wavelet_analyze: input length mismatch");
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> tmp;
    std::size_t cw = basis.nx, ch = basis.ny;
    for (std::size_t level = 0; level < basis.levels; ++level) {
        detail::haar_rows_forward(a, basis.nx, cw, ch, tmp);
        detail::haar_cols_forward(a, basis.nx, cw, ch, tmp);
        cw /= 2;
        ch /= 2;
    }
    return a;
}

// x = phi theta (orthonormal synthesis, exact inverse of wavelet_analyze).
inline std::vector<double> wavelet_synthesize(std::span<const double> theta,
                                              const WaveletBasis& basis) {
    basis.validate();
    require(theta.size() == basis.size(), "wavelet_synthesize: input length mismatch");
    std::vector<double> a(theta.begin(), theta.end());
    std::vector<double> tmp;
    for (std::size_t level = basis.levels; level > 0; --level) {
        const std::size_t cw = basis.nx >> (level - 1);
        const std::size_t ch = basis.ny >> (level - 1);
        detail::haar_cols_inverse(a, basis.nx, cw, ch, tmp);
        detail::haar_rows_inverse(a, basis.nx, cw, ch, tmp);
    }
    return a;
}

}  // namespace parec
