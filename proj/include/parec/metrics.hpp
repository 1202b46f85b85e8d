#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "parec/grid.hpp"
#include "parec/vec.hpp"

namespace parec {

struct PsnrReport {
    double psnr_db = 0.0;  // +inf when the normalized images are identical
    double mse = 0.0;      // mean squared error of the normalized pair
    double reference_peak = 0.0;  // the normalization applied to both images

    bool is_exact() const { return std::isinf(psnr_db); }
};

// PSNR = 10 log10(Nx Ny / sum (f - r)^2) on the pair scaled by
// 1/max(reference), making the score invariant to the reconstruction's
// arbitrary amplitude. Identical images map to the +inf sentinel.
inline PsnrReport psnr(const Image& recon, const Image& reference) {
    require(recon.grid == reference.grid, "psnr: images must share a grid");
    const double peak = *std::max_element(reference.values.begin(), reference.values.end());
    require(peak > 0.0, "psnr: reference image must not be all-zero");

    const std::size_t n = reference.values.size();
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (recon.values[i] - reference.values[i]) / peak;
        sq += d * d;
    }
    PsnrReport report;
    report.reference_peak = peak;
    report.mse = sq / static_cast<double>(n);
    report.psnr_db = report.mse == 0.0 ? std::numeric_limits<double>::infinity()
                                       : 10.0 * std::log10(1.0 / report.mse);
    return report;
}

enum class ProfileAxis { row, column };

struct Profile {
    ProfileAxis axis = ProfileAxis::row;
    std::size_t index = 0;
    std::vector<double> positions_mm;
    std::vector<double> values;
};

// Values along one pixel line together with physical positions (mm) from the
// grid mapping; the center row reproduces the lateral-variation curves.
inline Profile lateral_profile(const Image& image, ProfileAxis axis, std::size_t index) {
    const ImagingGrid& g = image.grid;
    Profile p;
    p.axis = axis;
    p.index = index;
    if (axis == ProfileAxis::row) {
        require(index < g.ny, "lateral_profile: row index out of range");
        p.positions_mm.resize(g.nx);
        p.values.resize(g.nx);
        for (std::size_t ix = 0; ix < g.nx; ++ix) {
            p.positions_mm[ix] = g.pixel_x(ix) * 1e3;
            p.values[ix] = image.at(ix, index);
        }
    } else {
        require(index < g.nx, "lateral_profile: column index out of range");
        p.positions_mm.resize(g.ny);
        p.values.resize(g.ny);
        for (std::size_t iy = 0; iy < g.ny; ++iy) {
            p.positions_mm[iy] = g.pixel_y(iy) * 1e3;
            p.values[iy] = image.at(index, iy);
        }
    }
    return p;
}

inline Profile center_row_profile(const Image& image) {
    return lateral_profile(image, ProfileAxis::row, image.grid.ny / 2);
}

}  // namespace parec
