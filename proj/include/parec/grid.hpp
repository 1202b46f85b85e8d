#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "parec/vec.hpp"

namespace parec {

// Pixel lattice of the reconstruction domain. Pixel (ix, iy) is centered at
//   center + ((ix - (nx-1)/2) * pixel_size, (iy - (ny-1)/2) * pixel_size)
// and images are stored row-major, iy major: index = iy * nx + ix.
struct ImagingGrid {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double pixel_size = 0.0;  // meters per pixel side
    double center_x = 0.0;    // physical coordinates of the grid center, meters
    double center_y = 0.0;

    std::size_t pixel_count() const { return nx * ny; }

    double pixel_x(std::size_t ix) const {
        return center_x + (static_cast<double>(ix) - (static_cast<double>(nx) - 1.0) / 2.0) * pixel_size;
    }
    double pixel_y(std::size_t iy) const {
        return center_y + (static_cast<double>(iy) - (static_cast<double>(ny) - 1.0) / 2.0) * pixel_size;
    }
    std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx + ix; }

    // Nearest lattice indices of a physical point; clamped to the grid.
    std::size_t nearest_ix(double x) const {
        const double i = (x - center_x) / pixel_size + (static_cast<double>(nx) - 1.0) / 2.0;
        const double r = std::round(i);
        if (r <= 0.0) return 0;
        return std::min(nx - 1, static_cast<std::size_t>(r));
    }
    std::size_t nearest_iy(double y) const {
        const double j = (y - center_y) / pixel_size + (static_cast<double>(ny) - 1.0) / 2.0;
        const double r = std::round(j);
        if (r <= 0.0) return 0;
        return std::min(ny - 1, static_cast<std::size_t>(r));
    }

    double width() const { return static_cast<double>(nx) * pixel_size; }
    double height() const { return static_cast<double>(ny) * pixel_size; }

    bool operator==(const ImagingGrid&) const = default;
};

inline ImagingGrid make_grid(std::size_t nx, std::size_t ny, double pixel_size) {
    require(nx >= 1 && ny >= 1, "make_grid: pixel counts must be >= 1");
    require(std::isfinite(pixel_size) && pixel_size > 0.0,
            "make_grid: pixel_size must be positive");
    return ImagingGrid{nx, ny, pixel_size, 0.0, 0.0};
}

// Absorption distribution on a grid, row-major values of length nx*ny.
struct Image {
    ImagingGrid grid;
    std::vector<double> values;

    double& at(std::size_t ix, std::size_t iy) { return values[grid.index(ix, iy)]; }
    double at(std::size_t ix, std::size_t iy) const { return values[grid.index(ix, iy)]; }
};

inline Image make_image(const ImagingGrid& grid, double fill = 0.0) {
    return Image{grid, std::vector<double>(grid.pixel_count(), fill)};
}

}  // namespace parec
