#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "parec/grid.hpp"
#include "parec/parallel.hpp"
#include "parec/vec.hpp"

namespace parec {

// One additive ellipse of a numerical phantom. Semi-axes and center offsets
// are fractions of the half-field; rotation is counterclockwise in radians.
struct EllipseSpec {
    double intensity = 0.0;
    double semi_axis_a = 0.0;
    double semi_axis_b = 0.0;
    double center_x = 0.0;
    double center_y = 0.0;
    double rotation = 0.0;
};

// The widely published ten-ellipse Modified Shepp-Logan head phantom
// (high-contrast variant: skull 1.0, interior features 0.1..0.3).
inline const std::array<EllipseSpec, 10>& modified_shepp_logan_table() {
    constexpr double deg = std::numbers::pi / 180.0;
    static const std::array<EllipseSpec, 10> table = {{
        {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
        {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
        {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0 * deg},
        {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0 * deg},
        {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
        {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
        {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
        {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
        {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
        {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
    }};
    return table;
}

namespace detail {

// Physical-space membership test of one ellipse whose table coordinates have
// been scaled by `scale` meters per table unit.
inline bool ellipse_contains(const EllipseSpec& e, double scale, double px, double py) {
    const double dx = px - e.center_x * scale;
    const double dy = py - e.center_y * scale;
    const double cr = std::cos(e.rotation);
    const double sr = std::sin(e.rotation);
    const double u = (cr * dx + sr * dy) / (e.semi_axis_a * scale);
    const double v = (-sr * dx + cr * dy) / (e.semi_axis_b * scale);
    return u * u + v * v <= 1.0;
}

// Meters per table unit such that the largest semi-axis in the table spans
// 0.9 of the half-field, leaving a sensor-free margin around the phantom.
inline double phantom_scale(const ImagingGrid& grid, std::span<const EllipseSpec> table) {
    double max_axis = 0.0;
    for (const auto& e : table) max_axis = std::max({max_axis, e.semi_axis_a, e.semi_axis_b});
    require(max_axis > 0.0, "phantom table: all semi-axes are zero");
    const double half_field = 0.5 * std::min(grid.width(), grid.height());
    return 0.9 * half_field / max_axis;
}

}  // namespace detail

// Rasterizes the phantom at pixel centers: each pixel receives the sum of
// intensities of all ellipses containing its center; the final per-pixel sum
// is clamped at zero (intermediate sums may be negative).
inline Image rasterize_phantom(const ImagingGrid& grid, std::span<const EllipseSpec> table) {
    for (const auto& e : table)
        require(e.semi_axis_a > 0.0 && e.semi_axis_b > 0.0,
                "phantom table: semi-axes must be positive");
    const double scale = detail::phantom_scale(grid, table);
    Image image = make_image(grid);
    par::run_chunks(grid.ny, 8, [&](std::size_t, std::size_t y0, std::size_t y1) {
        for (std::size_t iy = y0; iy < y1; ++iy) {
            const double py = grid.pixel_y(iy) - grid.center_y;
            for (std::size_t ix = 0; ix < grid.nx; ++ix) {
                const double px = grid.pixel_x(ix) - grid.center_x;
                double sum = 0.0;
                for (const auto& e : table)
                    if (detail::ellipse_contains(e, scale, px, py)) sum += e.intensity;
                image.values[grid.index(ix, iy)] = std::max(sum, 0.0);
            }
        }
    });
    return image;
}

inline Image shepp_logan(const ImagingGrid& grid) {
    return rasterize_phantom(grid, modified_shepp_logan_table());
}

inline void save_ellipse_table(const std::string& path, std::span<const EllipseSpec> table) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& e : table) {
        doc.push_back({{"intensity", e.intensity},
                       {"semi_axis_a", e.semi_axis_a},
                       {"semi_axis_b", e.semi_axis_b},
                       {"center_x", e.center_x},
                       {"center_y", e.center_y},
                       {"rotation", e.rotation}});
    }
    std::ofstream out(path);
    require(out.good(), "save_ellipse_table: cannot open output file");
    out << doc.dump(2) << "\n";
}

inline std::vector<EllipseSpec> load_ellipse_table(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "load_ellipse_table: cannot open table file");
    const nlohmann::json doc = nlohmann::json::parse(in);
    require(doc.is_array(), "load_ellipse_table: expected a JSON array");
    std::vector<EllipseSpec> table;
    table.reserve(doc.size());
    for (const auto& item : doc) {
        EllipseSpec e;
        e.intensity = item.at("intensity").get<double>();
        e.semi_axis_a = item.at("semi_axis_a").get<double>();
        e.semi_axis_b = item.at("semi_axis_b").get<double>();
        e.center_x = item.at("center_x").get<double>();
        e.center_y = item.at("center_y").get<double>();
        e.rotation = item.value("rotation", 0.0);
        table.push_back(e);
    }
    return table;
}

}  // namespace parec
