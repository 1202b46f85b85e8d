#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "parec/vec.hpp"

namespace parec {

// Circular array of point detectors. Angles are kept strictly increasing in
// [0, 2*pi); positions are relative to the grid center.
struct SensorArray {
    double radius = 0.0;  // meters
    std::vector<double> angles;

    std::size_t count() const { return angles.size(); }
    double x(std::size_t q) const { return radius * std::cos(angles[q]); }
    double y(std::size_t q) const { return radius * std::sin(angles[q]); }
};

inline SensorArray make_sensor_array(double radius, std::size_t count,
                                     double start_angle = 0.0) {
    require(std::isfinite(radius) && radius > 0.0,
            "make_sensor_array: radius must be positive");
    require(count >= 1, "make_sensor_array: count must be >= 1");
    require(std::isfinite(start_angle), "make_sensor_array: start_angle must be finite");

    constexpr double two_pi = 2.0 * std::numbers::pi;
    SensorArray array;
    array.radius = radius;
    array.angles.resize(count);
    for (std::size_t q = 0; q < count; ++q) {
        double a = start_angle + two_pi * static_cast<double>(q) / static_cast<double>(count);
        a = std::fmod(a, two_pi);
        if (a < 0.0) a += two_pi;
        array.angles[q] = a;
    }
    std::sort(array.angles.begin(), array.angles.end());
    return array;
}

}  // namespace parec
