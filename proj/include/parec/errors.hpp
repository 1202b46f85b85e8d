#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace parec {

// Thrown when an iterative solver exhausts its iteration budget before
// reaching the requested tolerance. Carries the best iterate seen so the
// caller can still inspect or persist a partial result.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> best,
                     std::size_t iterations, double achieved_residual)
        : std::runtime_error(what),
          best_iterate(std::move(best)),
          iterations_run(iterations),
          residual(achieved_residual) {}

    std::vector<double> best_iterate;
    std::size_t iterations_run = 0;
    double residual = 0.0;
};

// Thrown when a solver iterate turns non-finite.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace parec
