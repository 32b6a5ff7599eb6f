#pragma once

#include <cstddef>

#include "beltsync/errors.hpp"

namespace beltsync {

inline constexpr std::size_t kDefaultGridPoints = std::size_t{1} << 14;

// Uniform quadrature grid with trapezoidal weights.
struct FrequencyGrid {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = kDefaultGridPoints;

    void validate() const {
        if (!(hi > lo)) throw config_error("FrequencyGrid: hi must exceed lo");
        if (n < 16) throw config_error("FrequencyGrid: need at least 16 points");
    }

    double step() const { return (hi - lo) / static_cast<double>(n - 1); }
    double omega(std::size_t i) const { return lo + step() * static_cast<double>(i); }
    double weight(std::size_t i) const {
        return (i == 0 || i + 1 == n) ? 0.5 * step() : step();
    }
};

} // namespace beltsync
