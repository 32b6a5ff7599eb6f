#pragma once

#include <stdexcept>
#include <string>

namespace beltsync {

// Bad scenario/configuration input. The CLI maps this to exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure (under-resolved grid, non-convergence, ...). Exit code 3.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace beltsync
