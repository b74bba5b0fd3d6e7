#pragma once

#include <stdexcept>

namespace tvrelax {

/// File or stream problem (missing file, malformed image header, ...).
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure inside a solver (PCG breakdown, infeasible search, ...).
struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace tvrelax
