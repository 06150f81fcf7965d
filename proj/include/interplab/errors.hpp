#pragma once

#include <stdexcept>
#include <string>

namespace interplab {

// Error taxonomy used across the library.  The CLI maps these onto process
// exit codes: usage/validation -> 2, numerical -> 3, I/O -> 4.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad arguments, inconsistent dimensions, invalid configuration.
struct usage_error : error {
    using error::error;
};

struct dimension_error : usage_error {
    using usage_error::usage_error;
};

// Parameter outside the mathematical domain of an operation.
struct domain_error : usage_error {
    using usage_error::usage_error;
};

// Violated runtime precondition (e.g. anchor does not interpolate).
struct precondition_error : error {
    using error::error;
};

// Solver breakdown: non-convergence, ill-conditioning, failed bracketing.
struct numerical_error : error {
    using error::error;
};

// Rank deficiency detected where full rank is required.
struct rank_error : numerical_error {
    using numerical_error::numerical_error;
};

struct io_error : error {
    using error::error;
};

}  // namespace interplab
