#pragma once

#include <stdexcept>
#include <string>

namespace bpscope {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised on malformed input: bad JSON, missing fields, out-of-range values.
// The CLI maps it to exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// Raised when an analytic result would rest on a precondition the input breaks,
// e.g. a structured block where a local 2-design is required. Exit code 3.
struct AssumptionViolation : Error {
    using Error::Error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct IndexError : Error {
    using Error::Error;
};

}  // namespace bpscope
