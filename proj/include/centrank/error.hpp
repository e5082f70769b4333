#pragma once

#include <stdexcept>
#include <string>

namespace centrank {

// Error taxonomy used across the library. The CLI maps ConfigError and
// UsageError to exit code 2, everything else to exit code 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct UsageError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct GenerationError : Error {
    using Error::Error;
};

struct ConvergenceError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace centrank
