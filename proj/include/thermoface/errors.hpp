#ifndef THERMOFACE_ERRORS_HPP
#define THERMOFACE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace thermoface {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Precondition / argument violations.
struct InvalidArgument : Error {
    using Error::Error;
};

// Image decode: stream does not start with a recognized signature, or the
// variant (bit depth, color type, interlacing) is outside the supported set.
struct UnsupportedFormatError : Error {
    using Error::Error;
};

// Image decode: stream ended before the declared payload was complete.
struct TruncatedStreamError : Error {
    using Error::Error;
};

// Image decode: declared dimensions would overflow the pixel buffer.
struct DimensionOverflowError : Error {
    using Error::Error;
};

// Input data is structurally valid but degenerate (all-black channel,
// zero-variance sample set, empty mesh, ...).
struct DegenerateInputError : Error {
    using Error::Error;
};

// Numeric failure (non-finite loss or activation).
struct NumericError : Error {
    using Error::Error;
};

// Text parse failure carrying the 1-based line number.
struct ParseError : Error {
    int line;
    ParseError(int line_, const std::string& what_)
        : Error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

}  // namespace thermoface

#endif
