#pragma once

#include <stdexcept>
#include <string>

namespace densify {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File could not be read, written, or parsed.
struct IoError : Error {
    using Error::Error;
};

/// Input data violates a documented invariant (bad manifest, bad config, ...).
struct ValidationError : Error {
    using Error::Error;
};

}  // namespace densify
