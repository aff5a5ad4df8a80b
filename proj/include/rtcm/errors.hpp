#pragma once

#include <stdexcept>
#include <string>

namespace rtcm {

// Every failure the library reports derives from Error. The CLI maps the
// concrete type to an exit code (config 2, I/O 3, numerical 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration values or inconsistent settings.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Tensor or field shapes that do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Unreadable or unwritable files, malformed manifests, truncated arrays.
class IoError : public Error {
public:
    using Error::Error;
};

// Non-finite values, unstable integration, failed sampling.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace rtcm
