#pragma once

#include <stdexcept>
#include <string>

namespace resilinet {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A tensor or layer geometry does not fit where it is used.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure (open, read, write).
class IoError : public Error {
public:
    using Error::Error;
};

/// A file was readable but its content violates the container or dataset format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Invalid user configuration or arguments. The CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Optimisation produced a non-finite loss.
class TrainingError : public Error {
public:
    using Error::Error;
};

}  // namespace resilinet
