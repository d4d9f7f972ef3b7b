#pragma once

#include <stdexcept>
#include <string>

namespace lad2d {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments or violated preconditions.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Periodogram initialization or fitting could not produce an estimate.
class FitError : public Error {
public:
    using Error::Error;
};

/// File or text-format problems.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace lad2d
