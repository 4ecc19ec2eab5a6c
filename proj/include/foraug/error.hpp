#pragma once

#include <stdexcept>
#include <string>

namespace foraug {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input data or a violated precondition (CLI exit code 1).
class InputError : public Error {
public:
    using Error::Error;
};

/// File system or codec failure (CLI exit code 2).
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace foraug
