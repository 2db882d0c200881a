#pragma once

#include <stdexcept>
#include <string>

namespace tmac {

// Failure categories. The CLI maps them onto its exit codes.
enum class ErrorKind {
    Input = 2,      // malformed files, bad configuration, invalid arguments
    Shape = 3,      // dimension / mode mismatches
    Numerical = 4,  // non-convergence, non-finite values
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(ErrorKind::Shape, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

}  // namespace tmac
