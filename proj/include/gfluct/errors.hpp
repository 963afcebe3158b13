#pragma once

#include <stdexcept>
#include <string>

namespace gfluct {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input: dimension mismatch, bad grid, bad parameters.
struct StructuralError : Error {
    using Error::Error;
};

struct SingularCovarianceError : Error {
    using Error::Error;
};

struct NotSpdError : Error {
    using Error::Error;
};

// Argument outside the admissible set of an operation.
struct DomainError : Error {
    using Error::Error;
};

struct NonConvexError : Error {
    using Error::Error;
};

// |t|·‖L‖ beyond the range where the exponential is trusted.
struct ExpmRangeError : Error {
    using Error::Error;
};

// A numerical identity that must hold exactly was violated.
struct NumericalError : Error {
    using Error::Error;
};

struct NonConvergenceError : Error {
    NonConvergenceError(const std::string& what, double residual)
        : Error(what), residual(residual) {}
    double residual;
};

struct ParseError : Error {
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error(what), line(line), column(column) {}
    std::size_t line;
    std::size_t column;
};

}  // namespace gfluct
