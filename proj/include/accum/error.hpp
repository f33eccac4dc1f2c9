#pragma once

#include <stdexcept>
#include <string>

namespace accum {

// Root of every exception raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input data or file contents.
class InputError : public Error {
public:
    using Error::Error;
};

// Parameter outside the model domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// Operation undefined for the asymptotic regime of the parameters.
class RegimeError : public Error {
public:
    using Error::Error;
};

// Optimizer or sampler failure (non-convergence, separation, degenerate matrices).
class NumericalError : public Error {
public:
    using Error::Error;
};

// Artifacts that should describe the same data but do not.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

} // namespace accum
