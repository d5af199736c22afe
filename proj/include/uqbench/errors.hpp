#pragma once

#include <stdexcept>
#include <string>

namespace uqbench {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A value lies outside the domain an operation accepts (out-of-bounds point,
// invalid bounds, non-finite data).
class DomainError : public Error {
public:
    using Error::Error;
};

// A requested object would exceed a configured size cap, or a size argument is out of range.
class SizeError : public Error {
public:
    using Error::Error;
};

// Inconsistent configuration: wrong design kind, unsupported pairing, unknown name.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A surrogate could not be fitted (under-determined system, factorization failure).
class FitError : public Error {
public:
    using Error::Error;
};

// Reading or writing an exchange file failed.
class IoError : public Error {
public:
    using Error::Error;
};

// External simulator failures: timeouts, malformed responses, row-count mismatches.
class SimulatorError : public Error {
public:
    using Error::Error;
};

}  // namespace uqbench
