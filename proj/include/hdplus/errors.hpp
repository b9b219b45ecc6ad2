#pragma once

#include <stdexcept>
#include <string>

namespace hdplus {

// Base of every error raised by the library. The CLI maps ConfigError to
// exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class ClassificationError : public Error {
public:
    using Error::Error;
};

class TrackingError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class LowSignalError : public FitError {
public:
    using FitError::FitError;
};

class SingularFitError : public FitError {
public:
    using FitError::FitError;
};

}  // namespace hdplus
