#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fsgen {

// Base class for every domain error raised by the library. The CLI maps
// these to exit code 1; anything else is a usage or internal error.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidLogits : public Error {
public:
    using Error::Error;
};

class InvalidK : public Error {
public:
    using Error::Error;
};

// Raised when a LogitSource fails mid-decode; carries the step index.
class BackendError : public Error {
public:
    BackendError(const std::string& what, std::size_t step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

class EmptyCorpus : public Error {
public:
    using Error::Error;
};

class VocabMismatch : public Error {
public:
    using Error::Error;
};

class InvalidModel : public Error {
public:
    using Error::Error;
};

class EmptyTrace : public Error {
public:
    using Error::Error;
};

class TooLargeForBruteForce : public Error {
public:
    using Error::Error;
};

class InvalidWindow : public Error {
public:
    using Error::Error;
};

class Underdetermined : public Error {
public:
    using Error::Error;
};

class InvalidRatio : public Error {
public:
    using Error::Error;
};

class DegenerateBase : public Error {
public:
    using Error::Error;
};

class ReplayExhausted : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class RenderError : public Error {
public:
    using Error::Error;
};

} // namespace fsgen
