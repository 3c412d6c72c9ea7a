#pragma once

#include <stdexcept>
#include <string>

namespace tanet {

// Base of the project exception hierarchy. Every error carries a stable
// category keyword that the CLI prints on stderr and maps to an exit code,
// so scripts can dispatch on failures without parsing free-form text.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual const char* category() const noexcept { return "error"; }
    virtual int exit_code() const noexcept { return 1; }
};

// A referenced file, directory, sequence or config key does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "not-found"; }
    int exit_code() const noexcept override { return 3; }
};

// Input exists but its contents violate the expected format.
class FormatError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "format"; }
    int exit_code() const noexcept override { return 4; }
};

// A value passed by the caller is outside the accepted domain.
class ArgumentError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "argument"; }
    int exit_code() const noexcept override { return 2; }
};

// Tensor shapes disagree with what an operation requires.
class ShapeError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "shape"; }
    int exit_code() const noexcept override { return 2; }
};

// The OS refused a read or write we expected to succeed.
class IoError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "io"; }
    int exit_code() const noexcept override { return 5; }
};

// A metric is mathematically undefined for the given inputs
// (e.g. no evaluable frames at all).
class MetricError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "metric-undefined"; }
    int exit_code() const noexcept override { return 2; }
};

// Optimization produced a non-finite loss; message names the term and step.
class TrainingError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "training"; }
    int exit_code() const noexcept override { return 1; }
};

} // namespace tanet
