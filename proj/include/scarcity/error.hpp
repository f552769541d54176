#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace scarcity {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Thrown when a configuration fails validation; carries every violation found.
class InvalidConfig : public Error {
public:
    explicit InvalidConfig(std::vector<std::string> violations);
    explicit InvalidConfig(const std::string& violation)
        : InvalidConfig(std::vector<std::string>{violation}) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

/// A remote forecaster could not produce a distribution. `cause()` is the transport or protocol reason.
class ForecastUnavailable : public Error {
public:
    explicit ForecastUnavailable(std::string cause)
        : Error("forecast unavailable: " + cause), cause_(std::move(cause)) {}
    const std::string& cause() const noexcept { return cause_; }

private:
    std::string cause_;
};

class EmptyPrompt : public Error {
public:
    EmptyPrompt() : Error("cannot render a prompt from an empty history") {}
};

class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace scarcity
