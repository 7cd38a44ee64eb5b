#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dinnlab {

enum class ErrorKind {
    UnknownName,
    NonFiniteInput,
    Domain,
    IntegrationFailure,
    BlowUp,
    NumericFailure,
    Ingestion,
    Ordering,
    Divergence,
    BadStart,
    Stall,
    Config,
    Io,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Integration ran out of steps; carries the last accepted time.
class IntegrationError : public Error {
public:
    IntegrationError(ErrorKind kind, const std::string& what, double last_good_time)
        : Error(kind, what), last_good_time_(last_good_time) {}

    double last_good_time() const noexcept { return last_good_time_; }

private:
    double last_good_time_;
};

// Gauss-Newton could not make progress; carries the best point seen.
class StallError : public Error {
public:
    StallError(const std::string& what, std::vector<double> best_x, double best_value)
        : Error(ErrorKind::Stall, what), best_x_(std::move(best_x)), best_value_(best_value) {}

    const std::vector<double>& best_x() const noexcept { return best_x_; }
    double best_value() const noexcept { return best_value_; }

private:
    std::vector<double> best_x_;
    double best_value_;
};

} // namespace dinnlab
