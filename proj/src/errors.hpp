#pragma once

#include <stdexcept>
#include <string>

namespace cutsel {

enum class ErrorKind {
    invalid_argument,  // bad configuration or parameters
    data,              // dataset/schema problems
    io,                // filesystem failures
    numeric            // convergence or conditioning failures
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(std::string message)
        : Error(ErrorKind::invalid_argument, std::move(message)) {}
};

struct DataError : Error {
    explicit DataError(std::string message)
        : Error(ErrorKind::data, std::move(message)) {}
};

struct IoError : Error {
    explicit IoError(std::string message)
        : Error(ErrorKind::io, std::move(message)) {}
};

struct NumericError : Error {
    explicit NumericError(std::string message)
        : Error(ErrorKind::numeric, std::move(message)) {}
};

}  // namespace cutsel
