#pragma once

#include <stdexcept>
#include <string>

namespace fluortraj {

enum class ErrorKind {
    InvalidState,
    Config,
    ImpossibleOutcome,
    Unsupported,
    Integration,
    BlowUp,
    Domain,
    Shape,
    Io,
    EmptySubset,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace fluortraj
