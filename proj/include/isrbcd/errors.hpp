#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace isrbcd {

/// Overflow or NaN while evaluating the objective.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Input outside what the solvers handle (e.g. more than two classes).
class unsupported_problem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace isrbcd
