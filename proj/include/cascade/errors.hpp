#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cascade {

// Argument outside the mathematical domain of a kernel (probability not in
// [0,1], confidence not in (0,1), ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Structurally invalid input: bad lists, non-tiling segments, bad configs.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed text input. `line` is 1-based; 0 when the error is not tied to a line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(format(source, line, what)), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    static std::string format(const std::string& source, std::size_t line,
                              const std::string& what) {
        std::string out = source;
        if (line > 0) out += ":" + std::to_string(line);
        return out + ": " + what;
    }

    std::size_t line_;
};

}  // namespace cascade
