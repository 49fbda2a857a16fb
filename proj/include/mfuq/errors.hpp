#pragma once

#include <stdexcept>
#include <string>

namespace mfuq {

// Thrown when an index set or linear system violates a structural
// requirement (downward closedness, nonsingularity, matching sizes).
class StructureError : public std::runtime_error {
public:
    explicit StructureError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by the bench layer on malformed configuration input.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

} // namespace mfuq
