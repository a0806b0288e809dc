#pragma once

#include <stdexcept>
#include <string>

namespace parkloc {

/// Invalid domain values: non-finite coordinates, non-positive extents,
/// out-of-range parameters.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed input documents (XML, detection streams, metadata files).
/// Carries the 1-based line number when one is known, 0 otherwise.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

/// Inconsistent run configuration: overlapping scenario layouts, bad
/// parameter combinations. Distinct from ValidationError so the CLI can
/// map it to its own exit code.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace parkloc
