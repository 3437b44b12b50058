#pragma once

#include <stdexcept>
#include <string>

namespace sagnac {

/// Bad user-supplied configuration (schedules, specs, CLI options).
/// Maps to process exit code 1.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad data at run time (shape mismatches, unreadable or malformed files).
/// Maps to process exit code 2.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed file content; carries the 1-based line number when known.
class parse_error : public data_error {
public:
    parse_error(const std::string& what, long line)
        : data_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

/// Fringe inversion fell outside the valid signal range (loss of fringe lock).
class saturation_error : public data_error {
public:
    explicit saturation_error(const std::string& what) : data_error(what) {}
};

} // namespace sagnac
