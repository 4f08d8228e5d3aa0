#pragma once

#include <stdexcept>
#include <string>

namespace mfac {

// Invalid configuration detected before any numerics run: bad orders, size
// mismatches, unknown enum strings, out-of-range tuning values.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values fed into or produced by a numeric kernel.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Historical data too short for the requested lags.
class window_error : public std::runtime_error {
public:
    explicit window_error(const std::string& what) : std::runtime_error(what) {}
};

// Control law asked to invert a vanishing input gain with no penalty term.
class degenerate_gain_error : public std::runtime_error {
public:
    explicit degenerate_gain_error(const std::string& what) : std::runtime_error(what) {}
};

// Analysis formula undefined for this gain vector (zero denominator).
class degenerate_plant_error : public std::runtime_error {
public:
    explicit degenerate_plant_error(const std::string& what) : std::runtime_error(what) {}
};

// Simulated or predicted output left the numeric guard band.
class divergence_error : public std::runtime_error {
public:
    explicit divergence_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed scenario or CSV input; message carries the offending line.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, int line) : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Filesystem failure while reading or writing an artifact.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mfac
