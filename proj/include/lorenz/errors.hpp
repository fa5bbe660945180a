#pragma once

#include <stdexcept>
#include <string>

namespace lorenz {

// Invalid input, config, or model data. The CLI maps this to exit code 2.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure at runtime (non-convergence, chart exit, orbit escape).
// The CLI maps this to exit code 3.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// A composed orbit left the chart of one of the four stages.
class chart_exit_error : public numeric_error {
public:
    chart_exit_error(const std::string& stage, const std::string& what)
        : numeric_error("chart exit at stage " + stage + ": " + what), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// An orbit left the escape radius (or became non-finite).
class orbit_escape_error : public numeric_error {
public:
    explicit orbit_escape_error(long at_iterate)
        : numeric_error("orbit escaped at iterate " + std::to_string(at_iterate)),
          at_iterate_(at_iterate) {}
    long at_iterate() const { return at_iterate_; }

private:
    long at_iterate_;
};

} // namespace lorenz
