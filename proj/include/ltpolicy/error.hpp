#pragma once

#include <stdexcept>
#include <string>

namespace ltp {

// Raised when inputs violate a documented precondition. `field` carries a
// dotted path (e.g. "policy.beta") when the error comes from config parsing.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what, std::string field = {})
        : std::invalid_argument(field.empty() ? what : field + ": " + what),
          field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Numerical or I/O failure at run time (non-convergence, unreadable file...).
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what, const std::string& field = {}) {
    if (!cond) throw ValidationError(what, field);
}

}  // namespace ltp
