#pragma once

#include <stdexcept>
#include <string>

namespace bqp {

// Input outside an operation's mathematical domain.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Input exceeds a memory or time guard.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A query was made against state that has not been built.
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// An exact identity or a proven inequality failed to hold numerically.
struct IdentityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw DomainError(msg);
}

}  // namespace bqp
