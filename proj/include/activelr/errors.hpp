#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace activelr {

/// Raised when a gradient, update or loss leaves the finite range.
/// Carries the offending parameter index when one is known.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what, std::size_t index = npos)
        : std::runtime_error(what), index_(index) {}

    std::size_t index() const noexcept { return index_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t index_;
};

/// A checker was asked to operate outside the conditions it is defined for
/// (e.g. a convexity-based check on a non-convex objective).
class ScopeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace activelr
