#pragma once

#include <stdexcept>
#include <string>

namespace qhash {

/// Thrown when an exhaustive scan or dense construction would exceed its guard.
class CapacityError : public std::runtime_error {
public:
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown on file read/write failures (distinct from content parse errors,
/// which surface as std::invalid_argument).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Default ceiling for exhaustive element scans and key-multiset searches.
inline constexpr std::int64_t kDefaultEnumerationGuard = 10'000'000;

// Largest dense representation dimension 2^m we will materialize.
inline constexpr std::int64_t kMaxRepDim = 4096;

}  // namespace qhash
