#pragma once

#include <stdexcept>
#include <string>

namespace permcover {

/// Malformed argument: duplicate entries, length mismatch, wrong universe.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Index or parameter outside its documented domain.
class RangeError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

/// A configured size or work budget would be exceeded.
class ResourceLimit : public std::runtime_error {
public:
  ResourceLimit(const std::string &what, long long limit)
      : std::runtime_error(what + " (limit " + std::to_string(limit) + ")"),
        limit_(limit) {}

  long long limit() const noexcept { return limit_; }

private:
  long long limit_;
};

} // namespace permcover
