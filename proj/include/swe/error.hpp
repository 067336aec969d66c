#pragma once

#include <stdexcept>
#include <string>

namespace swe {

// All contract violations (shape mismatches, bad configs, malformed inputs)
// surface as swe::Error with a human-readable message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

}  // namespace swe
