#pragma once

#include <stdexcept>
#include <string>

namespace rdcal {

/// Failure raised by grid construction, solvers, or file handling.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  explicit Error(const char* what) : std::runtime_error(what) {}
};

// The const char* overload keeps literal-message checks allocation-free on
// the success path; callers that need a composed message should branch
// before building it.
inline void require(bool condition, const char* message) {
  if (!condition) throw Error(message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(message);
}

}  // namespace rdcal
