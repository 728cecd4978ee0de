#pragma once

#include <stdexcept>
#include <string>

namespace crep {

// Malformed or inconsistent input: unreadable files, bad edge lists,
// out-of-range parameters describing data. CLI maps this to exit code 2.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure of a numerical routine: non-finite objective, degenerate
// denominator, unbracketable root. CLI maps this to exit code 3.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace crep
