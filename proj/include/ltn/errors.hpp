#ifndef LTN_ERRORS_HPP
#define LTN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ltn {

// Bad inputs: malformed files, mismatched labels, invalid configuration.
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime numerical failures (failed factorizations, non-finite state).
// The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ltn

#endif  // LTN_ERRORS_HPP
