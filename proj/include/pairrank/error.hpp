#ifndef PAIRRANK_ERROR_HPP_
#define PAIRRANK_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace pairrank {

// Malformed, inconsistent or degenerate input data. The CLI maps this to
// exit status 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad invocation: missing or contradictory options. Exit status 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pairrank

#endif  // PAIRRANK_ERROR_HPP_
