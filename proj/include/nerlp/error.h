#ifndef NERLP_ERROR_H
#define NERLP_ERROR_H

#include <stdexcept>
#include <string>

namespace nerlp {

// Raised for malformed or inconsistent input data. The CLI maps it to exit code 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a numerical procedure cannot continue (NaN loss, singular pivot).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nerlp

#endif  // NERLP_ERROR_H
