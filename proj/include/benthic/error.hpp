#pragma once

#include <stdexcept>
#include <string>

namespace benthic {

// Raised for any input that fails validation (malformed files, out-of-range
// values, impossible scene specs). The CLI maps it to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace benthic
