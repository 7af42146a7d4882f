#pragma once

#include <stdexcept>
#include <string>

namespace sfdet {

/// Thrown on contract violations and malformed input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sfdet
