#pragma once

#include <stdexcept>

namespace metalstm::cli {

/// Bad flags, unreadable or invalid inputs: exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace metalstm::cli
