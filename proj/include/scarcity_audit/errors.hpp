#pragma once

#include <stdexcept>

namespace scarcity_audit {

// Error taxonomy mirrors the CLI exit codes: validation/usage -> 1,
// I/O -> 2, domain (operation undefined at the given point) -> 3.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scarcity_audit
