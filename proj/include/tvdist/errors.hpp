#ifndef TVDIST_ERRORS_HPP
#define TVDIST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tvdist {

// Enumeration/exact-path size limit exceeded.
class CapExceeded : public std::runtime_error {
 public:
  explicit CapExceeded(const std::string& what) : std::runtime_error(what) {}
};

// Estimator precondition not met (carries the human-readable report).
class PreconditionViolation : public std::runtime_error {
 public:
  explicit PreconditionViolation(const std::string& what) : std::runtime_error(what) {}
};

// Requested method cannot handle the instance at all.
class MethodInapplicable : public std::runtime_error {
 public:
  explicit MethodInapplicable(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tvdist

#endif
