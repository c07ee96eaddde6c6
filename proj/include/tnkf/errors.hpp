#pragma once

#include <stdexcept>
#include <string>

namespace tnkf {

/// Requested dense materialization or solve exceeds the configured cap.
class ResourceLimitError : public std::runtime_error {
 public:
  explicit ResourceLimitError(const std::string& what) : std::runtime_error(what) {}
};

/// A factorization or solve failed (singular system, deficient eigenpair, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Innovation variance went non-positive after truncation; carries the
/// 1-based iteration at which the filter broke down.
class CovarianceCollapseError : public NumericalError {
 public:
  CovarianceCollapseError(long iteration, const std::string& what)
      : NumericalError(what), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

/// Malformed or inconsistent input data (CSV parse failures, task mismatch,
/// stale referenced files).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tnkf
