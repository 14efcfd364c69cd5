#pragma once

#include <stdexcept>
#include <string>

namespace p3d {

// Input rejected before any computation ran (bad schema, unknown name,
// inconsistent shapes). Maps to CLI exit code 2 and HTTP 400/422.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what, std::string path = {})
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Malformed document (not parseable, wrong JSON types). HTTP 400.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Numerical failure during a run (non-finite activations, singular step).
// Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system and container format failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace p3d
