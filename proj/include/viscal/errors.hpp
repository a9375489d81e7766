#pragma once

#include <stdexcept>
#include <string>

namespace viscal {

// Invalid user input: malformed rows, schema violations, out-of-range arguments.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem problems: unreadable files, unwritable directories.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Model fitting failed: optimizer non-convergence or numerical divergence.
class FitError : public std::runtime_error {
public:
  explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace viscal
