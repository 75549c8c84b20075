#pragma once

#include <stdexcept>
#include <string>

namespace swvi {

// Bad shapes, bad configuration values, unusable input files.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf showing up where the math requires finite values.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace swvi
