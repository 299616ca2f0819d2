#pragma once

#include <stdexcept>
#include <string>

namespace dtx {

/// Malformed or unusable input data (bad CSV cell, single-class file, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or argument outside its documented domain.
class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace dtx
