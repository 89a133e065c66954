#pragma once

#include <stdexcept>
#include <string>

namespace vacal {

// Input file does not match the declared column layout.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A cell could not be parsed as the expected type.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parsed values violate a domain constraint (label outside {0,1}, score outside [0,1], ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The requested split cannot be produced from the data.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vacal
