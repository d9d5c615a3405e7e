#pragma once

#include <stdexcept>
#include <string>

namespace probelens {

// Base of every error raised by the library. Each subclass names one failure
// family so callers (the CLI in particular) can map it to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class LengthError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class RangeError : public Error { using Error::Error; };
class CapacityError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class DegenerateInputError : public Error { using Error::Error; };
class ConsistencyError : public Error { using Error::Error; };
class CompatibilityError : public Error { using Error::Error; };
class InsufficientDataError : public Error { using Error::Error; };
class CoverageError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };

}  // namespace probelens
