#ifndef COPMIX_ERRORS_HPP
#define COPMIX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace copmix {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside its mathematical domain (theta, weights, indices, ...).
class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what) : Error(what) {}
};

/// A grid failed the copula axioms beyond tolerance.
class InvalidCopulaError : public Error {
 public:
  explicit InvalidCopulaError(const std::string& what) : Error(what) {}
};

/// Two grids with incompatible resolutions (neither divides the other).
class ResolutionError : public Error {
 public:
  explicit ResolutionError(const std::string& what) : Error(what) {}
};

/// An expansion would exceed its configured term cap.
class BlowupError : public Error {
 public:
  explicit BlowupError(const std::string& what) : Error(what) {}
};

/// Requested a closed form that does not exist for this measure.
class UnsupportedMeasureError : public ParameterError {
 public:
  explicit UnsupportedMeasureError(const std::string& what) : ParameterError(what) {}
};

/// Not enough data for the requested estimate.
class SampleSizeError : public ParameterError {
 public:
  explicit SampleSizeError(const std::string& what) : ParameterError(what) {}
};

/// Numeric procedure failed to converge or produced an unusable value.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what) {}
};

/// A distribution has no finite effective support after tail truncation.
class SupportError : public Error {
 public:
  explicit SupportError(const std::string& what) : Error(what) {}
};

}  // namespace copmix

#endif  // COPMIX_ERRORS_HPP
