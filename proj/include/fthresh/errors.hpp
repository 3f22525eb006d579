#ifndef FTHRESH_ERRORS_HPP
#define FTHRESH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fthresh {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Operands disagree in dimension (p, R, grid) or a tensor has the wrong size.
class ShapeError : public Error {
  public:
    using Error::Error;
};

/// A rule or estimator parameter is outside its admissible range.
class ParameterError : public Error {
  public:
    using Error::Error;
};

/// Too few subjects or observations for the requested estimate.
class InsufficientDataError : public Error {
  public:
    using Error::Error;
};

/// A variance field has no strictly positive entries left after flooring.
class DegenerateVarianceError : public Error {
  public:
    using Error::Error;
};

/// Inconsistent run configuration (bad grid, split sizes, option combos).
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Unreadable, malformed, or unwritable files.
class IoError : public Error {
  public:
    using Error::Error;
};

}

#endif
