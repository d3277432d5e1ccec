#pragma once

#include <stdexcept>

namespace mrf {

/// Malformed or schema-violating file content.
struct FormatError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// A cached artifact no longer matches the inputs it claims to be derived from.
struct CacheInvalidError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// The requested density profile cannot Nyquist-sample the matrix.
struct InfeasibleTrajectoryError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

} // namespace mrf
