#pragma once

#include <stdexcept>
#include <string>

namespace coopalign {

/// Base of every exception thrown by the library. Expected failure outcomes
/// (RANSAC without consensus, ICP without correspondences, graph matching
/// without co-visible objects) are not errors and come back as empty
/// std::optional results instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Fewer than three points, or a collinear configuration, handed to a rigid
/// solver.
class DegenerateSample : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// Correlation search over grids whose occupancy carries no variance.
class NoSignal : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class InfeasibleScenario : public Error {
 public:
  using Error::Error;
};

}  // namespace coopalign
