#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rydgauge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Atom positions collide or fall below the configured minimum separation.
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// A bracketing interval holds no sign change of the objective.
class NoRootError : public Error {
 public:
  using Error::Error;
};

/// Some partial sum of nearest-neighbour couplings vanishes, so the
/// generalized blockade would admit unwanted resonant configurations.
class BlockadeDegeneracyError : public Error {
 public:
  BlockadeDegeneracyError(const std::string& what, std::vector<std::size_t> subset)
      : Error(what), subset_(std::move(subset)) {}
  const std::vector<std::size_t>& subset() const noexcept { return subset_; }

 private:
  std::vector<std::size_t> subset_;
};

/// Pole of the effective Rabi frequency (C6 = detuning * |eta|^6) or zero detuning.
class PoleError : public Error {
 public:
  using Error::Error;
};

/// Link configuration violates the Gauss law or the boundary convention.
class PhysicalityError : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch, size cap exceeded, or an operator/basis mismatch.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver or propagator failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rydgauge
