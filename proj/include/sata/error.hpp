#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sata {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise malformed numeric input.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// A parameter set violates its declared invariants.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor or vector width mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidSpecError : public Error {
 public:
  using Error::Error;
};

/// Versioned file format could not be read or does not match the expected layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

class GradientExplosionError : public Error {
 public:
  using Error::Error;
};

/// The simulator diverged. Carries the step index so the run can be replayed.
class SimulationBlowupError : public Error {
 public:
  SimulationBlowupError(const std::string& what, std::uint64_t step, int env_index = -1,
                        std::uint64_t seed = 0)
      : Error(what), step_(step), env_index_(env_index), seed_(seed) {}

  std::uint64_t step() const { return step_; }
  int env_index() const { return env_index_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t step_;
  int env_index_;
  std::uint64_t seed_;
};

}  // namespace sata
