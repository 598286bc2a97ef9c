#pragma once

#include <stdexcept>
#include <string>

namespace bohm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Stable machine-readable tag, used by the CLI error records.
  virtual const char* kind() const noexcept { return "error"; }
};

class SpecError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_spec"; }
};

/// A term of a Fock-level sum left the representable range.
class OverflowError : public Error {
 public:
  OverflowError(int level, const std::string& what)
      : Error(what + " (level n=" + std::to_string(level) + ")"), level_(level) {}
  int level() const noexcept { return level_; }
  const char* kind() const noexcept override { return "overflow"; }

 private:
  int level_;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "quadrature_not_converged"; }
};

/// Velocity requested at (numerically) a zero of the wavefunction.
class NodeSingularity : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "node_singularity"; }
};

/// Closed-form nodal points requested at a time where they sit at infinity.
class NodesAtInfinity : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "nodes_at_infinity"; }
};

class StrideMismatch : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "stride_mismatch"; }
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape_mismatch"; }
};

/// The rejection sampler met a density above its envelope.
class EnvelopeViolation : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "envelope_violation"; }
};

class FormatError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "format_error"; }
};

}  // namespace bohm
