#pragma once

#include <stdexcept>
#include <string>

namespace ballmap {

// Degenerate or unrealizable geometry: broken triangle inequality,
// non-realizable tetrahedron, non-positive packing radius.
class MetricError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Mesh connectivity violates a structural requirement (non-manifold,
// inconsistent orientation, wrong topology).
class TopologyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An iterative solve stopped short of its tolerance.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double residual_ = 0.0)
      : std::runtime_error(what), residual(residual_) {}
  double residual;
};

// Bad user-supplied data: feature records, configs, query points.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// File parsing or serialization failure. line < 0 means unknown.
class IoError : public std::runtime_error {
public:
  IoError(const std::string& what, long line_ = -1)
      : std::runtime_error(line_ >= 0 ? what + " (line " + std::to_string(line_) + ")" : what),
        line(line_) {}
  long line;
};

} // namespace ballmap
