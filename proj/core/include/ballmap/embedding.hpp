#pragma once

#include <utility>
#include <vector>

#include "ballmap/mesh.hpp"

namespace ballmap {

struct EmbedOptions {
  int max_iterations = 200;     // Gauss-Newton rounds
  double rms_tolerance = 1e-9;  // absolute RMS target, in mean-edge units
  int untangle_rounds = 8;      // attempts to clear flipped image tets
  bool require_flip_free = true;
};

struct EmbedResult {
  std::vector<Vec3> positions;
  double rms = 0.0; // RMS edge-length error, model units
  int iterations = 0;
  int flipped = 0;
};

// Realizes a (near-)flat metric as coordinates: fixed vertices keep their
// given positions, the rest initialize by breadth-first trilateration
// (orientation-positive branch) and refine by least-squares minimization of
// sum_e (|x_i - x_j| - l_e)^2. Throws ConvergenceError when flipped tets
// survive the untangle rounds and require_flip_free is set.
EmbedResult embed_flat_metric(const TetMesh& mesh, const std::vector<double>& lengths,
                              const std::vector<std::pair<int, Vec3>>& fixed,
                              const EmbedOptions& opt = {});

} // namespace ballmap
