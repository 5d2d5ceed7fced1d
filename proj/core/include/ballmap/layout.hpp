#pragma once

#include <vector>

#include "ballmap/metric.hpp"

namespace ballmap {

struct PlanarLayout {
  std::vector<Vec2> positions; // per vertex of the host mesh
  int seed_face = -1;
};

// Isometric breadth-first layout of a flat metric on a disk-topology mesh
// (optionally a closed mesh minus `excluded_face`). Places a seed face, then
// each further vertex by intersecting two circles around already-placed
// neighbors, keeping the face orientation positive.
//
// A vertex reachable through several faces is cross-checked: alternative
// placements differing by more than `consistency_tol` (in metric units)
// raise a flatness-violation ConvergenceError. Every laid-out face must come
// out with positive signed area.
PlanarLayout planar_layout(const TriMesh& mesh, const DiscreteMetric& metric,
                           int excluded_face = -1, int seed_face = -1,
                           double consistency_tol = 1e-6);

} // namespace ballmap
