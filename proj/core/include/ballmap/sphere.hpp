#pragma once

#include <vector>

#include "ballmap/circle_packing.hpp"
#include "ballmap/layout.hpp"
#include "ballmap/mobius.hpp"

namespace ballmap {

struct SphereParamOptions {
  double flow_tolerance = 1e-8;
  int max_iterations = 200;
  double damping = 1.0;
  double layout_tolerance = 1e-6;   // in mean-edge units of the flat metric
  int removed_face = -1;            // -1: pick the best-quality face
  int seed_face = -1;               // -1: deterministic default
  double centering_tolerance = 1e-10;
  int centering_max_iterations = 1000;
};

// Conformal parameterization of a closed genus-0 mesh over the unit sphere.
struct SphereParam {
  std::vector<Vec3> positions; // unit-norm image per vertex
  int removed_face = -1;
  PlanarLayout planar;         // intermediate flat layout
  FlowReport flow;
  int centering_iterations = 0;
};

// Faces whose image orientation disagrees with the majority sign of
// det[p_i, p_j, p_k] (signed volume with the origin).
int count_flipped_sphere_faces(const TriMesh& mesh, const std::vector<Vec3>& positions);

// Conformal sphere mapping: remove one face, flow the punctured mesh flat
// (targets 2*pi/3 at the hole corners), lay out in the plane, scale, project
// stereographically and recenter by a Mobius normalization.
// Throws ConvergenceError when the flow stalls or the image is not
// orientation-consistent.
SphereParam spherical_param(const TriMesh& mesh, const SphereParamOptions& opt = {});

// Iterative Mobius centering: moves the area-weighted vertex centroid of a
// sphere-valued mesh to the origin. Returns the applied iteration count.
int mobius_center(const TriMesh& mesh, std::vector<Vec3>& positions, double tolerance = 1e-10,
                  int max_iterations = 1000);

} // namespace ballmap
