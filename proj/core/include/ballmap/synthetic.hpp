#pragma once

#include <cstdint>
#include <vector>

#include "ballmap/features.hpp"
#include "ballmap/mesh.hpp"

namespace ballmap {

enum class SyntheticShape { Ball, Ellipsoid, Capsule, Blob };

struct SyntheticOptions {
  SyntheticShape shape = SyntheticShape::Ball;
  int resolution = 2;            // icosphere subdivision level, 1..5
  int shells = 0;                // radial layers; 0 picks 2^resolution
  std::uint64_t seed = 42;       // drives blob fields and jitter retries
  int interior_features = 1;     // pinned features along the axis polyline
  int landmarks = 12;            // held-out axis landmarks for error reports
  double capsule_stretch = 1.6;  // z elongation before bending
  double capsule_bend = 0.45;    // quadratic bend coefficient
  double blob_amplitude = 0.18;  // radial field amplitude
};

// One generated solid: ball-topology tet mesh, 3 surface features (urethra
// entrance/exit and one lateral point) plus interior features along the
// axis, and held-out landmark positions with labels.
struct SyntheticVolume {
  TetMesh mesh;
  FeatureSet features;
  std::vector<std::string> landmark_labels;
  std::vector<Vec3> landmarks;       // positions under this mesh's coordinates
  std::vector<int> landmark_vertices; // the anchoring vertex of each landmark
};

// A volume plus a smoothly deformed copy sharing connectivity; features and
// landmarks correspond index-by-index.
struct SyntheticPair {
  SyntheticVolume a;
  SyntheticVolume b;
  double max_displacement = 0.0; // of the applied warp, model units
};

// Closed genus-0 triangle mesh: unit icosphere at the given subdivision level.
TriMesh gen_icosphere(int level);

// Generates the solid described by the options. Throws MetricError after
// repeated jitter attempts still produce degenerate tets.
SyntheticVolume gen_synthetic(const SyntheticOptions& opt);

// Generates a volume and its deformed copy (seeded radial + bending warp).
// The warp magnitude is calibrated so the max vertex displacement equals
// displacement_fraction of the bounding-box diagonal.
SyntheticPair gen_synthetic_pair(const SyntheticOptions& opt, std::uint64_t deform_seed,
                                 double displacement_fraction = 0.15);

} // namespace ballmap
