#pragma once

#include <utility>
#include <vector>

#include "ballmap/metric.hpp"
#include "ballmap/sphere.hpp"

namespace ballmap {

// Connectivity change performed during the flow (2-3 face swap or its 3-2
// inverse). Recorded so downstream consumers can replay the surgery.
struct RemeshEvent {
  enum class Kind { Flip23, Flip32 } kind;
  std::array<int, 3> face;   // shared face (2-3) / created face (3-2)
  std::array<int, 2> apexes; // tet apexes (2-3) / removed edge (3-2)
  double t = 0.0;            // homotopy time of the event
};

// Boundary-metric homotopy: per-boundary-edge initial lengths l0 and final
// (sphere chordal) lengths l1, interpolated linearly in t.
struct HomotopySchedule {
  int steps = 20;
  std::vector<int> boundary_edges; // volume edge ids, ascending
  std::vector<double> l0, l1;      // aligned with boundary_edges
  double t = 0.0;

  static HomotopySchedule make(const TetMesh& mesh, const SphereParam& sphere, int steps);
  // Interpolated boundary length for the k-th boundary edge.
  double length_at(int k, double t) const { return (1.0 - t) * l0[k] + t * l1[k]; }
};

struct VolumeFlowConfig {
  double tolerance = 1e-4;          // max interior |K| target, radians
  double dtau = 0.05;               // explicit flow step
  int max_inner_iterations = 5000;  // per homotopy step
  double degeneracy_quality = 1e-4; // min-dihedral threshold triggering remesh
  int homotopy_steps = 20;
  std::vector<std::pair<int, Vec3>> features; // interior vertex pins

  enum class Solver { Auto, Euler, Newton } solver = Solver::Auto;
  int newton_max_iterations = 60;
  int max_embed_iterations = 200;
  bool verbose = false;
};

// Volumetric map of a tet mesh into the closed unit ball.
struct BallParam {
  TetMesh mesh;                // final connectivity, original coordinates
  std::vector<Vec3> positions; // image per vertex; boundary exactly on the sphere
  std::vector<RemeshEvent> changelog;
  double final_residual = 0.0; // max interior |K| at t = 1
  int homotopy_steps_used = 0;
  double embed_rms = 0.0;      // RMS edge-length error of the embedding
};

// Image tets with non-positive signed volume.
int count_flipped_tets(const TetMesh& mesh, const std::vector<Vec3>& positions);

// One explicit flow update l <- l + K * dtau on every interior edge, with
// step-halving when the result is unrealizable. Returns the updated metric
// and the max interior |K| after the update. This operates on fixed
// connectivity; the homotopy driver additionally remeshes.
std::pair<DiscreteMetric, double> interior_flow_step(const DiscreteMetric& metric,
                                                     const VolumeFlowConfig& cfg);

// Face swap between two adjacent tets (2-3 flip) or its inverse (3-2),
// chosen to maximize the minimum dihedral quality around the flagged tet.
// Returns the rebuilt mesh, transferred metric lengths and the event.
// Throws ConvergenceError when no legal swap improves quality.
struct RemeshResult {
  TetMesh mesh;
  std::vector<double> lengths;
  RemeshEvent event;
};
RemeshResult local_remesh(const TetMesh& mesh, const std::vector<double>& lengths, int tet,
                          double current_quality);

// Algorithm: walk t from 0 to 1; at each t pin the boundary metric to the
// interpolant, relax interior edges until max |K| < tolerance (warm-started
// from the previous step), then embed the flat metric over the sphere
// boundary. Throws ConvergenceError reporting t and residual on failure.
BallParam homotopy_parameterize(const TetMesh& mesh, const SphereParam& sphere,
                                const VolumeFlowConfig& cfg = {});

// Same, with interior feature vertices pinned to target positions during
// embedding; targets must be strictly inside the unit ball.
BallParam constrained_parameterize(const TetMesh& mesh, const SphereParam& sphere,
                                   const std::vector<std::pair<int, Vec3>>& features,
                                   VolumeFlowConfig cfg = {});

} // namespace ballmap
