#pragma once

#include <functional>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "ballmap/metric.hpp"

namespace ballmap {

// Inversive-distance circle packing: per-vertex radii gamma_i (with logs
// u_i = ln gamma_i) and per-edge inversive distances I_ij. The flow deforms
// radii only; inversive distances are conformal invariants.
struct CirclePacking {
  const TriMesh* mesh = nullptr;
  Eigen::VectorXd radii;     // gamma_i > 0
  Eigen::VectorXd logs;      // u_i = ln gamma_i, kept exactly in sync
  Eigen::VectorXd inversive; // I_ij per edge

  // Packing reproducing the mesh's embedded edge lengths exactly:
  // per-face corner radii (l_ij + l_ki - l_jk)/2, vertex radius the minimum
  // over incident faces, I_ij solved from the length relation.
  static CirclePacking from_embedding(const TriMesh& mesh);
  // Same construction against an explicit metric.
  static CirclePacking from_metric(const TriMesh& mesh, const DiscreteMetric& metric);

  // Induced metric: l_ij = sqrt(gamma_i^2 + gamma_j^2 + 2 gamma_i gamma_j I_ij).
  DiscreteMetric metric() const;

  // Replace the log radii (radii updated to exp(u)).
  void set_logs(const Eigen::VectorXd& u);

  // True when every face of the induced metric is non-degenerate.
  bool metric_valid() const;
};

// Flow configuration. Construction checks the Gauss-Bonnet solvability
// condition sum(target) = 2*pi*chi within 1e-9.
struct FlowConfig {
  Eigen::VectorXd target;       // per-vertex target curvature, radians
  double tolerance = 1e-8;      // max-norm curvature residual
  int max_iterations = 200;     // Newton iteration cap
  double damping = 1.0;         // initial step scale in (0,1]
  int gauge = 0;                // vertex whose u stays pinned
  bool normalize_area = false;  // optional total-area renormalization per step

  FlowConfig(const TriMesh& mesh, Eigen::VectorXd target_curvatures);
};

struct FlowReport {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Per-vertex curvatures of the packing's induced metric.
Eigen::VectorXd packing_curvatures(const CirclePacking& p);

// (target - K): the negative gradient of the entropy energy, i.e. the
// discrete Ricci flow direction du_i/dt.
Eigen::VectorXd entropy_gradient(const CirclePacking& p, const FlowConfig& cfg);

// Entropy Hessian in Laplace form: h_ij = -w_ij off-diagonal,
// h_ii = sum_k w_ik, with w_ij = (d_ij^k + d_ij^l)/l_ij where d is the
// signed distance from the face's radial circle center to the edge.
Eigen::SparseMatrix<double> hessian(const CirclePacking& p);

// Per-face signed radical-center distances d for the three edges, in the
// order face_edges[f] (d[c] belongs to the edge opposite corner c).
std::array<double, 3> radial_center_distances(const CirclePacking& p, int f);

// Damped Newton minimization driving curvatures to cfg.target. Backtracks by
// halving whenever a step would break a triangle inequality. The returned
// report carries converged=false when the iteration cap is hit.
// `on_iteration`, when set, observes the accepted packing after every step.
CirclePacking flow_to_target(const CirclePacking& p, const FlowConfig& cfg,
                             FlowReport* report = nullptr,
                             const std::function<void(int, const CirclePacking&)>& on_iteration = {});

// Entropy-energy difference f(u1) - f(u0) for the energy whose gradient is
// (K - target), integrated along the straight segment by composite Simpson
// quadrature. Test instrumentation for the energy-decrease property.
double entropy_energy_delta(const CirclePacking& base, const Eigen::VectorXd& target,
                            const Eigen::VectorXd& u0, const Eigen::VectorXd& u1,
                            int quadrature_points = 64);

} // namespace ballmap
