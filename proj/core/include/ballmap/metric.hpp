#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "ballmap/mesh.hpp"

namespace ballmap {

// A triangle or tet is treated as degenerate when its quality ratio
// (inradius/longest edge for triangles, min dihedral for tets) drops
// below this threshold.
inline constexpr double kDegenerateQuality = 1e-7;

// Edge-length assignment l: E -> R+ over a TriMesh or TetMesh host.
// Exactly one host pointer is set.
struct DiscreteMetric {
  const TriMesh* tri = nullptr;
  const TetMesh* tet = nullptr;
  std::vector<double> lengths;

  static DiscreteMetric from_surface(const TriMesh& m);               // lengths from coordinates
  static DiscreteMetric from_volume(const TetMesh& m);                // lengths from coordinates
  static DiscreteMetric surface(const TriMesh& m, std::vector<double> lengths);
  static DiscreteMetric volume(const TetMesh& m, std::vector<double> lengths);

  int n_edges() const { return static_cast<int>(lengths.size()); }

  // Checks positivity plus per-simplex realizability; throws MetricError
  // naming the first offending simplex.
  void validate() const;
};

// inradius / longest edge of the triangle with sides (a,b,c); <= 0 when the
// triangle inequality fails.
double triangle_quality(double a, double b, double c);

// Corner angles of face f by the cosine law, ordered like the face corners.
// Throws MetricError naming the face when degenerate.
std::array<double, 3> face_angles(const DiscreteMetric& metric, int f);

// Angle at `corner` (a vertex id of face f).
double corner_angle(const DiscreteMetric& metric, int f, int corner);

// Angle deficit: 2*pi - sum of incident corner angles for interior vertices,
// pi - sum for boundary vertices.
double vertex_curvature(const DiscreteMetric& metric, int v);
Eigen::VectorXd vertex_curvatures(const DiscreteMetric& metric);

struct GaussBonnetReport {
  double total;    // sum of vertex curvatures, radians
  int euler;       // V - E + F
  double residual; // |total - 2*pi*euler|
};
GaussBonnetReport total_curvature_check(const DiscreteMetric& metric);

// All six dihedral angles of tet t, ordered like TetMesh::tet_edges.
// Computed from face angles via the spherical law of cosines.
// Throws MetricError naming the tet when not realizable.
std::array<double, 6> tet_dihedrals(const DiscreteMetric& metric, int t);

// Dihedral angle of tet t along (global) edge e.
double dihedral_angle(const DiscreteMetric& metric, int t, int e);

// 2*pi (interior edge) or pi (boundary edge) minus the incident dihedral sum.
double edge_curvature(const DiscreteMetric& metric, int e);
Eigen::VectorXd edge_curvatures(const DiscreteMetric& metric);

// Volume of tet t from the metric via the Cayley-Menger determinant.
// Throws MetricError when the six lengths are not realizable.
double tet_volume(const DiscreteMetric& metric, int t);

// Volume of tet t from stored coordinates (signed determinant / 6).
double tet_volume(const TetMesh& mesh, int t);

// True when the six lengths (tet_edges order) form a non-degenerate
// Euclidean tetrahedron: valid faces and positive Cayley-Menger value.
bool tet_lengths_realizable(const std::array<double, 6>& l);

// 288 * V^2 for six edge lengths in tet_edges order (may be negative).
double cayley_menger_value(const std::array<double, 6>& l);

// Per-tet lengths of the metric in tet_edges order.
std::array<double, 6> tet_lengths(const DiscreteMetric& metric, int t);

// Paper-form per-tet energy summed over the mesh:
//   sum_t ( Vol(t) - sum_{e in t} l_e * theta_e(t) ).
double volume_energy(const DiscreteMetric& metric);

// Variational potential of the volumetric flow:
//   sum_e c_e * l_e - sum_t sum_{e in t} l_e * theta_e(t),
// with c_e = 2*pi for interior and pi for boundary edges. Its exact
// gradient in the edge lengths is the edge curvature field.
double flow_energy(const DiscreteMetric& metric);

} // namespace ballmap
