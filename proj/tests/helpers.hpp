#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "ballmap/mesh.hpp"
#include "ballmap/metric.hpp"

namespace ballmap::testing {

// Regular tetrahedron solid, edge length 2*sqrt(2).
inline TetMesh regular_tet_solid() {
  std::vector<Vec3> v = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  return TetMesh::build(std::move(v), {{0, 1, 2, 3}}, /*fix_orientation=*/true);
}

// Regular tetrahedron solid with unit edge length.
inline TetMesh unit_regular_tet_solid() {
  const double s = 1.0 / (2.0 * std::sqrt(2.0));
  std::vector<Vec3> v = {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
  return TetMesh::build(std::move(v), {{0, 1, 2, 3}}, true);
}

// Right-corner tet at the origin: (0,0,0),(1,0,0),(0,1,0),(0,0,1).
inline TetMesh right_corner_tet() {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  return TetMesh::build(std::move(v), {{0, 1, 2, 3}}, true);
}

// Closed surface of the regular tetrahedron (edge 2*sqrt(2)).
inline TriMesh tetrahedron_surface() { return regular_tet_solid().boundary_surface().mesh; }

// Octahedron surface: vertices at +-unit axes.
inline TriMesh octahedron_surface() {
  std::vector<Vec3> v = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                         {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
  std::vector<std::array<int, 3>> f = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                                       {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  return TriMesh::build(std::move(v), std::move(f));
}

// Dihedral angle of the embedded tet (a,b,c,d) along edge (a,b), from
// coordinates: the oracle for the metric-based formula.
inline double coordinate_dihedral(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 e = (b - a).normalized();
  const Vec3 u = (c - a) - (c - a).dot(e) * e;
  const Vec3 w = (d - a) - (d - a).dot(e) * e;
  return std::acos(std::clamp(u.normalized().dot(w.normalized()), -1.0, 1.0));
}

// Randomly perturbed valid surface metric: scales each edge length by
// exp(U(-eps, eps)) and retries until every face keeps the triangle
// inequality.
inline DiscreteMetric perturbed_surface_metric(const TriMesh& mesh, std::uint64_t seed,
                                               double eps = 0.1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-eps, eps);
  DiscreteMetric base = DiscreteMetric::from_surface(mesh);
  for (int attempt = 0; attempt < 100; ++attempt) {
    DiscreteMetric m = base;
    for (auto& l : m.lengths) l *= std::exp(u(rng));
    bool ok = true;
    for (int f = 0; f < mesh.n_faces() && ok; ++f) {
      const double l0 = m.lengths[mesh.face_edges[f][0]];
      const double l1 = m.lengths[mesh.face_edges[f][1]];
      const double l2 = m.lengths[mesh.face_edges[f][2]];
      ok = triangle_quality(l0, l1, l2) > 1e-3;
    }
    if (ok) return m;
  }
  return base;
}

} // namespace ballmap::testing
