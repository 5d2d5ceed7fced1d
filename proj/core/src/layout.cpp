#include "ballmap/layout.hpp"

#include <cmath>
#include <queue>
#include <string>

#include "ballmap/errors.hpp"

namespace ballmap {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Third point at distances (ra, rb) from placed points (a, b), on the side
// making (a, b, p) counterclockwise.
Vec2 third_point(const Vec2& a, const Vec2& b, double ra, double rb) {
  const Vec2 ab = b - a;
  const double d = ab.norm();
  const double x = (ra * ra - rb * rb + d * d) / (2.0 * d);
  const double h2 = ra * ra - x * x;
  const double h = std::sqrt(std::max(0.0, h2));
  const Vec2 ex = ab / d;
  const Vec2 ey(-ex.y(), ex.x()); // left of a->b
  return a + x * ex + h * ey;
}

} // namespace

PlanarLayout planar_layout(const TriMesh& mesh, const DiscreteMetric& metric, int excluded_face,
                           int seed_face, double consistency_tol) {
  const int nf = mesh.n_faces();
  if (seed_face < 0) seed_face = excluded_face == 0 ? 1 : 0;
  if (seed_face == excluded_face || seed_face >= nf)
    throw ValidationError("invalid layout seed face");

  PlanarLayout out;
  out.seed_face = seed_face;
  out.positions.assign(mesh.n_vertices(), Vec2::Zero());
  std::vector<std::uint8_t> placed(mesh.n_vertices(), 0);
  std::vector<std::uint8_t> visited(nf, 0);
  if (excluded_face >= 0) visited[excluded_face] = 1;

  auto length = [&](int va, int vb) { return metric.lengths[mesh.edge_between(va, vb)]; };

  // Seed face laid out isometrically along the x-axis.
  {
    const auto& fc = mesh.faces[seed_face];
    const double lab = length(fc[0], fc[1]);
    out.positions[fc[0]] = Vec2(0, 0);
    out.positions[fc[1]] = Vec2(lab, 0);
    out.positions[fc[2]] =
        third_point(out.positions[fc[0]], out.positions[fc[1]], length(fc[0], fc[2]),
                    length(fc[1], fc[2]));
    placed[fc[0]] = placed[fc[1]] = placed[fc[2]] = 1;
    visited[seed_face] = 1;
  }

  std::queue<int> frontier;
  auto push_neighbors = [&](int f) {
    for (int c = 0; c < 3; ++c) {
      const int e = mesh.face_edges[f][c];
      for (int g : mesh.edge_faces[e]) {
        if (g >= 0 && !visited[g]) {
          visited[g] = 1;
          frontier.push(g);
        }
      }
    }
  };
  push_neighbors(seed_face);

  while (!frontier.empty()) {
    const int f = frontier.front();
    frontier.pop();
    const auto& fc = mesh.faces[f];
    int missing = -1, have = 0;
    for (int c = 0; c < 3; ++c) {
      if (placed[fc[c]]) ++have;
      else missing = c;
    }
    if (have < 2)
      throw ConvergenceError("layout frontier reached a face with unplaced edge (face " +
                             std::to_string(f) + ")");

    // Predicted position from this face's two other corners.
    const int ca = missing < 0 ? 0 : (missing + 1) % 3;
    const int cb = missing < 0 ? 1 : (missing + 2) % 3;
    const int cm = missing < 0 ? 2 : missing;
    const Vec2 pa = out.positions[fc[ca]], pb = out.positions[fc[cb]];
    const Vec2 predicted =
        third_point(pa, pb, length(fc[ca], fc[cm]), length(fc[cb], fc[cm]));

    if (missing < 0) {
      // All corners placed through other faces: flatness cross-check.
      const double mismatch = (predicted - out.positions[fc[cm]]).norm();
      if (mismatch > consistency_tol)
        throw ConvergenceError("layout is not flat: vertex " + std::to_string(fc[cm]) +
                                   " re-places with mismatch " + std::to_string(mismatch),
                               mismatch);
    } else {
      out.positions[fc[cm]] = predicted;
      placed[fc[cm]] = 1;
    }
    push_neighbors(f);
  }

  for (int v = 0; v < mesh.n_vertices(); ++v)
    if (!placed[v])
      throw TopologyError("layout did not reach vertex " + std::to_string(v) +
                          " (is the mesh connected?)");

  for (int f = 0; f < nf; ++f) {
    if (f == excluded_face) continue;
    const auto& fc = mesh.faces[f];
    const double area2 = cross2(out.positions[fc[1]] - out.positions[fc[0]],
                                out.positions[fc[2]] - out.positions[fc[0]]);
    if (!(area2 > 0.0))
      throw ConvergenceError("layout produced a non-positive face (face " + std::to_string(f) +
                             ")");
  }
  return out;
}

} // namespace ballmap
