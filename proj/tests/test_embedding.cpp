#include <doctest.h>

#include <cmath>

#include "ballmap/embedding.hpp"
#include "ballmap/metric.hpp"
#include "ballmap/synthetic.hpp"
#include "helpers.hpp"

using namespace ballmap;
using namespace ballmap::testing;

TEST_CASE("exactly flat metric recovers positions up to the fixed boundary") {
  SyntheticOptions opt;
  opt.resolution = 1;
  TetMesh mesh = gen_synthetic(opt).mesh;
  DiscreteMetric d = DiscreteMetric::from_volume(mesh);

  std::vector<std::pair<int, Vec3>> fixed;
  for (int v = 0; v < mesh.n_vertices(); ++v)
    if (mesh.is_boundary_vertex(v)) fixed.emplace_back(v, mesh.vertices[v]);

  EmbedResult r = embed_flat_metric(mesh, d.lengths, fixed);
  CHECK(r.flipped == 0);
  double rms = 0.0;
  for (int v = 0; v < mesh.n_vertices(); ++v)
    rms += (r.positions[v] - mesh.vertices[v]).squaredNorm();
  rms = std::sqrt(rms / mesh.n_vertices());
  CHECK(rms < 1e-8);
  CHECK(r.rms < 1e-10);
}

TEST_CASE("hard constraints are exact") {
  SyntheticOptions opt;
  opt.resolution = 1;
  TetMesh mesh = gen_synthetic(opt).mesh;
  DiscreteMetric d = DiscreteMetric::from_volume(mesh);

  std::vector<std::pair<int, Vec3>> fixed;
  for (int v = 0; v < mesh.n_vertices(); ++v)
    if (mesh.is_boundary_vertex(v)) fixed.emplace_back(v, mesh.vertices[v]);
  fixed.emplace_back(0, Vec3(0, 0, 0)); // the template center vertex

  EmbedResult r = embed_flat_metric(mesh, d.lengths, fixed);
  CHECK(r.positions[0] == Vec3(0, 0, 0));
}

TEST_CASE("rms stays under a thousandth of the mean edge on near-flat input") {
  SyntheticOptions opt;
  opt.shape = SyntheticShape::Blob;
  opt.resolution = 1;
  opt.seed = 3;
  TetMesh mesh = gen_synthetic(opt).mesh;
  DiscreteMetric d = DiscreteMetric::from_volume(mesh);
  // Mild metric noise below realizability limits: near-flat input.
  for (int e = 0; e < mesh.n_edges(); ++e)
    if (!mesh.is_boundary_edge(e)) d.lengths[e] *= 1.0 + 1e-5 * ((e % 7) - 3);

  std::vector<std::pair<int, Vec3>> fixed;
  for (int v = 0; v < mesh.n_vertices(); ++v)
    if (mesh.is_boundary_vertex(v)) fixed.emplace_back(v, mesh.vertices[v]);

  EmbedResult r = embed_flat_metric(mesh, d.lengths, fixed);
  double mean = 0.0;
  for (double l : d.lengths) mean += l;
  mean /= d.lengths.size();
  CHECK(r.rms < 1e-3 * mean);
  CHECK(r.flipped == 0);
}
