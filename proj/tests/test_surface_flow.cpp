#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ballmap/circle_packing.hpp"
#include "ballmap/synthetic.hpp"
#include "helpers.hpp"

using namespace ballmap;
using namespace ballmap::testing;
using std::numbers::pi;

TEST_CASE("flow starting at the solution takes zero iterations") {
  TetMesh solid = unit_regular_tet_solid();
  TriMesh m = solid.boundary_surface().mesh;
  CirclePacking p = CirclePacking::from_embedding(m);
  FlowConfig cfg(m, Eigen::VectorXd::Constant(4, pi));
  FlowReport rep;
  flow_to_target(p, cfg, &rep);
  CHECK(rep.converged);
  CHECK(rep.iterations == 0);
}

TEST_CASE("tetrahedron flow from an asymmetric start reaches the symmetric metric") {
  TetMesh solid = unit_regular_tet_solid();
  TriMesh m = solid.boundary_surface().mesh;
  CirclePacking p = CirclePacking::from_embedding(m);
  Eigen::VectorXd u = p.logs;
  u[1] += 0.4;
  u[2] -= 0.3;
  u[3] += 0.15;
  p.set_logs(u);
  REQUIRE(p.metric_valid());

  FlowConfig cfg(m, Eigen::VectorXd::Constant(4, pi));
  FlowReport rep;
  CirclePacking out = flow_to_target(p, cfg, &rep);
  CHECK(rep.converged);
  CHECK(rep.residual < 1e-8);
  // The fixed point is the equal-length metric, unique up to scale.
  DiscreteMetric metric = out.metric();
  const double l0 = metric.lengths[0];
  for (int e = 1; e < m.n_edges(); ++e)
    CHECK(metric.lengths[e] == doctest::Approx(l0).epsilon(1e-7));
}

TEST_CASE("inversive distances are bit-identical across the flow") {
  TriMesh sphere = gen_icosphere(2);
  CirclePacking p = CirclePacking::from_embedding(sphere);
  const Eigen::VectorXd before = p.inversive;
  FlowConfig cfg(sphere, Eigen::VectorXd::Constant(sphere.n_vertices(),
                                                   4.0 * pi / sphere.n_vertices()));
  CirclePacking out = flow_to_target(p, cfg);
  REQUIRE(out.inversive.size() == before.size());
  for (int e = 0; e < before.size(); ++e) CHECK(out.inversive[e] == before[e]);
}

TEST_CASE("uniform-target flow on a 1k-vertex genus-0 mesh converges") {
  SyntheticOptions opt;
  opt.shape = SyntheticShape::Blob;
  opt.resolution = 3;
  opt.seed = 11;
  TriMesh m = gen_synthetic(opt).mesh.boundary_surface().mesh;
  REQUIRE(m.n_vertices() == 642);
  CirclePacking p = CirclePacking::from_embedding(m);
  FlowConfig cfg(m, Eigen::VectorXd::Constant(m.n_vertices(), 4.0 * pi / m.n_vertices()));
  FlowReport rep;
  flow_to_target(p, cfg, &rep);
  CHECK(rep.converged);
  CHECK(rep.residual < 1e-8);
  CHECK(rep.iterations <= 200);
}

TEST_CASE("entropy energy is non-increasing across accepted Newton steps") {
  SyntheticOptions opt;
  opt.shape = SyntheticShape::Blob;
  opt.resolution = 2;
  opt.seed = 4;
  TriMesh m = gen_synthetic(opt).mesh.boundary_surface().mesh;
  CirclePacking p = CirclePacking::from_embedding(m);
  FlowConfig cfg(m, Eigen::VectorXd::Constant(m.n_vertices(), 4.0 * pi / m.n_vertices()));

  std::vector<Eigen::VectorXd> trail;
  trail.push_back(p.logs);
  FlowReport rep;
  flow_to_target(p, cfg, &rep, [&](int, const CirclePacking& it) { trail.push_back(it.logs); });
  REQUIRE(rep.converged);
  REQUIRE(trail.size() >= 2);
  for (std::size_t k = 0; k + 1 < trail.size(); ++k) {
    const double delta = entropy_energy_delta(p, cfg.target, trail[k], trail[k + 1], 64);
    CHECK(delta <= 1e-10);
  }
}

TEST_CASE("Gauss-Bonnet holds at every flow iteration") {
  TriMesh sphere = gen_icosphere(2);
  CirclePacking p = CirclePacking::from_embedding(sphere);
  Eigen::VectorXd u = p.logs;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pert(-0.05, 0.05);
  for (int v = 0; v < u.size(); ++v) u[v] += pert(rng);
  p.set_logs(u);
  REQUIRE(p.metric_valid());

  FlowConfig cfg(sphere,
                 Eigen::VectorXd::Constant(sphere.n_vertices(), 4.0 * pi / sphere.n_vertices()));
  double worst = 0.0;
  FlowReport rep;
  flow_to_target(p, cfg, &rep, [&](int, const CirclePacking& it) {
    worst = std::max(worst, total_curvature_check(it.metric()).residual);
  });
  CHECK(rep.converged);
  CHECK(worst < 1e-9);
}

TEST_CASE("non-solvable targets are rejected at construction") {
  TriMesh sphere = gen_icosphere(1);
  Eigen::VectorXd bad = Eigen::VectorXd::Constant(sphere.n_vertices(), 0.1);
  CHECK_THROWS_AS(FlowConfig(sphere, bad), ValidationError);
}
