#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ballmap/circle_packing.hpp"
#include "ballmap/synthetic.hpp"
#include "helpers.hpp"

using namespace ballmap;
using namespace ballmap::testing;
using std::numbers::pi;

namespace {

// Packing with hand-set radii/inversive distances on a single triangle.
struct LonePacking {
  TriMesh mesh;
  CirclePacking packing;
  LonePacking(double gi, double gj, double gk, double iij, double ijk, double iki)
      : mesh(TriMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}})) {
    packing.mesh = &mesh;
    packing.radii = Eigen::Vector3d(gi, gj, gk);
    packing.logs = packing.radii.array().log();
    packing.inversive.resize(3);
    packing.inversive[mesh.edge_between(0, 1)] = iij;
    packing.inversive[mesh.edge_between(1, 2)] = ijk;
    packing.inversive[mesh.edge_between(2, 0)] = iki;
  }
};

} // namespace

TEST_CASE("unit equilateral mesh: gamma = 1/2, I = 1") {
  TetMesh solid = unit_regular_tet_solid();
  TriMesh m = solid.boundary_surface().mesh;
  CirclePacking p = CirclePacking::from_embedding(m);
  for (int v = 0; v < 4; ++v) CHECK(p.radii[v] == doctest::Approx(0.5).epsilon(1e-14));
  for (int e = 0; e < m.n_edges(); ++e) CHECK(p.inversive[e] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("packing round-trips the input lengths") {
  TriMesh sphere = gen_icosphere(2);
  DiscreteMetric input = DiscreteMetric::from_surface(sphere);
  CirclePacking p = CirclePacking::from_embedding(sphere);
  DiscreteMetric induced = p.metric();
  for (int e = 0; e < sphere.n_edges(); ++e)
    CHECK(std::abs(induced.lengths[e] - input.lengths[e]) < 1e-12);
}

TEST_CASE("3-4-5 triangle per-face radii round-trip") {
  std::vector<Vec3> v = {{0, 0, 0}, {3, 0, 0}, {0, 4, 0}};
  TriMesh m = TriMesh::build(std::move(v), {{0, 1, 2}});
  CirclePacking p = CirclePacking::from_embedding(m);
  // Corner radii (s - opposite side): s = 6 for sides 3,4,5.
  CHECK(p.radii[0] == doctest::Approx(1.0)); // opposite the hypotenuse
  CHECK(p.radii[1] == doctest::Approx(2.0)); // opposite the side of length 4
  CHECK(p.radii[2] == doctest::Approx(3.0)); // opposite the side of length 3
  DiscreteMetric induced = p.metric();
  DiscreteMetric input = DiscreteMetric::from_surface(m);
  for (int e = 0; e < 3; ++e) CHECK(std::abs(induced.lengths[e] - input.lengths[e]) < 1e-12);
}

TEST_CASE("induced lengths from radii and inversive distance") {
  LonePacking a(1, 1, 1, 1.0, 1.0, 1.0);
  CHECK(a.packing.metric().lengths[a.mesh.edge_between(0, 1)] == doctest::Approx(2.0));

  LonePacking b(3, 4, 1, 0.0, 1.0, 1.0);
  CHECK(b.packing.metric().lengths[b.mesh.edge_between(0, 1)] == doctest::Approx(5.0));

  LonePacking c(1, 2, 1, 1.5, 1.0, 1.0);
  CHECK(c.packing.metric().lengths[c.mesh.edge_between(0, 1)] ==
        doctest::Approx(std::sqrt(11.0)).epsilon(1e-12));
}

TEST_CASE("needle triangle fails initialization naming the face") {
  TriMesh m = TriMesh::build({{0, 0, 0}, {1, 0, 0}, {0.5, 0.5, 0}}, {{0, 1, 2}});
  DiscreteMetric d = DiscreteMetric::from_surface(m);
  d.lengths[0] = d.lengths[1] + d.lengths[2]; // forces a zero corner radius
  CHECK_THROWS_WITH_AS(CirclePacking::from_metric(m, d), doctest::Contains("face"), MetricError);
}

TEST_CASE("entropy gradient vanishes at the target metric") {
  TetMesh solid = unit_regular_tet_solid();
  TriMesh m = solid.boundary_surface().mesh;
  CirclePacking p = CirclePacking::from_embedding(m);
  FlowConfig cfg(m, Eigen::VectorXd::Constant(4, pi));
  Eigen::VectorXd g = entropy_gradient(p, cfg);
  CHECK(g.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("entropy gradient matches finite differences of the energy") {
  TriMesh sphere = gen_icosphere(1);
  CirclePacking p = CirclePacking::from_embedding(sphere);
  // Slightly non-symmetric state.
  Eigen::VectorXd u = p.logs;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pert(-0.02, 0.02);
  for (int v = 0; v < u.size(); ++v) u[v] += pert(rng);
  p.set_logs(u);
  REQUIRE(p.metric_valid());

  const Eigen::VectorXd target =
      Eigen::VectorXd::Constant(sphere.n_vertices(), 4.0 * pi / sphere.n_vertices());
  const Eigen::VectorXd k = packing_curvatures(p);
  const double eps = 1e-6;
  for (int j : {0, 5, 17, 23}) {
    Eigen::VectorXd lo = u, hi = u;
    lo[j] -= eps;
    hi[j] += eps;
    const double fd = entropy_energy_delta(p, target, lo, hi, 16) / (2.0 * eps);
    CHECK(fd == doctest::Approx(k[j] - target[j]).epsilon(1e-4));
  }
}

TEST_CASE("hessian: symmetry, zero row sums, finite-difference agreement") {
  TriMesh sphere = gen_icosphere(1);
  CirclePacking p = CirclePacking::from_embedding(sphere);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pert(-0.05, 0.05);
  Eigen::VectorXd u = p.logs;
  for (int v = 0; v < u.size(); ++v) u[v] += pert(rng);
  p.set_logs(u);
  REQUIRE(p.metric_valid());

  Eigen::SparseMatrix<double> h = hessian(p);
  Eigen::MatrixXd hd = Eigen::MatrixXd(h);
  CHECK((hd - hd.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(hd.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);

  // dtheta_i/du_j = d_ij / l_ij against central differences per face.
  const double eps = 1e-6;
  const DiscreteMetric metric = p.metric();
  for (int f = 0; f < sphere.n_faces(); ++f) {
    const auto dist = radial_center_distances(p, f);
    for (int ci = 0; ci < 3; ++ci) {
      const int cj = (ci + 1) % 3;
      const int ck = (ci + 2) % 3;
      const int vj = sphere.faces[f][cj];
      // Edge (v_i, v_j) is opposite corner ck.
      const double expected = dist[ck] / metric.lengths[sphere.face_edges[f][ck]];
      CirclePacking lo = p, hi = p;
      Eigen::VectorXd ulo = u, uhi = u;
      ulo[vj] -= eps;
      uhi[vj] += eps;
      lo.set_logs(ulo);
      hi.set_logs(uhi);
      const double fd =
          (face_angles(hi.metric(), f)[ci] - face_angles(lo.metric(), f)[ci]) / (2.0 * eps);
      CHECK(fd == doctest::Approx(expected).epsilon(1e-5));
    }
  }
}

TEST_CASE("hessian symmetry dtheta_i/du_j = dtheta_j/du_i by finite differences") {
  TriMesh sphere = gen_icosphere(1);
  CirclePacking p = CirclePacking::from_embedding(sphere);
  const Eigen::VectorXd u = p.logs;
  const double eps = 1e-6;
  for (int f : {0, 7, 31}) {
    for (int ci = 0; ci < 3; ++ci) {
      const int cj = (ci + 1) % 3;
      const int vi = sphere.faces[f][ci], vj = sphere.faces[f][cj];
      auto dtheta = [&](int corner, int vertex) {
        CirclePacking lo = p, hi = p;
        Eigen::VectorXd ulo = u, uhi = u;
        ulo[vertex] -= eps;
        uhi[vertex] += eps;
        lo.set_logs(ulo);
        hi.set_logs(uhi);
        return (face_angles(hi.metric(), f)[corner] - face_angles(lo.metric(), f)[corner]) /
               (2.0 * eps);
      };
      CHECK(dtheta(ci, vj) == doctest::Approx(dtheta(cj, vi)).epsilon(1e-5));
    }
  }
}
