#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ballmap/metric.hpp"
#include "ballmap/synthetic.hpp"
#include "helpers.hpp"

using namespace ballmap;
using namespace ballmap::testing;
using std::numbers::pi;

namespace {

// Single triangle with prescribed side lengths, as its own mesh.
// Corner k is opposite side l[k].
TriMesh lone_triangle(double l0, double l1, double l2) {
  // Realize in the plane: corner 0 at origin, corner 1 at (l2, 0).
  const double x = (l2 * l2 + l1 * l1 - l0 * l0) / (2.0 * l2);
  const double y = std::sqrt(std::max(0.0, l1 * l1 - x * x));
  std::vector<Vec3> v = {{0, 0, 0}, {l2, 0, 0}, {x, y, 0}};
  return TriMesh::build(std::move(v), {{0, 1, 2}});
}

} // namespace

TEST_CASE("corner angles by the cosine law") {
  TriMesh m345 = lone_triangle(5, 4, 3); // corner 0 opposite the 5 side
  DiscreteMetric d345 = DiscreteMetric::from_surface(m345);
  CHECK(corner_angle(d345, 0, 0) == doctest::Approx(pi / 2).epsilon(1e-12));

  TriMesh meq = lone_triangle(1, 1, 1);
  DiscreteMetric deq = DiscreteMetric::from_surface(meq);
  for (int c = 0; c < 3; ++c)
    CHECK(corner_angle(deq, 0, c) == doctest::Approx(pi / 3).epsilon(1e-12));

  // Sides 2,2,3, corner opposite the 3 side: law of cosines oracle.
  TriMesh m223 = lone_triangle(3, 2, 2);
  DiscreteMetric d223 = DiscreteMetric::from_surface(m223);
  const double oracle = std::acos((2. * 2 + 2 * 2 - 3 * 3) / (2. * 2 * 2));
  CHECK(oracle == doctest::Approx(std::acos(-1.0 / 8.0)));
  CHECK(corner_angle(d223, 0, 0) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("degenerate triangle raises a metric error naming the face") {
  TriMesh m = tetrahedron_surface();
  DiscreteMetric d = DiscreteMetric::from_surface(m);
  d.lengths[m.face_edges[0][0]] =
      d.lengths[m.face_edges[0][1]] + d.lengths[m.face_edges[0][2]] + 1e-9;
  CHECK_THROWS_WITH_AS(face_angles(d, 0), doctest::Contains("face 0"), MetricError);
}

TEST_CASE("vertex curvature is the angle deficit") {
  TriMesh tet = tetrahedron_surface();
  DiscreteMetric d = DiscreteMetric::from_surface(tet);
  for (int v = 0; v < 4; ++v)
    CHECK(vertex_curvature(d, v) == doctest::Approx(pi).epsilon(1e-12));

  TriMesh oct = octahedron_surface();
  DiscreteMetric od = DiscreteMetric::from_surface(oct);
  for (int v = 0; v < 6; ++v)
    CHECK(vertex_curvature(od, v) == doctest::Approx(2 * pi / 3).epsilon(1e-12));
}

TEST_CASE("flat interior vertex has zero curvature") {
  // Hexagonal fan of equilateral triangles around a center vertex.
  std::vector<Vec3> v = {{0, 0, 0}};
  for (int k = 0; k < 6; ++k)
    v.push_back({std::cos(k * pi / 3), std::sin(k * pi / 3), 0});
  std::vector<std::array<int, 3>> f;
  for (int k = 0; k < 6; ++k) f.push_back({0, 1 + k, 1 + (k + 1) % 6});
  TriMesh m = TriMesh::build(std::move(v), std::move(f));
  DiscreteMetric d = DiscreteMetric::from_surface(m);
  CHECK(vertex_curvature(d, 0) == doctest::Approx(0.0).epsilon(1e-12));
  // Boundary vertex of the fan: pi - (pi/3 + pi/3) = pi/3.
  CHECK(vertex_curvature(d, 1) == doctest::Approx(pi / 3).epsilon(1e-12));
}

TEST_CASE("Gauss-Bonnet on closed meshes") {
  TriMesh tet = tetrahedron_surface();
  auto r = total_curvature_check(DiscreteMetric::from_surface(tet));
  CHECK(r.euler == 2);
  CHECK(r.total == doctest::Approx(4 * pi));
  CHECK(r.residual < 1e-9);

  TriMesh oct = octahedron_surface();
  auto ro = total_curvature_check(DiscreteMetric::from_surface(oct));
  CHECK(ro.total == doctest::Approx(4 * pi));
  CHECK(ro.residual < 1e-9);
}

TEST_CASE("Gauss-Bonnet holds for any valid metric (property)") {
  TriMesh sphere = gen_icosphere(2);
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    DiscreteMetric d = perturbed_surface_metric(sphere, seed, 0.15);
    auto r = total_curvature_check(d);
    CHECK(r.euler == 2);
    CHECK(r.residual < 1e-9);
  }
}

TEST_CASE("dihedral angles: regular tet closed form") {
  TetMesh m = regular_tet_solid();
  DiscreteMetric d = DiscreteMetric::from_volume(m);
  const double expected = std::acos(1.0 / 3.0);
  for (int e = 0; e < 6; ++e)
    CHECK(dihedral_angle(d, 0, e) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("dihedral angles match coordinate geometry") {
  TetMesh m = right_corner_tet();
  DiscreteMetric d = DiscreteMetric::from_volume(m);
  const auto& tc = m.tets[0];
  for (int e = 0; e < m.n_edges(); ++e) {
    const int a = m.edges[e][0], b = m.edges[e][1];
    int rest[2], idx = 0;
    for (int k = 0; k < 4; ++k)
      if (tc[k] != a && tc[k] != b) rest[idx++] = tc[k];
    const double oracle = coordinate_dihedral(m.vertices[a], m.vertices[b],
                                              m.vertices[rest[0]], m.vertices[rest[1]]);
    CHECK(dihedral_angle(d, 0, e) == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("dihedral angles of random realizable tets match coordinates") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec3> v(4);
    for (auto& p : v) p = Vec3(u(rng), u(rng), u(rng));
    if (std::abs(signed_tet_volume(v[0], v[1], v[2], v[3])) < 1e-2) continue;
    TetMesh m = TetMesh::build(v, {{0, 1, 2, 3}}, true);
    DiscreteMetric d = DiscreteMetric::from_volume(m);
    for (int e = 0; e < 6; ++e) {
      const int a = m.edges[e][0], b = m.edges[e][1];
      int rest[2], idx = 0;
      for (int k = 0; k < 4; ++k)
        if (m.tets[0][k] != a && m.tets[0][k] != b) rest[idx++] = m.tets[0][k];
      const double oracle = coordinate_dihedral(m.vertices[a], m.vertices[b],
                                                m.vertices[rest[0]], m.vertices[rest[1]]);
      CHECK(dihedral_angle(d, 0, e) == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
}

TEST_CASE("flattened tet is rejected") {
  TetMesh m = right_corner_tet();
  DiscreteMetric d = DiscreteMetric::from_volume(m);
  // Push one length to the realizability boundary: make vertex 3 coplanar.
  std::vector<Vec3> flat = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.3, 0.3, 0}};
  std::array<double, 6> l{};
  static const int pairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (int k = 0; k < 6; ++k) l[k] = (flat[pairs[k][0]] - flat[pairs[k][1]]).norm();
  CHECK_FALSE(tet_lengths_realizable(l));
  for (int k = 0; k < 6; ++k) d.lengths[m.tet_edges[0][k]] = l[k];
  CHECK_THROWS_AS(tet_dihedrals(d, 0), MetricError);
}

TEST_CASE("edge curvature of a single regular tet") {
  TetMesh m = regular_tet_solid();
  DiscreteMetric d = DiscreteMetric::from_volume(m);
  const double expected = pi - std::acos(1.0 / 3.0);
  for (int e = 0; e < 6; ++e)
    CHECK(edge_curvature(d, e) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("interior edge curvature vanishes for embedded meshes") {
  SyntheticOptions opt;
  opt.resolution = 1;
  TetMesh m = gen_synthetic(opt).mesh;
  DiscreteMetric d = DiscreteMetric::from_volume(m);
  Eigen::VectorXd k = edge_curvatures(d);
  for (int e = 0; e < m.n_edges(); ++e) {
    if (!m.is_boundary_edge(e)) CHECK(std::abs(k[e]) < 1e-9);
  }
}

TEST_CASE("tet volume: closed forms and the dual-formula oracle") {
  TetMesh rc = right_corner_tet();
  CHECK(tet_volume(rc, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(tet_volume(DiscreteMetric::from_volume(rc), 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

  TetMesh reg = unit_regular_tet_solid();
  CHECK(tet_volume(DiscreteMetric::from_volume(reg), 0) ==
        doctest::Approx(1.0 / (6.0 * std::sqrt(2.0))).epsilon(1e-12));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec3> v(4);
    for (auto& p : v) p = Vec3(u(rng), u(rng), u(rng));
    if (std::abs(signed_tet_volume(v[0], v[1], v[2], v[3])) < 1e-2) continue;
    TetMesh m = TetMesh::build(v, {{0, 1, 2, 3}}, true);
    const double from_coords = tet_volume(m, 0);
    const double from_metric = tet_volume(DiscreteMetric::from_volume(m), 0);
    CHECK(std::abs(from_coords - from_metric) < 1e-10);
  }
}

TEST_CASE("angles are scale invariant") {
  TriMesh tri = tetrahedron_surface();
  DiscreteMetric ds = DiscreteMetric::from_surface(tri);
  TetMesh vol = right_corner_tet();
  DiscreteMetric dv = DiscreteMetric::from_volume(vol);
  for (double s : {0.01, 0.5, 7.0, 1234.5}) {
    DiscreteMetric ss = ds;
    for (auto& l : ss.lengths) l *= s;
    for (int f = 0; f < tri.n_faces(); ++f)
      for (int c = 0; c < 3; ++c)
        CHECK(std::abs(face_angles(ss, f)[c] - face_angles(ds, f)[c]) < 1e-10);
    DiscreteMetric sv = dv;
    for (auto& l : sv.lengths) l *= s;
    for (int e = 0; e < 6; ++e)
      CHECK(std::abs(dihedral_angle(sv, 0, e) - dihedral_angle(dv, 0, e)) < 1e-10);
  }
}

TEST_CASE("metric-from-coordinates curvature equals coordinate curvature") {
  TriMesh sphere = gen_icosphere(1);
  DiscreteMetric d = DiscreteMetric::from_surface(sphere);
  // Curvature directly in coordinates: angle deficit of embedded corner angles.
  for (int v = 0; v < sphere.n_vertices(); ++v) {
    double sum = 0.0;
    for (int f : sphere.vertex_faces[v]) {
      const auto& fc = sphere.faces[f];
      const int c = sphere.corner_of(f, v);
      const Vec3 a = sphere.vertices[fc[c]];
      const Vec3 b = sphere.vertices[fc[(c + 1) % 3]];
      const Vec3 cc = sphere.vertices[fc[(c + 2) % 3]];
      sum += std::acos(std::clamp((b - a).normalized().dot((cc - a).normalized()), -1.0, 1.0));
    }
    CHECK(std::abs((2 * pi - sum) - vertex_curvature(d, v)) < 1e-9);
  }
}

TEST_CASE("volume energy closed form for the unit regular tet") {
  TetMesh reg = unit_regular_tet_solid();
  DiscreteMetric d = DiscreteMetric::from_volume(reg);
  const double expected = 1.0 / (6.0 * std::sqrt(2.0)) - 6.0 * std::acos(1.0 / 3.0);
  CHECK(volume_energy(d) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(volume_energy(d) == doctest::Approx(-7.267903).epsilon(1e-6));
}

TEST_CASE("volume energy homogeneity: Vol scales as s^3, l*theta as s") {
  TetMesh reg = unit_regular_tet_solid();
  DiscreteMetric d = DiscreteMetric::from_volume(reg);
  const double vol1 = tet_volume(d, 0);
  double ltheta1 = 0.0;
  const auto dh = tet_dihedrals(d, 0);
  for (int k = 0; k < 6; ++k) ltheta1 += d.lengths[reg.tet_edges[0][k]] * dh[k];

  const double s = 2.5;
  DiscreteMetric ds = d;
  for (auto& l : ds.lengths) l *= s;
  CHECK(tet_volume(ds, 0) == doctest::Approx(s * s * s * vol1).epsilon(1e-12));
  double ltheta_s = 0.0;
  const auto dhs = tet_dihedrals(ds, 0);
  for (int k = 0; k < 6; ++k) ltheta_s += ds.lengths[reg.tet_edges[0][k]] * dhs[k];
  CHECK(ltheta_s == doctest::Approx(s * ltheta1).epsilon(1e-12));
}
