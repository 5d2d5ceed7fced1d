#include <doctest.h>

#include "ballmap/mesh.hpp"
#include "helpers.hpp"

using namespace ballmap;
using namespace ballmap::testing;

TEST_CASE("triangle mesh adjacency and Euler characteristic") {
  TriMesh m = tetrahedron_surface();
  CHECK(m.n_vertices() == 4);
  CHECK(m.n_faces() == 4);
  CHECK(m.n_edges() == 6);
  CHECK(m.euler_characteristic() == 2);
  CHECK(m.is_closed());
  for (int e = 0; e < m.n_edges(); ++e) {
    CHECK(m.edge_faces[e][0] >= 0);
    CHECK(m.edge_faces[e][1] >= 0);
  }
  // face_edges[f][c] is opposite corner c: it must not touch that corner.
  for (int f = 0; f < m.n_faces(); ++f)
    for (int c = 0; c < 3; ++c) {
      const auto& e = m.edges[m.face_edges[f][c]];
      CHECK(e[0] != m.faces[f][c]);
      CHECK(e[1] != m.faces[f][c]);
    }
}

TEST_CASE("face validation") {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  CHECK_THROWS_AS(TriMesh::build(v, {{0, 1, 3}}), TopologyError);
  CHECK_THROWS_AS(TriMesh::build(v, {{0, 1, 1}}), TopologyError);
  // Two faces with the same winding over one edge: inconsistent orientation.
  std::vector<Vec3> v4 = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  CHECK_THROWS_AS(TriMesh::build(v4, {{0, 1, 2}, {0, 1, 3}}), TopologyError);
  CHECK_NOTHROW(TriMesh::build(v4, {{0, 1, 2}, {1, 0, 3}}));
}

TEST_CASE("tet mesh adjacency, boundary extraction") {
  TetMesh m = regular_tet_solid();
  CHECK(m.n_tets() == 1);
  CHECK(m.n_edges() == 6);
  CHECK(m.n_faces() == 4);
  for (int e = 0; e < m.n_edges(); ++e) CHECK(m.is_boundary_edge(e));

  auto bs = m.boundary_surface();
  CHECK(bs.mesh.n_vertices() == 4);
  CHECK(bs.mesh.euler_characteristic() == 2);
  CHECK(bs.mesh.is_closed());
  // Outward orientation: positive signed volume against an interior point.
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : m.vertices) centroid += p / 4.0;
  for (const auto& f : bs.mesh.faces) {
    const double vol = signed_tet_volume(centroid, bs.mesh.vertices[f[0]],
                                         bs.mesh.vertices[f[1]], bs.mesh.vertices[f[2]]);
    CHECK(vol > 0.0);
  }
}

TEST_CASE("tet orientation fixing") {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  CHECK_THROWS_AS(TetMesh::build(v, {{0, 2, 1, 3}}), MetricError);
  int fixed = 0;
  TetMesh m = TetMesh::build(v, {{0, 2, 1, 3}}, true, &fixed);
  CHECK(fixed == 1);
  CHECK(signed_tet_volume(m.vertices[m.tets[0][0]], m.vertices[m.tets[0][1]],
                          m.vertices[m.tets[0][2]], m.vertices[m.tets[0][3]]) > 0.0);
}

TEST_CASE("two-tet mesh interior face") {
  std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.7, 0.7, 0.7}};
  TetMesh m = TetMesh::build(v, {{0, 1, 2, 3}, {1, 2, 3, 4}}, true);
  int interior = 0;
  for (int f = 0; f < m.n_faces(); ++f)
    if (m.is_interior_face(f)) ++interior;
  CHECK(interior == 1);
  CHECK(m.boundary_face_triples().size() == 6);
}
