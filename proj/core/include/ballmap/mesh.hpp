#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "ballmap/errors.hpp"

namespace ballmap {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

// Unordered vertex pair packed into a hashable key. Edge identity is the
// unordered pair; orientation lives only in faces/tets.
inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// Indexed triangle mesh with precomputed adjacency. Immutable after build();
// read-only queries are safe to call concurrently.
class TriMesh {
public:
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces; // counterclockwise (outward for closed meshes)

  // Derived connectivity, filled by build().
  std::vector<std::array<int, 2>> edges;      // v0 < v1
  std::vector<std::array<int, 2>> edge_faces; // -1 when absent; boundary edges have one face
  std::vector<std::array<int, 3>> face_edges; // face_edges[f][c] = edge opposite corner c
  std::vector<std::vector<int>> vertex_faces; // incident faces, ascending
  std::vector<std::vector<int>> vertex_edges; // incident edges, ascending
  std::vector<std::uint8_t> boundary_vertex;
  std::vector<std::uint8_t> boundary_edge;

  // Validates indices, 2-manifoldness and orientation consistency, then
  // builds the adjacency tables. Throws TopologyError on violation.
  static TriMesh build(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces);

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }

  int euler_characteristic() const { return n_vertices() - n_edges() + n_faces(); }
  bool is_closed() const;
  bool is_boundary_vertex(int v) const { return boundary_vertex[v] != 0; }
  bool is_boundary_edge(int e) const { return boundary_edge[e] != 0; }

  // Edge id between two vertices, -1 if absent.
  int edge_between(int a, int b) const;

  // Local index (0..2) of vertex v within face f, -1 if absent.
  int corner_of(int f, int v) const;

private:
  std::unordered_map<std::uint64_t, int> edge_lookup_;
};

// Indexed tetrahedral mesh. Tets are stored with positive orientation under
// the stored coordinates. Immutable after build().
class TetMesh {
public:
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;

  std::vector<std::array<int, 2>> edges;        // v0 < v1
  std::vector<std::array<int, 6>> tet_edges;    // local order (01,02,03,12,13,23)
  std::vector<std::vector<int>> edge_tets;      // incident tets, ascending
  std::vector<std::array<int, 3>> tri_faces;    // sorted triples
  std::vector<std::array<int, 2>> face_tets;    // -1 when absent
  std::vector<std::array<int, 4>> tet_faces;    // tet_faces[t][k] opposite local vertex k
  std::vector<std::uint8_t> boundary_vertex;
  std::vector<std::uint8_t> boundary_edge;
  std::vector<std::uint8_t> boundary_face;

  // Validates indices and orientation and builds adjacency.
  // If fix_orientation, negative tets get two vertices swapped (count
  // reported through *fixed); otherwise a negative tet throws MetricError.
  // check_volumes = false skips the signed-volume validation entirely, for
  // connectivity that only carries a metric (mid-flow remeshing).
  static TetMesh build(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> tets,
                       bool fix_orientation = false, int* fixed = nullptr,
                       bool check_volumes = true);

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  int n_faces() const { return static_cast<int>(tri_faces.size()); }
  int n_tets() const { return static_cast<int>(tets.size()); }

  int edge_between(int a, int b) const;
  // Face id spanned by three vertices, -1 if absent.
  int face_between(int a, int b, int c) const;
  bool is_boundary_edge(int e) const { return boundary_edge[e] != 0; }
  bool is_boundary_vertex(int v) const { return boundary_vertex[v] != 0; }
  bool is_interior_face(int f) const { return boundary_face[f] == 0; }

  // Outward-oriented boundary faces, one triple per boundary face,
  // ordered so the normal points out of the solid.
  std::vector<std::array<int, 3>> boundary_face_triples() const;

  // Boundary surface as a TriMesh plus index maps between the two.
  struct BoundarySurface {
    TriMesh mesh;
    std::vector<int> to_volume;  // surface vertex -> volume vertex
    std::vector<int> to_surface; // volume vertex -> surface vertex or -1
  };
  BoundarySurface boundary_surface() const;

private:
  std::unordered_map<std::uint64_t, int> edge_lookup_;
  std::map<std::array<int, 3>, int> face_lookup_;
};

// Signed volume of the coordinate tetrahedron (a,b,c,d): det/6.
double signed_tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

} // namespace ballmap
