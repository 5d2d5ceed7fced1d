#include "ballmap/mesh.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace ballmap {

namespace {

void sort3(std::array<int, 3>& t) { std::sort(t.begin(), t.end()); }

} // namespace

double signed_tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

TriMesh TriMesh::build(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces) {
  TriMesh m;
  m.vertices = std::move(vertices);
  m.faces = std::move(faces);
  const int nv = m.n_vertices();

  for (int f = 0; f < m.n_faces(); ++f) {
    const auto& fc = m.faces[f];
    for (int k = 0; k < 3; ++k) {
      if (fc[k] < 0 || fc[k] >= nv)
        throw TopologyError("face " + std::to_string(f) + " references out-of-range vertex " +
                            std::to_string(fc[k]));
    }
    if (fc[0] == fc[1] || fc[1] == fc[2] || fc[0] == fc[2])
      throw TopologyError("face " + std::to_string(f) + " has repeated vertices");
  }

  // Edges, with manifold and orientation checks. For a consistently oriented
  // 2-manifold every directed edge appears at most once.
  std::unordered_map<std::uint64_t, int> directed;
  directed.reserve(m.faces.size() * 3);
  m.edge_lookup_.reserve(m.faces.size() * 2);
  for (int f = 0; f < m.n_faces(); ++f) {
    const auto& fc = m.faces[f];
    for (int k = 0; k < 3; ++k) {
      const int a = fc[k], b = fc[(k + 1) % 3];
      const std::uint64_t dk = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
      if (!directed.emplace(dk, f).second)
        throw TopologyError("directed edge (" + std::to_string(a) + "," + std::to_string(b) +
                            ") appears twice: mesh is non-manifold or inconsistently oriented");
      const std::uint64_t uk = edge_key(a, b);
      auto it = m.edge_lookup_.find(uk);
      int e;
      if (it == m.edge_lookup_.end()) {
        e = static_cast<int>(m.edges.size());
        m.edge_lookup_.emplace(uk, e);
        m.edges.push_back({std::min(a, b), std::max(a, b)});
        m.edge_faces.push_back({f, -1});
      } else {
        e = it->second;
        if (m.edge_faces[e][1] != -1)
          throw TopologyError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                              ") borders more than two faces");
        m.edge_faces[e][1] = f;
      }
      (void)e;
    }
  }

  m.face_edges.assign(m.faces.size(), {-1, -1, -1});
  for (int f = 0; f < m.n_faces(); ++f) {
    const auto& fc = m.faces[f];
    for (int k = 0; k < 3; ++k) {
      // Edge opposite corner k joins the other two corners.
      const int a = fc[(k + 1) % 3], b = fc[(k + 2) % 3];
      m.face_edges[f][k] = m.edge_lookup_.at(edge_key(a, b));
    }
  }

  m.boundary_edge.assign(m.edges.size(), 0);
  m.boundary_vertex.assign(nv, 0);
  for (int e = 0; e < m.n_edges(); ++e) {
    if (m.edge_faces[e][1] == -1) {
      m.boundary_edge[e] = 1;
      m.boundary_vertex[m.edges[e][0]] = 1;
      m.boundary_vertex[m.edges[e][1]] = 1;
    }
  }

  m.vertex_faces.assign(nv, {});
  for (int f = 0; f < m.n_faces(); ++f)
    for (int k = 0; k < 3; ++k) m.vertex_faces[m.faces[f][k]].push_back(f);
  m.vertex_edges.assign(nv, {});
  for (int e = 0; e < m.n_edges(); ++e) {
    m.vertex_edges[m.edges[e][0]].push_back(e);
    m.vertex_edges[m.edges[e][1]].push_back(e);
  }
  return m;
}

bool TriMesh::is_closed() const {
  for (auto b : boundary_edge)
    if (b) return false;
  return true;
}

int TriMesh::edge_between(int a, int b) const {
  auto it = edge_lookup_.find(edge_key(a, b));
  return it == edge_lookup_.end() ? -1 : it->second;
}

int TriMesh::corner_of(int f, int v) const {
  for (int k = 0; k < 3; ++k)
    if (faces[f][k] == v) return k;
  return -1;
}

TetMesh TetMesh::build(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> tets,
                       bool fix_orientation, int* fixed, bool check_volumes) {
  TetMesh m;
  m.vertices = std::move(vertices);
  m.tets = std::move(tets);
  const int nv = m.n_vertices();
  int nfixed = 0;

  for (int t = 0; t < m.n_tets(); ++t) {
    auto& tc = m.tets[t];
    for (int k = 0; k < 4; ++k) {
      if (tc[k] < 0 || tc[k] >= nv)
        throw TopologyError("tet " + std::to_string(t) + " references out-of-range vertex " +
                            std::to_string(tc[k]));
      for (int j = k + 1; j < 4; ++j)
        if (tc[k] == tc[j])
          throw TopologyError("tet " + std::to_string(t) + " has repeated vertices");
    }
    if (!check_volumes) continue;
    const double vol = signed_tet_volume(m.vertices[tc[0]], m.vertices[tc[1]],
                                         m.vertices[tc[2]], m.vertices[tc[3]]);
    if (vol <= 0.0) {
      if (!fix_orientation)
        throw MetricError("tet " + std::to_string(t) + " has non-positive signed volume " +
                          std::to_string(vol));
      std::swap(tc[2], tc[3]);
      ++nfixed;
      if (signed_tet_volume(m.vertices[tc[0]], m.vertices[tc[1]], m.vertices[tc[2]],
                            m.vertices[tc[3]]) <= 0.0)
        throw MetricError("tet " + std::to_string(t) + " is degenerate (zero volume)");
    }
  }
  if (fixed) *fixed = nfixed;

  // Edges in fixed local order (01,02,03,12,13,23).
  static const int kEdgePairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  m.edge_lookup_.reserve(m.tets.size() * 2);
  m.tet_edges.assign(m.tets.size(), {});
  for (int t = 0; t < m.n_tets(); ++t) {
    const auto& tc = m.tets[t];
    for (int k = 0; k < 6; ++k) {
      const int a = tc[kEdgePairs[k][0]], b = tc[kEdgePairs[k][1]];
      const std::uint64_t key = edge_key(a, b);
      auto it = m.edge_lookup_.find(key);
      int e;
      if (it == m.edge_lookup_.end()) {
        e = static_cast<int>(m.edges.size());
        m.edge_lookup_.emplace(key, e);
        m.edges.push_back({std::min(a, b), std::max(a, b)});
      } else {
        e = it->second;
      }
      m.tet_edges[t][k] = e;
    }
  }
  m.edge_tets.assign(m.edges.size(), {});
  for (int t = 0; t < m.n_tets(); ++t)
    for (int k = 0; k < 6; ++k) m.edge_tets[m.tet_edges[t][k]].push_back(t);

  // Faces as sorted triples; tet_faces[t][k] is opposite local vertex k.
  m.tet_faces.assign(m.tets.size(), {});
  for (int t = 0; t < m.n_tets(); ++t) {
    const auto& tc = m.tets[t];
    for (int k = 0; k < 4; ++k) {
      std::array<int, 3> tri = {tc[(k + 1) % 4], tc[(k + 2) % 4], tc[(k + 3) % 4]};
      sort3(tri);
      auto [it, inserted] = m.face_lookup_.try_emplace(tri, static_cast<int>(m.tri_faces.size()));
      int f = it->second;
      if (inserted) {
        m.tri_faces.push_back(tri);
        m.face_tets.push_back({t, -1});
      } else {
        if (m.face_tets[f][1] != -1)
          throw TopologyError("face shared by more than two tets (non-manifold), tet " +
                              std::to_string(t));
        m.face_tets[f][1] = t;
      }
      m.tet_faces[t][k] = f;
    }
  }

  m.boundary_face.assign(m.tri_faces.size(), 0);
  m.boundary_edge.assign(m.edges.size(), 0);
  m.boundary_vertex.assign(nv, 0);
  for (int f = 0; f < m.n_faces(); ++f) {
    if (m.face_tets[f][1] == -1) {
      m.boundary_face[f] = 1;
      const auto& tri = m.tri_faces[f];
      for (int k = 0; k < 3; ++k) {
        m.boundary_vertex[tri[k]] = 1;
        m.boundary_edge[m.edge_lookup_.at(edge_key(tri[k], tri[(k + 1) % 3]))] = 1;
      }
    }
  }
  return m;
}

int TetMesh::edge_between(int a, int b) const {
  auto it = edge_lookup_.find(edge_key(a, b));
  return it == edge_lookup_.end() ? -1 : it->second;
}

int TetMesh::face_between(int a, int b, int c) const {
  std::array<int, 3> tri = {a, b, c};
  sort3(tri);
  auto it = face_lookup_.find(tri);
  return it == face_lookup_.end() ? -1 : it->second;
}

std::vector<std::array<int, 3>> TetMesh::boundary_face_triples() const {
  // Outward orientation per local face of a positively oriented tet
  // (a,b,c,d): opposite a -> (b,c,d), b -> (a,d,c), c -> (a,b,d), d -> (a,c,b).
  static const int kOutward[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  std::vector<std::array<int, 3>> out;
  for (int f = 0; f < n_faces(); ++f) {
    if (!boundary_face[f]) continue;
    const int t = face_tets[f][0];
    int opp = -1;
    for (int k = 0; k < 4; ++k)
      if (tet_faces[t][k] == f) opp = k;
    const auto& tc = tets[t];
    out.push_back({tc[kOutward[opp][0]], tc[kOutward[opp][1]], tc[kOutward[opp][2]]});
  }
  return out;
}

TetMesh::BoundarySurface TetMesh::boundary_surface() const {
  auto triples = boundary_face_triples();
  BoundarySurface bs;
  bs.to_surface.assign(n_vertices(), -1);
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  faces.reserve(triples.size());
  for (const auto& tri : triples) {
    std::array<int, 3> f{};
    for (int k = 0; k < 3; ++k) {
      int v = tri[k];
      if (bs.to_surface[v] == -1) {
        bs.to_surface[v] = static_cast<int>(verts.size());
        bs.to_volume.push_back(v);
        verts.push_back(vertices[v]);
      }
      f[k] = bs.to_surface[v];
    }
    faces.push_back(f);
  }
  bs.mesh = TriMesh::build(std::move(verts), std::move(faces));
  return bs;
}

} // namespace ballmap
