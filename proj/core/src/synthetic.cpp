#include "ballmap/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "ballmap/errors.hpp"
#include "ballmap/metric.hpp"

namespace ballmap {

namespace {

Vec3 anchor_position(const FeaturePoint& f, const TetMesh& mesh, const std::vector<Vec3>& coords) {
  if (f.is_vertex_anchor()) return coords[f.vertex];
  const auto& tc = mesh.tets[f.tet];
  Vec3 p = Vec3::Zero();
  for (int k = 0; k < 4; ++k) p += f.bary[k] * coords[tc[k]];
  return p;
}

} // namespace

Vec3 FeaturePoint::position(const TetMesh& mesh) const {
  return anchor_position(*this, mesh, mesh.vertices);
}

Vec3 FeaturePoint::position(const TetMesh& mesh, const std::vector<Vec3>& coords) const {
  return anchor_position(*this, mesh, coords);
}

void validate_features(const FeatureSet& features, const TetMesh& mesh) {
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    const std::string where = "feature record " + std::to_string(i) + " ('" + f.label + "')";
    if (f.label.empty()) throw ValidationError("feature record " + std::to_string(i) + " has empty label");
    if (f.is_vertex_anchor()) {
      if (f.vertex >= mesh.n_vertices())
        throw ValidationError(where + ": vertex index out of range");
      const bool on_boundary = mesh.is_boundary_vertex(f.vertex);
      if (f.kind == FeaturePoint::Kind::Surface && !on_boundary)
        throw ValidationError(where + ": surface feature anchored at interior vertex");
      if (f.kind == FeaturePoint::Kind::Interior && on_boundary)
        throw ValidationError(where + ": interior feature anchored at boundary vertex");
    } else {
      if (f.tet < 0 || f.tet >= mesh.n_tets())
        throw ValidationError(where + ": tet index out of range");
      double sum = 0.0;
      for (int k = 0; k < 4; ++k) {
        if (f.bary[k] < 0.0) throw ValidationError(where + ": negative barycentric coordinate");
        sum += f.bary[k];
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw ValidationError(where + ": barycentric coordinates sum to " + std::to_string(sum));
      if (f.kind == FeaturePoint::Kind::Surface)
        throw ValidationError(where + ": surface features must be vertex-anchored");
      // Strictly inside: a zero barycentric against a boundary face would put
      // the anchor on the surface.
      for (int k = 0; k < 4; ++k) {
        if (f.bary[k] < 1e-12 && !mesh.is_interior_face(mesh.tet_faces[f.tet][k]))
          throw ValidationError(where + ": interior feature lies on the boundary surface");
      }
    }
  }
}

std::vector<const FeaturePoint*> features_of_kind(const FeatureSet& f, FeaturePoint::Kind k) {
  std::vector<const FeaturePoint*> out;
  for (const auto& fp : f)
    if (fp.kind == k) out.push_back(&fp);
  return out;
}

const FeaturePoint* find_feature(const FeatureSet& f, const std::string& label) {
  for (const auto& fp : f)
    if (fp.label == label) return &fp;
  return nullptr;
}

namespace {

TriMesh icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
      {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
      {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  // Outward orientation: det[a,b,c] > 0 for every face of a star-shaped
  // surface around the origin.
  if (v[f[0][0]].cross(v[f[0][1]]).dot(v[f[0][2]]) < 0.0)
    for (auto& fc : f) std::swap(fc[1], fc[2]);
  return TriMesh::build(std::move(v), std::move(f));
}

} // namespace

TriMesh gen_icosphere(int level) {
  if (level < 0 || level > 7) throw ValidationError("icosphere level out of range [0,7]");
  TriMesh m = icosahedron();
  for (int iter = 0; iter < level; ++iter) {
    std::vector<Vec3> verts = m.vertices;
    std::vector<std::array<int, 3>> faces;
    faces.reserve(m.faces.size() * 4);
    std::map<std::uint64_t, int> midpoint;
    auto mid = [&](int a, int b) {
      auto [it, inserted] = midpoint.try_emplace(edge_key(a, b), static_cast<int>(verts.size()));
      if (inserted) verts.push_back(((m.vertices[a] + m.vertices[b]) * 0.5).normalized());
      return it->second;
    };
    for (const auto& f : m.faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      faces.push_back({f[0], ab, ca});
      faces.push_back({f[1], bc, ab});
      faces.push_back({f[2], ca, bc});
      faces.push_back({ab, bc, ca});
    }
    m = TriMesh::build(std::move(verts), std::move(faces));
  }
  return m;
}

namespace {

// Solid unit ball: concentric icosphere shells plus a center vertex, prisms
// split into tets with conforming diagonals (smaller surface index wins).
struct BallTemplate {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;
  int shells = 0;
  int shell_size = 0; // boundary vertex count
  // global index of surface vertex v on shell m (1-based shell)
  int at(int m, int v) const { return 1 + (m - 1) * shell_size + v; }
};

BallTemplate make_ball_template(int level, int shells) {
  TriMesh sphere = gen_icosphere(level);
  BallTemplate b;
  b.shells = shells;
  b.shell_size = sphere.n_vertices();
  b.vertices.push_back(Vec3::Zero());
  for (int m = 1; m <= shells; ++m) {
    const double r = static_cast<double>(m) / shells;
    for (const auto& p : sphere.vertices) b.vertices.push_back(r * p);
  }
  // Innermost fan onto the center vertex.
  for (const auto& f : sphere.faces)
    b.tets.push_back({0, b.at(1, f[0]), b.at(1, f[1]), b.at(1, f[2])});
  // Prism layers.
  for (int m = 1; m < shells; ++m) {
    for (const auto& f : sphere.faces) {
      // Rotate the triangle so its smallest surface index comes first; the
      // lateral quad diagonals then always emanate from it, which keeps the
      // splits conforming across neighboring prisms.
      std::array<int, 3> s = f;
      while (!(s[0] < s[1] && s[0] < s[2])) {
        std::array<int, 3> r = {s[1], s[2], s[0]};
        s = r;
      }
      const int a = b.at(m, s[0]), bb = b.at(m, s[1]), c = b.at(m, s[2]);
      const int A = b.at(m + 1, s[0]), B = b.at(m + 1, s[1]), C = b.at(m + 1, s[2]);
      if (s[1] < s[2]) {
        b.tets.push_back({a, bb, c, C});
        b.tets.push_back({a, bb, C, B});
        b.tets.push_back({a, B, C, A});
      } else {
        b.tets.push_back({a, bb, c, B});
        b.tets.push_back({a, B, c, C});
        b.tets.push_back({a, B, C, A});
      }
    }
  }
  return b;
}

// Smooth seeded scalar field on directions, normalized to max |g| = 1.
struct SphereField {
  std::array<double, 9> c{};
  explicit SphereField(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double norm = 0.0;
    for (auto& x : c) {
      x = u(rng);
      norm += std::abs(x);
    }
    for (auto& x : c) x /= norm;
  }
  double operator()(const Vec3& n) const {
    const double x = n.x(), y = n.y(), z = n.z();
    return c[0] * x + c[1] * y + c[2] * z + c[3] * x * y + c[4] * y * z + c[5] * z * x +
           c[6] * (x * x - y * y) + c[7] * (3 * z * z - 1) / 2.0 + c[8] * x * y * z;
  }
};

Vec3 apply_shape(const SyntheticOptions& opt, const SphereField& field, const Vec3& p) {
  switch (opt.shape) {
    case SyntheticShape::Ball:
      return p;
    case SyntheticShape::Ellipsoid:
      return Vec3(2.0 * p.x(), p.y(), p.z());
    case SyntheticShape::Capsule: {
      const double z = opt.capsule_stretch * p.z();
      const double center = opt.capsule_stretch * opt.capsule_stretch / 3.0;
      return Vec3(p.x() + opt.capsule_bend * (z * z - center), p.y(), z);
    }
    case SyntheticShape::Blob: {
      const double r = p.norm();
      if (r < 1e-14) return p;
      return p * (1.0 + opt.blob_amplitude * field(p / r) * r);
    }
  }
  return p;
}

int nearest_vertex(const std::vector<Vec3>& verts, const std::vector<int>& candidates,
                   const Vec3& target) {
  int best = candidates.front();
  double best_d = (verts[best] - target).squaredNorm();
  for (int v : candidates) {
    const double d = (verts[v] - target).squaredNorm();
    if (d < best_d) {
      best = v;
      best_d = d;
    }
  }
  return best;
}

} // namespace

SyntheticVolume gen_synthetic(const SyntheticOptions& opt) {
  if (opt.resolution < 1 || opt.resolution > 5)
    throw ValidationError("synthetic resolution out of supported range [1,5]");
  const int shells = opt.shells > 0 ? opt.shells : (1 << opt.resolution);
  BallTemplate tmpl = make_ball_template(opt.resolution, shells);
  const SphereField field(opt.seed);

  std::vector<Vec3> template_coords = tmpl.vertices;
  std::vector<Vec3> coords(tmpl.vertices.size());
  for (std::size_t i = 0; i < coords.size(); ++i)
    coords[i] = apply_shape(opt, field, tmpl.vertices[i]);

  // Regenerate with jitter when the warp produced degenerate tets.
  std::mt19937_64 jitter_rng(opt.seed ^ 0x9e3779b97f4a7c15ull);
  for (int attempt = 0;; ++attempt) {
    bool ok = true;
    for (const auto& t : tmpl.tets) {
      if (signed_tet_volume(coords[t[0]], coords[t[1]], coords[t[2]], coords[t[3]]) <= 0.0) {
        ok = false;
        break;
      }
    }
    if (ok) break;
    if (attempt >= 5)
      throw MetricError("synthetic generator produced degenerate tets after jitter retries");
    std::normal_distribution<double> g(0.0, 1e-3 / shells);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      coords[i] = apply_shape(opt, field, tmpl.vertices[i]);
      // Only interior vertices get jitter so the boundary stays smooth.
      if (static_cast<int>(i) == 0 || static_cast<int>(i) <= tmpl.shell_size * (tmpl.shells - 1))
        coords[i] += Vec3(g(jitter_rng), g(jitter_rng), g(jitter_rng));
    }
  }

  SyntheticVolume out;
  out.mesh = TetMesh::build(std::move(coords), tmpl.tets, /*fix_orientation=*/false);

  // Feature anchors are chosen on the undeformed template so corresponding
  // shapes share anchor vertices.
  std::vector<int> boundary_verts, interior_verts;
  for (int v = 0; v < out.mesh.n_vertices(); ++v)
    (out.mesh.is_boundary_vertex(v) ? boundary_verts : interior_verts).push_back(v);

  auto add_surface = [&](const std::string& label, const Vec3& at) {
    FeaturePoint f;
    f.label = label;
    f.kind = FeaturePoint::Kind::Surface;
    f.vertex = nearest_vertex(template_coords, boundary_verts, at);
    out.features.push_back(f);
  };
  // Urethra entrance/exit plus one lateral point, after the paper's scheme.
  add_surface("S1", Vec3(0, 0, 1));
  add_surface("S2", Vec3(0, 0, -1));
  add_surface("S3", Vec3(1, 0, 0));

  for (int k = 0; k < opt.interior_features; ++k) {
    const double s = (opt.interior_features == 1)
                         ? 0.0
                         : -0.8 + 1.6 * static_cast<double>(k) / (opt.interior_features - 1);
    FeaturePoint f;
    f.label = "I" + std::to_string(k + 1);
    f.kind = FeaturePoint::Kind::Interior;
    f.vertex = nearest_vertex(template_coords, interior_verts, Vec3(0, 0, s));
    out.features.push_back(f);
  }

  // Held-out landmarks along the same axis, anchored at vertices distinct
  // from the features so the evaluation is independent of the pins.
  std::vector<int> used;
  for (const auto& f : out.features) used.push_back(f.vertex);
  for (int k = 0; k < opt.landmarks; ++k) {
    const double s = -0.85 + 1.7 * (k + 0.5) / opt.landmarks;
    int v = nearest_vertex(template_coords, interior_verts, Vec3(0.05, 0.0, s));
    if (std::find(used.begin(), used.end(), v) != used.end()) continue;
    used.push_back(v);
    out.landmark_labels.push_back("U" + std::to_string(k + 1));
    out.landmark_vertices.push_back(v);
    out.landmarks.push_back(out.mesh.vertices[v]);
  }

  validate_features(out.features, out.mesh);
  return out;
}

SyntheticPair gen_synthetic_pair(const SyntheticOptions& opt, std::uint64_t deform_seed,
                                 double displacement_fraction) {
  SyntheticPair pair;
  pair.a = gen_synthetic(opt);
  const TetMesh& mesh = pair.a.mesh;

  // Displacement field: seeded radial component plus a quadratic bend and a
  // twist, blended linearly so the max displacement can be calibrated.
  const SphereField field(deform_seed * 2654435761ull + 1);
  Eigen::AlignedBox3d box;
  for (const auto& p : mesh.vertices) box.extend(p);
  const double diag = box.diagonal().norm();
  const Vec3 center = box.center();

  auto displacement = [&](const Vec3& p) {
    const Vec3 q = p - center;
    const double r = q.norm();
    Vec3 d = Vec3::Zero();
    if (r > 1e-14) d += 0.35 * field(q / r) * q;   // radial
    d.x() += 0.5 * q.z() * q.z();                  // bend
    const double tw = 0.5 * q.z();                 // twist about z
    d.x() += q.x() * (std::cos(tw) - 1.0) - q.y() * std::sin(tw);
    d.y() += q.x() * std::sin(tw) + q.y() * (std::cos(tw) - 1.0);
    return d;
  };

  double max_d = 0.0;
  std::vector<Vec3> disp(mesh.vertices.size());
  for (std::size_t i = 0; i < disp.size(); ++i) {
    disp[i] = displacement(mesh.vertices[i]);
    max_d = std::max(max_d, disp[i].norm());
  }
  double mu = displacement_fraction * diag / max_d;

  // Back off when the warp inverts tets; smooth low-order fields at the
  // default fraction stay valid, this guards pathological seeds.
  for (int attempt = 0;; ++attempt) {
    std::vector<Vec3> warped(mesh.vertices.size());
    for (std::size_t i = 0; i < warped.size(); ++i)
      warped[i] = mesh.vertices[i] + mu * disp[i];
    bool ok = true;
    for (const auto& t : mesh.tets)
      if (signed_tet_volume(warped[t[0]], warped[t[1]], warped[t[2]], warped[t[3]]) <= 0.0) {
        ok = false;
        break;
      }
    if (ok) {
      pair.b = pair.a;
      pair.b.mesh = TetMesh::build(std::move(warped), mesh.tets, false);
      break;
    }
    if (attempt >= 20) throw MetricError("deformation warp kept inverting tets");
    mu *= 0.8;
  }
  pair.max_displacement = mu * max_d;

  for (std::size_t k = 0; k < pair.b.landmark_vertices.size(); ++k)
    pair.b.landmarks[k] = pair.b.mesh.vertices[pair.b.landmark_vertices[k]];
  return pair;
}

} // namespace ballmap
