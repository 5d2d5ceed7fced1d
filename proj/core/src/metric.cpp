#include "ballmap/metric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ballmap {

namespace {

constexpr double kPi = std::numbers::pi;

double clamped_acos(double x) { return std::acos(std::clamp(x, -1.0, 1.0)); }

} // namespace

DiscreteMetric DiscreteMetric::from_surface(const TriMesh& m) {
  DiscreteMetric d;
  d.tri = &m;
  d.lengths.resize(m.n_edges());
  for (int e = 0; e < m.n_edges(); ++e)
    d.lengths[e] = (m.vertices[m.edges[e][0]] - m.vertices[m.edges[e][1]]).norm();
  return d;
}

DiscreteMetric DiscreteMetric::from_volume(const TetMesh& m) {
  DiscreteMetric d;
  d.tet = &m;
  d.lengths.resize(m.n_edges());
  for (int e = 0; e < m.n_edges(); ++e)
    d.lengths[e] = (m.vertices[m.edges[e][0]] - m.vertices[m.edges[e][1]]).norm();
  return d;
}

DiscreteMetric DiscreteMetric::surface(const TriMesh& m, std::vector<double> lengths) {
  if (static_cast<int>(lengths.size()) != m.n_edges())
    throw ValidationError("surface metric length count mismatch");
  DiscreteMetric d;
  d.tri = &m;
  d.lengths = std::move(lengths);
  return d;
}

DiscreteMetric DiscreteMetric::volume(const TetMesh& m, std::vector<double> lengths) {
  if (static_cast<int>(lengths.size()) != m.n_edges())
    throw ValidationError("volume metric length count mismatch");
  DiscreteMetric d;
  d.tet = &m;
  d.lengths = std::move(lengths);
  return d;
}

void DiscreteMetric::validate() const {
  for (int e = 0; e < n_edges(); ++e)
    if (!(lengths[e] > 0.0))
      throw MetricError("edge " + std::to_string(e) + " has non-positive length");
  if (tri) {
    for (int f = 0; f < tri->n_faces(); ++f) face_angles(*this, f);
  } else if (tet) {
    for (int t = 0; t < tet->n_tets(); ++t) tet_dihedrals(*this, t);
  }
}

double triangle_quality(double a, double b, double c) {
  const double s = 0.5 * (a + b + c);
  const double prod = (s - a) * (s - b) * (s - c);
  if (prod <= 0.0) return prod >= 0.0 ? 0.0 : -1.0;
  const double area = std::sqrt(s * prod);
  return (area / s) / std::max({a, b, c});
}

std::array<double, 3> face_angles(const DiscreteMetric& metric, int f) {
  const TriMesh& m = *metric.tri;
  // face_edges[f][k] is opposite corner k, so l[k] is the side opposite corner k.
  const double l0 = metric.lengths[m.face_edges[f][0]];
  const double l1 = metric.lengths[m.face_edges[f][1]];
  const double l2 = metric.lengths[m.face_edges[f][2]];
  if (triangle_quality(l0, l1, l2) < kDegenerateQuality)
    throw MetricError("face " + std::to_string(f) + " is degenerate under the metric (sides " +
                      std::to_string(l0) + ", " + std::to_string(l1) + ", " + std::to_string(l2) +
                      ")");
  std::array<double, 3> th{};
  th[0] = clamped_acos((l1 * l1 + l2 * l2 - l0 * l0) / (2.0 * l1 * l2));
  th[1] = clamped_acos((l0 * l0 + l2 * l2 - l1 * l1) / (2.0 * l0 * l2));
  th[2] = kPi - th[0] - th[1];
  return th;
}

double corner_angle(const DiscreteMetric& metric, int f, int corner) {
  const int k = metric.tri->corner_of(f, corner);
  if (k < 0)
    throw ValidationError("vertex " + std::to_string(corner) + " is not a corner of face " +
                          std::to_string(f));
  return face_angles(metric, f)[k];
}

double vertex_curvature(const DiscreteMetric& metric, int v) {
  const TriMesh& m = *metric.tri;
  double sum = 0.0;
  for (int f : m.vertex_faces[v]) sum += face_angles(metric, f)[m.corner_of(f, v)];
  return (m.is_boundary_vertex(v) ? kPi : 2.0 * kPi) - sum;
}

Eigen::VectorXd vertex_curvatures(const DiscreteMetric& metric) {
  const TriMesh& m = *metric.tri;
  Eigen::VectorXd k(m.n_vertices());
  for (int v = 0; v < m.n_vertices(); ++v) k[v] = m.is_boundary_vertex(v) ? kPi : 2.0 * kPi;
  for (int f = 0; f < m.n_faces(); ++f) {
    const auto th = face_angles(metric, f);
    for (int c = 0; c < 3; ++c) k[m.faces[f][c]] -= th[c];
  }
  return k;
}

GaussBonnetReport total_curvature_check(const DiscreteMetric& metric) {
  GaussBonnetReport r;
  r.total = vertex_curvatures(metric).sum();
  r.euler = metric.tri->euler_characteristic();
  r.residual = std::abs(r.total - 2.0 * kPi * r.euler);
  return r;
}

std::array<double, 6> tet_lengths(const DiscreteMetric& metric, int t) {
  std::array<double, 6> l{};
  for (int k = 0; k < 6; ++k) l[k] = metric.lengths[metric.tet->tet_edges[t][k]];
  return l;
}

double cayley_menger_value(const std::array<double, 6>& l) {
  // 288 V^2 as a 5x5 bordered determinant over squared distances.
  // Local order (01,02,03,12,13,23).
  const double d01 = l[0] * l[0], d02 = l[1] * l[1], d03 = l[2] * l[2];
  const double d12 = l[3] * l[3], d13 = l[4] * l[4], d23 = l[5] * l[5];
  Eigen::Matrix<double, 5, 5> cm;
  cm << 0, 1, 1, 1, 1,
        1, 0, d01, d02, d03,
        1, d01, 0, d12, d13,
        1, d02, d12, 0, d23,
        1, d03, d13, d23, 0;
  return cm.determinant();
}

namespace {

// Face angles at each of the four vertices for the six-length tet.
// at[a][m] = angle at vertex a inside the face missing vertex m.
// Returns false when some face violates the triangle inequality.
bool tet_vertex_face_angles(const std::array<double, 6>& l, double at[4][4]) {
  static const int kEdgeIndex[4][4] = {
      {-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
  static const int kFaces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  for (const auto& f : kFaces) {
    const double lab = l[kEdgeIndex[f[0]][f[1]]];
    const double lac = l[kEdgeIndex[f[0]][f[2]]];
    const double lbc = l[kEdgeIndex[f[1]][f[2]]];
    if (triangle_quality(lab, lac, lbc) < kDegenerateQuality) return false;
    const double a0 = clamped_acos((lab * lab + lac * lac - lbc * lbc) / (2 * lab * lac));
    const double a1 = clamped_acos((lab * lab + lbc * lbc - lac * lac) / (2 * lab * lbc));
    const double a2 = kPi - a0 - a1;
    const int missing = 0 + 1 + 2 + 3 - f[0] - f[1] - f[2];
    at[f[0]][missing] = a0;
    at[f[1]][missing] = a1;
    at[f[2]][missing] = a2;
  }
  return true;
}

// Shared non-throwing core: dihedral along edge (a,b) by the spherical law
// of cosines applied to the vertex link at a. min_quality is
// min(theta, pi - theta) across the six dihedrals.
bool try_tet_dihedrals(const std::array<double, 6>& l, std::array<double, 6>& dihedral,
                       double& min_quality) {
  for (double s : l)
    if (!(s > 0.0)) return false;
  double at[4][4];
  if (!tet_vertex_face_angles(l, at)) return false;
  static const int kEdgePairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  min_quality = kPi;
  for (int k = 0; k < 6; ++k) {
    const int a = kEdgePairs[k][0], b = kEdgePairs[k][1];
    int rest[2], idx = 0;
    for (int v = 0; v < 4; ++v)
      if (v != a && v != b) rest[idx++] = v;
    const int c = rest[0], d = rest[1];
    // At vertex a: beta = angle(b,a,c) lives in the face missing d,
    // gamma = angle(b,a,d) misses c, alpha = angle(c,a,d) misses b.
    const double beta = at[a][d];
    const double gamma = at[a][c];
    const double alpha = at[a][b];
    const double denom = std::sin(beta) * std::sin(gamma);
    if (denom <= 0.0) return false;
    const double cosd = (std::cos(alpha) - std::cos(beta) * std::cos(gamma)) / denom;
    if (cosd < -1.0 - 1e-9 || cosd > 1.0 + 1e-9) return false;
    dihedral[k] = clamped_acos(cosd);
    min_quality = std::min(min_quality, std::min(dihedral[k], kPi - dihedral[k]));
  }
  return true;
}

} // namespace

bool tet_lengths_realizable(const std::array<double, 6>& l) {
  std::array<double, 6> d;
  double q;
  return try_tet_dihedrals(l, d, q) && q >= kDegenerateQuality && cayley_menger_value(l) > 0.0;
}

std::array<double, 6> tet_dihedrals(const DiscreteMetric& metric, int t) {
  const auto l = tet_lengths(metric, t);
  std::array<double, 6> dihedral;
  double q;
  if (!try_tet_dihedrals(l, dihedral, q))
    throw MetricError("tet " + std::to_string(t) + " is not realizable under the metric");
  if (q < kDegenerateQuality)
    throw MetricError("tet " + std::to_string(t) + " is degenerate (min dihedral quality " +
                      std::to_string(q) + ")");
  return dihedral;
}

double dihedral_angle(const DiscreteMetric& metric, int t, int e) {
  const TetMesh& m = *metric.tet;
  for (int k = 0; k < 6; ++k)
    if (m.tet_edges[t][k] == e) return tet_dihedrals(metric, t)[k];
  throw ValidationError("edge " + std::to_string(e) + " does not belong to tet " +
                        std::to_string(t));
}

double edge_curvature(const DiscreteMetric& metric, int e) {
  const TetMesh& m = *metric.tet;
  double sum = 0.0;
  for (int t : m.edge_tets[e]) sum += dihedral_angle(metric, t, e);
  return (m.is_boundary_edge(e) ? kPi : 2.0 * kPi) - sum;
}

Eigen::VectorXd edge_curvatures(const DiscreteMetric& metric) {
  const TetMesh& m = *metric.tet;
  Eigen::VectorXd k(m.n_edges());
  for (int e = 0; e < m.n_edges(); ++e) k[e] = m.is_boundary_edge(e) ? kPi : 2.0 * kPi;
  for (int t = 0; t < m.n_tets(); ++t) {
    const auto d = tet_dihedrals(metric, t);
    for (int j = 0; j < 6; ++j) k[m.tet_edges[t][j]] -= d[j];
  }
  return k;
}

double tet_volume(const DiscreteMetric& metric, int t) {
  const double cm = cayley_menger_value(tet_lengths(metric, t));
  if (cm <= 0.0)
    throw MetricError("tet " + std::to_string(t) + " has zero or negative squared volume");
  return std::sqrt(cm / 288.0);
}

double tet_volume(const TetMesh& mesh, int t) {
  const auto& tc = mesh.tets[t];
  return signed_tet_volume(mesh.vertices[tc[0]], mesh.vertices[tc[1]], mesh.vertices[tc[2]],
                           mesh.vertices[tc[3]]);
}

double volume_energy(const DiscreteMetric& metric) {
  const TetMesh& m = *metric.tet;
  double e = 0.0;
  for (int t = 0; t < m.n_tets(); ++t) {
    const auto d = tet_dihedrals(metric, t);
    double lt = 0.0;
    for (int j = 0; j < 6; ++j) lt += metric.lengths[m.tet_edges[t][j]] * d[j];
    e += tet_volume(metric, t) - lt;
  }
  return e;
}

double flow_energy(const DiscreteMetric& metric) {
  const TetMesh& m = *metric.tet;
  double e = 0.0;
  for (int ei = 0; ei < m.n_edges(); ++ei)
    e += (m.is_boundary_edge(ei) ? kPi : 2.0 * kPi) * metric.lengths[ei];
  for (int t = 0; t < m.n_tets(); ++t) {
    const auto d = tet_dihedrals(metric, t);
    for (int j = 0; j < 6; ++j) e -= metric.lengths[m.tet_edges[t][j]] * d[j];
  }
  return e;
}

} // namespace ballmap
