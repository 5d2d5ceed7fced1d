#include "ballmap/sphere.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ballmap {

namespace {

constexpr double kPi = std::numbers::pi;

// Area-weighted vertex centroid of the sphere image (face areas of the
// chordal triangles, spread to their corners).
Vec3 area_centroid(const TriMesh& mesh, const std::vector<Vec3>& p) {
  Vec3 num = Vec3::Zero();
  double den = 0.0;
  for (const auto& f : mesh.faces) {
    const double area = 0.5 * (p[f[1]] - p[f[0]]).cross(p[f[2]] - p[f[0]]).norm();
    num += area * (p[f[0]] + p[f[1]] + p[f[2]]) / 3.0;
    den += area;
  }
  return num / den;
}

// Sphere Mobius inversion with parameter c in the open ball; fixes +-c/|c|
// and pushes mass away from the c direction.
Vec3 sphere_inversion(const Vec3& c, const Vec3& p) {
  const double c2 = c.squaredNorm();
  const Vec3 d = p - c;
  return ((1.0 - c2) / d.squaredNorm()) * d - c;
}

} // namespace

int count_flipped_sphere_faces(const TriMesh& mesh, const std::vector<Vec3>& positions) {
  int positive = 0, negative = 0;
  for (const auto& f : mesh.faces) {
    const double det =
        positions[f[0]].cross(positions[f[1]]).dot(positions[f[2]]);
    (det > 0.0 ? positive : negative)++;
  }
  return std::min(positive, negative);
}

int mobius_center(const TriMesh& mesh, std::vector<Vec3>& positions, double tolerance,
                  int max_iterations) {
  int iter = 0;
  double best = area_centroid(mesh, positions).norm();
  for (; iter < max_iterations; ++iter) {
    const Vec3 m = area_centroid(mesh, positions);
    if (m.norm() < tolerance) break;

    double beta = std::min(0.99, 1.0);
    bool accepted = false;
    for (int h = 0; h < 30; ++h, beta *= 0.5) {
      const Vec3 c = beta * m;
      if (c.squaredNorm() >= 1.0) continue;
      std::vector<Vec3> trial(positions.size());
      for (std::size_t v = 0; v < positions.size(); ++v)
        trial[v] = sphere_inversion(c, positions[v]).normalized();
      const double res = area_centroid(mesh, trial).norm();
      if (res < best) {
        positions = std::move(trial);
        best = res;
        accepted = true;
        break;
      }
    }
    if (!accepted) break; // stagnated; keep the best reached
  }
  return iter;
}

SphereParam spherical_param(const TriMesh& mesh, const SphereParamOptions& opt) {
  if (!mesh.is_closed() || mesh.euler_characteristic() != 2)
    throw TopologyError("spherical parameterization needs a closed genus-0 mesh");

  // The removed face: most equilateral under the embedded metric.
  const DiscreteMetric embedded = DiscreteMetric::from_surface(mesh);
  int f0 = opt.removed_face;
  if (f0 < 0) {
    double best_q = -1.0;
    for (int f = 0; f < mesh.n_faces(); ++f) {
      const double q = triangle_quality(embedded.lengths[mesh.face_edges[f][0]],
                                        embedded.lengths[mesh.face_edges[f][1]],
                                        embedded.lengths[mesh.face_edges[f][2]]);
      if (q > best_q) {
        best_q = q;
        f0 = f;
      }
    }
  }

  // Punctured mesh: same vertices, all faces but f0.
  std::vector<std::array<int, 3>> punctured_faces;
  punctured_faces.reserve(mesh.n_faces() - 1);
  for (int f = 0; f < mesh.n_faces(); ++f)
    if (f != f0) punctured_faces.push_back(mesh.faces[f]);
  const TriMesh punctured = TriMesh::build(mesh.vertices, std::move(punctured_faces));

  // Flow the punctured mesh flat. Gauss-Bonnet for the disk forces the three
  // hole corners to carry 2*pi total; the symmetric choice gives each 2*pi/3.
  Eigen::VectorXd target = Eigen::VectorXd::Zero(mesh.n_vertices());
  for (int c = 0; c < 3; ++c) target[mesh.faces[f0][c]] = 2.0 * kPi / 3.0;
  FlowConfig cfg(punctured, target);
  cfg.tolerance = opt.flow_tolerance;
  cfg.max_iterations = opt.max_iterations;
  cfg.damping = opt.damping;

  SphereParam out;
  out.removed_face = f0;
  const CirclePacking packing = CirclePacking::from_embedding(punctured);
  const CirclePacking flat = flow_to_target(packing, cfg, &out.flow);
  if (!out.flow.converged)
    throw ConvergenceError("surface flow did not converge (residual " +
                               std::to_string(out.flow.residual) + ")",
                           out.flow.residual);

  // Normalize the flat metric to mean edge length 1 so the layout tolerance
  // is scale-free.
  DiscreteMetric flat_metric = flat.metric();
  double mean_len = 0.0;
  for (double l : flat_metric.lengths) mean_len += l;
  mean_len /= flat_metric.n_edges();
  for (double& l : flat_metric.lengths) l /= mean_len;

  out.planar = planar_layout(punctured, flat_metric, /*excluded_face=*/-1, opt.seed_face,
                             opt.layout_tolerance);

  // Scale before projection so the hole's complement cap lands at one
  // face's share of the sphere: a plane circle of radius R projects to the
  // cap with cos(theta) = (R^2-1)/(R^2+1), and cap area 4*pi/F needs
  // R = sqrt(F-1). Scaling the hole to the input's mean edge length instead
  // leaves the cap several times oversized and badly stretches the
  // boundary metric, so the balanced radius is used. The Mobius recentering
  // below then only fine-tunes.
  const Vec2 ha = out.planar.positions[mesh.faces[f0][0]];
  const Vec2 hb = out.planar.positions[mesh.faces[f0][1]];
  const Vec2 hc = out.planar.positions[mesh.faces[f0][2]];
  const double la = (hb - hc).norm(), lb = (hc - ha).norm(), lc = (ha - hb).norm();
  const double area = 0.5 * std::abs((hb - ha).x() * (hc - ha).y() -
                                     (hb - ha).y() * (hc - ha).x());
  const double circumradius = la * lb * lc / (4.0 * area);
  // Circumcenter: the projection is taken about the plane origin, so the
  // hole circle moves there first.
  const double a2 = (hb - hc).squaredNorm(), b2 = (hc - ha).squaredNorm(),
               c2 = (ha - hb).squaredNorm();
  const double wa = a2 * (b2 + c2 - a2), wb = b2 * (c2 + a2 - b2), wc = c2 * (a2 + b2 - c2);
  const Vec2 circumcenter = (wa * ha + wb * hb + wc * hc) / (wa + wb + wc);
  const double scale = std::sqrt(std::max(1.0, mesh.n_faces() - 1.0)) / circumradius;

  out.positions.resize(mesh.n_vertices());
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    const Vec2 q = scale * (out.planar.positions[v] - circumcenter);
    out.positions[v] = inverse_stereographic(ExtComplex(q.x(), q.y()));
  }

  // The projected image of a counterclockwise layout carries inward
  // orientation; mirror so the image matches the input's outward faces.
  {
    int positive = 0, negative = 0;
    for (int f = 0; f < mesh.n_faces(); ++f) {
      if (f == f0) continue;
      const auto& fc = mesh.faces[f];
      const double det =
          out.positions[fc[0]].cross(out.positions[fc[1]]).dot(out.positions[fc[2]]);
      (det > 0.0 ? positive : negative)++;
    }
    if (negative > positive)
      for (auto& p : out.positions) p.y() = -p.y();
  }

  out.centering_iterations =
      mobius_center(mesh, out.positions, opt.centering_tolerance, opt.centering_max_iterations);
  for (auto& p : out.positions) p.normalize();

  const int flips = count_flipped_sphere_faces(mesh, out.positions);
  if (flips != 0)
    throw ConvergenceError("spherical image has " + std::to_string(flips) +
                           " inverted triangles");
  if (out.positions[mesh.faces[0][0]]
          .cross(out.positions[mesh.faces[0][1]])
          .dot(out.positions[mesh.faces[0][2]]) < 0.0)
    throw ConvergenceError("spherical image came out inward-oriented");
  return out;
}

} // namespace ballmap
