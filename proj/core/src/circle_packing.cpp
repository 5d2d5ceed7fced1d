#include "ballmap/circle_packing.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

namespace ballmap {

namespace {

constexpr double kPi = std::numbers::pi;

CirclePacking packing_from_lengths(const TriMesh& mesh, const std::vector<double>& lengths) {
  CirclePacking p;
  p.mesh = &mesh;
  const int nv = mesh.n_vertices();
  p.radii = Eigen::VectorXd::Constant(nv, std::numeric_limits<double>::infinity());
  for (int f = 0; f < mesh.n_faces(); ++f) {
    for (int c = 0; c < 3; ++c) {
      // Corner radius: half the excess of the adjacent sides over the
      // opposite one, (l_ij + l_ki - l_jk)/2.
      const double opposite = lengths[mesh.face_edges[f][c]];
      const double adj1 = lengths[mesh.face_edges[f][(c + 1) % 3]];
      const double adj2 = lengths[mesh.face_edges[f][(c + 2) % 3]];
      const double r = 0.5 * (adj1 + adj2 - opposite);
      if (!(r > 0.0))
        throw MetricError("packing initialization failed: face " + std::to_string(f) +
                          " yields non-positive corner radius");
      p.radii[mesh.faces[f][c]] = std::min(p.radii[mesh.faces[f][c]], r);
    }
  }
  for (int v = 0; v < nv; ++v)
    if (!std::isfinite(p.radii[v]))
      throw MetricError("packing initialization failed: isolated vertex " + std::to_string(v));

  p.logs = p.radii.array().log();
  p.inversive.resize(mesh.n_edges());
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const double gi = p.radii[mesh.edges[e][0]];
    const double gj = p.radii[mesh.edges[e][1]];
    const double l = lengths[e];
    p.inversive[e] = (l * l - gi * gi - gj * gj) / (2.0 * gi * gj);
  }
  return p;
}

} // namespace

CirclePacking CirclePacking::from_embedding(const TriMesh& mesh) {
  return from_metric(mesh, DiscreteMetric::from_surface(mesh));
}

CirclePacking CirclePacking::from_metric(const TriMesh& mesh, const DiscreteMetric& metric) {
  return packing_from_lengths(mesh, metric.lengths);
}

DiscreteMetric CirclePacking::metric() const {
  std::vector<double> lengths(mesh->n_edges());
  for (int e = 0; e < mesh->n_edges(); ++e) {
    const double gi = radii[mesh->edges[e][0]];
    const double gj = radii[mesh->edges[e][1]];
    lengths[e] = std::sqrt(gi * gi + gj * gj + 2.0 * gi * gj * inversive[e]);
  }
  return DiscreteMetric::surface(*mesh, std::move(lengths));
}

void CirclePacking::set_logs(const Eigen::VectorXd& u) {
  logs = u;
  radii = u.array().exp();
}

bool CirclePacking::metric_valid() const {
  const DiscreteMetric m = metric();
  for (int f = 0; f < mesh->n_faces(); ++f) {
    const double l0 = m.lengths[mesh->face_edges[f][0]];
    const double l1 = m.lengths[mesh->face_edges[f][1]];
    const double l2 = m.lengths[mesh->face_edges[f][2]];
    if (!(l0 > 0 && l1 > 0 && l2 > 0)) return false;
    if (triangle_quality(l0, l1, l2) < kDegenerateQuality) return false;
  }
  return true;
}

FlowConfig::FlowConfig(const TriMesh& mesh, Eigen::VectorXd target_curvatures)
    : target(std::move(target_curvatures)) {
  if (target.size() != mesh.n_vertices())
    throw ValidationError("target curvature vector size mismatch");
  const double total = target.sum();
  const double expected = 2.0 * kPi * mesh.euler_characteristic();
  if (std::abs(total - expected) > 1e-9)
    throw ValidationError("target curvatures sum to " + std::to_string(total) +
                          ", Gauss-Bonnet requires " + std::to_string(expected));
}

Eigen::VectorXd packing_curvatures(const CirclePacking& p) {
  return vertex_curvatures(p.metric());
}

Eigen::VectorXd entropy_gradient(const CirclePacking& p, const FlowConfig& cfg) {
  return cfg.target - packing_curvatures(p);
}

std::array<double, 3> radial_center_distances(const CirclePacking& p, int f) {
  const TriMesh& m = *p.mesh;
  const DiscreteMetric metric = p.metric();
  // Side opposite corner c.
  const double l0 = metric.lengths[m.face_edges[f][0]];
  const double l1 = metric.lengths[m.face_edges[f][1]];
  const double l2 = metric.lengths[m.face_edges[f][2]];
  if (triangle_quality(l0, l1, l2) < kDegenerateQuality)
    throw MetricError("radial circle construction failed: face " + std::to_string(f) +
                      " is degenerate");
  const double gi = p.radii[m.faces[f][0]];
  const double gj = p.radii[m.faces[f][1]];
  const double gk = p.radii[m.faces[f][2]];

  // Lay the face out: v_i at the origin, v_j on the x-axis, v_k above.
  const double lij = l2, ljk = l0, lki = l1;
  const double xk = (lij * lij + lki * lki - ljk * ljk) / (2.0 * lij);
  const double yk = std::sqrt(std::max(0.0, lki * lki - xk * xk));
  const Vec2 vi(0.0, 0.0), vj(lij, 0.0), vk(xk, yk);

  // The radial circle is orthogonal to all three vertex circles, so its
  // center is their radical center.
  const double xo = (lij * lij + gi * gi - gj * gj) / (2.0 * lij);
  const double yo = ((lki * lki + gi * gi - gk * gk) / 2.0 - xo * xk) / yk;
  const Vec2 o(xo, yo);

  auto signed_distance = [&o](const Vec2& a, const Vec2& b) {
    const Vec2 d = b - a;
    return (d.x() * (o.y() - a.y()) - d.y() * (o.x() - a.x())) / d.norm();
  };
  // Positive side = toward the opposite corner; the layout walks the face
  // counterclockwise so the interior lies left of each directed edge.
  std::array<double, 3> dist{};
  dist[0] = signed_distance(vj, vk); // edge opposite corner 0
  dist[1] = signed_distance(vk, vi); // opposite corner 1
  dist[2] = signed_distance(vi, vj); // opposite corner 2
  return dist;
}

Eigen::SparseMatrix<double> hessian(const CirclePacking& p) {
  const TriMesh& m = *p.mesh;
  const int nv = m.n_vertices();
  const DiscreteMetric metric = p.metric();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m.n_edges());
  for (int f = 0; f < m.n_faces(); ++f) {
    const auto d = radial_center_distances(p, f);
    for (int c = 0; c < 3; ++c) {
      const int e = m.face_edges[f][c];
      w[e] += d[c] / metric.lengths[e];
    }
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.n_edges() * 2 + nv);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(nv);
  for (int e = 0; e < m.n_edges(); ++e) {
    const int a = m.edges[e][0], b = m.edges[e][1];
    trip.emplace_back(a, b, -w[e]);
    trip.emplace_back(b, a, -w[e]);
    diag[a] += w[e];
    diag[b] += w[e];
  }
  for (int v = 0; v < nv; ++v) trip.emplace_back(v, v, diag[v]);
  Eigen::SparseMatrix<double> h(nv, nv);
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

CirclePacking flow_to_target(const CirclePacking& p, const FlowConfig& cfg, FlowReport* report,
                             const std::function<void(int, const CirclePacking&)>& on_iteration) {
  const TriMesh& m = *p.mesh;
  const int nv = m.n_vertices();
  if (cfg.gauge < 0 || cfg.gauge >= nv) throw ValidationError("gauge vertex out of range");

  auto metric_area = [&m](const CirclePacking& packing) {
    const DiscreteMetric metric = packing.metric();
    double a = 0.0;
    for (int f = 0; f < m.n_faces(); ++f) {
      const double l0 = metric.lengths[m.face_edges[f][0]];
      const double l1 = metric.lengths[m.face_edges[f][1]];
      const double l2 = metric.lengths[m.face_edges[f][2]];
      const double s = 0.5 * (l0 + l1 + l2);
      a += std::sqrt(std::max(0.0, s * (s - l0) * (s - l1) * (s - l2)));
    }
    return a;
  };

  CirclePacking cur = p;
  const double initial_area = cfg.normalize_area ? metric_area(cur) : 0.0;

  // Reduced index map with the gauge vertex pinned to kill the global
  // scaling null-space.
  std::vector<int> reduced(nv);
  for (int v = 0; v < nv; ++v) reduced[v] = v < cfg.gauge ? v : v - 1;

  FlowReport rep;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  for (rep.iterations = 0; rep.iterations <= cfg.max_iterations; ++rep.iterations) {
    const Eigen::VectorXd residual = cfg.target - packing_curvatures(cur);
    rep.residual = residual.cwiseAbs().maxCoeff();
    if (rep.residual < cfg.tolerance) {
      rep.converged = true;
      break;
    }
    if (rep.iterations == cfg.max_iterations) break;

    const Eigen::SparseMatrix<double> h = hessian(cur);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(h.nonZeros());
    for (int col = 0; col < h.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(h, col); it; ++it) {
        if (it.row() == cfg.gauge || it.col() == cfg.gauge) continue;
        trip.emplace_back(reduced[it.row()], reduced[it.col()], it.value());
      }
    }
    Eigen::SparseMatrix<double> hr(nv - 1, nv - 1);
    hr.setFromTriplets(trip.begin(), trip.end());
    solver.compute(hr);
    if (solver.info() != Eigen::Success)
      throw ConvergenceError("entropy Hessian factorization failed", rep.residual);
    Eigen::VectorXd rhs(nv - 1);
    for (int v = 0; v < nv; ++v)
      if (v != cfg.gauge) rhs[reduced[v]] = residual[v];
    const Eigen::VectorXd delta_r = solver.solve(rhs);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(nv);
    for (int v = 0; v < nv; ++v)
      if (v != cfg.gauge) delta[v] = delta_r[reduced[v]];

    // Backtracking halving: reject any scale that breaks a triangle
    // inequality (up to 20 halvings).
    double lambda = cfg.damping;
    bool accepted = false;
    for (int halvings = 0; halvings < 20; ++halvings, lambda *= 0.5) {
      CirclePacking trial = cur;
      trial.set_logs(cur.logs + lambda * delta);
      if (!trial.metric_valid()) continue;
      cur = std::move(trial);
      accepted = true;
      break;
    }
    if (!accepted)
      throw ConvergenceError("flow step rejected after 20 halvings (degenerate packing)",
                             rep.residual);

    if (cfg.normalize_area) {
      const double a = metric_area(cur);
      if (a > 0.0) cur.set_logs(cur.logs.array() + 0.5 * std::log(initial_area / a));
    }
    if (on_iteration) on_iteration(rep.iterations + 1, cur);
  }
  if (report) *report = rep;
  return cur;
}

double entropy_energy_delta(const CirclePacking& base, const Eigen::VectorXd& target,
                            const Eigen::VectorXd& u0, const Eigen::VectorXd& u1,
                            int quadrature_points) {
  // Integrand g(s) = sum_i (K_i(u(s)) - target_i) * (u1 - u0)_i along the
  // straight segment; composite Simpson needs an even interval count.
  int n = std::max(2, quadrature_points);
  if (n % 2 == 1) ++n;
  const Eigen::VectorXd du = u1 - u0;
  CirclePacking probe = base;
  auto g = [&](double s) {
    probe.set_logs(u0 + s * du);
    return (packing_curvatures(probe) - target).dot(du);
  };
  double sum = g(0.0) + g(1.0);
  for (int k = 1; k < n; ++k) sum += (k % 2 == 1 ? 4.0 : 2.0) * g(static_cast<double>(k) / n);
  return sum / (3.0 * n);
}

} // namespace ballmap
