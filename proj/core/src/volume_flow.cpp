#include "ballmap/volume_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/SparseCore>
#include <unsupported/Eigen/IterativeSolvers>

#include "ballmap/embedding.hpp"

namespace ballmap {

namespace {

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// First-order dual numbers over the six edge lengths of one tet, used to
// assemble the exact Jacobian d(theta)/d(l) without finite differences.
struct Dual6 {
  double v = 0.0;
  std::array<double, 6> d{};

  static Dual6 constant(double x) { return {x, {}}; }
  static Dual6 variable(double x, int slot) {
    Dual6 r{x, {}};
    r.d[slot] = 1.0;
    return r;
  }
};

Dual6 operator+(const Dual6& a, const Dual6& b) {
  Dual6 r{a.v + b.v, {}};
  for (int i = 0; i < 6; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
Dual6 operator-(const Dual6& a, const Dual6& b) {
  Dual6 r{a.v - b.v, {}};
  for (int i = 0; i < 6; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
Dual6 operator*(const Dual6& a, const Dual6& b) {
  Dual6 r{a.v * b.v, {}};
  for (int i = 0; i < 6; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
Dual6 operator*(double a, const Dual6& b) {
  Dual6 r{a * b.v, {}};
  for (int i = 0; i < 6; ++i) r.d[i] = a * b.d[i];
  return r;
}
Dual6 operator/(const Dual6& a, const Dual6& b) {
  Dual6 r{a.v / b.v, {}};
  const double inv2 = 1.0 / (b.v * b.v);
  for (int i = 0; i < 6; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) * inv2;
  return r;
}
Dual6 dual_acos(const Dual6& a) {
  const double x = std::clamp(a.v, -1.0, 1.0);
  Dual6 r{std::acos(x), {}};
  const double s = -1.0 / std::sqrt(std::max(1e-300, 1.0 - x * x));
  for (int i = 0; i < 6; ++i) r.d[i] = s * a.d[i];
  return r;
}
Dual6 dual_cos(const Dual6& a) {
  Dual6 r{std::cos(a.v), {}};
  const double s = -std::sin(a.v);
  for (int i = 0; i < 6; ++i) r.d[i] = s * a.d[i];
  return r;
}
Dual6 dual_sin(const Dual6& a) {
  Dual6 r{std::sin(a.v), {}};
  const double s = std::cos(a.v);
  for (int i = 0; i < 6; ++i) r.d[i] = s * a.d[i];
  return r;
}

// Dihedral angles (and gradients) of a tet from its six lengths, mirroring
// the scalar pipeline: cosine law per face, spherical cosine law per edge.
// Returns false when not realizable.
bool dual_tet_dihedrals(const std::array<double, 6>& len, std::array<Dual6, 6>& out) {
  static const int kEdgeIndex[4][4] = {
      {-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
  static const int kFaces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  std::array<Dual6, 6> l;
  for (int i = 0; i < 6; ++i) l[i] = Dual6::variable(len[i], i);

  Dual6 at[4][4];
  for (const auto& f : kFaces) {
    const Dual6 lab = l[kEdgeIndex[f[0]][f[1]]];
    const Dual6 lac = l[kEdgeIndex[f[0]][f[2]]];
    const Dual6 lbc = l[kEdgeIndex[f[1]][f[2]]];
    if (triangle_quality(lab.v, lac.v, lbc.v) < kDegenerateQuality) return false;
    const Dual6 a0 = dual_acos((lab * lab + lac * lac - lbc * lbc) / (2.0 * (lab * lac)));
    const Dual6 a1 = dual_acos((lab * lab + lbc * lbc - lac * lac) / (2.0 * (lab * lbc)));
    const Dual6 a2 = Dual6::constant(kPi) - a0 - a1;
    const int missing = 6 - f[0] - f[1] - f[2];
    at[f[0]][missing] = a0;
    at[f[1]][missing] = a1;
    at[f[2]][missing] = a2;
  }
  static const int kEdgePairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (int k = 0; k < 6; ++k) {
    const int a = kEdgePairs[k][0], b = kEdgePairs[k][1];
    int rest[2], idx = 0;
    for (int v = 0; v < 4; ++v)
      if (v != a && v != b) rest[idx++] = v;
    const Dual6 beta = at[a][rest[1]];
    const Dual6 gamma = at[a][rest[0]];
    const Dual6 alpha = at[a][b];
    const Dual6 denom = dual_sin(beta) * dual_sin(gamma);
    if (denom.v <= 0.0) return false;
    const Dual6 cosd = (dual_cos(alpha) - dual_cos(beta) * dual_cos(gamma)) / denom;
    if (cosd.v < -1.0 - 1e-9 || cosd.v > 1.0 + 1e-9) return false;
    out[k] = dual_acos(cosd);
  }
  return true;
}

// ---------------------------------------------------------------------------
// Scalar per-tet dihedral cache for one metric state.
struct AngleCache {
  std::vector<std::array<double, 6>> theta; // per tet
  std::vector<double> quality;              // min(theta, pi-theta) per tet
  int bad_tet = -1;                         // first unrealizable tet, -1 if none

  bool compute(const TetMesh& mesh, const std::vector<double>& lengths) {
    theta.resize(mesh.n_tets());
    quality.resize(mesh.n_tets());
    bad_tet = -1;
    for (int t = 0; t < mesh.n_tets(); ++t) {
      std::array<double, 6> l{};
      for (int k = 0; k < 6; ++k) l[k] = lengths[mesh.tet_edges[t][k]];
      std::array<Dual6, 6> unused;
      // Scalar path: reuse the metric module through a light local copy.
      double at[4][4];
      static const int kEdgeIndex[4][4] = {
          {-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
      static const int kFaces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
      bool ok = true;
      for (const auto& f : kFaces) {
        const double lab = l[kEdgeIndex[f[0]][f[1]]];
        const double lac = l[kEdgeIndex[f[0]][f[2]]];
        const double lbc = l[kEdgeIndex[f[1]][f[2]]];
        if (triangle_quality(lab, lac, lbc) < kDegenerateQuality) {
          ok = false;
          break;
        }
        const double a0 =
            std::acos(std::clamp((lab * lab + lac * lac - lbc * lbc) / (2 * lab * lac), -1.0, 1.0));
        const double a1 =
            std::acos(std::clamp((lab * lab + lbc * lbc - lac * lac) / (2 * lab * lbc), -1.0, 1.0));
        const int missing = 6 - f[0] - f[1] - f[2];
        at[f[0]][missing] = a0;
        at[f[1]][missing] = a1;
        at[f[2]][missing] = kPi - a0 - a1;
      }
      double q = kPi;
      if (ok) {
        static const int kEdgePairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
        for (int k = 0; k < 6 && ok; ++k) {
          const int a = kEdgePairs[k][0], b = kEdgePairs[k][1];
          int rest[2], idx = 0;
          for (int v = 0; v < 4; ++v)
            if (v != a && v != b) rest[idx++] = v;
          const double beta = at[a][rest[1]];
          const double gamma = at[a][rest[0]];
          const double alpha = at[a][b];
          const double denom = std::sin(beta) * std::sin(gamma);
          if (denom <= 0.0) {
            ok = false;
            break;
          }
          const double cosd = (std::cos(alpha) - std::cos(beta) * std::cos(gamma)) / denom;
          if (cosd < -1.0 - 1e-9 || cosd > 1.0 + 1e-9) {
            ok = false;
            break;
          }
          theta[t][k] = std::acos(std::clamp(cosd, -1.0, 1.0));
          q = std::min(q, std::min(theta[t][k], kPi - theta[t][k]));
        }
      }
      if (!ok) {
        if (bad_tet < 0) bad_tet = t;
        quality[t] = -1.0;
        continue;
      }
      quality[t] = q;
      (void)unused;
    }
    return bad_tet < 0;
  }

  // Max |K| over interior edges; fills k (sized n_edges) for all edges.
  double curvatures(const TetMesh& mesh, Eigen::VectorXd& k) const {
    k.resize(mesh.n_edges());
    for (int e = 0; e < mesh.n_edges(); ++e)
      k[e] = mesh.is_boundary_edge(e) ? kPi : 2.0 * kPi;
    for (int t = 0; t < mesh.n_tets(); ++t)
      for (int j = 0; j < 6; ++j) k[mesh.tet_edges[t][j]] -= theta[t][j];
    double res = 0.0;
    for (int e = 0; e < mesh.n_edges(); ++e)
      if (!mesh.is_boundary_edge(e)) res = std::max(res, std::abs(k[e]));
    return res;
  }

  double min_quality() const {
    double q = kPi;
    for (double x : quality) q = std::min(q, x);
    return q;
  }
  int worst_tet() const {
    int t = 0;
    for (int i = 1; i < static_cast<int>(quality.size()); ++i)
      if (quality[i] < quality[t]) t = i;
    return t;
  }
};

// ---------------------------------------------------------------------------
// Flow state over mutable connectivity.
struct FlowState {
  TetMesh mesh;
  std::vector<double> lengths;
  std::vector<RemeshEvent> changelog;

  void apply_remesh(RemeshResult&& r) {
    changelog.push_back(r.event);
    mesh = std::move(r.mesh);
    lengths = std::move(r.lengths);
  }
};

// Even-permutation test for 4-element arrays with equal content.
bool even_permutation(const std::array<int, 4>& from, const std::array<int, 4>& to) {
  std::array<int, 4> perm{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (to[i] == from[j]) perm[i] = j;
  int inversions = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (perm[i] > perm[j]) ++inversions;
  return inversions % 2 == 0;
}


// Min dihedral quality of a six-length tet, -1 when unrealizable.
double quality_from_lengths(const std::array<double, 6>& l) {
  std::array<Dual6, 6> out;
  if (!dual_tet_dihedrals(l, out)) return -1.0;
  double q = kPi;
  for (const auto& o : out) q = std::min(q, std::min(o.v, kPi - o.v));
  return q;
}

} // namespace

int count_flipped_tets(const TetMesh& mesh, const std::vector<Vec3>& positions) {
  int flips = 0;
  for (const auto& t : mesh.tets)
    if (signed_tet_volume(positions[t[0]], positions[t[1]], positions[t[2]], positions[t[3]]) <=
        0.0)
      ++flips;
  return flips;
}

HomotopySchedule HomotopySchedule::make(const TetMesh& mesh, const SphereParam& sphere,
                                        int steps) {
  auto bs = mesh.boundary_surface();
  if (static_cast<int>(sphere.positions.size()) != bs.mesh.n_vertices())
    throw ValidationError("sphere parameterization does not match the boundary surface");
  HomotopySchedule s;
  s.steps = std::max(1, steps);
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (!mesh.is_boundary_edge(e)) continue;
    const int a = mesh.edges[e][0], b = mesh.edges[e][1];
    s.boundary_edges.push_back(e);
    s.l0.push_back((mesh.vertices[a] - mesh.vertices[b]).norm());
    const Vec3 sa = sphere.positions[bs.to_surface[a]];
    const Vec3 sb = sphere.positions[bs.to_surface[b]];
    s.l1.push_back((sa - sb).norm());
  }
  for (std::size_t k = 0; k < s.l0.size(); ++k)
    if (!(s.l0[k] > 0.0) || !(s.l1[k] > 0.0))
      throw MetricError("homotopy schedule has a non-positive boundary length");
  return s;
}

std::pair<DiscreteMetric, double> interior_flow_step(const DiscreteMetric& metric,
                                                     const VolumeFlowConfig& cfg) {
  const TetMesh& mesh = *metric.tet;
  AngleCache cache;
  if (!cache.compute(mesh, metric.lengths))
    throw MetricError("tet " + std::to_string(cache.bad_tet) + " is not realizable");
  Eigen::VectorXd k;
  cache.curvatures(mesh, k);

  double dtau = cfg.dtau;
  for (int halvings = 0; halvings < 40; ++halvings, dtau *= 0.5) {
    DiscreteMetric next = metric;
    for (int e = 0; e < mesh.n_edges(); ++e)
      if (!mesh.is_boundary_edge(e)) next.lengths[e] += k[e] * dtau;
    AngleCache trial;
    if (!trial.compute(mesh, next.lengths)) continue;
    Eigen::VectorXd k2;
    const double res = trial.curvatures(mesh, k2);
    return {std::move(next), res};
  }
  throw MetricError("flow step kept producing unrealizable tets; worst tet " +
                    std::to_string(cache.worst_tet()));
}

RemeshResult local_remesh(const TetMesh& mesh, const std::vector<double>& lengths, int tet,
                          double current_quality) {
  struct Candidate {
    std::vector<int> removed;                 // old tet ids
    std::vector<std::array<int, 4>> added;    // new tets, oriented
    double new_edge_length = -1.0;            // for 2-3 flips
    std::array<int, 2> new_edge = {-1, -1};
    double quality = -1.0;
    RemeshEvent event;
  };
  std::vector<Candidate> candidates;

  auto tet_quality = [&](const std::array<int, 4>& tc,
                         double pq_len, const std::array<int, 2>& pq) {
    static const int kEdgePairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    std::array<double, 6> l{};
    for (int k = 0; k < 6; ++k) {
      const int a = tc[kEdgePairs[k][0]], b = tc[kEdgePairs[k][1]];
      const int e = mesh.edge_between(a, b);
      if (e >= 0) {
        l[k] = lengths[e];
      } else if ((a == pq[0] && b == pq[1]) || (a == pq[1] && b == pq[0])) {
        l[k] = pq_len;
      } else {
        return -1.0;
      }
    }
    return quality_from_lengths(l);
  };

  // --- 2-3 flips over each interior face of the flagged tet.
  static const int kOutward[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  const auto& tc = mesh.tets[tet];
  for (int k = 0; k < 4; ++k) {
    const int f = mesh.tet_faces[tet][k];
    if (!mesh.is_interior_face(f)) continue;
    const int other = mesh.face_tets[f][0] == tet ? mesh.face_tets[f][1] : mesh.face_tets[f][0];
    const int p = tc[k];
    // Outward-oriented shared face as seen from this tet (normal toward q).
    const std::array<int, 3> w = {tc[kOutward[k][0]], tc[kOutward[k][1]], tc[kOutward[k][2]]};
    int q = -1;
    for (int j = 0; j < 4; ++j) {
      const int v = mesh.tets[other][j];
      if (v != w[0] && v != w[1] && v != w[2]) q = v;
    }
    if (q < 0 || mesh.edge_between(p, q) >= 0) continue;

    // New edge length from the local realization: face in a plane, p below,
    // q above.
    auto len = [&](int a, int b) { return lengths[mesh.edge_between(a, b)]; };
    const double lab = len(w[0], w[1]), lac = len(w[0], w[2]), lbc = len(w[1], w[2]);
    if (triangle_quality(lab, lac, lbc) < kDegenerateQuality) continue;
    const double xc = (lab * lab + lac * lac - lbc * lbc) / (2.0 * lab);
    const double yc = std::sqrt(std::max(0.0, lac * lac - xc * xc));
    const Vec3 A(0, 0, 0), B(lab, 0, 0), C(xc, yc, 0);
    auto place = [&](int v, double zsign, Vec3& out) {
      const double la = len(v, w[0]), lb = len(v, w[1]), lc = len(v, w[2]);
      const double x = (la * la - lb * lb + lab * lab) / (2.0 * lab);
      const double y = (la * la - lc * lc + xc * xc + yc * yc - 2.0 * xc * x) / (2.0 * yc);
      const double z2 = la * la - x * x - y * y;
      if (z2 < -1e-9 * la * la) return false;
      out = Vec3(x, y, zsign * std::sqrt(std::max(0.0, z2)));
      return true;
    };
    Vec3 P, Q;
    if (!place(p, -1.0, P) || !place(q, +1.0, Q)) continue;
    const double lpq = (P - Q).norm();

    Candidate cand;
    cand.removed = {std::min(tet, other), std::max(tet, other)};
    cand.added = {{p, q, w[0], w[1]}, {p, q, w[1], w[2]}, {p, q, w[2], w[0]}};
    cand.new_edge = {std::min(p, q), std::max(p, q)};
    cand.new_edge_length = lpq;
    cand.quality = kPi;
    for (const auto& nt : cand.added)
      cand.quality = std::min(cand.quality, tet_quality(nt, lpq, cand.new_edge));
    cand.event = {RemeshEvent::Kind::Flip23, {w[0], w[1], w[2]}, {p, q}, 0.0};
    if (cand.quality > 0.0) candidates.push_back(std::move(cand));
  }

  // --- 3-2 flips over each interior edge of the flagged tet with exactly
  // three incident tets.
  for (int k = 0; k < 6; ++k) {
    const int e = mesh.tet_edges[tet][k];
    if (mesh.is_boundary_edge(e)) continue;
    const auto& fan = mesh.edge_tets[e];
    if (fan.size() != 3) continue;
    const int p = mesh.edges[e][0], q = mesh.edges[e][1];
    std::vector<int> ring;
    for (int t2 : fan)
      for (int j = 0; j < 4; ++j) {
        const int v = mesh.tets[t2][j];
        if (v != p && v != q && std::find(ring.begin(), ring.end(), v) == ring.end())
          ring.push_back(v);
      }
    if (ring.size() != 3) continue;
    if (mesh.face_between(ring[0], ring[1], ring[2]) >= 0) continue;

    // Ring orientation from the parity of one old tet: with (a,b,c)
    // counterclockwise around the p->q axis, {p,q,a,b} is an even
    // permutation of each positively oriented old tet.
    int a = ring[0], b = ring[1], c = ring[2];
    const int t0 = fan[0];
    std::array<int, 4> ref{};
    {
      int other[2], idx = 0;
      for (int j = 0; j < 4; ++j) {
        const int v = mesh.tets[t0][j];
        if (v != p && v != q) other[idx++] = v;
      }
      ref = {p, q, other[0], other[1]};
      if (!even_permutation(mesh.tets[t0], ref)) std::swap(ref[2], ref[3]);
      // ref = (p,q,x,y) even: ring step x->y is counterclockwise.
    }
    // Orient (a,b,c) so that the pair (ref[2], ref[3]) appears in order.
    const std::array<std::array<int, 3>, 2> orders = {{{a, b, c}, {a, c, b}}};
    for (const auto& ord : orders) {
      bool match = false;
      for (int i = 0; i < 3; ++i)
        if (ord[i] == ref[2] && ord[(i + 1) % 3] == ref[3]) match = true;
      if (match) {
        a = ord[0];
        b = ord[1];
        c = ord[2];
        break;
      }
    }

    Candidate cand;
    cand.removed = {fan[0], fan[1], fan[2]};
    std::sort(cand.removed.begin(), cand.removed.end());
    // p sits on the positive side of counterclockwise (a,b,c).
    cand.added = {{a, b, c, p}, {a, c, b, q}};
    cand.quality = kPi;
    for (const auto& nt : cand.added)
      cand.quality = std::min(cand.quality, tet_quality(nt, -1.0, {-1, -1}));
    cand.event = {RemeshEvent::Kind::Flip32, {a, b, c}, {p, q}, 0.0};
    if (cand.quality > 0.0) candidates.push_back(std::move(cand));
  }

  // Deterministic pick: best quality, then lowest removed-tet ids.
  int best = -1;
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
    if (candidates[i].quality <= current_quality) continue;
    if (best < 0 || candidates[i].quality > candidates[best].quality ||
        (candidates[i].quality == candidates[best].quality &&
         candidates[i].removed < candidates[best].removed))
      best = i;
  }
  if (best < 0)
    throw ConvergenceError("no legal face swap improves tet " + std::to_string(tet) +
                           " (quality " + std::to_string(current_quality) + ")");

  const Candidate& c = candidates[best];
  std::vector<std::array<int, 4>> tets;
  tets.reserve(mesh.n_tets() - c.removed.size() + c.added.size());
  for (int t = 0; t < mesh.n_tets(); ++t)
    if (std::find(c.removed.begin(), c.removed.end(), t) == c.removed.end())
      tets.push_back(mesh.tets[t]);
  for (const auto& nt : c.added) tets.push_back(nt);

  RemeshResult out;
  out.event = c.event;
  out.mesh = TetMesh::build(mesh.vertices, std::move(tets), false, nullptr,
                            /*check_volumes=*/false);
  out.lengths.assign(out.mesh.n_edges(), 0.0);
  for (int e = 0; e < out.mesh.n_edges(); ++e) {
    const int a2 = out.mesh.edges[e][0], b2 = out.mesh.edges[e][1];
    const int old = mesh.edge_between(a2, b2);
    if (old >= 0) {
      out.lengths[e] = lengths[old];
    } else if (a2 == c.new_edge[0] && b2 == c.new_edge[1]) {
      out.lengths[e] = c.new_edge_length;
    } else {
      throw TopologyError("remesh produced an unexpected edge");
    }
  }
  return out;
}

namespace {

// Applies the boundary schedule at time t to the state (by vertex pair, so
// it survives remeshing). The interior warm-starts with the mean boundary
// scale factor, which absorbs the bulk of the jump before relaxation.
void set_boundary_lengths(FlowState& state, const TetMesh& original,
                          const HomotopySchedule& schedule, double t) {
  double old_sum = 0.0, new_sum = 0.0;
  for (std::size_t k = 0; k < schedule.boundary_edges.size(); ++k) {
    const auto& pair = original.edges[schedule.boundary_edges[k]];
    const int e = state.mesh.edge_between(pair[0], pair[1]);
    if (e < 0) throw TopologyError("boundary edge vanished during remeshing");
    old_sum += state.lengths[e];
    new_sum += schedule.length_at(static_cast<int>(k), t);
  }
  const double scale = old_sum > 0.0 ? new_sum / old_sum : 1.0;
  for (double& l : state.lengths) l *= scale;
  for (std::size_t k = 0; k < schedule.boundary_edges.size(); ++k) {
    const auto& pair = original.edges[schedule.boundary_edges[k]];
    state.lengths[state.mesh.edge_between(pair[0], pair[1])] =
        schedule.length_at(static_cast<int>(k), t);
  }
}

struct RelaxOutcome {
  bool converged = false;
  double residual = 0.0;
  int iterations = 0;
};

// Gershgorin bound for the explicit stability limit: with J = dK/dl over
// interior edges, steps below 1/max_row|J| keep the update non-expansive in
// the max norm.
double stable_step_bound(const TetMesh& mesh, const std::vector<double>& lengths) {
  std::vector<double> rowsum(mesh.n_edges(), 0.0);
  for (int t = 0; t < mesh.n_tets(); ++t) {
    std::array<double, 6> l{};
    for (int j = 0; j < 6; ++j) l[j] = lengths[mesh.tet_edges[t][j]];
    std::array<Dual6, 6> th;
    if (!dual_tet_dihedrals(l, th)) continue;
    for (int r = 0; r < 6; ++r) {
      const int er = mesh.tet_edges[t][r];
      if (mesh.is_boundary_edge(er)) continue;
      for (int c = 0; c < 6; ++c) {
        if (mesh.is_boundary_edge(mesh.tet_edges[t][c])) continue;
        rowsum[er] += std::abs(th[r].d[c]);
      }
    }
  }
  double worst = 0.0;
  for (double x : rowsum) worst = std::max(worst, x);
  return worst > 0.0 ? 0.9 / worst : std::numeric_limits<double>::infinity();
}

// Flow potential sum_e c_e l_e - sum_t sum_j l theta, evaluated from a
// computed angle cache. The explicit update ascends it; it is the merit
// function for step control (the max-norm residual is not monotone).
double potential_from_cache(const TetMesh& mesh, const std::vector<double>& lengths,
                            const AngleCache& cache) {
  double e = 0.0;
  for (int ei = 0; ei < mesh.n_edges(); ++ei)
    e += (mesh.is_boundary_edge(ei) ? kPi : 2.0 * kPi) * lengths[ei];
  for (int t = 0; t < mesh.n_tets(); ++t)
    for (int j = 0; j < 6; ++j) e -= lengths[mesh.tet_edges[t][j]] * cache.theta[t][j];
  return e;
}

// A boundary jump can leave the entry state unrealizable; try a local swap,
// otherwise report failure so the homotopy driver shrinks its step.
bool ensure_realizable(FlowState& state, AngleCache& cache, double t) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    if (cache.compute(state.mesh, state.lengths)) return true;
    try {
      auto r = local_remesh(state.mesh, state.lengths, cache.bad_tet, -1.0);
      r.event.t = t;
      state.apply_remesh(std::move(r));
    } catch (const ConvergenceError&) {
      return false;
    }
  }
  return cache.compute(state.mesh, state.lengths);
}

// Explicit relaxation of the interior metric (dl = K dtau) with the step
// capped at the stability bound, halving on unrealizable candidates or
// potential decrease, and remeshing near degeneracies.
RelaxOutcome euler_relax(FlowState& state, const VolumeFlowConfig& cfg, double t) {
  RelaxOutcome out;
  AngleCache cache;
  if (!ensure_realizable(state, cache, t)) return {};
  Eigen::VectorXd k;
  double res = cache.curvatures(state.mesh, k);
  double energy = potential_from_cache(state.mesh, state.lengths, cache);
  double dtau_cap = std::min(cfg.dtau, stable_step_bound(state.mesh, state.lengths));
  double dtau = dtau_cap;

  auto after_remesh = [&] {
    if (!cache.compute(state.mesh, state.lengths))
      throw MetricError("remeshed state not realizable");
    res = cache.curvatures(state.mesh, k);
    energy = potential_from_cache(state.mesh, state.lengths, cache);
    dtau_cap = std::min(cfg.dtau, stable_step_bound(state.mesh, state.lengths));
    dtau = std::min(dtau, dtau_cap);
  };

  for (out.iterations = 0; out.iterations < cfg.max_inner_iterations; ++out.iterations) {
    if (res < cfg.tolerance) {
      out.converged = true;
      out.residual = res;
      return out;
    }
    // Remesh when a tet degenerates.
    if (cache.min_quality() < cfg.degeneracy_quality) {
      const int worst = cache.worst_tet();
      try {
        auto r = local_remesh(state.mesh, state.lengths, worst, cache.quality[worst]);
        r.event.t = t;
        state.apply_remesh(std::move(r));
        after_remesh();
        continue;
      } catch (const ConvergenceError&) {
        // fall through to step halving
      }
    }

    std::vector<double> cand = state.lengths;
    for (int e = 0; e < state.mesh.n_edges(); ++e)
      if (!state.mesh.is_boundary_edge(e)) cand[e] += k[e] * dtau;
    AngleCache trial;
    if (!trial.compute(state.mesh, cand)) {
      const int bad = trial.bad_tet;
      try {
        auto r = local_remesh(state.mesh, state.lengths, bad, cache.quality[bad]);
        r.event.t = t;
        state.apply_remesh(std::move(r));
        after_remesh();
      } catch (const ConvergenceError&) {
        dtau *= 0.5;
        if (dtau < dtau_cap * 0x1p-30) break;
      }
      continue;
    }
    const double energy2 = potential_from_cache(state.mesh, cand, trial);
    if (energy2 < energy - 1e-12 * (1.0 + std::abs(energy))) {
      dtau *= 0.5; // past the stability limit: the ascent overshot
      if (dtau < dtau_cap * 0x1p-30) break;
      continue;
    }
    Eigen::VectorXd k2;
    const double res2 = trial.curvatures(state.mesh, k2);
    state.lengths = std::move(cand);
    cache = std::move(trial);
    k = std::move(k2);
    res = res2;
    energy = energy2;
    dtau = std::min(dtau_cap, dtau * 1.25);
  }
  out.converged = res < cfg.tolerance;
  out.residual = res;
  return out;
}

// Newton relaxation: solves d(K)/d(l) * delta = -K over interior edges.
// The Jacobian is exact (dual numbers); the linear system is symmetric and
// solved by MINRES on its negation (positive definite near the flat state).
RelaxOutcome newton_relax(FlowState& state, const VolumeFlowConfig& cfg, double t) {
  RelaxOutcome out;
  AngleCache cache;
  if (!ensure_realizable(state, cache, t)) return {};
  Eigen::VectorXd k;
  double res = cache.curvatures(state.mesh, k);

  for (out.iterations = 0; out.iterations < cfg.newton_max_iterations; ++out.iterations) {
    if (res < cfg.tolerance) {
      out.converged = true;
      out.residual = res;
      return out;
    }
    if (cache.min_quality() < cfg.degeneracy_quality) {
      const int worst = cache.worst_tet();
      try {
        auto r = local_remesh(state.mesh, state.lengths, worst, cache.quality[worst]);
        r.event.t = t;
        state.apply_remesh(std::move(r));
        if (!cache.compute(state.mesh, state.lengths))
          throw MetricError("remeshed state not realizable");
        res = cache.curvatures(state.mesh, k);
        continue;
      } catch (const ConvergenceError&) {
      }
    }

    const TetMesh& mesh = state.mesh;
    std::vector<int> interior_index(mesh.n_edges(), -1);
    int n = 0;
    for (int e = 0; e < mesh.n_edges(); ++e)
      if (!mesh.is_boundary_edge(e)) interior_index[e] = n++;

    // Assemble -dK/dl = sum over tets of dtheta/dl, interior block.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.n_tets() * 36);
    for (int tt = 0; tt < mesh.n_tets(); ++tt) {
      std::array<double, 6> l{};
      for (int j = 0; j < 6; ++j) l[j] = state.lengths[mesh.tet_edges[tt][j]];
      std::array<Dual6, 6> th;
      if (!dual_tet_dihedrals(l, th))
        throw MetricError("tet " + std::to_string(tt) + " lost realizability mid-assembly");
      for (int r = 0; r < 6; ++r) {
        const int er = interior_index[mesh.tet_edges[tt][r]];
        if (er < 0) continue;
        for (int cidx = 0; cidx < 6; ++cidx) {
          const int ec = interior_index[mesh.tet_edges[tt][cidx]];
          if (ec < 0) continue;
          trip.emplace_back(er, ec, th[r].d[cidx]);
        }
      }
    }
    Eigen::SparseMatrix<double> a(n, n); // -dK/dl
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd rhs(n);
    for (int e = 0; e < mesh.n_edges(); ++e)
      if (interior_index[e] >= 0) rhs[interior_index[e]] = k[e];

    Eigen::MINRES<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> minres;
    minres.setTolerance(std::min(1e-8, 1e-3 * res));
    minres.setMaxIterations(4000);
    minres.compute(a);
    Eigen::VectorXd delta = minres.solve(rhs);
    if (!delta.allFinite()) break;

    // Backtracking on the residual with realizability screening.
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h < 25; ++h, lambda *= 0.5) {
      std::vector<double> cand = state.lengths;
      for (int e = 0; e < mesh.n_edges(); ++e)
        if (interior_index[e] >= 0) cand[e] += lambda * delta[interior_index[e]];
      AngleCache trial;
      if (!trial.compute(mesh, cand)) continue;
      Eigen::VectorXd k2;
      const double res2 = trial.curvatures(mesh, k2);
      if (res2 < res * (1.0 - 1e-4 * lambda) || res2 < cfg.tolerance) {
        state.lengths = std::move(cand);
        cache = std::move(trial);
        k = std::move(k2);
        res = res2;
        accepted = true;
        break;
      }
    }
    if (!accepted) break; // caller falls back to the explicit flow
  }
  out.converged = res < cfg.tolerance;
  out.residual = res;
  return out;
}

// The interior-restricted curvature Jacobian at a flat metric is indefinite
// (a saddle) with a null space of dimension 3x interior vertices, so the
// explicit pseudo-time flow diverges from generic starts. Newton on the
// stationarity condition, solved by MINRES, converges onto the flat-metric
// manifold and is the default; the explicit integrator stays available for
// experiments via Solver::Euler.
RelaxOutcome relax(FlowState& state, const VolumeFlowConfig& cfg, double t) {
  VolumeFlowConfig::Solver solver = cfg.solver;
  if (solver == VolumeFlowConfig::Solver::Auto) solver = VolumeFlowConfig::Solver::Newton;
  if (solver == VolumeFlowConfig::Solver::Newton) return newton_relax(state, cfg, t);
  return euler_relax(state, cfg, t);
}

} // namespace

BallParam homotopy_parameterize(const TetMesh& mesh, const SphereParam& sphere,
                                const VolumeFlowConfig& cfg) {
  if (!(cfg.tolerance > 0.0)) throw ValidationError("flow tolerance must be positive");
  auto bs = mesh.boundary_surface();
  if (static_cast<int>(sphere.positions.size()) != bs.mesh.n_vertices())
    throw ValidationError("sphere parameterization does not match the boundary surface");
  for (const auto& [v, target] : cfg.features) {
    if (v < 0 || v >= mesh.n_vertices())
      throw ValidationError("feature vertex " + std::to_string(v) + " out of range");
    if (mesh.is_boundary_vertex(v))
      throw ValidationError("feature vertex " + std::to_string(v) + " is on the boundary");
    if (target.norm() >= 1.0 - 1e-9)
      throw ValidationError("feature target must lie strictly inside the unit ball");
  }

  const HomotopySchedule schedule = HomotopySchedule::make(mesh, sphere, cfg.homotopy_steps);
  FlowState state{mesh, DiscreteMetric::from_volume(mesh).lengths, {}};

  int steps_used = 0;
  double completed = 0.0;
  double dt = 1.0 / schedule.steps;
  double residual = 0.0;
  while (completed < 1.0) {
    const double t_next = std::min(1.0, completed + dt);
    const FlowState saved = state; // a failed attempt may also have remeshed
    set_boundary_lengths(state, mesh, schedule, t_next);
    RelaxOutcome outcome = relax(state, cfg, t_next);
    if (cfg.verbose)
      std::fprintf(stderr, "[flow] t=%.4f iters=%d residual=%.3e%s\n", t_next,
                   outcome.iterations, outcome.residual, outcome.converged ? "" : " (failed)");
    if (outcome.converged) {
      completed = t_next;
      residual = outcome.residual;
      ++steps_used;
      dt = std::min(1.0 / schedule.steps, dt * 2.0);
    } else {
      state = saved;
      dt *= 0.5;
      if (dt < 1.0 / (schedule.steps * 4096.0))
        throw ConvergenceError("volumetric flow stalled at t=" + std::to_string(t_next) +
                                   " with residual " + std::to_string(outcome.residual),
                               outcome.residual);
    }
  }

  // Embed: boundary pinned to the sphere image, features to their targets.
  std::vector<std::pair<int, Vec3>> fixed;
  fixed.reserve(bs.to_volume.size() + cfg.features.size());
  for (int sv = 0; sv < static_cast<int>(bs.to_volume.size()); ++sv)
    fixed.emplace_back(bs.to_volume[sv], sphere.positions[sv]);
  for (const auto& f : cfg.features) fixed.push_back(f);

  EmbedOptions eopt;
  eopt.max_iterations = cfg.max_embed_iterations;
  EmbedResult embedded;
  try {
    embedded = embed_flat_metric(state.mesh, state.lengths, fixed, eopt);
  } catch (const ConvergenceError& err) {
    if (cfg.features.empty()) throw;
    std::string what = err.what();
    what += "; pinned features:";
    for (const auto& f : cfg.features) what += " " + std::to_string(f.first);
    throw ConvergenceError(what, err.residual);
  }

  BallParam out;
  out.mesh = std::move(state.mesh);
  out.positions = std::move(embedded.positions);
  out.changelog = std::move(state.changelog);
  out.final_residual = residual;
  out.homotopy_steps_used = steps_used;
  out.embed_rms = embedded.rms;
  return out;
}

BallParam constrained_parameterize(const TetMesh& mesh, const SphereParam& sphere,
                                   const std::vector<std::pair<int, Vec3>>& features,
                                   VolumeFlowConfig cfg) {
  cfg.features = features;
  return homotopy_parameterize(mesh, sphere, cfg);
}

} // namespace ballmap
