#include "ballmap/embedding.hpp"

#include <cmath>
#include <queue>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "ballmap/errors.hpp"
#include "ballmap/metric.hpp"

namespace ballmap {

namespace {

int count_flips(const TetMesh& mesh, const std::vector<Vec3>& p) {
  int flips = 0;
  for (const auto& t : mesh.tets)
    if (signed_tet_volume(p[t[0]], p[t[1]], p[t[2]], p[t[3]]) <= 0.0) ++flips;
  return flips;
}

double rms_length_error(const TetMesh& mesh, const std::vector<double>& lengths,
                        const std::vector<Vec3>& p) {
  double sum = 0.0;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const double d = (p[mesh.edges[e][0]] - p[mesh.edges[e][1]]).norm() - lengths[e];
    sum += d * d;
  }
  return std::sqrt(sum / mesh.n_edges());
}

// Point at given distances from three placed anchors; `positive` selects the
// branch on the +normal side of (a,b,c).
bool trilaterate(const Vec3& a, const Vec3& b, const Vec3& c, double la, double lb, double lc,
                 bool positive, Vec3& out) {
  const Vec3 ex_raw = b - a;
  const double d = ex_raw.norm();
  if (d < 1e-300) return false;
  const Vec3 ex = ex_raw / d;
  const Vec3 ac = c - a;
  const double i = ex.dot(ac);
  Vec3 ey_raw = ac - i * ex;
  const double j = ey_raw.norm();
  if (j < 1e-300) return false;
  const Vec3 ey = ey_raw / j;
  const Vec3 ez = ex.cross(ey);

  const double x = (la * la - lb * lb + d * d) / (2.0 * d);
  const double y = (la * la - lc * lc + i * i + j * j - 2.0 * i * x) / (2.0 * j);
  const double z2 = la * la - x * x - y * y;
  const double z = std::sqrt(std::max(0.0, z2));
  out = a + x * ex + y * ey + (positive ? z : -z) * ez;
  return true;
}

// Breadth-first trilateration from the already-placed set, choosing the
// branch that keeps each tet's stored orientation positive.
void place_by_trilateration(const TetMesh& mesh, const std::vector<double>& lengths,
                            std::vector<Vec3>& pos, std::vector<std::uint8_t>& placed) {
  std::vector<std::vector<int>> vertex_tets(mesh.n_vertices());
  for (int t = 0; t < mesh.n_tets(); ++t)
    for (int k = 0; k < 4; ++k) vertex_tets[mesh.tets[t][k]].push_back(t);

  auto tet_placed_count = [&](int t) {
    int c = 0;
    for (int k = 0; k < 4; ++k) c += placed[mesh.tets[t][k]];
    return c;
  };

  std::queue<int> ready;
  std::vector<std::uint8_t> queued(mesh.n_tets(), 0);
  for (int t = 0; t < mesh.n_tets(); ++t)
    if (tet_placed_count(t) == 3) {
      ready.push(t);
      queued[t] = 1;
    }

  auto metric_len = [&](int a, int b) { return lengths[mesh.edge_between(a, b)]; };

  while (!ready.empty()) {
    const int t = ready.front();
    ready.pop();
    const auto& tc = mesh.tets[t];
    int m = -1;
    for (int k = 0; k < 4; ++k)
      if (!placed[tc[k]]) m = k;
    if (m < 0) continue;
    const int vm = tc[m];
    const int va = tc[(m + 1) % 4], vb = tc[(m + 2) % 4], vc = tc[(m + 3) % 4];

    Vec3 cand;
    if (trilaterate(pos[va], pos[vb], pos[vc], metric_len(vm, va), metric_len(vm, vb),
                    metric_len(vm, vc), true, cand)) {
      // Pick the mirror branch that keeps the stored order positive.
      std::array<Vec3, 4> img;
      for (int k = 0; k < 4; ++k) img[k] = k == m ? cand : pos[tc[k]];
      if (signed_tet_volume(img[0], img[1], img[2], img[3]) < 0.0)
        trilaterate(pos[va], pos[vb], pos[vc], metric_len(vm, va), metric_len(vm, vb),
                    metric_len(vm, vc), false, cand);
      pos[vm] = cand;
      placed[vm] = 1;
      for (int tn : vertex_tets[vm])
        if (!queued[tn] && tet_placed_count(tn) == 3) {
          ready.push(tn);
          queued[tn] = 1;
        }
    }
  }

  // Leftovers (pockets the breadth-first pass could not reach): average of
  // placed neighbors, last resort the placed centroid.
  bool leftovers = false;
  for (int v = 0; v < mesh.n_vertices() && !leftovers; ++v) leftovers = !placed[v];
  if (!leftovers) return;

  Vec3 centroid = Vec3::Zero();
  int placed_count = 0;
  for (int v = 0; v < mesh.n_vertices(); ++v)
    if (placed[v]) {
      centroid += pos[v];
      ++placed_count;
    }
  if (placed_count > 0) centroid /= placed_count;

  std::vector<Vec3> acc(mesh.n_vertices(), Vec3::Zero());
  std::vector<int> deg(mesh.n_vertices(), 0);
  for (const auto& e : mesh.edges) {
    if (placed[e[1]]) {
      acc[e[0]] += pos[e[1]];
      ++deg[e[0]];
    }
    if (placed[e[0]]) {
      acc[e[1]] += pos[e[0]];
      ++deg[e[1]];
    }
  }
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    if (placed[v]) continue;
    pos[v] = deg[v] > 0 ? Vec3(acc[v] / deg[v]) : centroid;
    placed[v] = 1;
  }
}

} // namespace

EmbedResult embed_flat_metric(const TetMesh& mesh, const std::vector<double>& lengths,
                              const std::vector<std::pair<int, Vec3>>& fixed,
                              const EmbedOptions& opt) {
  const int nv = mesh.n_vertices();
  if (static_cast<int>(lengths.size()) != mesh.n_edges())
    throw ValidationError("embed: length count mismatch");

  EmbedResult res;
  res.positions.assign(nv, Vec3::Zero());
  std::vector<std::uint8_t> pinned(nv, 0);
  for (const auto& [v, p] : fixed) {
    if (v < 0 || v >= nv) throw ValidationError("embed: fixed vertex out of range");
    res.positions[v] = p;
    pinned[v] = 1;
  }

  std::vector<std::uint8_t> placed = pinned;
  place_by_trilateration(mesh, lengths, res.positions, placed);

  // Free-variable indexing.
  std::vector<int> index(nv, -1);
  int nfree = 0;
  for (int v = 0; v < nv; ++v)
    if (!pinned[v]) index[v] = nfree++;
  if (nfree == 0) {
    res.rms = rms_length_error(mesh, lengths, res.positions);
    res.flipped = count_flips(mesh, res.positions);
    return res;
  }

  double mean_len = 0.0;
  for (double l : lengths) mean_len += l;
  mean_len /= lengths.size();

  // Gauss-Newton with a touch of Levenberg-Marquardt damping on
  // E = sum_e (|x_i - x_j| - l_e)^2, pinned vertices held fixed.
  const int n3 = 3 * nfree;
  Eigen::SparseMatrix<double> jtj(n3, n3);
  Eigen::VectorXd jtr(n3);
  std::vector<Eigen::Triplet<double>> trip;
  double mu = 1e-10;
  double prev_rms = rms_length_error(mesh, lengths, res.positions);

  auto solve_system = [&](const Eigen::SparseMatrix<double>& a,
                          const Eigen::VectorXd& b) -> Eigen::VectorXd {
    if (n3 <= 60000) {
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
      if (ldlt.info() == Eigen::Success) return ldlt.solve(b);
    }
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-10);
    cg.setMaxIterations(4000);
    cg.compute(a);
    return cg.solve(b);
  };

  for (int round = 0; round <= opt.untangle_rounds; ++round) {
    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
      trip.clear();
      jtr.setZero();
      double sum2 = 0.0;
      for (int e = 0; e < mesh.n_edges(); ++e) {
        const int a = mesh.edges[e][0], b = mesh.edges[e][1];
        if (pinned[a] && pinned[b]) continue;
        const Vec3 d = res.positions[a] - res.positions[b];
        const double dist = d.norm();
        if (dist < 1e-300) continue;
        const Vec3 n = d / dist;
        const double r = dist - lengths[e];
        sum2 += r * r;
        const Eigen::Matrix3d block = n * n.transpose();
        if (!pinned[a]) {
          const int ia = 3 * index[a];
          for (int u = 0; u < 3; ++u) {
            for (int w = 0; w < 3; ++w) trip.emplace_back(ia + u, ia + w, block(u, w));
            jtr[ia + u] += n[u] * r;
          }
        }
        if (!pinned[b]) {
          const int ib = 3 * index[b];
          for (int u = 0; u < 3; ++u) {
            for (int w = 0; w < 3; ++w) trip.emplace_back(ib + u, ib + w, block(u, w));
            jtr[ib + u] -= n[u] * r;
          }
        }
        if (!pinned[a] && !pinned[b]) {
          const int ia = 3 * index[a], ib = 3 * index[b];
          for (int u = 0; u < 3; ++u)
            for (int w = 0; w < 3; ++w) {
              trip.emplace_back(ia + u, ib + w, -block(u, w));
              trip.emplace_back(ib + u, ia + w, -block(u, w));
            }
        }
      }
      for (int k = 0; k < n3; ++k) trip.emplace_back(k, k, mu);
      jtj.setFromTriplets(trip.begin(), trip.end());

      const Eigen::VectorXd delta = solve_system(jtj, -jtr);
      std::vector<Vec3> trial = res.positions;
      for (int v = 0; v < nv; ++v)
        if (!pinned[v]) trial[v] += delta.segment<3>(3 * index[v]);
      const double rms = rms_length_error(mesh, lengths, trial);
      if (rms < prev_rms) {
        res.positions = std::move(trial);
        const bool stalled = prev_rms - rms < 1e-7 * prev_rms;
        prev_rms = rms;
        mu = std::max(mu * 0.3, 1e-12);
        if (rms < opt.rms_tolerance * mean_len || stalled) break;
      } else {
        mu *= 10.0;
        if (mu > 1e6) break;
      }
    }

    res.flipped = count_flips(mesh, res.positions);
    if (res.flipped == 0 || round == opt.untangle_rounds) break;

    // Untangle: pull the free vertices of flipped tets toward their
    // one-ring average, then refine again.
    std::vector<Vec3> acc(nv, Vec3::Zero());
    std::vector<int> deg(nv, 0);
    for (int e = 0; e < mesh.n_edges(); ++e) {
      const int a = mesh.edges[e][0], b = mesh.edges[e][1];
      acc[a] += res.positions[b];
      acc[b] += res.positions[a];
      ++deg[a];
      ++deg[b];
    }
    std::vector<std::uint8_t> move(nv, 0);
    for (const auto& t : mesh.tets) {
      if (signed_tet_volume(res.positions[t[0]], res.positions[t[1]], res.positions[t[2]],
                            res.positions[t[3]]) <= 0.0)
        for (int k = 0; k < 4; ++k)
          if (!pinned[t[k]]) move[t[k]] = 1;
    }
    for (int v = 0; v < nv; ++v)
      if (move[v] && deg[v] > 0)
        res.positions[v] = 0.5 * res.positions[v] + 0.5 * (acc[v] / deg[v]);
    prev_rms = rms_length_error(mesh, lengths, res.positions);
  }

  res.rms = rms_length_error(mesh, lengths, res.positions);
  res.flipped = count_flips(mesh, res.positions);
  if (opt.require_flip_free && res.flipped > 0)
    throw ConvergenceError("embedding stagnated with " + std::to_string(res.flipped) +
                               " flipped tets (rms " + std::to_string(res.rms) + ")",
                           res.rms);
  return res;
}

} // namespace ballmap
