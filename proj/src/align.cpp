#include "scenegen/align.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "scenegen/assignment.hpp"
#include "scenegen/log.hpp"
#include "scenegen/parallel.hpp"
#include "scenegen/rng.hpp"

namespace scenegen {
namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

bool edges_connect(int n, const std::vector<std::pair<int, int>>& edges, const std::vector<bool>* keep) {
  DisjointSets sets(n);
  int components = n;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (keep && !(*keep)[e]) continue;
    if (sets.unite(edges[e].first, edges[e].second)) --components;
  }
  return components <= 1;
}

// Weighted least squares on a graph with node 0 pinned to zero:
// min sum_e w_e |x_i - x_j - b_e|^2 for every column of b.
Eigen::MatrixXd solve_graph_least_squares(int n, const std::vector<std::pair<int, int>>& edges,
                                          const std::vector<double>& w, const Eigen::MatrixXd& b,
                                          double tolerance) {
  const Eigen::Index cols = b.cols();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, cols);
  if (n <= 1) return x;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n - 1, cols);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (w[e] == 0.0) continue;
    const int i = edges[e].first, j = edges[e].second;
    if (i > 0) {
      trip.emplace_back(i - 1, i - 1, w[e]);
      rhs.row(i - 1) += w[e] * b.row(e);
    }
    if (j > 0) {
      trip.emplace_back(j - 1, j - 1, w[e]);
      rhs.row(j - 1) -= w[e] * b.row(e);
    }
    if (i > 0 && j > 0) {
      trip.emplace_back(i - 1, j - 1, -w[e]);
      trip.emplace_back(j - 1, i - 1, -w[e]);
    }
  }
  Eigen::SparseMatrix<double> lap(n - 1, n - 1);
  lap.setFromTriplets(trip.begin(), trip.end());
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(tolerance);
  cg.setMaxIterations(std::max<Eigen::Index>(1000, 20 * n));
  cg.compute(lap);
  for (Eigen::Index c = 0; c < cols; ++c) {
    x.col(c).tail(n - 1) = cg.solve(rhs.col(c));
  }
  return x;
}

Eigen::Matrix3d rotation3(double theta) {
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  r.topLeftCorner<2, 2>() = rotation2d(theta);
  return r;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  return m;
}

std::vector<std::pair<int, int>> edge_pairs(const std::vector<AlignmentEdge>& edges) {
  std::vector<std::pair<int, int>> p;
  p.reserve(edges.size());
  for (const auto& e : edges) p.emplace_back(e.i, e.j);
  return p;
}

void check_edges(const SceneGraph& graph, const std::vector<AlignmentEdge>& edges, const char* where) {
  for (const auto& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= graph.num_nodes || e.j >= graph.num_nodes || e.i == e.j) {
      throw InvalidInputError(std::string(where) + ": edge references an invalid node");
    }
  }
  if (!edges_connect(graph.num_nodes, edge_pairs(edges), nullptr)) {
    throw InvalidInputError(std::string(where) + ": graph is disconnected");
  }
}

Eigen::Vector3d present_centroid(const SceneMatrix& m) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  int n = 0;
  for (int j = 0; j < m.num_objects(); ++j) {
    if (!m.exists(j)) continue;
    c += m.values().block<3, 1>(kCenterRow, j);
    ++n;
  }
  return n > 0 ? Eigen::Vector3d(c / n) : c;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::vector<int>> SceneGraph::adjacency() const {
  std::vector<std::vector<int>> adj(num_nodes);
  for (const auto& [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  return adj;
}

bool SceneGraph::connected() const { return edges_connect(num_nodes, edges, nullptr); }

Eigen::VectorXd category_counts(const SceneMatrix& m) {
  const auto& cfg = m.config();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(cfg.num_categories());
  for (int j = 0; j < m.num_objects(); ++j) {
    if (m.exists(j)) c(cfg.category_of(j)) += 1.0;
  }
  return c;
}

SceneGraph knn_graph(const std::vector<SceneMatrix>& scenes, int k) {
  const int n = static_cast<int>(scenes.size());
  if (n < 2) throw InvalidInputError("knn_graph: need at least two scenes");
  if (k < 1) throw ConfigError("knn_graph: k must be >= 1");
  k = std::min(k, n - 1);
  SceneGraph g;
  g.num_nodes = n;
  for (const auto& s : scenes) g.counts.push_back(category_counts(s));

  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) dist(i, j) = (g.counts[i] - g.counts[j]).squaredNorm();
  }
  std::vector<std::pair<int, int>> edges;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    order.erase(order.begin() + i);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      return dist(i, a) < dist(i, b) || (dist(i, a) == dist(i, b) && a < b);
    });
    for (int r = 0; r < k; ++r) edges.emplace_back(std::min(i, order[r]), std::max(i, order[r]));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  DisjointSets sets(n);
  int components = n;
  for (const auto& [i, j] : edges) {
    if (sets.unite(i, j)) --components;
  }
  while (components > 1) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (sets.find(i) == sets.find(j)) continue;
        if (dist(i, j) < best) {
          best = dist(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    sets.unite(bi, bj);
    --components;
    edges.emplace_back(bi, bj);
    ++g.bridging_edges;
  }
  std::sort(edges.begin(), edges.end());
  g.edges = std::move(edges);
  return g;
}

// ---------------------------------------------------------------------------

double column_residual(const Eigen::Ref<const Eigen::VectorXd>& target,
                       const Eigen::Ref<const Eigen::VectorXd>& moved) {
  const bool tp = target(kExistenceRow) >= kExistenceThreshold;
  const bool mp = moved(kExistenceRow) >= kExistenceThreshold;
  if (tp && mp) return (target - moved).squaredNorm();
  const double de = target(kExistenceRow) - moved(kExistenceRow);
  return de * de;
}

double robust_objective(const SceneMatrix& target, const SceneMatrix& source, const RigidMotion& t,
                        const PermutationSet& s, double epsilon) {
  const SceneMatrix moved = apply_transform(source, t, s);
  double total = 0.0;
  for (int k = 0; k < target.num_objects(); ++k) {
    total += std::sqrt(epsilon * epsilon + column_residual(target.values().col(k), moved.values().col(k)));
  }
  return total;
}

AlignmentEdge pairwise_align(const SceneMatrix& mi, const SceneMatrix& mj, const PairwiseOptions& options) {
  require_same_config(mi, mj, "pairwise_align");
  const auto& cfg = mi.config();
  const int n = mi.num_objects();
  const double eps = options.epsilon;
  const Eigen::Vector3d ci = present_centroid(mi), cj = present_centroid(mj);
  const int restarts = std::max(1, options.restarts);

  AlignmentEdge best;
  best.residual = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    RigidMotion t;
    t.theta = wrap_angle(2.0 * std::numbers::pi * r / restarts);
    t.t = cj - rotation3(t.theta) * ci;
    PermutationSet s = PermutationSet::identity(cfg);
    std::vector<double> w(n, 1.0);

    for (int round = 0; round < options.reweight_rounds; ++round) {
      for (int alt = 0; alt < options.alternations; ++alt) {
        const SceneMatrix moved = apply_motion(mi, t);
        std::vector<std::vector<int>> sigma(cfg.num_categories());
        for (int k = 0; k < cfg.num_categories(); ++k) {
          const int base = cfg.block_begin(k), m = cfg.block_size(k);
          Eigen::MatrixXd cost(m, m);
          for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
              cost(a, b) = w[base + a] * column_residual(mj.values().col(base + a), moved.values().col(base + b));
            }
          }
          sigma[k] = solve_assignment(cost).permutation;
        }
        s = PermutationSet(std::move(sigma));

        const SceneMatrix src = apply_permutation(mi, s);
        std::vector<double> pw(n);
        for (int k = 0; k < n; ++k) pw[k] = (mj.exists(k) && src.exists(k)) ? w[k] : 0.0;
        try {
          t = solve_procrustes(mj, src, pw);
        } catch (const DegenerateInputError&) {
          // Nothing matched; the motion stays at its current value.
        }
      }
      const SceneMatrix moved = apply_transform(mi, t, s);
      for (int k = 0; k < n; ++k) {
        const double rho = column_residual(mj.values().col(k), moved.values().col(k));
        w[k] = eps / std::sqrt(eps * eps + rho);
      }
    }
    const double obj = robust_objective(mj, mi, t, s, eps);
    if (obj < best.residual) {
      best.residual = obj;
      best.motion = t;
      best.permutation = s;
    }
  }
  best.motion.theta = wrap_angle(best.motion.theta);
  return best;
}

// ---------------------------------------------------------------------------

std::vector<double> rotation_sync(const SceneGraph& graph, const std::vector<AlignmentEdge>& edges,
                                  const RotationSyncOptions& options) {
  check_edges(graph, edges, "rotation_sync");
  const int n = graph.num_nodes;
  using C = std::complex<double>;

  // Spectral initialization: top eigenvector of the degree-normalized
  // connection matrix, by power iteration on (I + W) / 2.
  std::vector<double> deg(n, 1.0);
  for (const auto& e : edges) {
    deg[e.i] += 1.0;
    deg[e.j] += 1.0;
  }
  Rng rng(0x5eed);
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = C(1.0 + rng.uniform(0.0, 0.1), rng.uniform(-0.1, 0.1));
  v.normalize();
  for (int it = 0; it < options.power_iterations; ++it) {
    Eigen::VectorXcd wv(n);
    for (int i = 0; i < n; ++i) wv(i) = v(i) / deg[i];  // diagonal (identity) block
    for (const auto& e : edges) {
      const C h = std::polar(1.0, e.motion.theta);
      const double s = 1.0 / std::sqrt(deg[e.i] * deg[e.j]);
      wv(e.i) += s * h * v(e.j);
      wv(e.j) += s * std::conj(h) * v(e.i);
    }
    Eigen::VectorXcd next = 0.5 * (v + wv);
    next.normalize();
    const double change = (next - v).norm();
    v = next;
    if (change < 1e-13) break;
  }
  std::vector<double> theta(n);
  for (int i = 0; i < n; ++i) theta[i] = std::arg(v(i));
  const double g0 = theta[0];
  for (auto& t : theta) t = wrap_angle(t - g0);

  // Consensus pass: every node takes the neighbor prediction theta_j +
  // theta_ij that agrees with the most other predictions.
  {
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (const auto& e : edges) {
      adj[e.i].emplace_back(e.j, e.motion.theta);
      adj[e.j].emplace_back(e.i, -e.motion.theta);
    }
    for (int pass = 0; pass < options.consensus_passes; ++pass) {
      for (int i = 0; i < n; ++i) {
        std::vector<double> pred;
        for (const auto& [j, tij] : adj[i]) pred.push_back(wrap_angle(theta[j] + tij));
        int best_votes = -1;
        double best = theta[i];
        for (double c : pred) {
          int votes = 0;
          double sx = 0.0, sy = 0.0;
          for (double p : pred) {
            const double d = wrap_angle(p - c);
            if (std::abs(d) <= options.huber_delta) {
              ++votes;
              sx += std::cos(d);
              sy += std::sin(d);
            }
          }
          if (votes > best_votes) {
            best_votes = votes;
            best = wrap_angle(c + std::atan2(sy, sx));
          }
        }
        theta[i] = best;
      }
    }
    const double g = theta[0];
    for (auto& t : theta) t = wrap_angle(t - g);
  }

  // IRLS refinement: Huber weights, then optionally the truncated
  // (inlier-only) weights at the same threshold.
  const auto pairs = edge_pairs(edges);
  double dh = options.huber_delta;
  std::vector<double> w(edges.size());
  Eigen::MatrixXd b(edges.size(), 1);
  auto refine = [&](bool truncated) {
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
      std::vector<bool> keep(edges.size());
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const double r = wrap_angle(edges[e].motion.theta - theta[edges[e].i] + theta[edges[e].j]);
        b(e, 0) = r;
        keep[e] = std::abs(r) <= dh;
        w[e] = keep[e] ? 1.0 : (truncated ? 0.0 : dh / std::abs(r));
      }
      if (truncated && !edges_connect(n, pairs, &keep)) {
        log_warning("rotation_sync: inlier edges do not connect the graph; keeping the Huber solution");
        return;
      }
      const Eigen::MatrixXd delta = solve_graph_least_squares(n, pairs, w, b, 1e-14);
      double max_step = 0.0;
      for (int i = 0; i < n; ++i) {
        theta[i] = wrap_angle(theta[i] + delta(i, 0));
        max_step = std::max(max_step, std::abs(delta(i, 0)));
      }
      if (max_step < options.tolerance) return;
    }
  };
  refine(false);
  if (options.truncate) {
    for (double t = dh; ; t = std::max(0.5 * t, options.truncate_floor)) {
      dh = t;
      refine(true);
      if (t <= options.truncate_floor) break;
    }
  }
  return theta;
}

TranslationSyncResult translation_sync(const SceneGraph& graph, const std::vector<AlignmentEdge>& edges,
                                       const std::vector<double>& rotations,
                                       const TranslationSyncOptions& options) {
  check_edges(graph, edges, "translation_sync");
  const int n = graph.num_nodes;
  if (static_cast<int>(rotations.size()) != n) throw InvalidInputError("translation_sync: rotation count mismatch");
  const auto pairs = edge_pairs(edges);
  const std::size_t ne = edges.size();
  Eigen::MatrixXd b(ne, 3);
  for (std::size_t e = 0; e < ne; ++e) {
    b.row(e) = (rotation3(rotations[edges[e].j]) * edges[e].motion.t).transpose();
  }
  auto residuals = [&](const Eigen::MatrixXd& x) {
    std::vector<double> r(ne);
    for (std::size_t e = 0; e < ne; ++e) r[e] = (x.row(pairs[e].first) - x.row(pairs[e].second) - b.row(e)).norm();
    return r;
  };

  std::vector<double> w(ne, 1.0);
  Eigen::MatrixXd x = solve_graph_least_squares(n, pairs, w, b, options.cg_tolerance);
  std::vector<double> r = residuals(x);
  double tau = 4.0 * median(r);
  TranslationSyncResult out;
  for (int round = 0; round < options.rounds; ++round) {
    tau = std::max(tau, options.floor);
    std::vector<bool> keep(ne);
    for (std::size_t e = 0; e < ne; ++e) keep[e] = r[e] <= tau;
    if (!edges_connect(n, pairs, &keep)) {
      log_warning("translation_sync: truncation disconnects the graph; keeping the previous solution");
      out.fell_back = true;
      break;
    }
    for (std::size_t e = 0; e < ne; ++e) w[e] = keep[e] ? 1.0 : 0.0;
    x = solve_graph_least_squares(n, pairs, w, b, options.cg_tolerance);
    r = residuals(x);
    tau *= 0.5;
  }
  out.kept_edges = static_cast<int>(std::count(w.begin(), w.end(), 1.0));
  out.t.resize(n);
  for (int i = 0; i < n; ++i) out.t[i] = x.row(i).transpose();
  return out;
}

std::vector<std::vector<int>> permutation_sync(const SceneGraph& graph,
                                               const std::vector<AlignmentEdge>& edges, int category,
                                               int slots, const PermutationSyncOptions& options) {
  check_edges(graph, edges, "permutation_sync");
  const int n = graph.num_nodes, m = slots;
  if (m < 1) throw ConfigError("permutation_sync: slot count must be >= 1");
  std::vector<int> identity(m);
  std::iota(identity.begin(), identity.end(), 0);
  if (m == 1) return std::vector<std::vector<int>>(n, identity);

  std::vector<double> deg(n, 1.0);
  for (const auto& e : edges) {
    deg[e.i] += 1.0;
    deg[e.j] += 1.0;
  }
  // Normalized block matrix: identity diagonal blocks, P(sigma_ij) at (i, j)
  // with P(sigma)[sigma(x), x] = 1.
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i) {
    for (int x = 0; x < m; ++x) trip.emplace_back(i * m + x, i * m + x, 1.0 / deg[i]);
  }
  for (const auto& e : edges) {
    const auto& sigma = e.permutation[category];
    if (static_cast<int>(sigma.size()) != m) throw ConfigError("permutation_sync: slot count mismatch");
    const double s = 1.0 / std::sqrt(deg[e.i] * deg[e.j]);
    for (int x = 0; x < m; ++x) {
      trip.emplace_back(e.i * m + sigma[x], e.j * m + x, s);
      trip.emplace_back(e.j * m + x, e.i * m + sigma[x], s);
    }
  }
  Eigen::SparseMatrix<double> w(n * m, n * m);
  w.setFromTriplets(trip.begin(), trip.end());

  // Subspace iteration on (I + W) / 2 with an oversampled block and
  // Rayleigh-Ritz extraction of the leading m vectors.
  const int block = std::min(n * m, 2 * m + 2);
  Rng rng(0xb10c + static_cast<std::uint64_t>(category));
  Eigen::MatrixXd q(n * m, block);
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    for (int c = 0; c < block; ++c) q(r, c) = rng.normal();
  }
  auto orthonormalize = [&](const Eigen::MatrixXd& y) -> Eigen::MatrixXd {
    return Eigen::HouseholderQR<Eigen::MatrixXd>(y).householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
  };
  q = orthonormalize(q);
  Eigen::MatrixXd u;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd wq = w * q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(q.transpose() * wq);
    // Eigenvalues ascend; the leading vectors are the last columns.
    const Eigen::MatrixXd vecs = ritz.eigenvectors().rowwise().reverse();
    const Eigen::VectorXd vals = ritz.eigenvalues().reverse();
    u = q * vecs.leftCols(m);
    residual = (wq * vecs.leftCols(m) - u * vals.head(m).asDiagonal()).norm();
    if (residual < options.tolerance) break;
    q = orthonormalize(0.5 * (q + wq));
  }
  if (!(residual < options.tolerance)) {
    throw ConvergenceError("permutation_sync: eigenvector iteration did not converge (residual " +
                           std::to_string(residual) + ", category " + std::to_string(category) + ")");
  }

  std::vector<std::vector<int>> sigma(n);
  sigma[0] = identity;
  const Eigen::MatrixXd u0 = u.middleRows(0, m);
  for (int i = 1; i < n; ++i) {
    const Eigen::MatrixXd g = u.middleRows(static_cast<Eigen::Index>(i) * m, m) * u0.transpose();
    sigma[i] = solve_assignment(-g.transpose()).permutation;
  }
  return sigma;
}

// ---------------------------------------------------------------------------

AlignmentResult align_corpus(const std::vector<SceneMatrix>& scenes, const AlignOptions& options) {
  const int n = static_cast<int>(scenes.size());
  if (n < 2) throw InvalidInputError("align_corpus: need at least two scenes");
  for (const auto& s : scenes) require_same_config(scenes.front(), s, "align_corpus");
  const auto& cfg = scenes.front().config();

  AlignmentResult res;
  res.graph = knn_graph(scenes, options.k > 0 ? options.k : default_k(n));
  res.edges.resize(res.graph.edges.size());
  parallel_for(res.edges.size(), [&](std::size_t e) {
    const auto [i, j] = res.graph.edges[e];
    AlignmentEdge edge = pairwise_align(scenes[i], scenes[j], options.pairwise);
    edge.i = i;
    edge.j = j;
    res.edges[e] = std::move(edge);
  });

  const std::vector<double> theta = rotation_sync(res.graph, res.edges, options.rotation);
  const TranslationSyncResult trans = translation_sync(res.graph, res.edges, theta, options.translation);
  res.translation_edges_kept = trans.kept_edges;
  res.translation_fell_back = trans.fell_back;

  std::vector<std::vector<std::vector<int>>> per_scene(n, std::vector<std::vector<int>>(cfg.num_categories()));
  for (int k = 0; k < cfg.num_categories(); ++k) {
    const auto sigma = permutation_sync(res.graph, res.edges, k, cfg.block_size(k), options.permutation);
    for (int i = 0; i < n; ++i) per_scene[i][k] = sigma[i];
  }

  res.poses.motions.resize(n);
  res.poses.permutations.resize(n);
  res.aligned.resize(n);
  for (int i = 0; i < n; ++i) {
    res.poses.motions[i] = RigidMotion{theta[i], trans.t[i]};
    res.poses.permutations[i] = PermutationSet(std::move(per_scene[i]));
    res.aligned[i] = canonicalize(apply_transform(scenes[i], res.poses.motions[i], res.poses.permutations[i]));
  }
  return res;
}

Json alignment_report(const AlignmentResult& result) {
  Json edges = Json::array();
  std::vector<double> rot_res, trans_res;
  const int nc = result.poses.permutations.empty() ? 0 : result.poses.permutations[0].num_categories();
  std::vector<int> perm_agree(nc, 0);
  for (const auto& e : result.edges) {
    edges.push_back({{"i", e.i}, {"j", e.j}, {"residual", e.residual}, {"motion", motion_to_json(e.motion)}});
    const RigidMotion& ti = result.poses.motions[e.i];
    const RigidMotion& tj = result.poses.motions[e.j];
    rot_res.push_back(std::abs(wrap_angle(e.motion.theta - ti.theta + tj.theta)));
    trans_res.push_back((rotation3(-tj.theta) * (ti.t - tj.t) - e.motion.t).norm());
    const PermutationSet expected =
        compose(result.poses.permutations[e.j].inverse(), result.poses.permutations[e.i]);
    for (int k = 0; k < nc; ++k) {
      if (expected[k] == e.permutation[k]) ++perm_agree[k];
    }
  }
  const double ne = std::max<std::size_t>(result.edges.size(), 1);
  Json agree = Json::array();
  for (int a : perm_agree) agree.push_back(a / ne);
  Json poses = Json::array();
  for (std::size_t i = 0; i < result.poses.motions.size(); ++i) {
    poses.push_back({{"motion", motion_to_json(result.poses.motions[i])},
                     {"permutation", permutation_to_json(result.poses.permutations[i])}});
  }
  return Json{{"num_scenes", result.graph.num_nodes},
              {"num_edges", result.edges.size()},
              {"bridging_edges", result.graph.bridging_edges},
              {"rotation", {{"median_residual", median(rot_res)},
                            {"max_residual", rot_res.empty() ? 0.0 : *std::max_element(rot_res.begin(), rot_res.end())}}},
              {"translation", {{"median_residual", median(trans_res)},
                               {"edges_kept", result.translation_edges_kept},
                               {"fell_back", result.translation_fell_back}}},
              {"permutation_edge_agreement", agree},
              {"poses", poses},
              {"edges", edges}};
}

}  // namespace scenegen
