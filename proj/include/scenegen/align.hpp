#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "scenegen/scene.hpp"
#include "scenegen/scene_io.hpp"

namespace scenegen {

struct SceneGraph {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;  // i < j, sorted
  std::vector<Eigen::VectorXd> counts;     // existing objects per category
  int bridging_edges = 0;                  // added to connect components

  std::vector<std::vector<int>> adjacency() const;
  bool connected() const;
};

// Existing-object count per category.
Eigen::VectorXd category_counts(const SceneMatrix& m);

// Symmetrized k-nearest-neighbor graph on category-count vectors (ties go to
// the lower index), made connected by minimum-distance bridging edges.
SceneGraph knn_graph(const std::vector<SceneMatrix>& scenes, int k);

inline int default_k(int n) { return std::min(64, n - 1); }

// Pairwise estimate: motion and permutation mapping scene i into scene j's
// frame, i.e. M_j ~ (T_ij o S_ij)(M_i).
struct AlignmentEdge {
  int i = 0;
  int j = 0;
  RigidMotion motion;
  PermutationSet permutation;
  double residual = 0.0;
};

struct PairwiseOptions {
  int restarts = 8;
  int reweight_rounds = 4;
  int alternations = 4;
  double epsilon = 1e-3;
};

// Squared column residual used by the robust matching objective: the full
// column difference when both slots are present, otherwise only the
// existence difference.
double column_residual(const Eigen::Ref<const Eigen::VectorXd>& target,
                       const Eigen::Ref<const Eigen::VectorXd>& moved);

// sum_k sqrt(eps^2 + rho_k) for target vs (T o S)(source).
double robust_objective(const SceneMatrix& target, const SceneMatrix& source, const RigidMotion& t,
                        const PermutationSet& s, double epsilon);

// Reweighted alternating matching of mi onto mj from several initial rotations.
AlignmentEdge pairwise_align(const SceneMatrix& mi, const SceneMatrix& mj,
                             const PairwiseOptions& options = {});

struct RotationSyncOptions {
  double huber_delta = 10.0 * 3.14159265358979323846 / 180.0;
  int max_sweeps = 50;
  double tolerance = 1e-8;
  int power_iterations = 2000;
  // Neighbor-voting passes between the spectral start and the sweeps.
  int consensus_passes = 2;
  // After the Huber sweeps, re-solve on inlier edges only, halving the
  // inlier threshold from huber_delta down to truncate_floor.
  bool truncate = true;
  double truncate_floor = 1.0 * 3.14159265358979323846 / 180.0;
};

// Angles theta_i with theta_ij ~ theta_i - theta_j, theta_0 = 0.
std::vector<double> rotation_sync(const SceneGraph& graph, const std::vector<AlignmentEdge>& edges,
                                  const RotationSyncOptions& options = {});

struct TranslationSyncOptions {
  int rounds = 10;
  double floor = 0.05;
  double cg_tolerance = 1e-15;
};

struct TranslationSyncResult {
  std::vector<Eigen::Vector3d> t;
  int kept_edges = 0;
  bool fell_back = false;
};

// Translations with R(-theta_j)(t_i - t_j) ~ t_ij (and tz_i - tz_j ~ tz_ij),
// refined by truncated least squares; t_0 = 0.
TranslationSyncResult translation_sync(const SceneGraph& graph, const std::vector<AlignmentEdge>& edges,
                                       const std::vector<double>& rotations,
                                       const TranslationSyncOptions& options = {});

struct PermutationSyncOptions {
  double tolerance = 1e-8;
  int max_iterations = 1000;
};

// Slot maps sigma_i of one category with pairwise maps sigma_ij ~
// sigma_i o sigma_j^-1 (index composition); sigma_0 = identity.
std::vector<std::vector<int>> permutation_sync(const SceneGraph& graph,
                                               const std::vector<AlignmentEdge>& edges, int category,
                                               int slots, const PermutationSyncOptions& options = {});

struct GlobalPoses {
  std::vector<RigidMotion> motions;
  std::vector<PermutationSet> permutations;
};

struct AlignOptions {
  int k = 0;  // 0 means default_k(N)
  PairwiseOptions pairwise;
  RotationSyncOptions rotation;
  TranslationSyncOptions translation;
  PermutationSyncOptions permutation;
};

struct AlignmentResult {
  std::vector<SceneMatrix> aligned;  // canonicalize((T_i o S_i)(M_i))
  GlobalPoses poses;
  SceneGraph graph;
  std::vector<AlignmentEdge> edges;
  int translation_edges_kept = 0;
  bool translation_fell_back = false;
};

AlignmentResult align_corpus(const std::vector<SceneMatrix>& scenes, const AlignOptions& options = {});

// Per-edge residuals and per-stage consistency statistics.
Json alignment_report(const AlignmentResult& result);

}  // namespace scenegen
