#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

#include "scenegen/align.hpp"
#include "scenegen/corpus.hpp"
#include "scenegen/nn.hpp"
#include "scenegen/rng.hpp"
#include "scenegen/scene.hpp"
#include "scenegen/topview.hpp"
#include "scenegen/trainer.hpp"

namespace testsupport {

using namespace scenegen;

inline constexpr double kPi = 3.14159265358979323846;

// Small category config: names c0.., given multiplicities, descriptor dim d.
ConfigPtr small_config(const std::vector<int>& multiplicities, int d);

// Random valid scene: each slot present with probability p_exist, centers in
// [-extent, extent]^2, unit fronts, sizes in [0.3, 1.5].
SceneMatrix random_scene(const ConfigPtr& cfg, Rng& rng, double p_exist = 0.6, double extent = 3.0);
RigidMotion random_motion(Rng& rng, double t_std = 2.0);
PermutationSet random_permutation(const CategoryConfig& cfg, Rng& rng);
std::vector<int> random_perm(int m, Rng& rng);

// Exhaustive minimum over all permutations of sum_i cost(i, p[i]).
double brute_force_assignment(const Eigen::MatrixXd& cost);

// Procrustes objective of T on (target, source, weights), as stated: center
// and front residuals over weighted columns.
double procrustes_objective(const SceneMatrix& target, const SceneMatrix& source, const std::vector<double>& w,
                            const RigidMotion& t);
// Best objective over an equally spaced grid of rotations, each with the
// closed-form translation for that rotation.
double procrustes_grid_minimum(const SceneMatrix& target, const SceneMatrix& source, const std::vector<double>& w,
                               int grid);

// Relative error used by all gradient checks.
double relative_error(double a, double b, double floor = 1e-8);

// Central finite-difference gradient of f at x.
Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                 double h);

// Outcome of comparing analytic derivatives with five-point differences at
// steps h and h/2; entries where the two differences disagree straddle a
// kink and are skipped.
struct GradientCheck {
  int checked = 0;
  int skipped = 0;
  double max_error = 0.0;
  void merge(const GradientCheck& o);
};
GradientCheck check_derivative(const std::function<double(double)>& f, double x0, double analytic, double h,
                               double floor);

// Every parameter of the network and the input, for L = w . net(x).
GradientCheck network_gradient_check(const nn::Network& net, const Eigen::VectorXd& x, const Eigen::VectorXd& w,
                                     double h = 1e-4);

// Projection gradient check at one random configuration. Returns false when
// the configuration is near a TSDF kink (caller should resample); otherwise
// writes the max relative error over all object parameters.
bool projection_gradient_check(Rng& rng, double& max_error, double h = 1e-4);

// Synthetic synchronization problem on a random graph with k random
// neighbors per node. Ground truth has node 0 at the identity.
struct SyncProblem {
  SceneGraph graph;
  std::vector<AlignmentEdge> edges;
  std::vector<double> theta;
  std::vector<Eigen::Vector3d> t;
  std::vector<std::vector<int>> sigma;  // one category
  int m = 4;
};
SyncProblem make_sync_problem(int n, int k, int m, Rng& rng);
// Replaces the motion (and/or permutation) of a random fraction of edges.
void corrupt_motions(SyncProblem& p, double fraction, Rng& rng);
void corrupt_permutations(SyncProblem& p, double fraction, Rng& rng);

// Small deterministic training setup used by trainer / synthesis tests.
CorpusSpec tiny_spec(int n, std::uint64_t seed);
std::vector<SceneMatrix> tiny_corpus(int n, std::uint64_t seed);
TrainConfig tiny_train_config();

std::string temp_dir(const std::string& name);

}  // namespace testsupport
