#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scenegen/scene.hpp"
#include "scenegen/scene_io.hpp"
#include "scenegen/topview.hpp"
#include "scenegen/trainer.hpp"

namespace scenegen {

// canonicalize(G(z))
SceneMatrix synth(const TrainState& s, const Eigen::VectorXd& z);

// n scenes from z ~ N(0, I); code i is drawn from Rng(seed, i).
std::vector<SceneMatrix> synth_batch(const TrainState& s, int n, std::uint64_t seed,
                                     std::vector<Eigen::VectorXd>* codes = nullptr);

struct Interpolation {
  std::vector<Eigen::VectorXd> codes;
  std::vector<SceneMatrix> scenes;
};

// Straight line between the encoder means of a and b, steps >= 2 points.
Interpolation interpolate(const TrainState& s, const SceneMatrix& a, const SceneMatrix& b, int steps);

// Per-entry 0/1 matrix with the shape of the partial scene; 1 = constrained.
using CompletionMask = Eigen::MatrixXd;

// Throws ConfigError on a shape mismatch, non-binary entries or a
// constrained column whose existence entry is free.
void validate_mask(const SceneMatrix& partial, const CompletionMask& mask);
CompletionMask full_mask(const CategoryConfig& config);
// Every entry of the listed columns.
CompletionMask column_mask(const CategoryConfig& config, const std::vector<int>& columns);

struct CompletionOptions {
  double alpha = 1e-3;
  int restarts = 8;
  int iters = 500;      // gradient steps on z per restart
  int rounds = 10;      // (S, T) updates per restart, spread over the iterations
  double step = 0.05;   // initial gradient step, adapted per restart
  std::uint64_t seed = 1;
};

struct CompletionResult {
  SceneMatrix scene;  // canonicalize(G(z))
  Eigen::VectorXd z;
  RigidMotion motion;
  PermutationSet permutation;
  double data_term = 0.0;           // |S(C) o ((T o S)(M_in) - G(z))|^2
  double objective = 0.0;           // data_term + alpha |z|^2
  double best_initial_objective = 0.0;  // objective at the best starting point
  int restart = -1;                 // winning restart, -1 for an empty mask
};

// Masked data term for fixed (z, T, S); the mask travels with the partial
// scene's columns.
double completion_data_term(const TrainState& s, const SceneMatrix& partial, const CompletionMask& mask,
                            const Eigen::VectorXd& z, const RigidMotion& t, const PermutationSet& p);

CompletionResult complete(const TrainState& s, const SceneMatrix& partial, const CompletionMask& mask,
                          const CompletionOptions& options = {});

// argmin_i |mu_E(m) - mu_E(corpus_i)|, ties to the lowest index.
int nearest_training(const TrainState& s, const SceneMatrix& m, const std::vector<SceneMatrix>& corpus);

struct Heatmap {
  Eigen::MatrixXd mass;  // grid x grid, row 0 at the largest y
  int samples = 0;       // 0 means no instances (mass all zero)
};

// xy centers of existing objects of the category over the window, points
// outside clamped to the border cells; normalized to sum 1.
Heatmap absolute_heatmap(const std::vector<SceneMatrix>& scenes, int category, const ViewWindow& window,
                         int grid);

struct PairStatsSpec {
  int anchor = 0;
  int second = 0;
  int grid = 16;
  double half_extent = 2.0;  // relative window [-e, e]^2 in the anchor frame

  void validate(const CategoryConfig& config) const;  // throws ConfigError
};

// Bins of the relative orientation, each pi/2 wide and centered on a
// multiple of pi/2: same, left (+pi/2), opposite, right (-pi/2).
inline constexpr int kAngleBins = 4;
int angle_bin(double relative_angle);

struct PairStats {
  Heatmap relative;
  Eigen::Vector4d angles = Eigen::Vector4d::Zero();
  int pairs = 0;
};

// Closest anchor/second pair per scene; the second center is expressed in
// the frame at the anchor's front-edge midpoint with +y along its front.
PairStats pair_stats(const std::vector<SceneMatrix>& scenes, const PairStatsSpec& spec);

// Position of p in the pair frame of column j (x to the right, y forward).
Eigen::Vector2d pair_frame_coordinates(const SceneMatrix& m, int j, const Eigen::Vector2d& p);

// 0.5 * sum |h1 - h2|
double distribution_distance(const Eigen::MatrixXd& h1, const Eigen::MatrixXd& h2);

Json heatmap_to_json(const Heatmap& h);

}  // namespace scenegen
