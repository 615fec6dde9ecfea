#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scenegen/nn.hpp"
#include "scenegen/rng.hpp"
#include "scenegen/scene.hpp"
#include "scenegen/scene_io.hpp"
#include "scenegen/topview.hpp"

namespace scenegen {

struct TrainConfig {
  double lambda = 1.0;   // arrangement critic weight
  double mu = 1.0;       // image critic weight
  double gamma = 100.0;  // latent consistency weight
  double kl_weight = 1.0;
  int t_inner = 10;
  int t_outer = 10;
  int gen_epochs = 2;
  int disc_epochs = 10;
  int latent_iters = 12;
  double latent_tolerance = 1e-6;
  int batch_size = 32;
  double lr_generator = 1e-3;
  double lr_latent = 1e-3;
  double lr_critic = 5e-4;
  double clip = 0.01;
  std::uint64_t seed = 1;
  nn::ArchitectureOptions arch{10, 0.1, 4, 0.2};
  int image_resolution = 32;
  int image_channels = 4;
  ProjectionOptions projection;
  std::optional<ViewWindow> window;  // default: derived from the corpus

  void validate() const;  // throws ConfigError
};

Json train_config_to_json(const TrainConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});

struct LossRecord {
  int outer = 0;
  int inner = 0;
  std::string phase;
  std::string term;
  double value = 0.0;

  bool operator==(const LossRecord&) const = default;
};

struct TrainState {
  TrainConfig config;
  ConfigPtr categories;
  ViewWindow window;

  nn::ArrangementNets nets;
  nn::Network image_critic;
  nn::AdamState adam_encoder;
  nn::AdamState adam_decoder;
  nn::AdamState adam_critic;
  nn::AdamState adam_image_critic;

  std::vector<SceneMatrix> inputs;  // M_i
  std::vector<SceneMatrix> latent;  // latent scenes
  std::vector<RigidMotion> motions;
  std::vector<PermutationSet> permutations;

  int outer_done = 0;  // completed outer iterations
  int generator_phases = 0;
  int discriminator_phases = 0;
  // Steps where the exact sub-solver's answer would have raised the
  // consistency term (beyond rounding); such updates are rejected.
  int consistency_violations = 0;
  Rng rng;
  std::vector<LossRecord> history;

  int num_scenes() const { return static_cast<int>(inputs.size()); }
  bool operator==(const TrainState& o) const;
};

TrainState init_state(const std::vector<SceneMatrix>& aligned, const TrainConfig& config);

// |latent_i - (T_i o S_i)(M_i)|_F^2
double consistency_term(const TrainState& s, int i);
double total_consistency(const TrainState& s);
// Mean over scenes and entries of (G(mu_E(latent_i)) - latent_i)^2.
double reconstruction_mse(const TrainState& s);

// Deterministic encoding and decoding helpers.
Eigen::VectorXd flatten(const SceneMatrix& m);
SceneMatrix unflatten(const ConfigPtr& config, const Eigen::VectorXd& v);
Eigen::VectorXd encode_mean(const TrainState& s, const SceneMatrix& m);
Eigen::VectorXd decode(const TrainState& s, const Eigen::VectorXd& z);
// Top view flattened row-major (index i * r + j) as image-critic input.
Eigen::VectorXd image_vector(const TopView& view);

// Gradient of the full generator objective on one batch (exposed for
// gradient checks). The noise vectors fix the stochastic parts.
struct GeneratorBatch {
  std::vector<int> scenes;
  std::vector<Eigen::VectorXd> posterior_noise;  // one per scene
  std::vector<Eigen::VectorXd> prior_codes;      // z for the adversarial terms
};
struct GeneratorLoss {
  double reconstruction = 0.0;
  double kl = 0.0;
  double adversarial = 0.0;
  double total() const { return reconstruction + kl + adversarial; }
};
GeneratorLoss generator_loss(const TrainState& s, const GeneratorBatch& batch, nn::Gradients* d_encoder,
                             nn::Gradients* d_decoder);

// Latent-step objective for one scene and its gradient with respect to the
// scene entries (column-major, same layout as flatten()).
double latent_objective(const TrainState& s, int i, const Eigen::VectorXd& x, Eigen::VectorXd* grad);

// Slot assignment costs for one category: cost(a, b) =
// |(T_i^-1 latent)_slot a - (M_i)_slot b|^2.
Eigen::MatrixXd permutation_cost_matrix(const TrainState& s, int i, int category);

void step_generator(TrainState& s);
void step_latent(TrainState& s);
void step_permutations(TrainState& s);
void step_transforms(TrainState& s);
void step_discriminators(TrainState& s);

// Called after every completed outer iteration.
using OuterCallback = std::function<void(const TrainState&)>;

// Runs the remaining outer iterations of the schedule (resumes from
// s.outer_done).
void run_training(TrainState& s, const OuterCallback& after_outer = nullptr);

TrainState train(const std::vector<SceneMatrix>& aligned, const TrainConfig& config,
                 const OuterCallback& after_outer = nullptr);

std::string loss_trace_csv(const std::vector<LossRecord>& history);

}  // namespace scenegen
