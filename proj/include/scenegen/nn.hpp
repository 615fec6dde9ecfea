#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "scenegen/rng.hpp"
#include "scenegen/scene.hpp"

namespace scenegen::nn {

enum class LayerKind { FullyConnected, SparselyConnected, Conv2d, LeakyRelu };

// Shape and hyper-parameters of one layer. Conv2d tensors are flattened
// channel-major: index = (channel * height + y) * width + x.
struct LayerSpec {
  LayerKind kind = LayerKind::FullyConnected;
  int in_dim = 0;
  int out_dim = 0;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  int stride = 0;
  int in_height = 0;
  int in_width = 0;
  int out_height = 0;
  int out_width = 0;
  double leaky_slope = 0.2;

  bool operator==(const LayerSpec&) const = default;
};

struct Layer {
  LayerSpec spec;
  // FC: out x in, row-major. SC: one value per connection (CSR order).
  // Conv2d: [out_channel][in_channel][ky][kx].
  std::vector<double> weights;
  std::vector<double> bias;
  // SC connectivity in CSR form: inputs of output unit o are
  // conn_input[conn_offset[o] .. conn_offset[o + 1]).
  std::vector<int> conn_offset;
  std::vector<int> conn_input;

  bool parametric() const { return spec.kind != LayerKind::LeakyRelu; }
  bool operator==(const Layer&) const = default;
};

struct LayerGrad {
  std::vector<double> weights;
  std::vector<double> bias;
};
using Gradients = std::vector<LayerGrad>;

// Inputs seen by every layer during one forward pass.
struct Tape {
  std::vector<Eigen::VectorXd> inputs;
};

// Fixed connectivity of a sparsely connected layer: sorted input indices per
// output unit.
using ScMask = std::vector<std::vector<int>>;

// Each (out, in) pair is connected with probability h / in_dim; an output left
// without inputs gets one uniformly random input.
ScMask make_sc_mask(int in_dim, int out_dim, int h, Rng& rng);

Layer fully_connected(int in_dim, int out_dim);
Layer sparsely_connected(int in_dim, const ScMask& mask);
Layer conv2d(int in_channels, int out_channels, int kernel, int stride, int in_height, int in_width);
Layer leaky_relu(int dim, double slope = 0.2);

class Network {
 public:
  Network() = default;
  explicit Network(std::vector<Layer> layers);  // checks that dims chain

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  int input_dim() const { return layers_.front().spec.in_dim; }
  int output_dim() const { return layers_.back().spec.out_dim; }
  std::size_t num_parameters() const;

  Eigen::VectorXd forward(const Eigen::VectorXd& x, Tape* tape = nullptr) const;
  // Reverse pass for the forward call that filled `tape`. Returns dL/dx and,
  // when `grads` is given, adds the parameter gradients into it.
  Eigen::VectorXd backward(const Tape& tape, const Eigen::VectorXd& dy, Gradients* grads) const;

  Gradients zero_gradients() const;

  // SC layers expanded to dense out x in matrices (zeros where unconnected).
  Eigen::MatrixXd dense_weights(int layer) const;
  Eigen::MatrixXd connectivity(int layer) const;

  // He-style uniform init scaled by each unit's fan-in; biases zero.
  void init_he_uniform(Rng& rng);

  bool operator==(const Network&) const = default;

 private:
  std::vector<Layer> layers_;
};

void scale_gradients(Gradients& g, double s);
void add_gradients(Gradients& into, const Gradients& g);

// Stage widths of the arrangement networks at width_scale = 1, from the input
// side: SC, FC, SC, FC, SC, FC, then FC to the latent code.
inline constexpr int kStageWidths[6] = {2000, 200, 1600, 200, 400, 80};

struct ArrangementNets {
  Network encoder;        // outputs [mu; logvar], 2 * z_dim
  Network decoder;        // z_dim -> (d+9) * n_o
  Network discriminator;  // (d+9) * n_o -> 1
  int z_dim = 0;
};

struct ArchitectureOptions {
  int z_dim = 10;
  double width_scale = 1.0;
  int sc_connections = 4;  // h
  double leaky_slope = 0.2;
};

ArrangementNets build_arrangement_nets(const CategoryConfig& config, const ArchitectureOptions& arch,
                                       Rng& rng);

// Dimensions between consecutive linear stages of a network, input first.
std::vector<int> stage_dims(const Network& net);

// Four stride-2 conv blocks with doubling channels and leaky ReLU, then a
// fully connected layer to a scalar. Resolution must be a multiple of 16.
Network build_image_discriminator(int resolution, int channels_base, Rng& rng, double leaky_slope = 0.2);

// --- VAE pieces -------------------------------------------------------------

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

struct GaussianCode {
  Eigen::VectorXd mu;
  Eigen::VectorXd logvar;  // clamped to [kLogvarMin, kLogvarMax]
};

// Splits an encoder output [mu; logvar_raw] and clamps the log-variance.
GaussianCode split_code(const Eigen::VectorXd& encoder_output);
// Gradient with respect to the raw encoder output; clamped entries get zero.
Eigen::VectorXd join_code_gradient(const Eigen::VectorXd& encoder_output, const Eigen::VectorXd& d_mu,
                                   const Eigen::VectorXd& d_logvar);

struct KlTerm {
  double value = 0.0;
  Eigen::VectorXd d_mu;
  Eigen::VectorXd d_logvar;
};

// KL(N(mu, exp(logvar)) || N(0, I)) with analytic gradients.
KlTerm kl_gaussian(const GaussianCode& code);

// z = mu + exp(logvar / 2) * noise
Eigen::VectorXd reparameterize(const GaussianCode& code, const Eigen::VectorXd& noise);

// --- Optimization -----------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
  AdamConfig config;
  Gradients m;
  Gradients v;
  std::int64_t step = 0;

  static AdamState for_network(const Network& net, const AdamConfig& config);
  bool operator==(const AdamState& o) const;
};

// One bias-corrected Adam update of every parameter.
void adam_step(Network& net, AdamState& state, const Gradients& grads);

// Adam on a flat parameter vector (latent scenes, latent codes).
class VectorAdam {
 public:
  VectorAdam(Eigen::Index size, const AdamConfig& config);
  // Updates params in place; returns the norm of the applied step.
  double step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad);

 private:
  AdamConfig config_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  std::int64_t t_ = 0;
};

// Clamps every parameter of the network into [-c, c].
void lipschitz_control(Network& net, double c);

double max_abs_parameter(const Network& net);

}  // namespace scenegen::nn
