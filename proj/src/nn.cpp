#include "scenegen/nn.hpp"

#include <cmath>
#include <string>

namespace scenegen::nn {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

int scaled_width(int base, double scale) {
  return std::max(1, static_cast<int>(std::lround(base * scale)));
}

void append_stage(std::vector<Layer>& layers, Layer layer, bool activation, double slope) {
  const int out = layer.spec.out_dim;
  layers.push_back(std::move(layer));
  if (activation) layers.push_back(leaky_relu(out, slope));
}

Layer linear_stage(bool sparse, int in_dim, int out_dim, int h, Rng& rng) {
  if (sparse) return sparsely_connected(in_dim, make_sc_mask(in_dim, out_dim, h, rng));
  return fully_connected(in_dim, out_dim);
}

}  // namespace

ScMask make_sc_mask(int in_dim, int out_dim, int h, Rng& rng) {
  if (h < 1 || in_dim < 1 || out_dim < 1) throw ConfigError("make_sc_mask: dimensions and h must be >= 1");
  const double p = static_cast<double>(h) / in_dim;
  ScMask mask(out_dim);
  for (int o = 0; o < out_dim; ++o) {
    for (int i = 0; i < in_dim; ++i) {
      if (rng.uniform() < p) mask[o].push_back(i);
    }
    if (mask[o].empty()) mask[o].push_back(rng.uniform_int(0, in_dim - 1));
  }
  return mask;
}

Layer fully_connected(int in_dim, int out_dim) {
  Layer l;
  l.spec.kind = LayerKind::FullyConnected;
  l.spec.in_dim = in_dim;
  l.spec.out_dim = out_dim;
  l.weights.assign(static_cast<std::size_t>(in_dim) * out_dim, 0.0);
  l.bias.assign(out_dim, 0.0);
  return l;
}

Layer sparsely_connected(int in_dim, const ScMask& mask) {
  Layer l;
  l.spec.kind = LayerKind::SparselyConnected;
  l.spec.in_dim = in_dim;
  l.spec.out_dim = static_cast<int>(mask.size());
  l.conn_offset.push_back(0);
  for (const auto& inputs : mask) {
    if (inputs.empty()) throw ConfigError("sparsely connected layer: output unit without inputs");
    for (int i : inputs) {
      if (i < 0 || i >= in_dim) throw ConfigError("sparsely connected layer: input index out of range");
      l.conn_input.push_back(i);
    }
    l.conn_offset.push_back(static_cast<int>(l.conn_input.size()));
  }
  l.weights.assign(l.conn_input.size(), 0.0);
  l.bias.assign(mask.size(), 0.0);
  return l;
}

Layer conv2d(int in_channels, int out_channels, int kernel, int stride, int in_height, int in_width) {
  if (kernel < 1 || stride < 1 || in_height < kernel || in_width < kernel) {
    throw ConfigError("conv2d: invalid geometry");
  }
  Layer l;
  auto& s = l.spec;
  s.kind = LayerKind::Conv2d;
  s.in_channels = in_channels;
  s.out_channels = out_channels;
  s.kernel = kernel;
  s.stride = stride;
  s.in_height = in_height;
  s.in_width = in_width;
  s.out_height = (in_height - kernel) / stride + 1;
  s.out_width = (in_width - kernel) / stride + 1;
  s.in_dim = in_channels * in_height * in_width;
  s.out_dim = out_channels * s.out_height * s.out_width;
  l.weights.assign(static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel, 0.0);
  l.bias.assign(out_channels, 0.0);
  return l;
}

Layer leaky_relu(int dim, double slope) {
  Layer l;
  l.spec.kind = LayerKind::LeakyRelu;
  l.spec.in_dim = dim;
  l.spec.out_dim = dim;
  l.spec.leaky_slope = slope;
  return l;
}

// ---------------------------------------------------------------------------

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("network: no layers");
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (layers_[i - 1].spec.out_dim != layers_[i].spec.in_dim) {
      throw ConfigError("network: layer " + std::to_string(i) + " input does not match previous output");
    }
  }
}

std::size_t Network::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

Eigen::VectorXd Network::forward(const Eigen::VectorXd& x, Tape* tape) const {
  if (x.size() != input_dim()) throw ConfigError("network forward: input size mismatch");
  if (tape) tape->inputs.clear();
  Eigen::VectorXd cur = x;
  for (const auto& l : layers_) {
    const auto& s = l.spec;
    Eigen::VectorXd next;
    switch (s.kind) {
      case LayerKind::FullyConnected: {
        Eigen::Map<const RowMajor> w(l.weights.data(), s.out_dim, s.in_dim);
        next = w * cur + Eigen::Map<const Eigen::VectorXd>(l.bias.data(), s.out_dim);
        break;
      }
      case LayerKind::SparselyConnected: {
        next.resize(s.out_dim);
        for (int o = 0; o < s.out_dim; ++o) {
          double acc = l.bias[o];
          for (int k = l.conn_offset[o]; k < l.conn_offset[o + 1]; ++k) acc += l.weights[k] * cur(l.conn_input[k]);
          next(o) = acc;
        }
        break;
      }
      case LayerKind::Conv2d: {
        next.resize(s.out_dim);
        const int kk = s.kernel * s.kernel;
        for (int oc = 0; oc < s.out_channels; ++oc) {
          for (int oy = 0; oy < s.out_height; ++oy) {
            for (int ox = 0; ox < s.out_width; ++ox) {
              double acc = l.bias[oc];
              for (int ic = 0; ic < s.in_channels; ++ic) {
                const double* w = &l.weights[(static_cast<std::size_t>(oc) * s.in_channels + ic) * kk];
                for (int ky = 0; ky < s.kernel; ++ky) {
                  const int row = (ic * s.in_height + oy * s.stride + ky) * s.in_width + ox * s.stride;
                  for (int kx = 0; kx < s.kernel; ++kx) acc += w[ky * s.kernel + kx] * cur(row + kx);
                }
              }
              next((oc * s.out_height + oy) * s.out_width + ox) = acc;
            }
          }
        }
        break;
      }
      case LayerKind::LeakyRelu: {
        const double a = s.leaky_slope;
        next = cur.unaryExpr([a](double v) { return v > 0.0 ? v : a * v; });
        break;
      }
    }
    if (tape) tape->inputs.push_back(std::move(cur));
    cur = std::move(next);
  }
  return cur;
}

Eigen::VectorXd Network::backward(const Tape& tape, const Eigen::VectorXd& dy, Gradients* grads) const {
  if (tape.inputs.size() != layers_.size()) throw ConfigError("network backward: tape does not match network");
  if (dy.size() != output_dim()) throw ConfigError("network backward: gradient size mismatch");
  Eigen::VectorXd g = dy;
  for (int li = static_cast<int>(layers_.size()) - 1; li >= 0; --li) {
    const auto& l = layers_[li];
    const auto& s = l.spec;
    const Eigen::VectorXd& x = tape.inputs[li];
    Eigen::VectorXd dx;
    switch (s.kind) {
      case LayerKind::FullyConnected: {
        Eigen::Map<const RowMajor> w(l.weights.data(), s.out_dim, s.in_dim);
        dx = w.transpose() * g;
        if (grads) {
          auto& lg = (*grads)[li];
          Eigen::Map<RowMajor> dw(lg.weights.data(), s.out_dim, s.in_dim);
          dw.noalias() += g * x.transpose();
          Eigen::Map<Eigen::VectorXd>(lg.bias.data(), s.out_dim) += g;
        }
        break;
      }
      case LayerKind::SparselyConnected: {
        dx = Eigen::VectorXd::Zero(s.in_dim);
        for (int o = 0; o < s.out_dim; ++o) {
          const double go = g(o);
          for (int k = l.conn_offset[o]; k < l.conn_offset[o + 1]; ++k) dx(l.conn_input[k]) += l.weights[k] * go;
        }
        if (grads) {
          auto& lg = (*grads)[li];
          for (int o = 0; o < s.out_dim; ++o) {
            const double go = g(o);
            lg.bias[o] += go;
            for (int k = l.conn_offset[o]; k < l.conn_offset[o + 1]; ++k) lg.weights[k] += go * x(l.conn_input[k]);
          }
        }
        break;
      }
      case LayerKind::Conv2d: {
        dx = Eigen::VectorXd::Zero(s.in_dim);
        const int kk = s.kernel * s.kernel;
        LayerGrad* lg = grads ? &(*grads)[li] : nullptr;
        for (int oc = 0; oc < s.out_channels; ++oc) {
          for (int oy = 0; oy < s.out_height; ++oy) {
            for (int ox = 0; ox < s.out_width; ++ox) {
              const double go = g((oc * s.out_height + oy) * s.out_width + ox);
              if (go == 0.0) continue;
              if (lg) lg->bias[oc] += go;
              for (int ic = 0; ic < s.in_channels; ++ic) {
                const std::size_t wbase = (static_cast<std::size_t>(oc) * s.in_channels + ic) * kk;
                for (int ky = 0; ky < s.kernel; ++ky) {
                  const int row = (ic * s.in_height + oy * s.stride + ky) * s.in_width + ox * s.stride;
                  for (int kx = 0; kx < s.kernel; ++kx) {
                    dx(row + kx) += l.weights[wbase + ky * s.kernel + kx] * go;
                    if (lg) lg->weights[wbase + ky * s.kernel + kx] += go * x(row + kx);
                  }
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::LeakyRelu: {
        const double a = s.leaky_slope;
        dx = g.cwiseProduct(x.unaryExpr([a](double v) { return v > 0.0 ? 1.0 : a; }));
        break;
      }
    }
    g = std::move(dx);
  }
  return g;
}

Gradients Network::zero_gradients() const {
  Gradients g(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    g[i].weights.assign(layers_[i].weights.size(), 0.0);
    g[i].bias.assign(layers_[i].bias.size(), 0.0);
  }
  return g;
}

Eigen::MatrixXd Network::dense_weights(int layer) const {
  const auto& l = layers_.at(layer);
  const auto& s = l.spec;
  if (s.kind == LayerKind::FullyConnected) {
    return Eigen::Map<const RowMajor>(l.weights.data(), s.out_dim, s.in_dim);
  }
  if (s.kind != LayerKind::SparselyConnected) throw ConfigError("dense_weights: not a linear layer");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(s.out_dim, s.in_dim);
  for (int o = 0; o < s.out_dim; ++o) {
    for (int k = l.conn_offset[o]; k < l.conn_offset[o + 1]; ++k) w(o, l.conn_input[k]) = l.weights[k];
  }
  return w;
}

Eigen::MatrixXd Network::connectivity(int layer) const {
  const auto& l = layers_.at(layer);
  const auto& s = l.spec;
  if (s.kind == LayerKind::FullyConnected) return Eigen::MatrixXd::Ones(s.out_dim, s.in_dim);
  if (s.kind != LayerKind::SparselyConnected) throw ConfigError("connectivity: not a linear layer");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(s.out_dim, s.in_dim);
  for (int o = 0; o < s.out_dim; ++o) {
    for (int k = l.conn_offset[o]; k < l.conn_offset[o + 1]; ++k) c(o, l.conn_input[k]) = 1.0;
  }
  return c;
}

void Network::init_he_uniform(Rng& rng) {
  // Gain for leaky ReLU with the network's default slope.
  const double slope = 0.2;
  const double gain = std::sqrt(2.0 / (1.0 + slope * slope));
  for (auto& l : layers_) {
    const auto& s = l.spec;
    switch (s.kind) {
      case LayerKind::FullyConnected: {
        const double bound = gain * std::sqrt(3.0 / s.in_dim);
        for (auto& w : l.weights) w = rng.uniform(-bound, bound);
        break;
      }
      case LayerKind::SparselyConnected: {
        for (int o = 0; o < s.out_dim; ++o) {
          const int fan_in = l.conn_offset[o + 1] - l.conn_offset[o];
          const double bound = gain * std::sqrt(3.0 / fan_in);
          for (int k = l.conn_offset[o]; k < l.conn_offset[o + 1]; ++k) l.weights[k] = rng.uniform(-bound, bound);
        }
        break;
      }
      case LayerKind::Conv2d: {
        const double bound = gain * std::sqrt(3.0 / (s.in_channels * s.kernel * s.kernel));
        for (auto& w : l.weights) w = rng.uniform(-bound, bound);
        break;
      }
      case LayerKind::LeakyRelu:
        break;
    }
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

void scale_gradients(Gradients& g, double s) {
  for (auto& lg : g) {
    for (auto& v : lg.weights) v *= s;
    for (auto& v : lg.bias) v *= s;
  }
}

void add_gradients(Gradients& into, const Gradients& g) {
  for (std::size_t i = 0; i < into.size(); ++i) {
    for (std::size_t k = 0; k < into[i].weights.size(); ++k) into[i].weights[k] += g[i].weights[k];
    for (std::size_t k = 0; k < into[i].bias.size(); ++k) into[i].bias[k] += g[i].bias[k];
  }
}

// ---------------------------------------------------------------------------

ArrangementNets build_arrangement_nets(const CategoryConfig& config, const ArchitectureOptions& arch,
                                       Rng& rng) {
  if (arch.z_dim < 1) throw ConfigError("build_arrangement_nets: z_dim must be >= 1");
  const int input = config.rows() * config.num_objects();
  int w[6];
  for (int i = 0; i < 6; ++i) w[i] = scaled_width(kStageWidths[i], arch.width_scale);
  const int h = arch.sc_connections;
  const double a = arch.leaky_slope;

  auto trunk = [&](std::vector<Layer>& layers) {
    append_stage(layers, linear_stage(true, input, w[0], h, rng), true, a);
    append_stage(layers, linear_stage(false, w[0], w[1], h, rng), true, a);
    append_stage(layers, linear_stage(true, w[1], w[2], h, rng), true, a);
    append_stage(layers, linear_stage(false, w[2], w[3], h, rng), true, a);
    append_stage(layers, linear_stage(true, w[3], w[4], h, rng), true, a);
    append_stage(layers, linear_stage(false, w[4], w[5], h, rng), true, a);
  };

  ArrangementNets nets;
  nets.z_dim = arch.z_dim;
  {
    std::vector<Layer> layers;
    trunk(layers);
    append_stage(layers, fully_connected(w[5], 2 * arch.z_dim), false, a);
    nets.encoder = Network(std::move(layers));
  }
  {
    std::vector<Layer> layers;
    append_stage(layers, linear_stage(false, arch.z_dim, w[5], h, rng), true, a);
    append_stage(layers, linear_stage(false, w[5], w[4], h, rng), true, a);
    append_stage(layers, linear_stage(true, w[4], w[3], h, rng), true, a);
    append_stage(layers, linear_stage(false, w[3], w[2], h, rng), true, a);
    append_stage(layers, linear_stage(true, w[2], w[1], h, rng), true, a);
    append_stage(layers, linear_stage(false, w[1], w[0], h, rng), true, a);
    append_stage(layers, linear_stage(true, w[0], input, h, rng), false, a);
    nets.decoder = Network(std::move(layers));
  }
  {
    std::vector<Layer> layers;
    trunk(layers);
    append_stage(layers, fully_connected(w[5], 1), false, a);
    nets.discriminator = Network(std::move(layers));
  }
  nets.encoder.init_he_uniform(rng);
  nets.decoder.init_he_uniform(rng);
  nets.discriminator.init_he_uniform(rng);
  return nets;
}

std::vector<int> stage_dims(const Network& net) {
  std::vector<int> dims;
  for (const auto& l : net.layers()) {
    if (l.spec.kind == LayerKind::LeakyRelu) continue;
    dims.push_back(l.spec.in_dim);
  }
  dims.push_back(net.output_dim());
  return dims;
}

Network build_image_discriminator(int resolution, int channels_base, Rng& rng, double leaky_slope) {
  if (resolution % 16 != 0 || resolution < 16) {
    throw ConfigError("image discriminator: resolution must be a positive multiple of 16");
  }
  if (channels_base < 1) throw ConfigError("image discriminator: channels_base must be >= 1");
  std::vector<Layer> layers;
  int channels = 1, size = resolution;
  for (int b = 0; b < 4; ++b) {
    const int out = channels_base << b;
    Layer c = conv2d(channels, out, 2, 2, size, size);
    const int dim = c.spec.out_dim;
    layers.push_back(std::move(c));
    layers.push_back(leaky_relu(dim, leaky_slope));
    channels = out;
    size /= 2;
  }
  layers.push_back(fully_connected(channels * size * size, 1));
  Network net(std::move(layers));
  net.init_he_uniform(rng);
  return net;
}

// ---------------------------------------------------------------------------

GaussianCode split_code(const Eigen::VectorXd& encoder_output) {
  const Eigen::Index z = encoder_output.size() / 2;
  GaussianCode c;
  c.mu = encoder_output.head(z);
  c.logvar = encoder_output.tail(z).cwiseMax(kLogvarMin).cwiseMin(kLogvarMax);
  return c;
}

Eigen::VectorXd join_code_gradient(const Eigen::VectorXd& encoder_output, const Eigen::VectorXd& d_mu,
                                   const Eigen::VectorXd& d_logvar) {
  const Eigen::Index z = encoder_output.size() / 2;
  Eigen::VectorXd g(2 * z);
  g.head(z) = d_mu;
  for (Eigen::Index i = 0; i < z; ++i) {
    const double raw = encoder_output(z + i);
    g(z + i) = (raw < kLogvarMin || raw > kLogvarMax) ? 0.0 : d_logvar(i);
  }
  return g;
}

KlTerm kl_gaussian(const GaussianCode& code) {
  KlTerm kl;
  const Eigen::ArrayXd var = code.logvar.array().exp();
  kl.value = 0.5 * (var + code.mu.array().square() - 1.0 - code.logvar.array()).sum();
  kl.d_mu = code.mu;
  kl.d_logvar = 0.5 * (var - 1.0).matrix();
  return kl;
}

Eigen::VectorXd reparameterize(const GaussianCode& code, const Eigen::VectorXd& noise) {
  return code.mu + (0.5 * code.logvar.array()).exp().matrix().cwiseProduct(noise);
}

// ---------------------------------------------------------------------------

AdamState AdamState::for_network(const Network& net, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  s.m = net.zero_gradients();
  s.v = net.zero_gradients();
  return s;
}

bool AdamState::operator==(const AdamState& o) const {
  auto eq = [](const Gradients& a, const Gradients& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].weights != b[i].weights || a[i].bias != b[i].bias) return false;
    }
    return true;
  };
  return config == o.config && step == o.step && eq(m, o.m) && eq(v, o.v);
}

void adam_step(Network& net, AdamState& state, const Gradients& grads) {
  auto& layers = net.layers();
  if (grads.size() != layers.size() || state.m.size() != layers.size()) {
    throw ConfigError("adam_step: gradient/state shape mismatch");
  }
  ++state.step;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  auto update = [&](std::vector<double>& p, std::vector<double>& m, std::vector<double>& v,
                    const std::vector<double>& g) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1, vhat = v[k] / bc2;
      p[k] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  };
  for (std::size_t i = 0; i < layers.size(); ++i) {
    update(layers[i].weights, state.m[i].weights, state.v[i].weights, grads[i].weights);
    update(layers[i].bias, state.m[i].bias, state.v[i].bias, grads[i].bias);
  }
}

VectorAdam::VectorAdam(Eigen::Index size, const AdamConfig& config)
    : config_(config), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

double VectorAdam::step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad) {
  ++t_;
  const auto& c = config_;
  m_ = c.beta1 * m_ + (1.0 - c.beta1) * grad;
  v_ = c.beta2 * v_ + (1.0 - c.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
  const Eigen::VectorXd delta =
      -c.lr * ((m_ / bc1).array() / ((v_ / bc2).array().sqrt() + c.eps)).matrix();
  params += delta;
  return delta.norm();
}

void lipschitz_control(Network& net, double c) {
  if (!(c > 0.0)) throw ConfigError("lipschitz_control: clip bound must be positive");
  for (auto& l : net.layers()) {
    for (auto& w : l.weights) w = std::clamp(w, -c, c);
    for (auto& b : l.bias) b = std::clamp(b, -c, c);
  }
}

double max_abs_parameter(const Network& net) {
  double m = 0.0;
  for (const auto& l : net.layers()) {
    for (double w : l.weights) m = std::max(m, std::abs(w));
    for (double b : l.bias) m = std::max(m, std::abs(b));
  }
  return m;
}

}  // namespace scenegen::nn
