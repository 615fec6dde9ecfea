#include "scenegen/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "scenegen/assignment.hpp"
#include "scenegen/log.hpp"
#include "scenegen/parallel.hpp"

namespace scenegen {
namespace {

constexpr double kMonotoneTolerance = 1e-10;

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw Error("training diverged: non-finite " + what);
}

void require_finite(const nn::Gradients& g, const std::string& what) {
  for (const auto& lg : g) {
    for (double v : lg.weights) require_finite(v, what);
    for (double v : lg.bias) require_finite(v, what);
  }
}

std::vector<int> shuffled_order(int n, Rng& rng) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
  return order;
}

Eigen::VectorXd normal_vector(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

Eigen::VectorXd unit(double v) { return Eigen::VectorXd::Constant(1, v); }

void record(TrainState& s, int inner, const std::string& phase, const std::string& term, double value) {
  s.history.push_back({s.outer_done, inner, phase, term, value});
}

int current_inner(const TrainState& s) {
  return std::max(0, s.generator_phases - 1 - s.outer_done * s.config.t_inner);
}

// d/dx of c * D_I(P(x)) for the scene x, plus the critic value.
double image_critic_term(const TrainState& s, const SceneMatrix& scene, double c, Eigen::VectorXd* grad) {
  const TopView view = project(scene, s.window, s.config.projection);
  nn::Tape tape;
  const double value = s.image_critic.forward(image_vector(view), grad ? &tape : nullptr)(0);
  if (grad) {
    const Eigen::VectorXd dimg = s.image_critic.backward(tape, unit(c), nullptr);
    const int r = s.window.resolution;
    Eigen::MatrixXd upstream(r, r);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < r; ++j) upstream(i, j) = dimg(i * r + j);
    }
    const Eigen::MatrixXd g = project_backward(scene, s.window, s.config.projection, upstream).to_scene_gradient(scene);
    *grad += Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
  }
  return value;
}

Json window_json(const ViewWindow& w) {
  return Json{{"center", {w.center.x(), w.center.y()}}, {"half_extent", w.half_extent}, {"resolution", w.resolution}};
}

ViewWindow window_from(const Json& j) {
  ViewWindow w;
  const auto c = j.at("center").get<std::vector<double>>();
  if (c.size() != 2) throw ParseError("window.center: expected two numbers");
  w.center = Eigen::Vector2d(c[0], c[1]);
  w.half_extent = j.at("half_extent").get<double>();
  w.resolution = j.value("resolution", w.resolution);
  return w;
}

}  // namespace

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string("train config: ") + name + " must be positive");
  };
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0)) throw ConfigError(std::string("train config: ") + name + " must be >= 0");
  };
  non_negative(lambda, "lambda");
  non_negative(mu, "mu");
  non_negative(gamma, "gamma");
  non_negative(kl_weight, "kl_weight");
  if (t_inner < 1 || t_outer < 0 || gen_epochs < 0 || disc_epochs < 0 || latent_iters < 0) {
    throw ConfigError("train config: loop counts must be non-negative (t_inner >= 1)");
  }
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  positive(lr_generator, "lr_generator");
  positive(lr_latent, "lr_latent");
  positive(lr_critic, "lr_critic");
  positive(clip, "clip");
  positive(projection.delta, "projection.delta");
  positive(arch.width_scale, "arch.width_scale");
  if (arch.z_dim < 1 || arch.sc_connections < 1) throw ConfigError("train config: z_dim and sc_connections must be >= 1");
  if (image_resolution < 16 || image_resolution % 16 != 0) {
    throw ConfigError("train config: image_resolution must be a positive multiple of 16");
  }
  if (image_channels < 1) throw ConfigError("train config: image_channels must be >= 1");
  if (window) window->validate();
}

Json train_config_to_json(const TrainConfig& c) {
  Json j{{"lambda", c.lambda},
         {"mu", c.mu},
         {"gamma", c.gamma},
         {"kl_weight", c.kl_weight},
         {"t_inner", c.t_inner},
         {"t_outer", c.t_outer},
         {"gen_epochs", c.gen_epochs},
         {"disc_epochs", c.disc_epochs},
         {"latent_iters", c.latent_iters},
         {"latent_tolerance", c.latent_tolerance},
         {"batch_size", c.batch_size},
         {"lr_generator", c.lr_generator},
         {"lr_latent", c.lr_latent},
         {"lr_critic", c.lr_critic},
         {"clip", c.clip},
         {"seed", c.seed},
         {"z_dim", c.arch.z_dim},
         {"width_scale", c.arch.width_scale},
         {"sc_connections", c.arch.sc_connections},
         {"leaky_slope", c.arch.leaky_slope},
         {"image_resolution", c.image_resolution},
         {"image_channels", c.image_channels},
         {"delta", c.projection.delta},
         {"fill_interior", c.projection.fill_interior},
         {"normalize_class_constants", c.projection.normalize_class_constants}};
  j["window"] = c.window ? window_json(*c.window) : Json();
  return j;
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  if (!j.is_object()) throw ParseError("train config: expected an object");
  static const std::set<std::string> known = {
      "lambda",     "mu",          "gamma",        "kl_weight",      "t_inner",          "t_outer",
      "gen_epochs", "disc_epochs", "latent_iters", "latent_tolerance", "batch_size",     "lr_generator",
      "lr_latent",  "lr_critic",   "clip",         "seed",           "z_dim",            "width_scale",
      "sc_connections", "leaky_slope", "image_resolution", "image_channels", "delta", "fill_interior",
      "normalize_class_constants", "window"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ParseError("train config: unknown key '" + key + "'");
  }
  try {
    c.lambda = j.value("lambda", c.lambda);
    c.mu = j.value("mu", c.mu);
    c.gamma = j.value("gamma", c.gamma);
    c.kl_weight = j.value("kl_weight", c.kl_weight);
    c.t_inner = j.value("t_inner", c.t_inner);
    c.t_outer = j.value("t_outer", c.t_outer);
    c.gen_epochs = j.value("gen_epochs", c.gen_epochs);
    c.disc_epochs = j.value("disc_epochs", c.disc_epochs);
    c.latent_iters = j.value("latent_iters", c.latent_iters);
    c.latent_tolerance = j.value("latent_tolerance", c.latent_tolerance);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr_generator = j.value("lr_generator", c.lr_generator);
    c.lr_latent = j.value("lr_latent", c.lr_latent);
    c.lr_critic = j.value("lr_critic", c.lr_critic);
    c.clip = j.value("clip", c.clip);
    c.seed = j.value("seed", c.seed);
    c.arch.z_dim = j.value("z_dim", c.arch.z_dim);
    c.arch.width_scale = j.value("width_scale", c.arch.width_scale);
    c.arch.sc_connections = j.value("sc_connections", c.arch.sc_connections);
    c.arch.leaky_slope = j.value("leaky_slope", c.arch.leaky_slope);
    c.image_resolution = j.value("image_resolution", c.image_resolution);
    c.image_channels = j.value("image_channels", c.image_channels);
    c.projection.delta = j.value("delta", c.projection.delta);
    c.projection.fill_interior = j.value("fill_interior", c.projection.fill_interior);
    c.projection.normalize_class_constants =
        j.value("normalize_class_constants", c.projection.normalize_class_constants);
    if (j.contains("window")) {
      if (j["window"].is_null()) {
        c.window.reset();
      } else {
        c.window = window_from(j["window"]);
      }
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("train config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ParseError(e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------

bool TrainState::operator==(const TrainState& o) const {
  auto same_window = [](const ViewWindow& a, const ViewWindow& b) {
    return a.center == b.center && a.half_extent == b.half_extent && a.resolution == b.resolution;
  };
  return train_config_to_json(config) == train_config_to_json(o.config) && *categories == *o.categories &&
         same_window(window, o.window) && nets.encoder == o.nets.encoder && nets.decoder == o.nets.decoder &&
         nets.discriminator == o.nets.discriminator && nets.z_dim == o.nets.z_dim &&
         image_critic == o.image_critic && adam_encoder == o.adam_encoder && adam_decoder == o.adam_decoder &&
         adam_critic == o.adam_critic && adam_image_critic == o.adam_image_critic && inputs == o.inputs &&
         latent == o.latent && motions == o.motions && permutations == o.permutations &&
         outer_done == o.outer_done && generator_phases == o.generator_phases &&
         discriminator_phases == o.discriminator_phases && consistency_violations == o.consistency_violations &&
         rng == o.rng && history == o.history;
}

TrainState init_state(const std::vector<SceneMatrix>& aligned, const TrainConfig& config) {
  config.validate();
  if (aligned.empty()) throw InvalidInputError("init_state: empty corpus");
  for (const auto& m : aligned) require_same_config(aligned.front(), m, "init_state");

  TrainState s;
  s.config = config;
  s.categories = aligned.front().config_ptr();
  s.window = config.window ? *config.window : default_window(aligned, config.image_resolution);
  s.window.resolution = config.image_resolution;
  s.window.validate();

  s.rng = Rng(config.seed);
  s.nets = nn::build_arrangement_nets(*s.categories, config.arch, s.rng);
  s.image_critic = nn::build_image_discriminator(config.image_resolution, config.image_channels, s.rng,
                                                 config.arch.leaky_slope);
  const nn::AdamConfig gen{config.lr_generator};
  const nn::AdamConfig crit{config.lr_critic};
  s.adam_encoder = nn::AdamState::for_network(s.nets.encoder, gen);
  s.adam_decoder = nn::AdamState::for_network(s.nets.decoder, gen);
  s.adam_critic = nn::AdamState::for_network(s.nets.discriminator, crit);
  s.adam_image_critic = nn::AdamState::for_network(s.image_critic, crit);

  s.inputs = aligned;
  s.latent = aligned;
  s.motions.assign(aligned.size(), RigidMotion::identity());
  s.permutations.assign(aligned.size(), PermutationSet::identity(*s.categories));
  return s;
}

Eigen::VectorXd flatten(const SceneMatrix& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.values().data(), m.values().size());
}

SceneMatrix unflatten(const ConfigPtr& config, const Eigen::VectorXd& v) {
  const int rows = config->rows(), cols = config->num_objects();
  if (v.size() != static_cast<Eigen::Index>(rows) * cols) throw ConfigError("unflatten: size mismatch");
  return SceneMatrix(config, Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols));
}

Eigen::VectorXd encode_mean(const TrainState& s, const SceneMatrix& m) {
  return nn::split_code(s.nets.encoder.forward(flatten(m))).mu;
}

Eigen::VectorXd decode(const TrainState& s, const Eigen::VectorXd& z) { return s.nets.decoder.forward(z); }

Eigen::VectorXd image_vector(const TopView& view) {
  const int r = static_cast<int>(view.values.rows());
  Eigen::VectorXd v(static_cast<Eigen::Index>(r) * view.values.cols());
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < view.values.cols(); ++j) v(i * view.values.cols() + j) = view.values(i, j);
  }
  return v;
}

double consistency_term(const TrainState& s, int i) {
  return frobenius_sq(s.latent[i], apply_transform(s.inputs[i], s.motions[i], s.permutations[i]));
}

double total_consistency(const TrainState& s) {
  double t = 0.0;
  for (int i = 0; i < s.num_scenes(); ++i) t += consistency_term(s, i);
  return t;
}

double reconstruction_mse(const TrainState& s) {
  std::vector<double> per(s.num_scenes());
  parallel_for(per.size(), [&](std::size_t i) {
    const Eigen::VectorXd x = flatten(s.latent[i]);
    per[i] = (decode(s, encode_mean(s, s.latent[i])) - x).squaredNorm() / static_cast<double>(x.size());
  });
  double total = 0.0;
  for (double v : per) total += v;
  return total / std::max(1, s.num_scenes());
}

// ---------------------------------------------------------------------------

GeneratorLoss generator_loss(const TrainState& s, const GeneratorBatch& batch, nn::Gradients* d_encoder,
                             nn::Gradients* d_decoder) {
  const auto& c = s.config;
  const auto& enc = s.nets.encoder;
  const auto& dec = s.nets.decoder;
  GeneratorLoss loss;
  const bool grads = d_encoder && d_decoder;

  const double nb = static_cast<double>(std::max<std::size_t>(batch.scenes.size(), 1));
  for (std::size_t b = 0; b < batch.scenes.size(); ++b) {
    const Eigen::VectorXd x = flatten(s.latent[batch.scenes[b]]);
    nn::Tape te, td;
    const Eigen::VectorXd out = enc.forward(x, &te);
    const nn::GaussianCode code = nn::split_code(out);
    const Eigen::VectorXd& noise = batch.posterior_noise[b];
    const Eigen::VectorXd z = nn::reparameterize(code, noise);
    const Eigen::VectorXd y = dec.forward(z, &td);
    const Eigen::VectorXd r = y - x;
    const nn::KlTerm kl = nn::kl_gaussian(code);
    loss.reconstruction += r.squaredNorm() / nb;
    loss.kl += c.kl_weight * kl.value / nb;
    if (!grads) continue;
    const Eigen::VectorXd dz = dec.backward(td, (2.0 / nb) * r, d_decoder);
    const Eigen::VectorXd dmu = dz + (c.kl_weight / nb) * kl.d_mu;
    const Eigen::VectorXd std_dev = (0.5 * code.logvar.array()).exp().matrix();
    const Eigen::VectorXd dlogvar =
        (dz.array() * 0.5 * std_dev.array() * noise.array()).matrix() + (c.kl_weight / nb) * kl.d_logvar;
    enc.backward(te, nn::join_code_gradient(out, dmu, dlogvar), d_encoder);
  }

  if (c.lambda == 0.0 && c.mu == 0.0) return loss;
  const double np = static_cast<double>(std::max<std::size_t>(batch.prior_codes.size(), 1));
  for (const auto& z : batch.prior_codes) {
    nn::Tape td, tc;
    const Eigen::VectorXd y = dec.forward(z, &td);
    Eigen::VectorXd dy = Eigen::VectorXd::Zero(y.size());
    if (c.lambda != 0.0) {
      const double v = s.nets.discriminator.forward(y, grads ? &tc : nullptr)(0);
      loss.adversarial -= c.lambda * v / np;
      if (grads) dy += s.nets.discriminator.backward(tc, unit(-c.lambda / np), nullptr);
    }
    if (c.mu != 0.0) {
      const SceneMatrix scene = unflatten(s.categories, y);
      const double v = image_critic_term(s, scene, -c.mu / np, grads ? &dy : nullptr);
      loss.adversarial -= c.mu * v / np;
    }
    if (grads) dec.backward(td, dy, d_decoder);
  }
  return loss;
}

void step_generator(TrainState& s) {
  const auto& c = s.config;
  const int n = s.num_scenes();
  const int z = s.nets.z_dim;
  GeneratorLoss epoch_loss;
  for (int epoch = 0; epoch < c.gen_epochs; ++epoch) {
    epoch_loss = {};
    int batches = 0;
    const std::vector<int> order = shuffled_order(n, s.rng);
    for (int start = 0; start < n; start += c.batch_size) {
      GeneratorBatch batch;
      for (int b = start; b < std::min(n, start + c.batch_size); ++b) {
        batch.scenes.push_back(order[b]);
        batch.posterior_noise.push_back(normal_vector(z, s.rng));
      }
      for (std::size_t b = 0; b < batch.scenes.size(); ++b) batch.prior_codes.push_back(normal_vector(z, s.rng));
      nn::Gradients ge = s.nets.encoder.zero_gradients();
      nn::Gradients gd = s.nets.decoder.zero_gradients();
      const GeneratorLoss l = generator_loss(s, batch, &ge, &gd);
      require_finite(l.total(), "generator loss");
      require_finite(ge, "encoder gradient");
      require_finite(gd, "decoder gradient");
      nn::adam_step(s.nets.encoder, s.adam_encoder, ge);
      nn::adam_step(s.nets.decoder, s.adam_decoder, gd);
      epoch_loss.reconstruction += l.reconstruction;
      epoch_loss.kl += l.kl;
      epoch_loss.adversarial += l.adversarial;
      ++batches;
    }
    if (batches > 0) {
      epoch_loss.reconstruction /= batches;
      epoch_loss.kl /= batches;
      epoch_loss.adversarial /= batches;
    }
  }
  ++s.generator_phases;
  const int inner = current_inner(s);
  record(s, inner, "generator", "reconstruction", epoch_loss.reconstruction);
  record(s, inner, "generator", "kl", epoch_loss.kl);
  record(s, inner, "generator", "adversarial", epoch_loss.adversarial);
}

double latent_objective(const TrainState& s, int i, const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
  const auto& c = s.config;
  const auto& enc = s.nets.encoder;
  const auto& dec = s.nets.decoder;
  nn::Tape te, td;
  const Eigen::VectorXd out = enc.forward(x, grad ? &te : nullptr);
  const nn::GaussianCode code = nn::split_code(out);
  const Eigen::VectorXd y = dec.forward(code.mu, grad ? &td : nullptr);
  const Eigen::VectorXd r = y - x;
  const Eigen::VectorXd target = flatten(apply_transform(s.inputs[i], s.motions[i], s.permutations[i]));
  const Eigen::VectorXd dt = x - target;
  double value = r.squaredNorm() + c.gamma * dt.squaredNorm();
  if (grad) {
    const Eigen::VectorXd dmu = dec.backward(td, 2.0 * r, nullptr);
    const Eigen::VectorXd dout =
        nn::join_code_gradient(out, dmu, Eigen::VectorXd::Zero(code.logvar.size()));
    *grad = enc.backward(te, dout, nullptr) - 2.0 * r + 2.0 * c.gamma * dt;
  }
  if (c.lambda != 0.0) {
    nn::Tape tc;
    value += c.lambda * s.nets.discriminator.forward(x, grad ? &tc : nullptr)(0);
    if (grad) *grad += s.nets.discriminator.backward(tc, unit(c.lambda), nullptr);
  }
  if (c.mu != 0.0) {
    value += c.mu * image_critic_term(s, unflatten(s.categories, x), c.mu, grad);
  }
  return value;
}

void step_latent(TrainState& s) {
  const auto& c = s.config;
  const int n = s.num_scenes();
  std::vector<double> final_obj(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    Eigen::VectorXd x = flatten(s.latent[i]);
    nn::VectorAdam adam(x.size(), nn::AdamConfig{c.lr_latent});
    Eigen::VectorXd g;
    for (int it = 0; it < c.latent_iters; ++it) {
      latent_objective(s, static_cast<int>(i), x, &g);
      if (adam.step(x, g) < c.latent_tolerance) break;
    }
    final_obj[i] = latent_objective(s, static_cast<int>(i), x, nullptr);
    s.latent[i] = unflatten(s.categories, x);
  });
  double mean = 0.0;
  for (double v : final_obj) {
    require_finite(v, "latent objective");
    mean += v / n;
  }
  record(s, current_inner(s), "latent", "objective", mean);
}

Eigen::MatrixXd permutation_cost_matrix(const TrainState& s, int i, int category) {
  const auto& cfg = *s.categories;
  const SceneMatrix back = apply_motion(s.latent[i], s.motions[i].inverse());
  const int base = cfg.block_begin(category), m = cfg.block_size(category);
  Eigen::MatrixXd cost(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      cost(a, b) = (back.values().col(base + a) - s.inputs[i].values().col(base + b)).squaredNorm();
    }
  }
  return cost;
}

void step_permutations(TrainState& s) {
  const int n = s.num_scenes();
  const auto& cfg = *s.categories;
  std::vector<int> violated(n, 0);
  std::vector<double> after(n);
  parallel_for(n, [&](std::size_t i) {
    const double before = consistency_term(s, static_cast<int>(i));
    std::vector<std::vector<int>> sigma(cfg.num_categories());
    for (int k = 0; k < cfg.num_categories(); ++k) {
      sigma[k] = solve_assignment(permutation_cost_matrix(s, static_cast<int>(i), k)).permutation;
    }
    PermutationSet next(std::move(sigma));
    const double value =
        frobenius_sq(s.latent[i], apply_transform(s.inputs[i], s.motions[i], next));
    if (value > before + kMonotoneTolerance * std::max(1.0, before)) {
      violated[i] = 1;
      after[i] = before;
    } else {
      s.permutations[i] = std::move(next);
      after[i] = value;
    }
  });
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    s.consistency_violations += violated[i];
    total += after[i];
  }
  record(s, current_inner(s), "permutations", "consistency", total);
}

void step_transforms(TrainState& s) {
  const int n = s.num_scenes();
  std::vector<int> violated(n, 0), degenerate(n, 0);
  std::vector<double> after(n);
  const std::vector<double> ones(s.categories->num_objects(), 1.0);
  parallel_for(n, [&](std::size_t i) {
    const double before = consistency_term(s, static_cast<int>(i));
    const SceneMatrix src = apply_permutation(s.inputs[i], s.permutations[i]);
    if (src.count_existing() == 0) {
      degenerate[i] = 1;
      after[i] = before;
      return;
    }
    const RigidMotion next = solve_procrustes(s.latent[i], src, ones);
    const double value = frobenius_sq(s.latent[i], apply_motion(src, next));
    if (value > before + kMonotoneTolerance * std::max(1.0, before)) {
      violated[i] = 1;
      after[i] = before;
    } else {
      s.motions[i] = next;
      after[i] = value;
    }
  });
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (degenerate[i]) log_warning("step_transforms: scene " + std::to_string(i) + " has no objects; motion kept");
    s.consistency_violations += violated[i];
    total += after[i];
  }
  const int inner = current_inner(s);
  record(s, inner, "transforms", "consistency", total);
  record(s, inner, "transforms", "reconstruction_mse", reconstruction_mse(s));
}

void step_discriminators(TrainState& s) {
  const auto& c = s.config;
  const int n = s.num_scenes();
  const int z = s.nets.z_dim;
  double gap = 0.0, image_gap = 0.0;
  for (int epoch = 0; epoch < c.disc_epochs; ++epoch) {
    gap = image_gap = 0.0;
    const std::vector<int> order = shuffled_order(n, s.rng);
    for (int start = 0; start < n; start += c.batch_size) {
      const int end = std::min(n, start + c.batch_size);
      const double nb = end - start;
      nn::Gradients gc = s.nets.discriminator.zero_gradients();
      nn::Gradients gi = s.image_critic.zero_gradients();
      for (int b = start; b < end; ++b) {
        const Eigen::VectorXd real = flatten(s.latent[order[b]]);
        const Eigen::VectorXd fake = decode(s, normal_vector(z, s.rng));
        // Maximize D(real) - D(fake): descend on the negation.
        nn::Tape t;
        const double dr = s.nets.discriminator.forward(real, &t)(0);
        s.nets.discriminator.backward(t, unit(-1.0 / nb), &gc);
        const double df = s.nets.discriminator.forward(fake, &t)(0);
        s.nets.discriminator.backward(t, unit(1.0 / nb), &gc);
        gap += (dr - df) / n;

        const Eigen::VectorXd ir = image_vector(project(s.latent[order[b]], s.window, c.projection));
        const Eigen::VectorXd ifk = image_vector(project(unflatten(s.categories, fake), s.window, c.projection));
        const double vr = s.image_critic.forward(ir, &t)(0);
        s.image_critic.backward(t, unit(-1.0 / nb), &gi);
        const double vf = s.image_critic.forward(ifk, &t)(0);
        s.image_critic.backward(t, unit(1.0 / nb), &gi);
        image_gap += (vr - vf) / n;
      }
      require_finite(gc, "critic gradient");
      require_finite(gi, "image critic gradient");
      nn::adam_step(s.nets.discriminator, s.adam_critic, gc);
      nn::lipschitz_control(s.nets.discriminator, c.clip);
      nn::adam_step(s.image_critic, s.adam_image_critic, gi);
      nn::lipschitz_control(s.image_critic, c.clip);
    }
  }
  require_finite(gap, "critic gap");
  require_finite(image_gap, "image critic gap");
  ++s.discriminator_phases;
  record(s, c.t_inner, "discriminators", "critic_gap", gap);
  record(s, c.t_inner, "discriminators", "image_critic_gap", image_gap);
}

void run_training(TrainState& s, const OuterCallback& after_outer) {
  const auto& c = s.config;
  while (s.outer_done < c.t_outer) {
    for (int inner = 0; inner < c.t_inner; ++inner) {
      step_generator(s);
      step_latent(s);
      step_permutations(s);
      step_transforms(s);
    }
    step_discriminators(s);
    ++s.outer_done;
    log_info("outer iteration " + std::to_string(s.outer_done) + "/" + std::to_string(c.t_outer) +
             " done, reconstruction mse " + std::to_string(s.history.empty() ? 0.0 : reconstruction_mse(s)));
    if (after_outer) after_outer(s);
  }
}

TrainState train(const std::vector<SceneMatrix>& aligned, const TrainConfig& config,
                 const OuterCallback& after_outer) {
  TrainState s = init_state(aligned, config);
  run_training(s, after_outer);
  return s;
}

std::string loss_trace_csv(const std::vector<LossRecord>& history) {
  std::ostringstream os;
  os << "outer,inner,phase,term,value\n" << std::setprecision(17);
  for (const auto& r : history) os << r.outer << ',' << r.inner << ',' << r.phase << ',' << r.term << ',' << r.value << '\n';
  return os.str();
}

}  // namespace scenegen
