#include "scenegen/synthesis.hpp"

#include <cmath>
#include <limits>

#include "scenegen/assignment.hpp"
#include "scenegen/log.hpp"
#include "scenegen/parallel.hpp"

namespace scenegen {
namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::VectorXd normal_code(int n, Rng& rng) {
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = rng.normal();
  return z;
}

Eigen::MatrixXd permute_columns(const CategoryConfig& cfg, const Eigen::MatrixXd& m, const PermutationSet& p) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int k = 0; k < cfg.num_categories(); ++k) {
    const int base = cfg.block_begin(k);
    for (int a = 0; a < cfg.block_size(k); ++a) out.col(base + a) = m.col(base + p[k][a]);
  }
  return out;
}

// Everything the completion loop needs for one (z, T, S).
struct CompletionEval {
  double data = 0.0;
  double objective = 0.0;
  Eigen::VectorXd grad;  // with respect to z, filled on request
};

class Completer {
 public:
  Completer(const TrainState& s, const SceneMatrix& partial, const CompletionMask& mask, double alpha)
      : s_(s), partial_(partial), mask_(mask), alpha_(alpha) {}

  CompletionEval eval(const Eigen::VectorXd& z, const RigidMotion& t, const PermutationSet& p, bool grad) const {
    const auto& cfg = partial_.config();
    const Eigen::MatrixXd x = apply_transform(partial_, t, p).values();
    const Eigen::MatrixXd c = permute_columns(cfg, mask_, p);
    nn::Tape tape;
    const Eigen::VectorXd g = s_.nets.decoder.forward(z, grad ? &tape : nullptr);
    const Eigen::Map<const Eigen::MatrixXd> gm(g.data(), cfg.rows(), cfg.num_objects());
    const Eigen::MatrixXd r = (c.array() * (x - gm).array()).matrix();
    CompletionEval e;
    e.data = r.squaredNorm();
    e.objective = e.data + alpha_ * z.squaredNorm();
    if (grad) {
      const Eigen::MatrixXd dg = -2.0 * (c.array() * r.array()).matrix();
      e.grad = s_.nets.decoder.backward(tape, Eigen::Map<const Eigen::VectorXd>(dg.data(), dg.size()), nullptr) +
               2.0 * alpha_ * z;
    }
    return e;
  }

  PermutationSet best_assignment(const Eigen::VectorXd& z, const RigidMotion& t) const {
    const auto& cfg = partial_.config();
    const SceneMatrix moved = apply_motion(partial_, t);
    const Eigen::VectorXd g = s_.nets.decoder.forward(z);
    const Eigen::Map<const Eigen::MatrixXd> gm(g.data(), cfg.rows(), cfg.num_objects());
    std::vector<std::vector<int>> sigma(cfg.num_categories());
    for (int k = 0; k < cfg.num_categories(); ++k) {
      const int base = cfg.block_begin(k), m = cfg.block_size(k);
      Eigen::MatrixXd cost(m, m);
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
          cost(a, b) = (mask_.col(base + b).array() *
                        (moved.values().col(base + b) - gm.col(base + a)).array().square())
                           .sum();
        }
      }
      sigma[k] = solve_assignment(cost).permutation;
    }
    return PermutationSet(std::move(sigma));
  }

  RigidMotion best_motion(const Eigen::VectorXd& z, const PermutationSet& p) const {
    const auto& cfg = partial_.config();
    const SceneMatrix target = unflatten(partial_.config_ptr(), s_.nets.decoder.forward(z));
    const SceneMatrix source = apply_permutation(partial_, p);
    const Eigen::MatrixXd c = permute_columns(cfg, mask_, p);
    std::vector<double> w(cfg.num_objects());
    for (int j = 0; j < cfg.num_objects(); ++j) w[j] = c(kExistenceRow, j);
    return solve_procrustes(target, source, w);
  }

  // Exact S then T updates, each kept only if the objective does not rise.
  void update_pose(const Eigen::VectorXd& z, RigidMotion& t, PermutationSet& p, double& objective) const {
    const PermutationSet p2 = best_assignment(z, t);
    const double o2 = eval(z, t, p2, false).objective;
    if (o2 <= objective) {
      p = p2;
      objective = o2;
    }
    const RigidMotion t2 = best_motion(z, p);
    const double o3 = eval(z, t2, p, false).objective;
    if (o3 <= objective) {
      t = t2;
      objective = o3;
    }
  }

 private:
  const TrainState& s_;
  const SceneMatrix& partial_;
  const CompletionMask& mask_;
  double alpha_;
};

struct RestartResult {
  Eigen::VectorXd z;
  RigidMotion motion;
  PermutationSet permutation;
  double data = 0.0;
  double objective = 0.0;
  double initial_objective = 0.0;
};

Eigen::Index cell_index(double v, double lo, double hi, int grid) {
  const double f = (v - lo) / (hi - lo) * grid;
  return std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(f)), 0, grid - 1);
}

// Row 0 holds the largest y, column 0 the smallest x.
void deposit(Eigen::MatrixXd& h, const Eigen::Vector2d& p, const Eigen::Vector2d& center, double e) {
  const int grid = static_cast<int>(h.rows());
  const Eigen::Index col = cell_index(p.x(), center.x() - e, center.x() + e, grid);
  const Eigen::Index row = grid - 1 - cell_index(p.y(), center.y() - e, center.y() + e, grid);
  h(row, col) += 1.0;
}

double heading(const Eigen::Vector2d& f) { return std::atan2(f.y(), f.x()); }

}  // namespace

SceneMatrix synth(const TrainState& s, const Eigen::VectorXd& z) {
  if (z.size() != s.nets.z_dim) throw ConfigError("synth: code has the wrong dimension");
  return canonicalize(unflatten(s.categories, decode(s, z)));
}

std::vector<SceneMatrix> synth_batch(const TrainState& s, int n, std::uint64_t seed,
                                     std::vector<Eigen::VectorXd>* codes) {
  if (n < 0) throw ConfigError("synth_batch: n must be >= 0");
  std::vector<Eigen::VectorXd> z(n);
  std::vector<SceneMatrix> out(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(seed, i);
    z[i] = normal_code(s.nets.z_dim, rng);
    out[i] = synth(s, z[i]);
  });
  if (codes) *codes = std::move(z);
  return out;
}

Interpolation interpolate(const TrainState& s, const SceneMatrix& a, const SceneMatrix& b, int steps) {
  if (steps < 2) throw ConfigError("interpolate: steps must be >= 2");
  const Eigen::VectorXd za = encode_mean(s, a);
  const Eigen::VectorXd zb = encode_mean(s, b);
  Interpolation out;
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / (steps - 1);
    out.codes.push_back((1.0 - t) * za + t * zb);
    out.scenes.push_back(synth(s, out.codes.back()));
  }
  return out;
}

void validate_mask(const SceneMatrix& partial, const CompletionMask& mask) {
  if (mask.rows() != partial.rows() || mask.cols() != partial.num_objects()) {
    throw ConfigError("completion mask: shape does not match the scene");
  }
  for (Eigen::Index j = 0; j < mask.cols(); ++j) {
    bool any = false;
    for (Eigen::Index r = 0; r < mask.rows(); ++r) {
      const double v = mask(r, j);
      if (v != 0.0 && v != 1.0) throw ConfigError("completion mask: entries must be 0 or 1");
      any = any || v == 1.0;
    }
    if (any && mask(kExistenceRow, j) != 1.0) {
      throw ConfigError("completion mask: column " + std::to_string(j) + " is constrained but its existence is free");
    }
  }
}

CompletionMask full_mask(const CategoryConfig& config) {
  return CompletionMask::Ones(config.rows(), config.num_objects());
}

CompletionMask column_mask(const CategoryConfig& config, const std::vector<int>& columns) {
  CompletionMask m = CompletionMask::Zero(config.rows(), config.num_objects());
  for (int j : columns) {
    if (j < 0 || j >= config.num_objects()) throw ConfigError("column_mask: column out of range");
    m.col(j).setOnes();
  }
  return m;
}

double completion_data_term(const TrainState& s, const SceneMatrix& partial, const CompletionMask& mask,
                            const Eigen::VectorXd& z, const RigidMotion& t, const PermutationSet& p) {
  return Completer(s, partial, mask, 0.0).eval(z, t, p, false).data;
}

CompletionResult complete(const TrainState& s, const SceneMatrix& partial, const CompletionMask& mask,
                          const CompletionOptions& o) {
  if (partial.config() != *s.categories) throw ConfigError("complete: scene config does not match the model");
  validate_mask(partial, mask);
  if (o.restarts < 1 || o.iters < 0 || o.rounds < 1 || !(o.step > 0.0) || !(o.alpha >= 0.0)) {
    throw ConfigError("complete: invalid options");
  }
  const auto& cfg = *s.categories;
  CompletionResult result;
  if ((mask.array() == 0.0).all()) {
    log_warning("complete: empty mask, returning a random sample");
    Rng rng(o.seed, 0);
    result.z = normal_code(s.nets.z_dim, rng);
    result.scene = synth(s, result.z);
    result.permutation = PermutationSet::identity(cfg);
    result.objective = o.alpha * result.z.squaredNorm();
    return result;
  }

  const Completer c(s, partial, mask, o.alpha);
  std::vector<RestartResult> runs(o.restarts);
  parallel_for(runs.size(), [&](std::size_t r) {
    RestartResult& run = runs[r];
    if (r == 0) {
      const Eigen::MatrixXd padded = (mask.array() * partial.values().array()).matrix();
      run.z = encode_mean(s, SceneMatrix(partial.config_ptr(), padded));
    } else {
      Rng rng(o.seed, r);
      run.z = normal_code(s.nets.z_dim, rng);
    }
    run.permutation = PermutationSet::identity(cfg);
    double objective = c.eval(run.z, run.motion, run.permutation, false).objective;
    c.update_pose(run.z, run.motion, run.permutation, objective);
    run.initial_objective = objective;

    double step = o.step;
    int done = 0;
    for (int round = 0; round < o.rounds; ++round) {
      const int budget = (o.iters * (round + 1)) / o.rounds - done;
      CompletionEval e = c.eval(run.z, run.motion, run.permutation, true);
      for (int it = 0; it < budget; ++it, ++done) {
        const Eigen::VectorXd trial = run.z - step * e.grad;
        const CompletionEval te = c.eval(trial, run.motion, run.permutation, true);
        if (te.objective <= e.objective) {
          run.z = trial;
          e = te;
          step *= 1.5;
        } else {
          step *= 0.5;
        }
      }
      objective = e.objective;
      c.update_pose(run.z, run.motion, run.permutation, objective);
    }
    const CompletionEval last = c.eval(run.z, run.motion, run.permutation, false);
    run.data = last.data;
    run.objective = last.objective;
  });

  int best = 0;
  double best_initial = std::numeric_limits<double>::infinity();
  for (int r = 0; r < o.restarts; ++r) {
    if (runs[r].objective < runs[best].objective) best = r;
    best_initial = std::min(best_initial, runs[r].initial_objective);
  }
  const RestartResult& win = runs[best];
  result.z = win.z;
  result.motion = win.motion;
  result.permutation = win.permutation;
  result.data_term = win.data;
  result.objective = win.objective;
  result.best_initial_objective = best_initial;
  result.restart = best;
  result.scene = synth(s, win.z);
  return result;
}

int nearest_training(const TrainState& s, const SceneMatrix& m, const std::vector<SceneMatrix>& corpus) {
  if (corpus.empty()) throw InvalidInputError("nearest_training: empty corpus");
  const Eigen::VectorXd z = encode_mean(s, m);
  std::vector<double> d(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) { d[i] = (encode_mean(s, corpus[i]) - z).squaredNorm(); });
  int best = 0;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (d[i] < d[best]) best = static_cast<int>(i);
  }
  return best;
}

Heatmap absolute_heatmap(const std::vector<SceneMatrix>& scenes, int category, const ViewWindow& window,
                         int grid) {
  if (grid < 8) throw ConfigError("absolute_heatmap: grid must be >= 8");
  Heatmap h;
  h.mass = Eigen::MatrixXd::Zero(grid, grid);
  for (const auto& m : scenes) {
    if (category < 0 || category >= m.config().num_categories()) {
      throw ConfigError("absolute_heatmap: category out of range");
    }
    const int base = m.config().block_begin(category);
    for (int a = 0; a < m.config().block_size(category); ++a) {
      if (!m.exists(base + a)) continue;
      deposit(h.mass, m.center_xy(base + a), window.center, window.half_extent);
      ++h.samples;
    }
  }
  if (h.samples > 0) h.mass /= h.samples;
  return h;
}

void PairStatsSpec::validate(const CategoryConfig& config) const {
  if (anchor < 0 || anchor >= config.num_categories() || second < 0 || second >= config.num_categories()) {
    throw ConfigError("pair stats: category out of range");
  }
  if (grid < 8) throw ConfigError("pair stats: grid must be >= 8");
  if (!(half_extent > 0.0)) throw ConfigError("pair stats: half_extent must be positive");
}

int angle_bin(double relative_angle) {
  const double a = wrap_angle(relative_angle);
  const int b = static_cast<int>(std::floor((a + kPi / 4.0) / (kPi / 2.0)));
  return ((b % kAngleBins) + kAngleBins) % kAngleBins;
}

Eigen::Vector2d pair_frame_coordinates(const SceneMatrix& m, int j, const Eigen::Vector2d& p) {
  const FootprintBox box = footprint(m, j);
  const Eigen::Vector2d& f = box.front;
  const Eigen::Vector2d origin = box.center + box.half_sizes.x() * f;
  const Eigen::Vector2d right(f.y(), -f.x());
  const Eigen::Vector2d d = p - origin;
  return {d.dot(right), d.dot(f)};
}

PairStats pair_stats(const std::vector<SceneMatrix>& scenes, const PairStatsSpec& spec) {
  PairStats out;
  out.relative.mass = Eigen::MatrixXd::Zero(spec.grid, spec.grid);
  if (scenes.empty()) return out;
  spec.validate(scenes.front().config());

  struct Found {
    bool ok = false;
    Eigen::Vector2d rel;
    int bin = 0;
  };
  std::vector<Found> found(scenes.size());
  parallel_for(scenes.size(), [&](std::size_t i) {
    const SceneMatrix& m = scenes[i];
    const auto& cfg = m.config();
    const int ba = cfg.block_begin(spec.anchor), bs = cfg.block_begin(spec.second);
    double best = std::numeric_limits<double>::infinity();
    int ja = -1, js = -1;
    for (int a = 0; a < cfg.block_size(spec.anchor); ++a) {
      if (!m.exists(ba + a)) continue;
      for (int b = 0; b < cfg.block_size(spec.second); ++b) {
        if (ba + a == bs + b || !m.exists(bs + b)) continue;
        const double d = (m.center_xy(ba + a) - m.center_xy(bs + b)).squaredNorm();
        if (d < best) {
          best = d;
          ja = ba + a;
          js = bs + b;
        }
      }
    }
    if (ja < 0) return;
    found[i].ok = true;
    found[i].rel = pair_frame_coordinates(m, ja, m.center_xy(js));
    found[i].bin = angle_bin(heading(footprint(m, js).front) - heading(footprint(m, ja).front));
  });
  for (const auto& f : found) {
    if (!f.ok) continue;
    deposit(out.relative.mass, f.rel, Eigen::Vector2d::Zero(), spec.half_extent);
    out.angles(f.bin) += 1.0;
    ++out.pairs;
  }
  out.relative.samples = out.pairs;
  if (out.pairs > 0) {
    out.relative.mass /= out.pairs;
    out.angles /= out.pairs;
  }
  return out;
}

double distribution_distance(const Eigen::MatrixXd& h1, const Eigen::MatrixXd& h2) {
  if (h1.rows() != h2.rows() || h1.cols() != h2.cols()) {
    throw ConfigError("distribution_distance: shape mismatch");
  }
  return 0.5 * (h1 - h2).cwiseAbs().sum();
}

Json heatmap_to_json(const Heatmap& h) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < h.mass.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < h.mass.cols(); ++j) row.push_back(h.mass(i, j));
    rows.push_back(row);
  }
  return Json{{"samples", h.samples}, {"mass", rows}};
}

}  // namespace scenegen
