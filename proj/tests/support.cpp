#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <set>

#include "scenegen/corpus.hpp"

namespace testsupport {

ConfigPtr small_config(const std::vector<int>& multiplicities, int d) {
  std::vector<Category> cats;
  for (std::size_t k = 0; k < multiplicities.size(); ++k) {
    cats.push_back({"c" + std::to_string(k), multiplicities[k], static_cast<double>(k + 1)});
  }
  return make_config(CategoryConfig(cats, d));
}

SceneMatrix random_scene(const ConfigPtr& cfg, Rng& rng, double p_exist, double extent) {
  SceneMatrix m(cfg);
  for (int j = 0; j < cfg->num_objects(); ++j) {
    if (rng.uniform() >= p_exist) continue;
    ObjectColumn c;
    c.existence = 1.0;
    c.center = Eigen::Vector3d(rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(0.0, 1.0));
    const double a = rng.uniform(-kPi, kPi);
    c.front = Eigen::Vector2d(std::cos(a), std::sin(a));
    c.size = Eigen::Vector3d(rng.uniform(0.3, 1.5), rng.uniform(0.3, 1.5), rng.uniform(0.3, 1.5));
    c.descriptor = Eigen::VectorXd(cfg->descriptor_dim());
    for (int i = 0; i < cfg->descriptor_dim(); ++i) c.descriptor(i) = rng.normal();
    m.set_column(j, c);
  }
  return m;
}

RigidMotion random_motion(Rng& rng, double t_std) {
  return RigidMotion{rng.uniform(-kPi, kPi),
                     Eigen::Vector3d(rng.normal(0.0, t_std), rng.normal(0.0, t_std), rng.normal(0.0, 0.2))};
}

std::vector<int> random_perm(int m, Rng& rng) {
  std::vector<int> p(m);
  std::iota(p.begin(), p.end(), 0);
  for (int i = m - 1; i > 0; --i) std::swap(p[i], p[rng.uniform_int(0, i)]);
  return p;
}

PermutationSet random_permutation(const CategoryConfig& cfg, Rng& rng) {
  std::vector<std::vector<int>> s;
  for (int k = 0; k < cfg.num_categories(); ++k) s.push_back(random_perm(cfg.block_size(k), rng));
  return PermutationSet(s);
}

double brute_force_assignment(const Eigen::MatrixXd& cost) {
  std::vector<int> p(cost.rows());
  std::iota(p.begin(), p.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) c += cost(i, p[i]);
    best = std::min(best, c);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

double procrustes_objective(const SceneMatrix& target, const SceneMatrix& source, const std::vector<double>& w,
                            const RigidMotion& t) {
  const Eigen::Matrix2d r = rotation2d(t.theta);
  double f = 0.0;
  for (int j = 0; j < target.num_objects(); ++j) {
    if (w[j] == 0.0) continue;
    const Eigen::Vector2d dp = r * source.center_xy(j) + t.t.head<2>() - target.center_xy(j);
    const Eigen::Vector2d du = r * source.front(j) - target.front(j);
    const double dz = source.values()(kCenterRow + 2, j) + t.t.z() - target.values()(kCenterRow + 2, j);
    f += w[j] * (dp.squaredNorm() + du.squaredNorm() + dz * dz);
  }
  return f;
}

double procrustes_grid_minimum(const SceneMatrix& target, const SceneMatrix& source, const std::vector<double>& w,
                               int grid) {
  double wsum = 0.0;
  Eigen::Vector3d p = Eigen::Vector3d::Zero(), q = Eigen::Vector3d::Zero();
  for (int j = 0; j < target.num_objects(); ++j) {
    wsum += w[j];
    p += w[j] * source.values().block<3, 1>(kCenterRow, j);
    q += w[j] * target.values().block<3, 1>(kCenterRow, j);
  }
  p /= wsum;
  q /= wsum;
  double best = std::numeric_limits<double>::infinity();
  for (int g = 0; g < grid; ++g) {
    RigidMotion t;
    t.theta = 2.0 * kPi * g / grid;
    const Eigen::Vector2d txy = q.head<2>() - rotation2d(t.theta) * p.head<2>();
    t.t = Eigen::Vector3d(txy.x(), txy.y(), q.z() - p.z());
    best = std::min(best, procrustes_objective(target, source, w, t));
  }
  return best;
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                 double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    y(i) = x(i) + h;
    const double fp = f(y);
    y(i) = x(i) - h;
    const double fm = f(y);
    y(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

namespace {

// Five-point central difference of a scalar function of one parameter.
double five_point(const std::function<double(double)>& f, double x0, double h) {
  return (f(x0 - 2.0 * h) - 8.0 * f(x0 - h) + 8.0 * f(x0 + h) - f(x0 + 2.0 * h)) / (12.0 * h);
}

}  // namespace

GradientCheck check_derivative(const std::function<double(double)>& f, double x0, double analytic, double h,
                               double floor) {
  const double a = five_point(f, x0, h), b = five_point(f, x0, 0.5 * h);
  GradientCheck c;
  if (relative_error(a, b, floor) > 1e-7) {
    c.skipped = 1;  // a kink lies inside the stencil
    return c;
  }
  c.checked = 1;
  c.max_error = relative_error(analytic, b, floor);
  return c;
}

void GradientCheck::merge(const GradientCheck& o) {
  checked += o.checked;
  skipped += o.skipped;
  max_error = std::max(max_error, o.max_error);
}

GradientCheck network_gradient_check(const nn::Network& net, const Eigen::VectorXd& x, const Eigen::VectorXd& w,
                                     double h) {
  nn::Tape tape;
  net.forward(x, &tape);
  nn::Gradients g = net.zero_gradients();
  const Eigen::VectorXd dx = net.backward(tape, w, &g);

  GradientCheck out;
  nn::Network probe = net;
  for (std::size_t l = 0; l < probe.layers().size(); ++l) {
    auto& layer = probe.layers()[l];
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<double>& params = pass == 0 ? layer.weights : layer.bias;
      const std::vector<double>& grads = pass == 0 ? g[l].weights : g[l].bias;
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double orig = params[i];
        auto f = [&](double v) {
          params[i] = v;
          const double r = w.dot(probe.forward(x));
          params[i] = orig;
          return r;
        };
        out.merge(check_derivative(f, orig, grads[i], h, 1e-4));
      }
    }
  }
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    auto f = [&](double v) {
      y(i) = v;
      const double r = w.dot(net.forward(y));
      y(i) = x(i);
      return r;
    };
    out.merge(check_derivative(f, x(i), dx(i), h, 1e-4));
  }
  return out;
}

namespace {

// Distance of p to the nearest TSDF kink of the box: band edges, the
// medial axis inside, the corner-region boundaries outside and the box axes.
double kink_margin(const Eigen::Vector2d& p, const FootprintBox& box, double delta) {
  const Eigen::Vector2d f = box.front;
  const Eigen::Vector2d s(-f.y(), f.x());
  const Eigen::Vector2d d = p - box.center;
  const Eigen::Vector2d q(d.dot(f), d.dot(s));
  const Eigen::Vector2d e = q.cwiseAbs() - box.half_sizes;
  const double outside = e.cwiseMax(0.0).norm();
  const double inside = std::min(std::max(e.x(), e.y()), 0.0);
  const double dist = outside + inside;
  double m = std::abs(std::abs(dist) - delta);
  if (std::abs(dist) > delta + 1e-2) return 1.0;  // far outside the band: no contribution
  m = std::min(m, std::abs(e.x() - e.y()));
  m = std::min(m, std::abs(e.x()));
  m = std::min(m, std::abs(e.y()));
  m = std::min(m, std::abs(q.x()));
  m = std::min(m, std::abs(q.y()));
  return m;
}

}  // namespace

bool projection_gradient_check(Rng& rng, double& max_error, double h) {
  const ConfigPtr cfg = small_config({2, 1}, 1);
  SceneMatrix m(cfg);
  const int objects = rng.uniform_int(1, 3);
  for (int j = 0; j < objects; ++j) {
    ObjectColumn c;
    c.existence = 1.0;
    c.center = Eigen::Vector3d(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), 0.4);
    const double a = rng.uniform(-kPi, kPi);
    c.front = Eigen::Vector2d(std::cos(a), std::sin(a));
    c.size = Eigen::Vector3d(rng.uniform(0.4, 2.0), rng.uniform(0.4, 2.0), 0.8);
    c.descriptor = Eigen::VectorXd::Zero(1);
    m.set_column(j, c);
  }
  ViewWindow window;
  window.half_extent = 3.0;
  window.resolution = 16;
  ProjectionOptions opt;
  // Any parameter step of size h moves a sample point, relative to a box, by
  // at most ~h times the window radius.
  const double margin = 2.0 * h * 6.0;
  for (int o = 0; o < objects; ++o) {
    const FootprintBox box = footprint(m, o);
    for (int i = 0; i < window.resolution; ++i) {
      for (int j = 0; j < window.resolution; ++j) {
        if (kink_margin(window.pixel_center(i, j), box, opt.delta) < margin) return false;
      }
    }
  }
  Eigen::MatrixXd upstream(window.resolution, window.resolution);
  for (int i = 0; i < window.resolution; ++i) {
    for (int j = 0; j < window.resolution; ++j) upstream(i, j) = rng.normal();
  }
  const Eigen::MatrixXd g = project_backward(m, window, opt, upstream).to_scene_gradient(m);
  auto loss = [&](const SceneMatrix& s) { return (upstream.array() * project(s, window, opt).values.array()).sum(); };
  max_error = 0.0;
  const int rows[] = {kCenterRow, kCenterRow + 1, kFrontRow, kFrontRow + 1, kSizeRow, kSizeRow + 1};
  for (int o = 0; o < objects; ++o) {
    for (int r : rows) {
      auto f = [&](double v) {
        SceneMatrix sv = m;
        sv.values()(r, o) = v;
        return loss(sv);
      };
      const double num = five_point(f, m.values()(r, o), h);
      max_error = std::max(max_error, relative_error(g(r, o), num, 1e-6));
    }
  }
  return true;
}

SyncProblem make_sync_problem(int n, int k, int m, Rng& rng) {
  SyncProblem p;
  p.m = m;
  p.graph.num_nodes = n;
  std::set<std::pair<int, int>> es;
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < k; ++r) {
      int j;
      do {
        j = rng.uniform_int(0, n - 1);
      } while (j == i);
      es.insert({std::min(i, j), std::max(i, j)});
    }
  }
  p.graph.edges.assign(es.begin(), es.end());
  p.graph.counts.assign(n, Eigen::VectorXd::Zero(1));
  p.theta.resize(n);
  p.t.resize(n);
  p.sigma.resize(n);
  for (int i = 0; i < n; ++i) {
    p.theta[i] = i == 0 ? 0.0 : rng.uniform(-kPi, kPi);
    p.t[i] = i == 0 ? Eigen::Vector3d::Zero()
                    : Eigen::Vector3d(rng.normal(0.0, 3.0), rng.normal(0.0, 3.0), rng.normal(0.0, 0.1));
    p.sigma[i] = random_perm(m, rng);
  }
  std::iota(p.sigma[0].begin(), p.sigma[0].end(), 0);
  for (auto [i, j] : p.graph.edges) {
    AlignmentEdge e;
    e.i = i;
    e.j = j;
    const RigidMotion ti{p.theta[i], p.t[i]}, tj{p.theta[j], p.t[j]};
    e.motion = compose(tj.inverse(), ti);
    e.permutation = compose(PermutationSet({p.sigma[j]}).inverse(), PermutationSet({p.sigma[i]}));
    p.edges.push_back(e);
  }
  return p;
}

void corrupt_motions(SyncProblem& p, double fraction, Rng& rng) {
  for (auto& e : p.edges) {
    if (rng.uniform() >= fraction) continue;
    e.motion.theta = rng.uniform(-kPi, kPi);
    e.motion.t = Eigen::Vector3d(rng.normal(0.0, 3.0), rng.normal(0.0, 3.0), 0.0);
  }
}

void corrupt_permutations(SyncProblem& p, double fraction, Rng& rng) {
  for (auto& e : p.edges) {
    if (rng.uniform() >= fraction) continue;
    e.permutation = PermutationSet({random_perm(p.m, rng)});
  }
}

CorpusSpec tiny_spec(int n, std::uint64_t seed) {
  CorpusSpec spec;
  spec.name = "tiny";
  spec.categories = {"bed", "stand", "desk", "chair"};
  spec.multiplicity = 2;
  spec.descriptor_dim = 2;
  spec.num_scenes = n;
  spec.seed = seed;
  spec.nuisance.quantized_rotation = false;
  spec.nuisance.rotation_jitter_std = 0.0;
  spec.nuisance.translation_std = 0.0;
  spec.nuisance.shuffle_slots = false;
  auto rule = [](std::string cat, std::string anchor, std::vector<InstancePlacement> inst, std::vector<double> mult,
                 Eigen::Vector3d size) {
    PlacementRule r;
    r.category = std::move(cat);
    r.anchor = std::move(anchor);
    r.instances = std::move(inst);
    r.multiplicity = std::move(mult);
    r.size = size;
    r.size_std = Eigen::Vector3d::Constant(0.03);
    r.offset_std = Eigen::Vector2d(0.05, 0.05);
    r.orientation_std = 0.02;
    return r;
  };
  spec.rules.push_back(rule("bed", "", {{Eigen::Vector2d(0.0, 1.0), kPi}}, {0.0, 1.0}, Eigen::Vector3d(2.0, 1.6, 0.5)));
  spec.rules.push_back(rule("stand", "bed", {{Eigen::Vector2d(1.1, -0.8), 0.0}, {Eigen::Vector2d(-1.1, -0.8), 0.0}},
                            {0.2, 0.3, 0.5}, Eigen::Vector3d(0.4, 0.4, 0.5)));
  spec.rules.push_back(rule("desk", "", {{Eigen::Vector2d(1.6, -0.5), kPi / 2.0}}, {0.4, 0.6},
                            Eigen::Vector3d(0.6, 1.2, 0.75)));
  spec.rules.push_back(rule("chair", "desk", {{Eigen::Vector2d(0.0, 0.7), kPi}}, {0.2, 0.8},
                            Eigen::Vector3d(0.5, 0.5, 0.9)));
  return spec;
}

std::vector<SceneMatrix> tiny_corpus(int n, std::uint64_t seed) { return generate_corpus(tiny_spec(n, seed)).canonical; }

TrainConfig tiny_train_config() {
  TrainConfig c;
  c.t_outer = 2;
  c.t_inner = 2;
  c.gen_epochs = 1;
  c.disc_epochs = 1;
  c.latent_iters = 4;
  c.batch_size = 8;
  c.arch.width_scale = 0.05;
  c.arch.z_dim = 4;
  c.image_resolution = 16;
  c.image_channels = 2;
  return c;
}

std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("scenegen_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace testsupport
