#include "scenegen/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "scenegen/assignment.hpp"

namespace scenegen {

// ---------------------------------------------------------------------------
// CategoryConfig

CategoryConfig::CategoryConfig(std::vector<Category> categories, int descriptor_dim)
    : categories_(std::move(categories)), descriptor_dim_(descriptor_dim) {
  if (categories_.empty()) throw ConfigError("category config: need at least one category");
  if (descriptor_dim_ < 0) throw ConfigError("category config: descriptor_dim must be >= 0");
  std::set<double> constants;
  std::set<std::string> names;
  offsets_.assign(1, 0);
  for (const auto& c : categories_) {
    if (c.max_multiplicity < 1) {
      throw ConfigError("category config: max_multiplicity of '" + c.name + "' must be >= 1");
    }
    if (!(c.class_constant > 0.0) || !std::isfinite(c.class_constant)) {
      throw ConfigError("category config: class_constant of '" + c.name + "' must be positive");
    }
    if (!constants.insert(c.class_constant).second) {
      throw ConfigError("category config: class constants must be distinct");
    }
    if (!names.insert(c.name).second) {
      throw ConfigError("category config: duplicate category name '" + c.name + "'");
    }
    offsets_.push_back(offsets_.back() + c.max_multiplicity);
  }
}

CategoryConfig CategoryConfig::uniform(const std::vector<std::string>& names, int multiplicity,
                                       int descriptor_dim) {
  std::vector<Category> cats;
  cats.reserve(names.size());
  for (std::size_t k = 0; k < names.size(); ++k) {
    cats.push_back({names[k], multiplicity, static_cast<double>(k + 1)});
  }
  return CategoryConfig(std::move(cats), descriptor_dim);
}

int CategoryConfig::category_of(int column) const {
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), column);
  return static_cast<int>(it - offsets_.begin()) - 1;
}

int CategoryConfig::find(std::string_view name) const {
  for (int k = 0; k < num_categories(); ++k) {
    if (categories_[k].name == name) return k;
  }
  return -1;
}

int CategoryConfig::max_block_size() const {
  int best = 0;
  for (const auto& c : categories_) best = std::max(best, c.max_multiplicity);
  return best;
}

// ---------------------------------------------------------------------------
// SceneMatrix

SceneMatrix::SceneMatrix(ConfigPtr config)
    : config_(std::move(config)),
      values_(Eigen::MatrixXd::Zero(config_->rows(), config_->num_objects())) {}

SceneMatrix::SceneMatrix(ConfigPtr config, Eigen::MatrixXd values)
    : config_(std::move(config)), values_(std::move(values)) {
  if (values_.rows() != config_->rows() || values_.cols() != config_->num_objects()) {
    std::ostringstream os;
    os << "scene matrix: expected " << config_->rows() << "x" << config_->num_objects()
       << ", got " << values_.rows() << "x" << values_.cols();
    throw ConfigError(os.str());
  }
}

ObjectColumn SceneMatrix::column(int j) const {
  ObjectColumn c;
  c.existence = values_(kExistenceRow, j);
  c.center = values_.block<3, 1>(kCenterRow, j);
  c.front = values_.block<2, 1>(kFrontRow, j);
  c.size = values_.block<3, 1>(kSizeRow, j);
  c.descriptor = values_.col(j).tail(config_->descriptor_dim());
  return c;
}

void SceneMatrix::set_column(int j, const ObjectColumn& c) {
  if (c.descriptor.size() != config_->descriptor_dim()) {
    throw ConfigError("scene matrix: descriptor length does not match config");
  }
  values_(kExistenceRow, j) = c.existence;
  values_.block<3, 1>(kCenterRow, j) = c.center;
  values_.block<2, 1>(kFrontRow, j) = c.front;
  values_.block<3, 1>(kSizeRow, j) = c.size;
  values_.col(j).tail(config_->descriptor_dim()) = c.descriptor;
}

int SceneMatrix::count_existing() const {
  int n = 0;
  for (int j = 0; j < num_objects(); ++j) n += exists(j) ? 1 : 0;
  return n;
}

bool SceneMatrix::operator==(const SceneMatrix& other) const {
  if (!config_ || !other.config_) return config_ == other.config_;
  return same_config(*this, other) && values_ == other.values_;
}

bool same_config(const SceneMatrix& a, const SceneMatrix& b) {
  return a.config_ptr() == b.config_ptr() || a.config() == b.config();
}

void require_same_config(const SceneMatrix& a, const SceneMatrix& b, std::string_view where) {
  if (!same_config(a, b)) {
    throw ConfigError(std::string(where) + ": scenes use different category configs");
  }
}

// ---------------------------------------------------------------------------
// Rigid motions

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(theta, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  if (w > std::numbers::pi) w -= two_pi;
  return w;
}

Eigen::Matrix2d rotation2d(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

RigidMotion RigidMotion::inverse() const {
  RigidMotion inv;
  inv.theta = wrap_angle(-theta);
  const Eigen::Vector2d txy = -(rotation2d(-theta) * t.head<2>());
  inv.t = Eigen::Vector3d(txy.x(), txy.y(), -t.z());
  return inv;
}

Eigen::Vector3d RigidMotion::apply_point(const Eigen::Vector3d& p) const {
  const Eigen::Vector2d xy = rotation2d(theta) * p.head<2>() + t.head<2>();
  return {xy.x(), xy.y(), p.z() + t.z()};
}

Eigen::Vector2d RigidMotion::rotate(const Eigen::Vector2d& v) const { return rotation2d(theta) * v; }

RigidMotion compose(const RigidMotion& a, const RigidMotion& b) {
  RigidMotion out;
  out.theta = wrap_angle(a.theta + b.theta);
  out.t = a.apply_point(b.t);
  return out;
}

// ---------------------------------------------------------------------------
// Permutations

PermutationSet::PermutationSet(std::vector<std::vector<int>> sigma) : sigma_(std::move(sigma)) {
  for (std::size_t k = 0; k < sigma_.size(); ++k) {
    const int m = static_cast<int>(sigma_[k].size());
    std::vector<char> seen(m, 0);
    for (int x : sigma_[k]) {
      if (x < 0 || x >= m || seen[x]) {
        throw ConfigError("permutation set: map " + std::to_string(k) + " is not a bijection");
      }
      seen[x] = 1;
    }
  }
}

PermutationSet PermutationSet::identity(const CategoryConfig& config) {
  std::vector<std::vector<int>> sigma(config.num_categories());
  for (int k = 0; k < config.num_categories(); ++k) {
    sigma[k].resize(config.block_size(k));
    for (int a = 0; a < config.block_size(k); ++a) sigma[k][a] = a;
  }
  return PermutationSet(std::move(sigma));
}

PermutationSet PermutationSet::inverse() const {
  std::vector<std::vector<int>> inv(sigma_.size());
  for (std::size_t k = 0; k < sigma_.size(); ++k) {
    inv[k].resize(sigma_[k].size());
    for (std::size_t a = 0; a < sigma_[k].size(); ++a) inv[k][sigma_[k][a]] = static_cast<int>(a);
  }
  return PermutationSet(std::move(inv));
}

bool PermutationSet::conforms(const CategoryConfig& config) const {
  if (num_categories() != config.num_categories()) return false;
  for (int k = 0; k < config.num_categories(); ++k) {
    if (static_cast<int>(sigma_[k].size()) != config.block_size(k)) return false;
  }
  return true;
}

bool PermutationSet::is_identity() const {
  for (const auto& s : sigma_) {
    for (std::size_t a = 0; a < s.size(); ++a) {
      if (s[a] != static_cast<int>(a)) return false;
    }
  }
  return true;
}

PermutationSet compose(const PermutationSet& a, const PermutationSet& b) {
  if (a.num_categories() != b.num_categories()) {
    throw ConfigError("permutation compose: category count mismatch");
  }
  std::vector<std::vector<int>> out(a.num_categories());
  for (int k = 0; k < a.num_categories(); ++k) {
    if (a[k].size() != b[k].size()) throw ConfigError("permutation compose: block size mismatch");
    out[k].resize(a[k].size());
    for (std::size_t x = 0; x < a[k].size(); ++x) out[k][x] = b[k][a[k][x]];
  }
  return PermutationSet(std::move(out));
}

// ---------------------------------------------------------------------------
// Operators

SceneMatrix apply_permutation(const SceneMatrix& m, const PermutationSet& s) {
  const auto& cfg = m.config();
  if (!s.conforms(cfg)) throw ConfigError("apply_permutation: permutation does not match config");
  Eigen::MatrixXd out(m.rows(), m.num_objects());
  for (int k = 0; k < cfg.num_categories(); ++k) {
    const int base = cfg.block_begin(k);
    for (int a = 0; a < cfg.block_size(k); ++a) out.col(base + a) = m.values().col(base + s[k][a]);
  }
  return SceneMatrix(m.config_ptr(), std::move(out));
}

void apply_motion_to_column(Eigen::Ref<Eigen::VectorXd> column, const RigidMotion& t) {
  const Eigen::Matrix2d r = rotation2d(t.theta);
  column.segment<2>(kCenterRow) = r * column.segment<2>(kCenterRow) + t.t.head<2>();
  column(kCenterRow + 2) += t.t.z();
  column.segment<2>(kFrontRow) = r * column.segment<2>(kFrontRow).eval();
}

SceneMatrix apply_motion(const SceneMatrix& m, const RigidMotion& t) {
  Eigen::MatrixXd out = m.values();
  const Eigen::Matrix2d r = rotation2d(t.theta);
  out.middleRows<2>(kCenterRow) = (r * out.middleRows<2>(kCenterRow)).colwise() + t.t.head<2>();
  out.row(kCenterRow + 2).array() += t.t.z();
  out.middleRows<2>(kFrontRow) = (r * out.middleRows<2>(kFrontRow)).eval();
  return SceneMatrix(m.config_ptr(), std::move(out));
}

SceneMatrix apply_transform(const SceneMatrix& m, const RigidMotion& t, const PermutationSet& s) {
  return apply_motion(apply_permutation(m, s), t);
}

SceneMatrix canonicalize(const SceneMatrix& m) {
  Eigen::MatrixXd out = m.values();
  for (int j = 0; j < m.num_objects(); ++j) {
    auto col = out.col(j);
    if (col(kExistenceRow) < kExistenceThreshold) {
      col.setZero();
      continue;
    }
    col(kExistenceRow) = 1.0;
    Eigen::Vector2d f = col.segment<2>(kFrontRow);
    const double n = f.norm();
    col.segment<2>(kFrontRow) = n < 1e-8 ? Eigen::Vector2d(1.0, 0.0) : Eigen::Vector2d(f / n);
    for (int r = 0; r < 3; ++r) col(kSizeRow + r) = std::max(col(kSizeRow + r), kMinObjectSize);
  }
  return SceneMatrix(m.config_ptr(), std::move(out));
}

double frobenius_sq(const SceneMatrix& a, const SceneMatrix& b) {
  return (a.values() - b.values()).squaredNorm();
}

// ---------------------------------------------------------------------------
// Procrustes

std::vector<double> existence_weights(const SceneMatrix& target, const SceneMatrix& source) {
  std::vector<double> w(target.num_objects());
  for (int j = 0; j < target.num_objects(); ++j) {
    w[j] = (target.exists(j) && source.exists(j)) ? 1.0 : 0.0;
  }
  return w;
}

RigidMotion solve_procrustes(const SceneMatrix& target, const SceneMatrix& source,
                             std::span<const double> weights) {
  require_same_config(target, source, "solve_procrustes");
  const int n = target.num_objects();
  if (static_cast<int>(weights.size()) != n) {
    throw ConfigError("solve_procrustes: weight count does not match column count");
  }
  double wsum = 0.0;
  Eigen::Vector3d p_bar = Eigen::Vector3d::Zero(), q_bar = Eigen::Vector3d::Zero();
  for (int j = 0; j < n; ++j) {
    const double w = weights[j];
    if (w < 0.0 || !std::isfinite(w)) throw InvalidInputError("solve_procrustes: bad weight");
    if (w == 0.0) continue;
    wsum += w;
    p_bar += w * source.values().block<3, 1>(kCenterRow, j);
    q_bar += w * target.values().block<3, 1>(kCenterRow, j);
  }
  if (wsum <= 0.0) throw DegenerateInputError("solve_procrustes: all weights are zero");
  p_bar /= wsum;
  q_bar /= wsum;

  double dot = 0.0, cross = 0.0;
  for (int j = 0; j < n; ++j) {
    const double w = weights[j];
    if (w == 0.0) continue;
    const Eigen::Vector2d p = source.center_xy(j) - p_bar.head<2>();
    const Eigen::Vector2d q = target.center_xy(j) - q_bar.head<2>();
    const Eigen::Vector2d u = source.front(j);
    const Eigen::Vector2d v = target.front(j);
    dot += w * (p.dot(q) + u.dot(v));
    cross += w * (p.x() * q.y() - p.y() * q.x() + u.x() * v.y() - u.y() * v.x());
  }
  RigidMotion out;
  out.theta = (dot == 0.0 && cross == 0.0) ? 0.0 : wrap_angle(std::atan2(cross, dot));
  const Eigen::Vector2d txy = q_bar.head<2>() - rotation2d(out.theta) * p_bar.head<2>();
  out.t = Eigen::Vector3d(txy.x(), txy.y(), q_bar.z() - p_bar.z());
  return out;
}

// ---------------------------------------------------------------------------
// Scene distance

PermutationSet best_permutation(const SceneMatrix& target, const SceneMatrix& source,
                                const RigidMotion& t) {
  const auto& cfg = target.config();
  const SceneMatrix moved = apply_motion(source, t);
  std::vector<std::vector<int>> sigma(cfg.num_categories());
  for (int k = 0; k < cfg.num_categories(); ++k) {
    const int base = cfg.block_begin(k), m = cfg.block_size(k);
    Eigen::MatrixXd cost(m, m);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        cost(a, b) = (target.values().col(base + a) - moved.values().col(base + b)).squaredNorm();
      }
    }
    sigma[k] = solve_assignment(cost).permutation;
  }
  return PermutationSet(std::move(sigma));
}

SceneDistance scene_distance(const SceneMatrix& target, const SceneMatrix& source, int restarts) {
  require_same_config(target, source, "scene_distance");
  restarts = std::max(restarts, 1);
  const std::vector<double> all(target.num_objects(), 1.0);
  constexpr int kMaxAlternations = 50;

  SceneDistance best;
  best.value = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    RigidMotion t;
    t.theta = wrap_angle(2.0 * std::numbers::pi * r / restarts);
    {
      // Start from the rotation guess with centroids matched.
      RigidMotion rot{t.theta, Eigen::Vector3d::Zero()};
      const Eigen::Vector3d src = source.values().middleRows<3>(kCenterRow).rowwise().mean();
      const Eigen::Vector3d dst = target.values().middleRows<3>(kCenterRow).rowwise().mean();
      t.t = dst - rot.apply_point(src);
    }
    PermutationSet s = PermutationSet::identity(target.config());
    SceneDistance local{std::numeric_limits<double>::infinity(), t, s};
    for (int it = 0; it < kMaxAlternations; ++it) {
      s = best_permutation(target, source, t);
      t = solve_procrustes(target, apply_permutation(source, s), all);
      const double v = frobenius_sq(target, apply_transform(source, t, s));
      if (!(v < local.value - 1e-14 * (1.0 + local.value))) {
        if (v < local.value) local = {v, t, s};
        break;
      }
      local = {v, t, s};
    }
    if (local.value < best.value) best = local;
  }
  return best;
}

}  // namespace scenegen
