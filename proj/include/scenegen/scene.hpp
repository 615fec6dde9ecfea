#pragma once

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scenegen/errors.hpp"

namespace scenegen {

// Row layout of one object column (the status vector).
inline constexpr int kExistenceRow = 0;
inline constexpr int kCenterRow = 1;      // x, y, z
inline constexpr int kFrontRow = 4;       // ux, uy
inline constexpr int kSizeRow = 6;        // front, side, up
inline constexpr int kDescriptorRow = 9;  // d descriptor entries
inline constexpr int kGeometricRows = 9;

inline constexpr double kExistenceThreshold = 0.5;

struct Category {
  std::string name;
  int max_multiplicity = 4;
  double class_constant = 1.0;

  bool operator==(const Category&) const = default;
};

// Category vocabulary, per-category slot counts and the descriptor length.
// Column blocks are laid out in category order.
class CategoryConfig {
 public:
  CategoryConfig() = default;
  // Throws ConfigError when any invariant is violated.
  CategoryConfig(std::vector<Category> categories, int descriptor_dim);

  // Every category gets `multiplicity` slots and class constant = 1-based index.
  static CategoryConfig uniform(const std::vector<std::string>& names, int multiplicity,
                                int descriptor_dim);

  int num_categories() const { return static_cast<int>(categories_.size()); }
  int descriptor_dim() const { return descriptor_dim_; }
  int rows() const { return descriptor_dim_ + kGeometricRows; }
  int num_objects() const { return offsets_.empty() ? 0 : offsets_.back(); }

  int block_begin(int k) const { return offsets_[k]; }
  int block_size(int k) const { return categories_[k].max_multiplicity; }
  int category_of(int column) const;

  const Category& category(int k) const { return categories_[k]; }
  const std::vector<Category>& categories() const { return categories_; }
  // Index of the named category, or -1.
  int find(std::string_view name) const;
  int max_block_size() const;

  bool operator==(const CategoryConfig& other) const {
    return descriptor_dim_ == other.descriptor_dim_ && categories_ == other.categories_;
  }

 private:
  std::vector<Category> categories_;
  int descriptor_dim_ = 0;
  std::vector<int> offsets_;  // prefix sums, size n_c + 1
};

using ConfigPtr = std::shared_ptr<const CategoryConfig>;

inline ConfigPtr make_config(CategoryConfig config) {
  return std::make_shared<const CategoryConfig>(std::move(config));
}

struct ObjectColumn {
  double existence = 0.0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector2d front = Eigen::Vector2d(1.0, 0.0);
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  Eigen::VectorXd descriptor;
};

// (d+9) x n_o matrix encoding of a scene. The category config is shared and
// immutable; the numeric payload is a plain value.
class SceneMatrix {
 public:
  SceneMatrix() = default;
  // All-zero scene (every slot absent).
  explicit SceneMatrix(ConfigPtr config);
  SceneMatrix(ConfigPtr config, Eigen::MatrixXd values);

  const CategoryConfig& config() const { return *config_; }
  const ConfigPtr& config_ptr() const { return config_; }

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

  int rows() const { return static_cast<int>(values_.rows()); }
  int num_objects() const { return static_cast<int>(values_.cols()); }

  ObjectColumn column(int j) const;
  void set_column(int j, const ObjectColumn& column);

  bool exists(int j) const { return values_(kExistenceRow, j) >= kExistenceThreshold; }
  int count_existing() const;
  Eigen::Vector2d center_xy(int j) const { return values_.block<2, 1>(kCenterRow, j); }
  Eigen::Vector2d front(int j) const { return values_.block<2, 1>(kFrontRow, j); }

  bool operator==(const SceneMatrix& other) const;

 private:
  ConfigPtr config_;
  Eigen::MatrixXd values_;
};

// True when both scenes refer to equal category configs.
bool same_config(const SceneMatrix& a, const SceneMatrix& b);
void require_same_config(const SceneMatrix& a, const SceneMatrix& b, std::string_view where);

double wrap_angle(double theta);  // into (-pi, pi]

Eigen::Matrix2d rotation2d(double theta);

// Rotation about the vertical axis followed by a 3D translation.
struct RigidMotion {
  double theta = 0.0;
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static RigidMotion identity() { return {}; }
  RigidMotion inverse() const;
  Eigen::Vector3d apply_point(const Eigen::Vector3d& p) const;
  Eigen::Vector2d rotate(const Eigen::Vector2d& v) const;

  bool operator==(const RigidMotion&) const = default;
};

// Operator composition: compose(a, b) applies b first, then a.
RigidMotion compose(const RigidMotion& a, const RigidMotion& b);

// One column permutation per category. apply_permutation(M, S) places input
// slot sigma_k[a] of block k at output slot a.
class PermutationSet {
 public:
  PermutationSet() = default;
  // Throws ConfigError if some sigma_k is not a bijection.
  explicit PermutationSet(std::vector<std::vector<int>> sigma);
  static PermutationSet identity(const CategoryConfig& config);

  int num_categories() const { return static_cast<int>(sigma_.size()); }
  const std::vector<int>& operator[](int k) const { return sigma_[k]; }
  const std::vector<std::vector<int>>& maps() const { return sigma_; }

  PermutationSet inverse() const;
  bool conforms(const CategoryConfig& config) const;
  bool is_identity() const;

  bool operator==(const PermutationSet&) const = default;

 private:
  std::vector<std::vector<int>> sigma_;
};

// Operator composition: compose(a, b) = a after b.
PermutationSet compose(const PermutationSet& a, const PermutationSet& b);

SceneMatrix apply_permutation(const SceneMatrix& m, const PermutationSet& s);
SceneMatrix apply_motion(const SceneMatrix& m, const RigidMotion& t);
// (T o S)(M)
SceneMatrix apply_transform(const SceneMatrix& m, const RigidMotion& t, const PermutationSet& s);

// Transform a single column in place (rows of a (d+9)-vector).
void apply_motion_to_column(Eigen::Ref<Eigen::VectorXd> column, const RigidMotion& t);

// Snap existence, renormalize fronts, clamp sizes, zero absent columns.
SceneMatrix canonicalize(const SceneMatrix& m);

inline constexpr double kMinObjectSize = 1e-4;

// Weighted rigid fit: argmin_T sum_j w_j |T(source_j) - target_j|^2 over the
// rows T acts on (center and front). Throws DegenerateInputError if all
// weights are zero.
RigidMotion solve_procrustes(const SceneMatrix& target, const SceneMatrix& source,
                             std::span<const double> weights);

// 1 where both scenes have the slot present, 0 otherwise.
std::vector<double> existence_weights(const SceneMatrix& target, const SceneMatrix& source);

double frobenius_sq(const SceneMatrix& a, const SceneMatrix& b);

struct SceneDistance {
  double value = 0.0;
  RigidMotion motion;
  PermutationSet permutation;
};

// Local minimum of |target - (T o S)(source)|_F^2 by alternating exact
// assignment and Procrustes steps from `restarts` initial rotations.
SceneDistance scene_distance(const SceneMatrix& target, const SceneMatrix& source,
                             int restarts = 8);

// Per-category optimal permutation for fixed motion: argmin_S
// |target - T(S(source))|_F^2.
PermutationSet best_permutation(const SceneMatrix& target, const SceneMatrix& source,
                                const RigidMotion& t);

}  // namespace scenegen
