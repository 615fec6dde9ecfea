#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "scenegen/scene.hpp"

namespace scenegen {

// Square world window sampled at pixel centers. Pixel (i, j) is row i (top
// row has the largest y) and column j (leftmost column has the smallest x).
struct ViewWindow {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double half_extent = 3.0;
  int resolution = 128;

  void validate() const;  // throws ConfigError
  double pixel_size() const { return 2.0 * half_extent / resolution; }
  Eigen::Vector2d pixel_center(int i, int j) const;
  // Pixel containing p, or false if p lies outside the window.
  bool locate(const Eigen::Vector2d& p, int& i, int& j) const;
};

// Window centered on the mean existing-object center with half extent equal
// to 1.1x the 99th-percentile center radius.
ViewWindow default_window(const std::vector<SceneMatrix>& corpus, int resolution = 128);

struct TopView {
  Eigen::MatrixXd values;  // resolution x resolution, indexed (i, j)
  ViewWindow window;
};

struct FootprintBox {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  Eigen::Vector2d front = Eigen::Vector2d(1.0, 0.0);  // unit
  Eigen::Vector2d half_sizes = Eigen::Vector2d(0.5, 0.5);  // along front, along side
};

struct ProjectionOptions {
  double delta = 0.5;
  // Replace the zero deep inside a footprint by -delta.
  bool fill_interior = false;
  // Divide class constants by the number of categories.
  bool normalize_class_constants = false;
};

// Top-view footprint of column j: unit front (zero fronts become (1, 0)) and
// half sizes from the clamped front/side sizes.
FootprintBox footprint(const SceneMatrix& m, int j);

// Signed distance to the rectangle boundary (negative inside), truncated to 0
// beyond delta on either side.
double box_tsdf(const Eigen::Vector2d& p, const FootprintBox& box, double delta,
                bool fill_interior = false);

double class_weight(const CategoryConfig& config, int category, const ProjectionOptions& options);

// Class-weighted sum of truncated SDF images of the present objects.
TopView project(const SceneMatrix& m, const ViewWindow& window,
                const ProjectionOptions& options = {});

struct ObjectGrad {
  int column = 0;
  Eigen::Vector2d d_center = Eigen::Vector2d::Zero();
  // Gradient with respect to the stored (possibly non-unit) front entries,
  // taken through the normalization; at unit norm this is the tangential
  // derivative.
  Eigen::Vector2d d_front = Eigen::Vector2d::Zero();
  Eigen::Vector2d d_half_sizes = Eigen::Vector2d::Zero();
};

// Gradients of L = sum_ij upstream(i, j) * P(M)(i, j), one entry per present
// object in column order.
struct ProjectionGrad {
  std::vector<ObjectGrad> objects;

  // Same gradient expressed on the scene matrix entries (dL/dM).
  Eigen::MatrixXd to_scene_gradient(const SceneMatrix& m) const;
};

ProjectionGrad project_backward(const SceneMatrix& m, const ViewWindow& window,
                                const ProjectionOptions& options, const Eigen::MatrixXd& upstream);

// SVG 1.1 drawing of the present footprints in world units (y up), one color
// per category, with a tick along each front direction.
std::string render_svg(const SceneMatrix& m, const std::optional<ViewWindow>& window = std::nullopt);

// Binary 16-bit PGM (P5, maxval 65535, big-endian). Values are rescaled
// affinely to [0, 65535]; a constant image maps to 0.
std::string write_pgm(const Eigen::MatrixXd& image);
inline std::string write_pgm(const TopView& view) { return write_pgm(view.values); }

}  // namespace scenegen
