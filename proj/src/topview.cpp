#include "scenegen/topview.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace scenegen {
namespace {

struct BoxEval {
  double dist = 0.0;
  Eigen::Vector2d q;  // point in the box frame (front, side)
  Eigen::Vector2d e;  // |q| - half_sizes
};

Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {-v.y(), v.x()}; }

BoxEval signed_distance(const Eigen::Vector2d& p, const FootprintBox& box) {
  BoxEval out;
  const Eigen::Vector2d r = p - box.center;
  out.q = Eigen::Vector2d(r.dot(box.front), r.dot(perp(box.front)));
  out.e = out.q.cwiseAbs() - box.half_sizes;
  out.dist = out.e.cwiseMax(0.0).norm() + std::min(std::max(out.e.x(), out.e.y()), 0.0);
  return out;
}

// Pixel index range touched by a footprint plus its band.
void pixel_bounds(const ViewWindow& w, const FootprintBox& box, double delta, int& i0, int& i1, int& j0, int& j1) {
  // Covers the interior (half diagonal) and the outer band.
  const double reach = box.half_sizes.norm() + delta + w.pixel_size();
  const double s = w.pixel_size();
  const double x0 = w.center.x() - w.half_extent, y_top = w.center.y() + w.half_extent;
  j0 = std::max(0, static_cast<int>(std::floor((box.center.x() - reach - x0) / s)));
  j1 = std::min(w.resolution - 1, static_cast<int>(std::ceil((box.center.x() + reach - x0) / s)));
  i0 = std::max(0, static_cast<int>(std::floor((y_top - (box.center.y() + reach)) / s)));
  i1 = std::min(w.resolution - 1, static_cast<int>(std::ceil((y_top - (box.center.y() - reach)) / s)));
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << (v == 0.0 ? 0.0 : v);
  return os.str();
}

std::string category_color(int k, int n) {
  // Evenly spaced hues, full saturation.
  const double h = 6.0 * static_cast<double>(k) / std::max(n, 1);
  const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h) % 6) {
    case 0: r = 1; g = x; break;
    case 1: r = x; g = 1; break;
    case 2: g = 1; b = x; break;
    case 3: g = x; b = 1; break;
    case 4: r = x; b = 1; break;
    default: r = 1; b = x; break;
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(r * 200), static_cast<int>(g * 200),
                static_cast<int>(b * 200));
  return buf;
}

}  // namespace

void ViewWindow::validate() const {
  if (!(half_extent > 0.0)) throw ConfigError("view window: half_extent must be positive");
  if (resolution < 8) throw ConfigError("view window: resolution must be >= 8");
}

Eigen::Vector2d ViewWindow::pixel_center(int i, int j) const {
  const double s = pixel_size();
  return {center.x() - half_extent + (j + 0.5) * s, center.y() + half_extent - (i + 0.5) * s};
}

bool ViewWindow::locate(const Eigen::Vector2d& p, int& i, int& j) const {
  const double s = pixel_size();
  const double fx = (p.x() - (center.x() - half_extent)) / s;
  const double fy = ((center.y() + half_extent) - p.y()) / s;
  if (fx < 0.0 || fy < 0.0 || fx >= resolution || fy >= resolution) return false;
  j = static_cast<int>(fx);
  i = static_cast<int>(fy);
  return true;
}

ViewWindow default_window(const std::vector<SceneMatrix>& corpus, int resolution) {
  ViewWindow w;
  w.resolution = resolution;
  std::vector<Eigen::Vector2d> pts;
  for (const auto& m : corpus) {
    for (int j = 0; j < m.num_objects(); ++j) {
      if (m.exists(j)) pts.push_back(m.center_xy(j));
    }
  }
  if (pts.empty()) return w;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  std::vector<double> radii;
  radii.reserve(pts.size());
  for (const auto& p : pts) radii.push_back((p - mean).norm());
  std::sort(radii.begin(), radii.end());
  const auto idx = static_cast<std::size_t>(std::ceil(0.99 * radii.size())) - 1;
  w.center = mean;
  w.half_extent = std::max(1.1 * radii[std::min(idx, radii.size() - 1)], 1e-3);
  return w;
}

FootprintBox footprint(const SceneMatrix& m, int j) {
  FootprintBox box;
  box.center = m.center_xy(j);
  const Eigen::Vector2d f = m.front(j);
  const double n = f.norm();
  box.front = n < 1e-8 ? Eigen::Vector2d(1.0, 0.0) : Eigen::Vector2d(f / n);
  const auto& v = m.values();
  box.half_sizes = Eigen::Vector2d(std::max(v(kSizeRow, j), kMinObjectSize) / 2.0,
                                   std::max(v(kSizeRow + 1, j), kMinObjectSize) / 2.0);
  return box;
}

double box_tsdf(const Eigen::Vector2d& p, const FootprintBox& box, double delta, bool fill_interior) {
  const double d = signed_distance(p, box).dist;
  if (std::abs(d) <= delta) return d;
  if (fill_interior && d < 0.0) return -delta;
  return 0.0;
}

double class_weight(const CategoryConfig& config, int category, const ProjectionOptions& options) {
  const double c = config.category(category).class_constant;
  return options.normalize_class_constants ? c / config.num_categories() : c;
}

TopView project(const SceneMatrix& m, const ViewWindow& window, const ProjectionOptions& options) {
  window.validate();
  TopView out{Eigen::MatrixXd::Zero(window.resolution, window.resolution), window};
  const auto& cfg = m.config();
  for (int o = 0; o < m.num_objects(); ++o) {
    if (!m.exists(o)) continue;
    const FootprintBox box = footprint(m, o);
    const double c = class_weight(cfg, cfg.category_of(o), options);
    int i0, i1, j0, j1;
    pixel_bounds(window, box, options.delta, i0, i1, j0, j1);
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) {
        const double v = box_tsdf(window.pixel_center(i, j), box, options.delta, options.fill_interior);
        if (v != 0.0) out.values(i, j) += c * v;
      }
    }
  }
  return out;
}

ProjectionGrad project_backward(const SceneMatrix& m, const ViewWindow& window,
                                const ProjectionOptions& options, const Eigen::MatrixXd& upstream) {
  window.validate();
  if (upstream.rows() != window.resolution || upstream.cols() != window.resolution) {
    throw ConfigError("project_backward: upstream grid does not match window resolution");
  }
  const auto& cfg = m.config();
  ProjectionGrad out;
  for (int o = 0; o < m.num_objects(); ++o) {
    if (!m.exists(o)) continue;
    const FootprintBox box = footprint(m, o);
    const double c = class_weight(cfg, cfg.category_of(o), options);
    const Eigen::Vector2d side = perp(box.front);

    Eigen::Vector2d d_center = Eigen::Vector2d::Zero();
    Eigen::Vector2d d_unit_front = Eigen::Vector2d::Zero();
    Eigen::Vector2d d_half = Eigen::Vector2d::Zero();
    int i0, i1, j0, j1;
    pixel_bounds(window, box, options.delta, i0, i1, j0, j1);
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) {
        const double up = upstream(i, j);
        if (up == 0.0) continue;
        const Eigen::Vector2d p = window.pixel_center(i, j);
        const BoxEval ev = signed_distance(p, box);
        if (std::abs(ev.dist) > options.delta) continue;  // truncated: flat

        // d dist / d e
        Eigen::Vector2d g_e;
        if (ev.e.x() > 0.0 && ev.e.y() > 0.0) {
          g_e = ev.e / ev.e.norm();
        } else if (ev.e.x() >= ev.e.y()) {
          g_e = Eigen::Vector2d(1.0, 0.0);
        } else {
          g_e = Eigen::Vector2d(0.0, 1.0);
        }
        const double sx = ev.q.x() >= 0.0 ? 1.0 : -1.0;
        const double sy = ev.q.y() >= 0.0 ? 1.0 : -1.0;
        const double gqx = g_e.x() * sx, gqy = g_e.y() * sy;
        const Eigen::Vector2d r = p - box.center;
        const double w = up * c;
        d_center += w * (-gqx * box.front - gqy * side);
        d_unit_front += w * (gqx * r + gqy * Eigen::Vector2d(r.y(), -r.x()));
        d_half += w * (-g_e);
      }
    }
    ObjectGrad g;
    g.column = o;
    g.d_center = d_center;
    const Eigen::Vector2d f_raw = m.front(o);
    const double n = f_raw.norm();
    if (n >= 1e-8) {
      const Eigen::Matrix2d proj = (Eigen::Matrix2d::Identity() - box.front * box.front.transpose()) / n;
      g.d_front = proj * d_unit_front;
    }
    g.d_half_sizes = d_half;
    out.objects.push_back(g);
  }
  return out;
}

Eigen::MatrixXd ProjectionGrad::to_scene_gradient(const SceneMatrix& m) const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m.rows(), m.num_objects());
  for (const auto& o : objects) {
    g.block<2, 1>(kCenterRow, o.column) = o.d_center;
    g.block<2, 1>(kFrontRow, o.column) = o.d_front;
    for (int a = 0; a < 2; ++a) {
      // Clamped sizes have no gradient.
      if (m.values()(kSizeRow + a, o.column) > kMinObjectSize) {
        g(kSizeRow + a, o.column) = 0.5 * o.d_half_sizes(a);
      }
    }
  }
  return g;
}

std::string render_svg(const SceneMatrix& m, const std::optional<ViewWindow>& window) {
  ViewWindow w;
  if (window) {
    w = *window;
  } else {
    w.center = Eigen::Vector2d::Zero();
    w.half_extent = 1.0;
    for (int j = 0; j < m.num_objects(); ++j) {
      if (!m.exists(j)) continue;
      const FootprintBox b = footprint(m, j);
      w.half_extent = std::max(w.half_extent, b.center.cwiseAbs().maxCoeff() + b.half_sizes.norm());
    }
    w.half_extent *= 1.05;
  }
  const double x0 = w.center.x() - w.half_extent, y0 = w.center.y() - w.half_extent;
  const double size = 2.0 * w.half_extent;
  const auto& cfg = m.config();

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"512\" height=\"512\" "
     << "viewBox=\"" << fmt(x0) << " " << fmt(-(y0 + size)) << " " << fmt(size) << " " << fmt(size)
     << "\">\n"
     << "<g transform=\"scale(1,-1)\" stroke-width=\"" << fmt(size / 400.0) << "\">\n"
     << "<rect class=\"frame\" x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(size)
     << "\" height=\"" << fmt(size) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
  for (int j = 0; j < m.num_objects(); ++j) {
    if (!m.exists(j)) continue;
    const int k = cfg.category_of(j);
    const FootprintBox b = footprint(m, j);
    const Eigen::Vector2d fx = b.front * b.half_sizes.x();
    const Eigen::Vector2d sy = perp(b.front) * b.half_sizes.y();
    const Eigen::Vector2d corners[4] = {b.center + fx + sy, b.center - fx + sy, b.center - fx - sy,
                                        b.center + fx - sy};
    const std::string color = category_color(k, cfg.num_categories());
    os << "<polygon class=\"object\" data-category=\"" << cfg.category(k).name << "\" points=\"";
    for (int c = 0; c < 4; ++c) os << (c ? " " : "") << fmt(corners[c].x()) << "," << fmt(corners[c].y());
    os << "\" fill=\"" << color << "\" fill-opacity=\"0.4\" stroke=\"" << color << "\"/>\n";
    const Eigen::Vector2d tip = b.center + fx;
    os << "<line class=\"front\" x1=\"" << fmt(b.center.x()) << "\" y1=\"" << fmt(b.center.y())
       << "\" x2=\"" << fmt(tip.x()) << "\" y2=\"" << fmt(tip.y()) << "\" stroke=\"#000000\"/>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

std::string write_pgm(const Eigen::MatrixXd& image) {
  std::ostringstream os;
  os << "P5\n" << image.cols() << " " << image.rows() << "\n65535\n";
  std::string out = os.str();
  const double lo = image.size() ? image.minCoeff() : 0.0;
  const double hi = image.size() ? image.maxCoeff() : 0.0;
  const double range = hi - lo;
  out.reserve(out.size() + 2 * image.size());
  for (Eigen::Index i = 0; i < image.rows(); ++i) {
    for (Eigen::Index j = 0; j < image.cols(); ++j) {
      unsigned v = 0;
      if (range > 0.0) v = static_cast<unsigned>(std::lround((image(i, j) - lo) / range * 65535.0));
      out.push_back(static_cast<char>((v >> 8) & 0xff));
      out.push_back(static_cast<char>(v & 0xff));
    }
  }
  return out;
}

}  // namespace scenegen
