#include "scenegen/corpus.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "scenegen/parallel.hpp"
#include "scenegen/rng.hpp"

namespace scenegen {
namespace {

constexpr double kPi = std::numbers::pi;

PlacementRule rule(std::string category, std::string anchor, std::vector<InstancePlacement> instances,
                   std::vector<double> multiplicity, Eigen::Vector3d size) {
  PlacementRule r;
  r.category = std::move(category);
  r.anchor = std::move(anchor);
  r.instances = std::move(instances);
  r.multiplicity = std::move(multiplicity);
  r.size = size;
  r.size_std = Eigen::Vector3d::Constant(0.03);
  r.offset_std = Eigen::Vector2d(0.05, 0.05);
  r.orientation_std = 0.02;
  return r;
}

// Frame of an object: origin, front direction angle.
struct Frame {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double angle = kPi / 2.0;
};

Eigen::Vector2d frame_point(const Frame& f, const Eigen::Vector2d& offset) {
  const Eigen::Vector2d front(std::cos(f.angle), std::sin(f.angle));
  const Eigen::Vector2d right(front.y(), -front.x());
  return f.origin + offset.x() * right + offset.y() * front;
}

int sample_count(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

Json vec_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

template <int N>
Eigen::Matrix<double, N, 1> vec_from(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != N) throw ParseError(path + ": expected an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!j[i].is_number()) throw ParseError(path + ": expected numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

SceneMatrix build_canonical(const CorpusSpec& spec, const ConfigPtr& config, Rng& rng) {
  const auto& cfg = *config;
  SceneMatrix m(config);
  std::vector<int> used(cfg.num_categories(), 0);
  // First placed object of each category, used as anchor frame.
  std::vector<std::optional<Frame>> anchors(cfg.num_categories());

  for (const auto& r : spec.rules) {
    const int k = cfg.find(r.category);
    Frame base;
    if (!r.anchor.empty()) {
      const int ak = cfg.find(r.anchor);
      if (!anchors[ak]) {
        // Keep the stream aligned regardless of anchor presence.
        (void)sample_count(r.multiplicity, rng);
        continue;
      }
      base = *anchors[ak];
    }
    const int count = sample_count(r.multiplicity, rng);
    for (int c = 0; c < count; ++c) {
      const auto& inst = r.instances[c];
      Eigen::Vector2d offset = inst.offset;
      offset.x() += r.offset_std.x() * rng.normal();
      offset.y() += r.offset_std.y() * rng.normal();
      const double angle = base.angle + inst.orientation + r.orientation_std * rng.normal();
      Eigen::Vector3d size = r.size;
      for (int a = 0; a < 3; ++a) size(a) = std::max(0.05, size(a) + r.size_std(a) * rng.normal());
      Eigen::VectorXd desc = descriptor_mean(k, spec.descriptor_dim, spec.descriptor_spacing);
      for (Eigen::Index a = 0; a < desc.size(); ++a) desc(a) += spec.descriptor_std * rng.normal();

      ObjectColumn col;
      col.existence = 1.0;
      const Eigen::Vector2d xy = frame_point(base, offset);
      const double z = r.elevation > 0.0 ? r.elevation : 0.5 * size.z();
      col.center = Eigen::Vector3d(xy.x(), xy.y(), z);
      col.front = Eigen::Vector2d(std::cos(angle), std::sin(angle));
      col.size = size;
      col.descriptor = desc;
      m.set_column(cfg.block_begin(k) + used[k], col);
      ++used[k];
      if (!anchors[k]) anchors[k] = Frame{xy, angle};
    }
  }
  return m;
}

}  // namespace

const std::vector<std::string>& bedroom_categories() {
  // The source vocabulary lists "computer" twice; the second entry is taken
  // as "chair" so that the desk/chair pair exists.
  static const std::vector<std::string> names = {
      "window",        "bed",          "wardrobe",       "stand",      "door",         "table lamp",
      "television",    "curtain",      "rug",            "computer",   "chair",        "chandelier",
      "desk",          "picture frame", "shelving",      "dresser",    "plant",        "table",
      "dressing table", "tv stand",    "books",          "ottoman",    "mirror",       "air conditioner",
      "floor lamp",    "wall lamp",    "sofa",           "vase",       "hanger",       "heater"};
  return names;
}

const std::vector<std::string>& livingroom_categories() {
  static const std::vector<std::string> names = {
      "sofa",       "window",     "table",       "chair",           "television",     "plant",
      "door",       "chandelier", "rug",         "curtain",         "tv stand",       "picture frame",
      "shelving",   "floor lamp", "loudspeaker", "vase",            "ottoman",        "computer",
      "books",      "fireplace",  "air conditioner", "wall lamp",   "wardrobe",       "clock",
      "stereo set", "kitchen cabinet", "desk",   "heater",          "fish tank",      "playstation"};
  return names;
}

Eigen::VectorXd descriptor_mean(int category, int descriptor_dim, double spacing) {
  Eigen::VectorXd v(descriptor_dim);
  int x = category;
  for (int a = 0; a < descriptor_dim; ++a) {
    v(a) = spacing * ((x % 3) - 1);
    x /= 3;
  }
  return v;
}

void CorpusSpec::validate() const {
  if (categories.empty()) throw ConfigError("corpus spec: no categories");
  if (multiplicity < 1) throw ConfigError("corpus spec: multiplicity must be >= 1");
  if (descriptor_dim < 0) throw ConfigError("corpus spec: descriptor_dim must be >= 0");
  if (num_scenes < 1) throw ConfigError("corpus spec: num_scenes must be >= 1");
  if (descriptor_std < 0.0) throw ConfigError("corpus spec: descriptor_std must be >= 0");
  if (nuisance.rotation_jitter_std < 0.0 || nuisance.translation_std < 0.0) {
    throw ConfigError("corpus spec: nuisance std must be >= 0");
  }
  std::set<std::string> names(categories.begin(), categories.end());
  if (names.size() != categories.size()) throw ConfigError("corpus spec: duplicate category names");
  std::vector<int> slots(categories.size(), 0);
  std::set<std::string> placed;
  for (const auto& r : rules) {
    const std::string where = "corpus spec rule '" + r.category + "'";
    auto it = std::find(categories.begin(), categories.end(), r.category);
    if (it == categories.end()) throw ConfigError(where + ": unknown category");
    if (!r.anchor.empty() && !placed.count(r.anchor)) {
      throw ConfigError(where + ": anchor '" + r.anchor + "' is not placed by an earlier rule");
    }
    if (r.multiplicity.empty() || r.multiplicity.size() > r.instances.size() + 1) {
      throw ConfigError(where + ": multiplicity needs between 1 and instances + 1 entries");
    }
    double sum = 0.0;
    for (double p : r.multiplicity) {
      if (p < 0.0) throw ConfigError(where + ": negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(where + ": multiplicity probabilities must sum to 1");
    if ((r.offset_std.array() < 0.0).any() || r.orientation_std < 0.0 || (r.size_std.array() < 0.0).any()) {
      throw ConfigError(where + ": std must be >= 0");
    }
    if ((r.size.array() <= 0.0).any()) throw ConfigError(where + ": sizes must be positive");
    const std::size_t k = static_cast<std::size_t>(it - categories.begin());
    slots[k] += static_cast<int>(r.multiplicity.size()) - 1;
    if (slots[k] > multiplicity) throw ConfigError(where + ": more instances than category slots");
    placed.insert(r.category);
  }
}

CategoryConfig corpus_config(const CorpusSpec& spec) {
  return CategoryConfig::uniform(spec.categories, spec.multiplicity, spec.descriptor_dim);
}

CorpusSpec default_bedroom_spec() {
  CorpusSpec s;
  s.name = "bedroom";
  s.categories = bedroom_categories();
  using V3 = Eigen::Vector3d;
  using V2 = Eigen::Vector2d;
  // Bed against the north wall, facing south.
  s.rules.push_back(rule("bed", "", {{V2(0.0, 1.0), kPi}}, {0.0, 1.0}, V3(2.0, 1.6, 0.5)));
  s.rules.back().offset_std = V2(0.15, 0.1);
  // Nightstands beside the head of the bed.
  s.rules.push_back(rule("stand", "bed", {{V2(-1.1, -0.75), 0.0}, {V2(1.1, -0.75), 0.0}}, {0.1, 0.3, 0.6},
                         V3(0.45, 0.5, 0.55)));
  s.rules.back().offset_std = V2(0.05, 0.05);
  s.rules.push_back(rule("table lamp", "stand", {{V2(0.0, 0.0), 0.0}}, {0.5, 0.5}, V3(0.25, 0.25, 0.4)));
  s.rules.back().elevation = 0.75;
  s.rules.push_back(rule("television", "bed", {{V2(0.0, 2.6), kPi}}, {0.3, 0.7}, V3(0.3, 1.1, 0.7)));
  s.rules.push_back(rule("rug", "bed", {{V2(0.0, 0.9), 0.0}}, {0.6, 0.4}, V3(1.4, 2.0, 0.02)));
  // Desk on the east wall facing west, chair in front of it facing the desk.
  s.rules.push_back(rule("desk", "", {{V2(1.65, -1.0), kPi / 2.0}}, {0.4, 0.6}, V3(0.6, 1.2, 0.75)));
  s.rules.push_back(rule("chair", "desk", {{V2(0.0, 0.6), kPi}}, {0.1, 0.9}, V3(0.5, 0.5, 0.9)));
  s.rules.push_back(rule("computer", "desk", {{V2(0.0, -0.1), 0.0}}, {0.5, 0.5}, V3(0.3, 0.5, 0.4)));
  s.rules.back().elevation = 0.95;
  s.rules.push_back(rule("window", "", {{V2(-2.0, 0.3), -kPi / 2.0}, {V2(0.3, -2.0), 0.0}}, {0.2, 0.6, 0.2},
                         V3(0.1, 1.2, 1.2)));
  s.rules.back().elevation = 1.5;
  s.rules.push_back(rule("wardrobe", "", {{V2(-1.5, 1.7), kPi}}, {0.4, 0.6}, V3(0.6, 1.0, 2.0)));
  s.rules.push_back(rule("door", "", {{V2(1.3, -2.0), 0.0}}, {0.5, 0.5}, V3(0.1, 0.9, 2.0)));
  s.rules.push_back(rule("plant", "", {{V2(1.7, 1.7), kPi}}, {0.7, 0.3}, V3(0.4, 0.4, 0.8)));
  return s;
}

CorpusSpec default_livingroom_spec() {
  CorpusSpec s;
  s.name = "livingroom";
  s.categories = livingroom_categories();
  using V3 = Eigen::Vector3d;
  using V2 = Eigen::Vector2d;
  // Sofa on the south side facing north.
  s.rules.push_back(rule("sofa", "", {{V2(0.0, -1.5), 0.0}}, {0.0, 1.0}, V3(0.9, 2.2, 0.8)));
  s.rules.back().offset_std = V2(0.15, 0.1);
  s.rules.push_back(rule("table", "sofa", {{V2(0.0, 1.0), 0.0}}, {0.1, 0.9}, V3(0.6, 1.1, 0.45)));
  s.rules.push_back(rule("television", "sofa", {{V2(0.0, 2.9), kPi}}, {0.2, 0.8}, V3(0.3, 1.3, 0.8)));
  s.rules.push_back(rule("chair", "table", {{V2(1.1, 0.0), kPi / 2.0}, {V2(-1.1, 0.0), -kPi / 2.0}},
                         {0.4, 0.4, 0.2}, V3(0.6, 0.6, 0.9)));
  s.rules.push_back(rule("plant", "sofa", {{V2(1.5, 0.0), 0.0}, {V2(-1.5, 0.0), 0.0}}, {0.4, 0.4, 0.2},
                         V3(0.4, 0.4, 0.9)));
  s.rules.push_back(rule("rug", "table", {{V2(0.0, 0.0), 0.0}}, {0.5, 0.5}, V3(1.6, 2.2, 0.02)));
  s.rules.push_back(rule("window", "", {{V2(-2.2, 0.0), -kPi / 2.0}}, {0.3, 0.7}, V3(0.1, 1.4, 1.3)));
  s.rules.back().elevation = 1.5;
  s.rules.push_back(rule("door", "", {{V2(2.2, 1.2), kPi / 2.0}}, {0.4, 0.6}, V3(0.1, 0.9, 2.0)));
  return s;
}

// ---------------------------------------------------------------------------

Json corpus_spec_to_json(const CorpusSpec& spec) {
  Json rules = Json::array();
  for (const auto& r : spec.rules) {
    Json inst = Json::array();
    for (const auto& p : r.instances) inst.push_back({{"offset", vec_json(p.offset)}, {"orientation", p.orientation}});
    rules.push_back({{"category", r.category},
                     {"anchor", r.anchor},
                     {"instances", inst},
                     {"offset_std", vec_json(r.offset_std)},
                     {"orientation_std", r.orientation_std},
                     {"multiplicity", r.multiplicity},
                     {"size", vec_json(r.size)},
                     {"size_std", vec_json(r.size_std)},
                     {"elevation", r.elevation}});
  }
  return Json{{"name", spec.name},
              {"categories", spec.categories},
              {"multiplicity", spec.multiplicity},
              {"descriptor_dim", spec.descriptor_dim},
              {"descriptor_spacing", spec.descriptor_spacing},
              {"descriptor_std", spec.descriptor_std},
              {"rules", rules},
              {"nuisance",
               {{"quantized_rotation", spec.nuisance.quantized_rotation},
                {"rotation_jitter_std", spec.nuisance.rotation_jitter_std},
                {"translation_std", spec.nuisance.translation_std},
                {"shuffle_slots", spec.nuisance.shuffle_slots}}},
              {"num_scenes", spec.num_scenes},
              {"seed", spec.seed}};
}

CorpusSpec corpus_spec_from_json(const Json& j) {
  CorpusSpec s;
  try {
    if (!j.is_object()) throw ParseError("corpus spec: expected an object");
    s.name = j.value("name", std::string());
    s.categories = j.at("categories").get<std::vector<std::string>>();
    s.multiplicity = j.value("multiplicity", s.multiplicity);
    s.descriptor_dim = j.value("descriptor_dim", s.descriptor_dim);
    s.descriptor_spacing = j.value("descriptor_spacing", s.descriptor_spacing);
    s.descriptor_std = j.value("descriptor_std", s.descriptor_std);
    s.num_scenes = j.value("num_scenes", s.num_scenes);
    s.seed = j.value("seed", s.seed);
    if (j.contains("nuisance")) {
      const Json& n = j.at("nuisance");
      s.nuisance.quantized_rotation = n.value("quantized_rotation", s.nuisance.quantized_rotation);
      s.nuisance.rotation_jitter_std = n.value("rotation_jitter_std", s.nuisance.rotation_jitter_std);
      s.nuisance.translation_std = n.value("translation_std", s.nuisance.translation_std);
      s.nuisance.shuffle_slots = n.value("shuffle_slots", s.nuisance.shuffle_slots);
    }
    const Json& rules = j.at("rules");
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const Json& rj = rules[i];
      const std::string path = "corpus spec rules[" + std::to_string(i) + "]";
      PlacementRule r;
      r.category = rj.at("category").get<std::string>();
      r.anchor = rj.value("anchor", std::string());
      for (const auto& ij : rj.at("instances")) {
        r.instances.push_back({vec_from<2>(ij.at("offset"), path + ".offset"), ij.value("orientation", 0.0)});
      }
      if (rj.contains("offset_std")) r.offset_std = vec_from<2>(rj["offset_std"], path + ".offset_std");
      r.orientation_std = rj.value("orientation_std", 0.0);
      r.multiplicity = rj.at("multiplicity").get<std::vector<double>>();
      if (rj.contains("size")) r.size = vec_from<3>(rj["size"], path + ".size");
      if (rj.contains("size_std")) r.size_std = vec_from<3>(rj["size_std"], path + ".size_std");
      r.elevation = rj.value("elevation", 0.0);
      s.rules.push_back(std::move(r));
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("corpus spec: ") + e.what());
  }
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ParseError(e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------

SceneMatrix zero_absent(const SceneMatrix& m) {
  SceneMatrix out = m;
  for (int j = 0; j < out.num_objects(); ++j) {
    if (!out.exists(j)) out.values().col(j).setZero();
  }
  return out;
}

GeneratedCorpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  return generate_corpus(spec, make_config(corpus_config(spec)));
}

GeneratedCorpus generate_corpus(const CorpusSpec& spec, ConfigPtr config) {
  spec.validate();
  const auto& cfg = *config;
  for (const auto& r : spec.rules) {
    if (cfg.find(r.category) < 0) throw ConfigError("generate_corpus: category '" + r.category + "' not in config");
  }
  if (cfg.descriptor_dim() != spec.descriptor_dim) throw ConfigError("generate_corpus: descriptor_dim mismatch");

  const int n = spec.num_scenes;
  GeneratedCorpus out;
  out.config = config;
  out.scenes.resize(n);
  out.canonical.resize(n);
  out.poses.resize(n);
  out.shuffles.resize(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(spec.seed, i);
    const SceneMatrix base = build_canonical(spec, config, rng);

    RigidMotion pose;
    const auto& nu = spec.nuisance;
    if (nu.quantized_rotation) pose.theta = 0.5 * kPi * rng.uniform_int(0, 3);
    pose.theta = wrap_angle(pose.theta + nu.rotation_jitter_std * rng.normal());
    pose.t = Eigen::Vector3d(nu.translation_std * rng.normal(), nu.translation_std * rng.normal(), 0.0);

    std::vector<std::vector<int>> sigma(cfg.num_categories());
    for (int k = 0; k < cfg.num_categories(); ++k) {
      sigma[k].resize(cfg.block_size(k));
      std::iota(sigma[k].begin(), sigma[k].end(), 0);
      if (nu.shuffle_slots) std::shuffle(sigma[k].begin(), sigma[k].end(), rng.engine());
    }
    PermutationSet shuffle(std::move(sigma));

    out.scenes[i] = zero_absent(apply_transform(base, pose, shuffle));
    out.canonical[i] =
        zero_absent(apply_permutation(apply_motion(out.scenes[i], pose.inverse()), shuffle.inverse()));
    out.poses[i] = pose;
    out.shuffles[i] = std::move(shuffle);
  });
  return out;
}

Json ground_truth_to_json(const GeneratedCorpus& corpus) {
  Json scenes = Json::array();
  for (std::size_t i = 0; i < corpus.scenes.size(); ++i) {
    scenes.push_back({{"pose", motion_to_json(corpus.poses[i])},
                      {"shuffle", permutation_to_json(corpus.shuffles[i])},
                      {"canonical", scene_to_json(corpus.canonical[i])}});
  }
  return Json{{"config", config_to_json(*corpus.config)}, {"scenes", scenes}};
}

}  // namespace scenegen
