#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "scenegen/scene.hpp"
#include "scenegen/scene_io.hpp"

namespace scenegen {

// Category vocabularies (30 names each, most frequent first).
const std::vector<std::string>& bedroom_categories();
const std::vector<std::string>& livingroom_categories();

// One placed instance: offset in the anchor frame (x to the anchor's right,
// y along its front) and orientation relative to the anchor's front.
struct InstancePlacement {
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();
  double orientation = 0.0;
};

// Places up to instances.size() objects of `category` relative to the first
// present object of `anchor` (empty anchor: the room frame, whose front is +y).
struct PlacementRule {
  std::string category;
  std::string anchor;
  std::vector<InstancePlacement> instances;
  Eigen::Vector2d offset_std = Eigen::Vector2d::Zero();
  double orientation_std = 0.0;
  // Probabilities of placing 0, 1, ... instances.
  std::vector<double> multiplicity;
  Eigen::Vector3d size = Eigen::Vector3d::Ones();  // front, side, up
  Eigen::Vector3d size_std = Eigen::Vector3d::Zero();
  double elevation = 0.0;  // z of the object center above the floor; 0 = size.up / 2
};

struct NuisanceSpec {
  bool quantized_rotation = true;  // uniform over {0, pi/2, pi, 3pi/2}
  double rotation_jitter_std = 3.0 * 3.14159265358979323846 / 180.0;
  double translation_std = 0.5;
  bool shuffle_slots = true;
};

struct CorpusSpec {
  std::string name;
  std::vector<std::string> categories;
  int multiplicity = 4;
  int descriptor_dim = 4;
  double descriptor_spacing = 0.3;
  double descriptor_std = 0.1;
  std::vector<PlacementRule> rules;
  NuisanceSpec nuisance;
  int num_scenes = 300;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

CorpusSpec default_bedroom_spec();
CorpusSpec default_livingroom_spec();

Json corpus_spec_to_json(const CorpusSpec& spec);
CorpusSpec corpus_spec_from_json(const Json& j);

CategoryConfig corpus_config(const CorpusSpec& spec);

// Per-category descriptor mean: base-3 digits of the category index on a
// lattice with the given spacing.
Eigen::VectorXd descriptor_mean(int category, int descriptor_dim, double spacing);

struct GeneratedCorpus {
  ConfigPtr config;
  std::vector<SceneMatrix> scenes;     // observed: posed and slot-shuffled
  std::vector<SceneMatrix> canonical;  // shuffle^-1(pose^-1(scene)), absent slots zeroed
  std::vector<RigidMotion> poses;
  std::vector<PermutationSet> shuffles;
};

GeneratedCorpus generate_corpus(const CorpusSpec& spec);
GeneratedCorpus generate_corpus(const CorpusSpec& spec, ConfigPtr config);

// Scene with every absent column set to zero (values copied otherwise).
SceneMatrix zero_absent(const SceneMatrix& m);

Json ground_truth_to_json(const GeneratedCorpus& corpus);

}  // namespace scenegen
