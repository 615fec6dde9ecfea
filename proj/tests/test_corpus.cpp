#include "doctest.h"
#include "scenegen/corpus.hpp"
#include "support.hpp"

#include <cmath>

using namespace scenegen;
using namespace testsupport;

namespace {

CorpusSpec pair_spec(int n, double offset_std) {
  CorpusSpec spec;
  spec.name = "pair";
  spec.categories = {"bed", "lamp"};
  spec.multiplicity = 2;
  spec.descriptor_dim = 2;
  spec.descriptor_std = 0.0;
  spec.num_scenes = n;
  spec.nuisance.quantized_rotation = false;
  spec.nuisance.rotation_jitter_std = 0.0;
  spec.nuisance.translation_std = 0.0;
  spec.nuisance.shuffle_slots = false;
  PlacementRule bed;
  bed.category = "bed";
  bed.instances = {{Eigen::Vector2d(0.5, -1.0), 0.0}};
  bed.multiplicity = {0.0, 1.0};
  bed.size = Eigen::Vector3d(2.0, 1.5, 0.5);
  PlacementRule lamp;
  lamp.category = "lamp";
  lamp.anchor = "bed";
  lamp.instances = {{Eigen::Vector2d(1.0, 0.5), kPi / 2.0}};
  lamp.multiplicity = {0.0, 1.0};
  lamp.offset_std = Eigen::Vector2d(offset_std, 2.0 * offset_std);
  lamp.size = Eigen::Vector3d(0.4, 0.4, 0.6);
  spec.rules = {bed, lamp};
  return spec;
}

}  // namespace

TEST_CASE("zero-noise corpus sits at the rule means") {
  const GeneratedCorpus c = generate_corpus(pair_spec(1, 0.0));
  REQUIRE(c.scenes.size() == 1);
  const SceneMatrix& m = c.scenes[0];
  CHECK(m.exists(0));
  CHECK_FALSE(m.exists(1));
  CHECK(m.center_xy(0).isApprox(Eigen::Vector2d(0.5, -1.0)));
  CHECK(m.front(0).isApprox(Eigen::Vector2d(0.0, 1.0)));
  // lamp: 1 to the bed's right (+x), 0.5 along its front (+y), facing left
  CHECK(m.center_xy(2).isApprox(Eigen::Vector2d(1.5, -0.5)));
  CHECK(m.front(2).isApprox(Eigen::Vector2d(-1.0, 0.0)));
  CHECK(m.values()(3, 2) == doctest::Approx(0.3));
  CHECK(m.values().col(0).tail(2) == descriptor_mean(0, 2, 0.3));
  CHECK(c.canonical[0] == m);
}

TEST_CASE("corpus generation is deterministic") {
  CorpusSpec spec = default_bedroom_spec();
  spec.num_scenes = 20;
  const GeneratedCorpus a = generate_corpus(spec), b = generate_corpus(spec);
  for (int i = 0; i < 20; ++i) {
    CHECK(a.scenes[i] == b.scenes[i]);
    CHECK(a.poses[i].theta == b.poses[i].theta);
  }
  spec.seed = 2;
  CHECK_FALSE(generate_corpus(spec).scenes[0] == a.scenes[0]);
}

TEST_CASE("ground truth inverts the nuisance exactly") {
  CorpusSpec spec = default_bedroom_spec();
  spec.num_scenes = 30;
  const GeneratedCorpus c = generate_corpus(spec);
  for (int i = 0; i < 30; ++i) {
    const SceneMatrix back =
        zero_absent(apply_permutation(apply_motion(c.scenes[i], c.poses[i].inverse()), c.shuffles[i].inverse()));
    CHECK(back == c.canonical[i]);
    const double q = c.poses[i].theta / (kPi / 2.0);
    CHECK(std::abs(q - std::round(q)) * kPi / 2.0 < 5.0 * 3.0 * kPi / 180.0);
  }
  const Json gt = ground_truth_to_json(c);
  CHECK(gt["scenes"].size() == 30);
}

TEST_CASE("property: empirical offsets match the rule") {
  const int n = 10000;
  const GeneratedCorpus c = generate_corpus(pair_spec(n, 0.1));
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& m : c.scenes) mean += m.center_xy(2) - m.center_xy(0);
  mean /= n;
  CHECK(std::abs(mean.x() - 1.0) < 3.0 * 0.1 / std::sqrt(n));
  CHECK(std::abs(mean.y() - 0.5) < 3.0 * 0.2 / std::sqrt(n));
}

TEST_CASE("default specs") {
  const CorpusSpec bed = default_bedroom_spec();
  const CorpusSpec liv = default_livingroom_spec();
  bed.validate();
  liv.validate();
  const CategoryConfig bc = corpus_config(bed), lc = corpus_config(liv);
  CHECK(bc.num_categories() == 30);
  CHECK(lc.num_categories() == 30);
  for (int k = 0; k < 30; ++k) {
    CHECK(bc.block_size(k) == 4);
    CHECK(lc.block_size(k) == 4);
  }
  CHECK(bc.find("bed") >= 0);
  CHECK(bc.find("stand") >= 0);
  CHECK(bc.find("desk") >= 0);
  CHECK(bc.find("chair") >= 0);
  CHECK(lc.find("sofa") >= 0);
  CHECK(lc.find("television") >= 0);
  CHECK(bed.num_scenes == 300);
}

TEST_CASE("corpus spec json and validation") {
  const CorpusSpec spec = pair_spec(5, 0.1);
  const CorpusSpec back = corpus_spec_from_json(corpus_spec_to_json(spec));
  CHECK(corpus_spec_to_json(back) == corpus_spec_to_json(spec));

  CorpusSpec bad = spec;
  bad.rules[1].multiplicity = {0.5, 0.6};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = spec;
  bad.rules[1].anchor = "sofa";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = spec;
  bad.num_scenes = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = spec;
  bad.rules[1].offset_std.x() = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
