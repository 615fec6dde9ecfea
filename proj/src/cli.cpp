#include "scenegen/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scenegen/align.hpp"
#include "scenegen/checkpoint.hpp"
#include "scenegen/corpus.hpp"
#include "scenegen/log.hpp"
#include "scenegen/parallel.hpp"
#include "scenegen/synthesis.hpp"
#include "scenegen/topview.hpp"
#include "scenegen/trainer.hpp"

namespace scenegen {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags of one subcommand that can also come from a JSON file given with
// --config. Flags on the command line win over file values.
class OptionSet {
 public:
  explicit OptionSet(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "JSON file with option values; flags take precedence");
  }

  template <typename T>
  CLI::Option* add(const std::string& key, T& var, const std::string& help) {
    CLI::Option* opt = app_->add_option("--" + key, var, help)->capture_default_str();
    entries_.push_back({key, opt, [&var](const Json& j) { var = j.get<T>(); }, [&var] { return Json(var); }});
    return opt;
  }

  CLI::Option* flag(const std::string& key, bool& var, const std::string& help) {
    CLI::Option* opt = app_->add_flag("--" + key, var, help);
    entries_.push_back({key, opt, [&var](const Json& j) { var = j.get<bool>(); }, [&var] { return Json(var); }});
    return opt;
  }

  // Fills options not given on the command line from the config file.
  // Returns the file entries that are not options of this subcommand.
  Json resolve() {
    Json rest = Json::object();
    if (config_path_.empty()) return rest;
    Json file;
    try {
      file = Json::parse(read_text_file(config_path_));
    } catch (const Json::exception& e) {
      throw UsageError("--config: " + config_path_ + " is not valid JSON: " + e.what());
    }
    if (!file.is_object()) throw UsageError("--config: expected a JSON object");
    for (auto it = file.begin(); it != file.end(); ++it) {
      const Entry* entry = nullptr;
      for (const auto& e : entries_) {
        if (e.key == it.key()) entry = &e;
      }
      if (!entry) {
        rest[it.key()] = it.value();
        continue;
      }
      if (entry->option->count() > 0) continue;
      try {
        entry->set(it.value());
        from_file_.push_back(entry->option);
      } catch (const Json::exception& e) {
        throw UsageError("--config: bad value for '" + it.key() + "': " + e.what());
      }
    }
    return rest;
  }

  bool given(const CLI::Option* opt) const {
    return opt->count() > 0 || std::find(from_file_.begin(), from_file_.end(), opt) != from_file_.end();
  }

  Json to_json() const {
    Json j = Json::object();
    for (const auto& e : entries_) j[e.key] = e.get();
    return j;
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* option;
    std::function<void(const Json&)> set;
    std::function<Json()> get;
  };
  CLI::App* app_;
  std::string config_path_;
  std::vector<Entry> entries_;
  std::vector<const CLI::Option*> from_file_;
};

void require_no_extra(const Json& rest) {
  if (!rest.empty()) throw UsageError("--config: unknown key '" + rest.begin().key() + "'");
}

void prepare_out(const std::string& out) {
  if (out.empty()) throw UsageError("--out is required");
  fs::create_directories(out);
}

std::string out_path(const std::string& out, const std::string& name) { return (fs::path(out) / name).string(); }

void write_run_config(const std::string& out, const std::string& command, Json options, Json extra = {}) {
  Json j{{"command", command}, {"options", std::move(options)}};
  if (!extra.is_null()) j.update(extra);
  write_text_file(out_path(out, "run_config.json"), j.dump(2) + "\n");
}

void write_json(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

TrainState open_checkpoint(const std::string& path) {
  if (fs::is_directory(path)) {
    const std::string latest = latest_checkpoint(path);
    if (latest.empty()) throw Error("no checkpoint found in '" + path + "'");
    return load_checkpoint(latest);
  }
  return load_checkpoint(path);
}

std::vector<SceneMatrix> read_scenes(const std::string& path) {
  if (fs::path(path).extension() == ".jsonl") return read_corpus_file(path);
  return {read_scene_json(read_text_file(path))};
}

Json codes_json(const std::vector<Eigen::VectorXd>& codes) {
  Json j = Json::array();
  for (const auto& z : codes) j.push_back(std::vector<double>(z.data(), z.data() + z.size()));
  return j;
}

std::string indexed(const std::string& stem, int i, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%03d", i);
  return stem + buf + ext;
}

CorpusSpec named_spec(const std::string& spec) {
  if (spec == "bedroom") return default_bedroom_spec();
  if (spec == "livingroom") return default_livingroom_spec();
  return corpus_spec_from_json(Json::parse(read_text_file(spec)));
}

int category_index(const CategoryConfig& cfg, const std::string& name) {
  const int k = cfg.find(name);
  if (k < 0) throw Error("unknown category '" + name + "'");
  return k;
}

// --- subcommands -------------------------------------------------------------

struct Common {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;
};

void add_common(OptionSet& o, Common& c, bool seed = true) {
  if (seed) o.add("seed", c.seed, "Random seed");
  o.add("threads", c.threads, "Worker thread cap (0 = all cores)");
  o.add("out", c.out, "Output directory");
}

struct GenCorpusArgs {
  Common common;
  std::string spec = "bedroom";
  int n = 300;
};

void run_gen_corpus(const GenCorpusArgs& a, const Json& options) {
  CorpusSpec spec = named_spec(a.spec);
  spec.num_scenes = a.n;
  spec.seed = a.common.seed;
  spec.validate();
  const GeneratedCorpus corpus = generate_corpus(spec);
  write_corpus_file(out_path(a.common.out, "corpus.jsonl"), corpus.scenes);
  write_corpus_file(out_path(a.common.out, "canonical.jsonl"), corpus.canonical);
  write_json(out_path(a.common.out, "ground_truth.json"), ground_truth_to_json(corpus));
  write_json(out_path(a.common.out, "spec.json"), corpus_spec_to_json(spec));
  write_run_config(a.common.out, "gen-corpus", options);
  std::cout << "wrote " << corpus.scenes.size() << " scenes to " << a.common.out << '\n';
}

struct AlignArgs {
  Common common;
  std::string corpus;
  int k = 0;
};

void run_align(const AlignArgs& a, const Json& options) {
  const auto scenes = read_corpus_file(a.corpus);
  AlignOptions opts;
  opts.k = a.k;
  const AlignmentResult r = align_corpus(scenes, opts);
  write_corpus_file(out_path(a.common.out, "aligned.jsonl"), r.aligned);
  write_json(out_path(a.common.out, "alignment.json"), alignment_report(r));
  write_run_config(a.common.out, "align", options);
  std::cout << "aligned " << r.aligned.size() << " scenes over " << r.edges.size() << " edges\n";
}

struct TrainArgs {
  Common common;
  std::string corpus;
  bool resume = false;
  double lambda = 0, mu = 0, gamma = 0, width_scale = 0;
  int t_outer = 0, t_inner = 0, z_dim = 0, batch_size = 0, gen_epochs = 0, disc_epochs = 0, latent_iters = 0,
      image_resolution = 0;
};

using TrainOverrides = std::vector<std::pair<CLI::Option*, std::function<void(TrainConfig&)>>>;

void run_train(const TrainArgs& a, TrainConfig tc, const OptionSet& set, const TrainOverrides& overrides) {
  for (const auto& [opt, apply] : overrides) {
    if (set.given(opt)) apply(tc);
  }
  const Json options = set.to_json();
  tc.validate();
  const std::string latest = a.resume ? latest_checkpoint(a.common.out) : std::string();
  TrainState s;
  if (!latest.empty()) {
    s = load_checkpoint(latest);
    if (train_config_to_json(s.config) != train_config_to_json(tc)) {
      // Only the schedule length may change on resume.
      TrainConfig probe = tc;
      probe.t_outer = s.config.t_outer;
      if (train_config_to_json(probe) != train_config_to_json(s.config)) {
        throw Error("--resume: training config differs from the checkpoint in " + latest);
      }
      s.config.t_outer = tc.t_outer;
    }
    std::cout << "resuming from " << latest << '\n';
  } else {
    if (a.corpus.empty()) throw UsageError("--corpus is required");
    s = init_state(read_corpus_file(a.corpus), tc);
  }
  write_run_config(a.common.out, "train", options, Json{{"train", train_config_to_json(s.config)}});
  write_training_outputs(a.common.out, s);
  run_training(s, [&](const TrainState& st) {
    write_training_outputs(a.common.out, st);
    std::cout << "outer " << st.outer_done << '/' << st.config.t_outer << " reconstruction mse "
              << reconstruction_mse(st) << '\n';
  });
  std::cout << "consistency violations: " << s.consistency_violations << '\n';
}

struct SynthArgs {
  Common common;
  std::string checkpoint;
  int n = 1;
  bool svg = false;
};

void run_synth(const SynthArgs& a, const Json& options) {
  const TrainState s = open_checkpoint(a.checkpoint);
  std::vector<Eigen::VectorXd> codes;
  const auto start = std::chrono::steady_clock::now();
  const auto scenes = synth_batch(s, a.n, a.common.seed, &codes);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  write_corpus_file(out_path(a.common.out, "scenes.jsonl"), scenes);
  write_json(out_path(a.common.out, "codes.json"), codes_json(codes));
  if (a.svg) {
    for (int i = 0; i < a.n; ++i) write_text_file(out_path(a.common.out, indexed("scene", i, ".svg")), render_svg(scenes[i], s.window));
  }
  write_run_config(a.common.out, "synth", options);
  std::cout << "synthesized " << a.n << " scenes, " << (a.n > 0 ? ms / a.n : 0.0) << " ms per scene\n";
}

struct InterpArgs {
  Common common;
  std::string checkpoint, corpus, a, b;
  int steps = 5;
};

SceneMatrix pick_scene(const std::string& corpus, const std::string& ref, const char* flag) {
  if (corpus.empty()) return read_scene_json(read_text_file(ref));
  const auto scenes = read_corpus_file(corpus);
  std::size_t pos = 0;
  long idx = -1;
  try {
    idx = std::stol(ref, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != ref.size() || idx < 0 || idx >= static_cast<long>(scenes.size())) {
    throw UsageError(std::string(flag) + ": expected a scene index into --corpus");
  }
  return scenes[idx];
}

void run_interp(const InterpArgs& a, const Json& options) {
  const TrainState s = open_checkpoint(a.checkpoint);
  const Interpolation r = interpolate(s, pick_scene(a.corpus, a.a, "--a"), pick_scene(a.corpus, a.b, "--b"), a.steps);
  write_corpus_file(out_path(a.common.out, "interpolation.jsonl"), r.scenes);
  write_json(out_path(a.common.out, "codes.json"), codes_json(r.codes));
  for (std::size_t i = 0; i < r.scenes.size(); ++i) {
    write_text_file(out_path(a.common.out, indexed("step", static_cast<int>(i), ".svg")), render_svg(r.scenes[i], s.window));
  }
  write_run_config(a.common.out, "interp", options);
  std::cout << "wrote " << r.scenes.size() << " interpolation steps\n";
}

struct CompleteArgs {
  Common common;
  std::string checkpoint, partial, mask;
  double alpha = 1e-3;
  int restarts = 8;
  int iters = 500;
};

CompletionMask read_mask(const std::string& path, const SceneMatrix& partial) {
  if (path.empty()) {
    std::vector<int> cols;
    for (int j = 0; j < partial.num_objects(); ++j) {
      if (partial.exists(j)) cols.push_back(j);
    }
    return column_mask(partial.config(), cols);
  }
  const Json j = Json::parse(read_text_file(path));
  const auto rows = j.get<std::vector<std::vector<double>>>();
  CompletionMask m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(m.cols())) throw ParseError("mask: ragged rows");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

void run_complete(const CompleteArgs& a, const Json& options) {
  const TrainState s = open_checkpoint(a.checkpoint);
  const SceneMatrix partial = read_scene_json(read_text_file(a.partial));
  const CompletionMask mask = read_mask(a.mask, partial);
  CompletionOptions o;
  o.alpha = a.alpha;
  o.restarts = a.restarts;
  o.iters = a.iters;
  o.seed = a.common.seed;
  const CompletionResult r = complete(s, partial, mask, o);
  write_text_file(out_path(a.common.out, "completed.json"), write_scene_json(r.scene));
  write_text_file(out_path(a.common.out, "completed.svg"), render_svg(r.scene, s.window));
  write_json(out_path(a.common.out, "completion.json"),
             Json{{"data_term", r.data_term},
                  {"objective", r.objective},
                  {"restart", r.restart},
                  {"z", std::vector<double>(r.z.data(), r.z.data() + r.z.size())},
                  {"motion", motion_to_json(r.motion)},
                  {"permutation", r.permutation.num_categories() ? permutation_to_json(r.permutation) : Json()}});
  write_run_config(a.common.out, "complete", options);
  std::cout << "completion data term " << r.data_term << " (restart " << r.restart << ")\n";
}

struct RenderArgs {
  Common common;
  std::string input;
  int resolution = 128;
};

void run_render(const RenderArgs& a, const Json& options) {
  const auto scenes = read_scenes(a.input);
  const ViewWindow window = default_window(scenes, a.resolution);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const int n = static_cast<int>(i);
    write_text_file(out_path(a.common.out, indexed("scene", n, ".svg")), render_svg(scenes[i], window));
    write_text_file(out_path(a.common.out, indexed("scene", n, ".pgm")), write_pgm(project(scenes[i], window)));
  }
  write_run_config(a.common.out, "render", options);
  std::cout << "rendered " << scenes.size() << " scenes\n";
}

struct EvalArgs {
  Common common;
  std::string checkpoint, corpus, stats_spec;
  std::string anchor = "bed", second = "stand";
  int n = 2000;
  int grid = 16;
  double half_extent = 2.0;
};

void run_eval(EvalArgs a, const Json& options) {
  if (!a.stats_spec.empty()) {
    const Json j = Json::parse(read_text_file(a.stats_spec));
    a.anchor = j.value("anchor", a.anchor);
    a.second = j.value("second", a.second);
    a.grid = j.value("grid", a.grid);
    a.half_extent = j.value("half_extent", a.half_extent);
  }
  const TrainState s = open_checkpoint(a.checkpoint);
  const auto training = a.corpus.empty() ? s.latent : read_corpus_file(a.corpus);
  const auto generated = synth_batch(s, a.n, a.common.seed);
  const auto& cfg = *s.categories;

  PairStatsSpec spec;
  spec.anchor = category_index(cfg, a.anchor);
  spec.second = category_index(cfg, a.second);
  spec.grid = a.grid;
  spec.half_extent = a.half_extent;
  const PairStats pt = pair_stats(training, spec);
  const PairStats pg = pair_stats(generated, spec);

  std::vector<std::pair<int, int>> freq;
  for (int k = 0; k < cfg.num_categories(); ++k) {
    int count = 0;
    for (const auto& m : training) {
      for (int b = 0; b < cfg.block_size(k); ++b) count += m.exists(cfg.block_begin(k) + b);
    }
    freq.push_back({-count, k});
  }
  std::sort(freq.begin(), freq.end());

  Json absolute = Json::array();
  for (int r = 0; r < std::min(2, cfg.num_categories()); ++r) {
    const int k = freq[r].second;
    const Heatmap ht = absolute_heatmap(training, k, s.window, a.grid);
    const Heatmap hg = absolute_heatmap(generated, k, s.window, a.grid);
    const std::string name = cfg.category(k).name;
    write_text_file(out_path(a.common.out, "absolute_" + name + "_training.pgm"), write_pgm(ht.mass));
    write_text_file(out_path(a.common.out, "absolute_" + name + "_generated.pgm"), write_pgm(hg.mass));
    absolute.push_back({{"category", name},
                        {"tv", distribution_distance(ht.mass, hg.mass)},
                        {"training", heatmap_to_json(ht)},
                        {"generated", heatmap_to_json(hg)}});
  }
  write_text_file(out_path(a.common.out, "pair_training.pgm"), write_pgm(pt.relative.mass));
  write_text_file(out_path(a.common.out, "pair_generated.pgm"), write_pgm(pg.relative.mass));
  auto angles = [](const Eigen::Vector4d& v) { return std::vector<double>(v.data(), v.data() + 4); };
  const Json stats{{"anchor", a.anchor},
                   {"second", a.second},
                   {"generated_scenes", a.n},
                   {"pair",
                    {{"position_tv", distribution_distance(pt.relative.mass, pg.relative.mass)},
                     {"angle_tv", distribution_distance(pt.angles, pg.angles)},
                     {"training_pairs", pt.pairs},
                     {"generated_pairs", pg.pairs},
                     {"training_angles", angles(pt.angles)},
                     {"generated_angles", angles(pg.angles)},
                     {"training", heatmap_to_json(pt.relative)},
                     {"generated", heatmap_to_json(pg.relative)}}},
                   {"absolute", absolute},
                   {"reconstruction_mse", reconstruction_mse(s)}};
  write_json(out_path(a.common.out, "stats.json"), stats);
  write_run_config(a.common.out, "eval", options);
  std::cout << "pair position tv " << stats["pair"]["position_tv"].get<double>() << ", angle tv "
            << stats["pair"]["angle_tv"].get<double>() << '\n';
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Scene arrangement synthesis toolkit"};
  app.require_subcommand(1);
  app.add_flag_callback("-v,--verbose", [] { set_log_level(LogLevel::Info); }, "Progress messages on stderr");
  app.add_flag_callback("-q,--quiet", [] { set_log_level(LogLevel::Quiet); }, "Suppress warnings");

  std::vector<std::unique_ptr<OptionSet>> sets;
  auto command = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sets.push_back(std::make_unique<OptionSet>(sub));
    return std::make_pair(sub, sets.back().get());
  };
  auto common_setup = [](const Common& c) {
    set_max_threads(c.threads);
    prepare_out(c.out);
  };

  GenCorpusArgs gen;
  {
    auto [sub, o] = command("gen-corpus", "Generate a synthetic scene corpus with ground truth");
    add_common(*o, gen.common);
    o->add("spec", gen.spec, "bedroom, livingroom or a corpus spec JSON file");
    o->add("n", gen.n, "Number of scenes");
    sub->callback([&, o = o] {
      require_no_extra(o->resolve());
      common_setup(gen.common);
      run_gen_corpus(gen, o->to_json());
    });
  }

  AlignArgs align;
  {
    auto [sub, o] = command("align", "Jointly align a corpus (poses and slot orders)");
    add_common(*o, align.common);
    o->add("corpus", align.corpus, "Input corpus (.jsonl)");
    o->add("k", align.k, "Neighbors per scene (0 = min(64, N-1))");
    sub->callback([&, o = o] {
      require_no_extra(o->resolve());
      if (align.corpus.empty()) throw UsageError("--corpus is required");
      common_setup(align.common);
      run_align(align, o->to_json());
    });
  }

  TrainArgs train;
  TrainOverrides overrides;
  {
    auto [sub, o] = command("train", "Train the generator; checkpoints go to --out");
    add_common(*o, train.common);
    o->add("corpus", train.corpus, "Aligned corpus (.jsonl)");
    o->flag("resume", train.resume, "Continue from the latest checkpoint in --out");
    const TrainConfig d;
    train.lambda = d.lambda;
    train.mu = d.mu;
    train.gamma = d.gamma;
    train.width_scale = d.arch.width_scale;
    train.t_outer = d.t_outer;
    train.t_inner = d.t_inner;
    train.z_dim = d.arch.z_dim;
    train.batch_size = d.batch_size;
    train.gen_epochs = d.gen_epochs;
    train.disc_epochs = d.disc_epochs;
    train.latent_iters = d.latent_iters;
    train.image_resolution = d.image_resolution;
    auto over = [&](CLI::Option* opt, std::function<void(TrainConfig&)> f) { overrides.emplace_back(opt, std::move(f)); };
    over(o->add("lambda", train.lambda, "Arrangement critic weight"), [&](TrainConfig& c) { c.lambda = train.lambda; });
    over(o->add("mu", train.mu, "Image critic weight"), [&](TrainConfig& c) { c.mu = train.mu; });
    over(o->add("gamma", train.gamma, "Latent consistency weight"), [&](TrainConfig& c) { c.gamma = train.gamma; });
    over(o->add("width-scale", train.width_scale, "Network width multiplier"),
         [&](TrainConfig& c) { c.arch.width_scale = train.width_scale; });
    over(o->add("t-outer", train.t_outer, "Outer iterations"), [&](TrainConfig& c) { c.t_outer = train.t_outer; });
    over(o->add("t-inner", train.t_inner, "Inner iterations"), [&](TrainConfig& c) { c.t_inner = train.t_inner; });
    over(o->add("z-dim", train.z_dim, "Latent code size"), [&](TrainConfig& c) { c.arch.z_dim = train.z_dim; });
    over(o->add("batch-size", train.batch_size, "Minibatch size"), [&](TrainConfig& c) { c.batch_size = train.batch_size; });
    over(o->add("gen-epochs", train.gen_epochs, "Generator epochs per inner iteration"),
         [&](TrainConfig& c) { c.gen_epochs = train.gen_epochs; });
    over(o->add("disc-epochs", train.disc_epochs, "Critic epochs per outer iteration"),
         [&](TrainConfig& c) { c.disc_epochs = train.disc_epochs; });
    over(o->add("latent-iters", train.latent_iters, "Gradient steps per latent scene"),
         [&](TrainConfig& c) { c.latent_iters = train.latent_iters; });
    over(o->add("image-resolution", train.image_resolution, "Top-view resolution for the image critic"),
         [&](TrainConfig& c) { c.image_resolution = train.image_resolution; });
    sub->callback([&, o = o] {
      const Json rest = o->resolve();
      TrainConfig tc;
      try {
        tc = train_config_from_json(rest);
      } catch (const Error& e) {
        throw UsageError(std::string("--config: ") + e.what());
      }
      tc.seed = train.common.seed;
      common_setup(train.common);
      run_train(train, tc, *o, overrides);
    });
  }

  SynthArgs synth_args;
  {
    auto [sub, o] = command("synth", "Sample scenes from a trained model");
    add_common(*o, synth_args.common);
    o->add("checkpoint", synth_args.checkpoint, "Checkpoint file or training directory")->required();
    o->add("n", synth_args.n, "Number of scenes");
    o->flag("svg", synth_args.svg, "Also write one SVG per scene");
    sub->callback([&, o = o] {
      require_no_extra(o->resolve());
      common_setup(synth_args.common);
      run_synth(synth_args, o->to_json());
    });
  }

  InterpArgs interp;
  {
    auto [sub, o] = command("interp", "Interpolate between two scenes in latent space");
    add_common(*o, interp.common);
    o->add("checkpoint", interp.checkpoint, "Checkpoint file or training directory")->required();
    o->add("a", interp.a, "First scene: JSON file, or index into --corpus")->required();
    o->add("b", interp.b, "Second scene: JSON file, or index into --corpus")->required();
    o->add("corpus", interp.corpus, "Corpus (.jsonl) that --a and --b index into");
    o->add("steps", interp.steps, "Number of scenes along the path (>= 2)");
    sub->callback([&, o = o] {
      require_no_extra(o->resolve());
      common_setup(interp.common);
      run_interp(interp, o->to_json());
    });
  }

  CompleteArgs comp;
  {
    auto [sub, o] = command("complete", "Complete a partial scene");
    add_common(*o, comp.common);
    o->add("checkpoint", comp.checkpoint, "Checkpoint file or training directory")->required();
    o->add("partial", comp.partial, "Partial scene (JSON)")->required();
    o->add("mask", comp.mask, "Mask JSON (rows of 0/1); default: every entry of the present objects");
    o->add("alpha", comp.alpha, "Code regularization weight");
    o->add("restarts", comp.restarts, "Number of starting codes");
    o->add("iters", comp.iters, "Gradient steps per start");
    sub->callback([&, o = o] {
      require_no_extra(o->resolve());
      common_setup(comp.common);
      run_complete(comp, o->to_json());
    });
  }

  RenderArgs render;
  {
    auto [sub, o] = command("render", "Write SVG drawings and top-view PGM images");
    add_common(*o, render.common, false);
    o->add("input", render.input, "Scene (.json) or corpus (.jsonl)")->required();
    o->add("resolution", render.resolution, "Top-view resolution");
    sub->callback([&, o = o] {
      require_no_extra(o->resolve());
      common_setup(render.common);
      run_render(render, o->to_json());
    });
  }

  EvalArgs eval;
  {
    auto [sub, o] = command("eval", "Compare generated and training distributions");
    add_common(*o, eval.common);
    o->add("checkpoint", eval.checkpoint, "Checkpoint file or training directory")->required();
    o->add("corpus", eval.corpus, "Training corpus (.jsonl); default: the checkpoint's latent scenes");
    o->add("stats-spec", eval.stats_spec, "JSON with anchor, second, grid and half_extent");
    o->add("anchor", eval.anchor, "Anchor category");
    o->add("second", eval.second, "Second category");
    o->add("n", eval.n, "Number of generated scenes");
    o->add("grid", eval.grid, "Heatmap resolution");
    o->add("half-extent", eval.half_extent, "Half extent of the relative heatmap (m)");
    sub->callback([&, o = o] {
      require_no_extra(o->resolve());
      common_setup(eval.common);
      run_eval(eval, o->to_json());
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace scenegen
