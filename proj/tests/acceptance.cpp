// Acceptance suite: one PASS/FAIL line per criterion. Exit status 1 if any fails.

#include "CLI11.hpp"
#include "scenegen/assignment.hpp"
#include "scenegen/checkpoint.hpp"
#include "scenegen/cli.hpp"
#include "scenegen/log.hpp"
#include "scenegen/synthesis.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

using namespace scenegen;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Eigen::VectorXd random_vector(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

std::vector<std::vector<int>> all_perms(int m) {
  std::vector<int> p(m);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// Shared products of the pipeline criteria.
struct Context {
  std::string work;
  std::optional<GeneratedCorpus> corpus;
  std::optional<AlignmentResult> alignment;
  std::optional<TrainState> model;
  std::string train_dir;
};

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  Rng rng(101);
  int configs = 0, attempts = 0;
  double proj_err = 0.0;
  while (configs < 200 && attempts < 20000) {
    ++attempts;
    double e = 0.0;
    if (!projection_gradient_check(rng, e)) continue;
    ++configs;
    proj_err = std::max(proj_err, e);
  }

  GradientCheck nets;
  for (int trial = 0; trial < 10; ++trial) {
    const int a = rng.uniform_int(2, 8), b = rng.uniform_int(2, 8), c = rng.uniform_int(1, 5);
    nn::Network net({nn::fully_connected(a, b), nn::leaky_relu(b),
                     nn::sparsely_connected(b, nn::make_sc_mask(b, c + 2, 2, rng)), nn::leaky_relu(c + 2),
                     nn::fully_connected(c + 2, c)});
    net.init_he_uniform(rng);
    for (auto& l : net.layers()) {
      for (auto& v : l.bias) v = rng.normal(0.0, 0.1);
    }
    nets.merge(network_gradient_check(net, random_vector(a, rng), random_vector(c, rng)));
  }
  nn::Network conv({nn::conv2d(2, 3, 2, 2, 4, 4), nn::leaky_relu(12), nn::fully_connected(12, 1)});
  conv.init_he_uniform(rng);
  nets.merge(network_gradient_check(conv, random_vector(32, rng), random_vector(1, rng)));
  const auto cfg = small_config({2, 2, 1}, 2);
  const nn::ArrangementNets arr = nn::build_arrangement_nets(*cfg, {4, 0.05, 4, 0.2}, rng);
  const int in = cfg->rows() * cfg->num_objects();
  nets.merge(network_gradient_check(arr.encoder, random_vector(in, rng), random_vector(8, rng)));
  nets.merge(network_gradient_check(arr.decoder, random_vector(4, rng), random_vector(in, rng)));
  nets.merge(network_gradient_check(arr.discriminator, random_vector(in, rng), random_vector(1, rng)));
  const nn::Network image = nn::build_image_discriminator(16, 2, rng);
  nets.merge(network_gradient_check(image, random_vector(256, rng), random_vector(1, rng)));

  const double t = seconds_since(t0);
  Outcome o;
  o.pass = configs >= 200 && proj_err < 1e-4 && nets.max_error < 1e-5 && nets.skipped * 50 <= nets.checked + nets.skipped && t < 60;
  o.detail = "projection " + std::to_string(configs) + " configs max rel " + fmt("%.2e", proj_err) +
             " (< 1e-4); networks " + std::to_string(nets.checked) + " entries max rel " +
             fmt("%.2e", nets.max_error) + " (< 1e-5), " + std::to_string(nets.skipped) + " kink-skipped; " +
             fmt("%.1f", t) + " s (< 60 s)";
  return o;
}

Outcome exact_subsolvers() {
  const auto t0 = Clock::now();
  Rng rng(102);
  int assignment_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = rng.uniform_int(1, 7);
    Eigen::MatrixXd c(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) c(i, j) = trial % 4 == 0 ? rng.uniform_int(0, 3) : rng.normal();
    }
    const Assignment a = solve_assignment(c);
    double sum = 0.0;
    std::vector<int> seen(m, 0);
    for (int i = 0; i < m; ++i) {
      sum += c(i, a.permutation[i]);
      ++seen[a.permutation[i]];
    }
    const bool valid = std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
    assignment_ok += valid && std::abs(sum - brute_force_assignment(c)) < 1e-12;
  }

  int procrustes_ok = 0;
  const auto pcfg = small_config({3, 3}, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const SceneMatrix target = random_scene(pcfg, rng, 0.8);
    const SceneMatrix source = random_scene(pcfg, rng, 0.8);
    std::vector<double> w(pcfg->num_objects());
    for (auto& x : w) x = rng.uniform(0.1, 2.0);
    const RigidMotion t = solve_procrustes(target, source, w);
    procrustes_ok +=
        procrustes_objective(target, source, w, t) <= procrustes_grid_minimum(target, source, w, 720) + 1e-12;
  }

  const auto ccfg = small_config({4, 2}, 1);
  std::vector<SceneMatrix> scenes;
  for (int i = 0; i < 3; ++i) scenes.push_back(random_scene(ccfg, rng, 0.8));
  TrainConfig tc = tiny_train_config();
  TrainState s = init_state(scenes, tc);
  for (auto& m : s.latent) {
    for (Eigen::Index k = 0; k < m.values().size(); ++k) m.values().data()[k] += 0.3 * rng.normal();
  }
  s.motions[1] = random_motion(rng);
  const Eigen::MatrixXd cost = permutation_cost_matrix(s, 1, 0);
  // The entries outside category 0 add the same constant to every permutation.
  double offset = 0.0, spread = 0.0;
  const auto perms = all_perms(4);
  for (std::size_t n = 0; n < perms.size(); ++n) {
    s.permutations[1] = PermutationSet({perms[n], {0, 1}});
    double from_cost = 0.0;
    for (int a = 0; a < 4; ++a) from_cost += cost(a, perms[n][a]);
    const double diff = consistency_term(s, 1) - from_cost;
    if (n == 0) offset = diff;
    spread = std::max(spread, std::abs(diff - offset) / std::max(1.0, std::abs(offset)));
  }

  const double t = seconds_since(t0);
  Outcome o;
  o.pass = assignment_ok == 1000 && procrustes_ok == 100 && spread < 1e-12 && perms.size() == 24 && t < 60;
  o.detail = "assignment " + std::to_string(assignment_ok) + "/1000 equal brute force; procrustes " +
             std::to_string(procrustes_ok) + "/100 beat 720-grid; cost matrix over " +
             std::to_string(perms.size()) + " perms max deviation " + fmt("%.1e", spread) + "; " +
             fmt("%.1f", t) + " s (< 60 s)";
  return o;
}

double max_rotation_error(const std::vector<double>& got, const std::vector<double>& truth) {
  double e = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) e = std::max(e, std::abs(wrap_angle(got[i] - truth[i])));
  return e;
}

double max_translation_error(const std::vector<Eigen::Vector3d>& got, const std::vector<Eigen::Vector3d>& truth) {
  double e = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) e = std::max(e, (got[i] - truth[i]).norm());
  return e;
}

int exact_permutations(const std::vector<std::vector<int>>& got, const std::vector<std::vector<int>>& truth) {
  int n = 0;
  for (std::size_t i = 0; i < got.size(); ++i) n += got[i] == truth[i];
  return n;
}

Outcome synchronization() {
  const auto t0 = Clock::now();
  Rng rng(103);
  const SyncProblem p = make_sync_problem(100, 8, 4, rng);
  const auto theta = rotation_sync(p.graph, p.edges);
  const double rot = max_rotation_error(theta, p.theta);
  const double tr = max_translation_error(translation_sync(p.graph, p.edges, p.theta).t, p.t);
  const int perm = exact_permutations(permutation_sync(p.graph, p.edges, 0, 4), p.sigma);

  SyncProblem q = make_sync_problem(100, 8, 4, rng);
  corrupt_motions(q, 0.2, rng);
  const auto qtheta = rotation_sync(q.graph, q.edges);
  const double qrot = max_rotation_error(qtheta, q.theta);
  const double qtr = max_translation_error(translation_sync(q.graph, q.edges, qtheta).t, q.t);

  SyncProblem r = make_sync_problem(100, 8, 4, rng);
  corrupt_permutations(r, 0.15, rng);
  const int rperm = exact_permutations(permutation_sync(r.graph, r.edges, 0, 4), r.sigma);

  const double t = seconds_since(t0);
  const double deg = kPi / 180.0;
  Outcome o;
  o.pass = rot < 1e-6 && tr < 1e-9 && perm == 100 && qrot < 2 * deg && qtr < 0.1 && rperm >= 95 && t < 120;
  o.detail = "exact: rot " + fmt("%.1e", rot) + " rad (< 1e-6), trans " + fmt("%.1e", tr) + " m (< 1e-9), perms " +
             std::to_string(perm) + "/100; 20% corrupted: rot " + fmt("%.3f", qrot / deg) + " deg (< 2), trans " +
             fmt("%.4f", qtr) + " m (< 0.1); 15% corrupted perms: " + std::to_string(rperm) + "/100 (>= 95); " +
             fmt("%.1f", t) + " s (< 120 s)";
  return o;
}

Outcome alignment_pipeline(Context& ctx) {
  ctx.corpus = generate_corpus(default_bedroom_spec());
  const auto t0 = Clock::now();
  ctx.alignment = align_corpus(ctx.corpus->scenes);
  const double t = seconds_since(t0);
  // scene_i = P_i(canonical_i) and T_i maps scene_i into the common frame, so
  // theta(T_i) + theta(P_i) is one global rotation up to the estimation error.
  const int n = static_cast<int>(ctx.corpus->scenes.size());
  std::vector<double> composed(n);
  double cs = 0.0, sn = 0.0;
  for (int i = 0; i < n; ++i) {
    composed[i] = wrap_angle(ctx.alignment->poses.motions[i].theta + ctx.corpus->poses[i].theta);
    cs += std::cos(composed[i]);
    sn += std::sin(composed[i]);
  }
  const double gauge = std::atan2(sn, cs);
  int within = 0;
  for (double a : composed) within += std::abs(wrap_angle(a - gauge)) < 3.0 * kPi / 180.0;
  Outcome o;
  o.pass = within * 100 >= 95 * n && t < 600;
  o.detail = std::to_string(within) + "/" + std::to_string(n) + " scenes within 3 deg of the common gauge (>= 95%); " +
             fmt("%.1f", t) + " s (< 600 s)";
  return o;
}

Outcome training_monotonicity(Context& ctx) {
  Outcome o;
  if (!ctx.alignment) {
    o.detail = "no aligned corpus";
    return o;
  }
  const TrainConfig config;
  ctx.train_dir = ctx.work + "/train";
  fs::create_directories(ctx.train_dir);
  const auto t0 = Clock::now();
  TrainState s = init_state(ctx.alignment->aligned, config);
  const double initial = reconstruction_mse(s);
  write_training_outputs(ctx.train_dir, s);
  // Same schedule as run_training, with the consistency term observed around
  // every permutation and transform step.
  int increases = 0, calls = 0;
  auto observed = [&](void (*step)(TrainState&)) {
    const double before = total_consistency(s);
    step(s);
    const double after = total_consistency(s);
    ++calls;
    increases += after > before + 1e-12 * std::max(1.0, before);
  };
  while (s.outer_done < config.t_outer) {
    for (int inner = 0; inner < config.t_inner; ++inner) {
      step_generator(s);
      step_latent(s);
      observed(step_permutations);
      observed(step_transforms);
    }
    step_discriminators(s);
    ++s.outer_done;
    write_training_outputs(ctx.train_dir, s);
  }
  const double t = seconds_since(t0);
  const double final_mse = reconstruction_mse(s);
  o.pass = s.consistency_violations == 0 && increases == 0 && final_mse < 0.2 * initial && t < 3600;
  o.detail = std::to_string(calls) + " sub-solver steps, " + std::to_string(increases) + " increases, " +
             std::to_string(s.consistency_violations) + " violations (0); mse " + fmt("%.4f", final_mse) + " vs initial " +
             fmt("%.4f", initial) + " (" + fmt("%.1f", 100.0 * final_mse / initial) + "% < 20%); " +
             fmt("%.1f", t / 60.0) + " min (< 60 min)";
  ctx.model = std::move(s);
  return o;
}

int most_frequent(const std::vector<SceneMatrix>& scenes, int skip) {
  const CategoryConfig& cfg = scenes.front().config();
  std::vector<int> counts(cfg.num_categories(), 0);
  for (const auto& m : scenes) {
    for (int j = 0; j < m.num_objects(); ++j) counts[cfg.category_of(j)] += m.exists(j);
  }
  int best = -1;
  for (int k = 0; k < cfg.num_categories(); ++k) {
    if (k != skip && (best < 0 || counts[k] > counts[best])) best = k;
  }
  return best;
}

Outcome what_is_learned(Context& ctx) {
  Outcome o;
  if (!ctx.model) {
    o.detail = "no trained model";
    return o;
  }
  const TrainState& s = *ctx.model;
  const auto t0 = Clock::now();
  const std::vector<SceneMatrix> generated = synth_batch(s, 2000, 7);
  const std::vector<SceneMatrix>& training = s.latent;
  PairStatsSpec spec;
  spec.anchor = s.categories->find("bed");
  spec.second = s.categories->find("stand");
  const PairStats pt = pair_stats(training, spec);
  const PairStats pg = pair_stats(generated, spec);
  const double pos_tv = distribution_distance(pt.relative.mass, pg.relative.mass);
  const double ang_tv = distribution_distance(pt.angles, pg.angles);

  const ViewWindow window = default_window(training);
  const int first = most_frequent(training, -1);
  const int second = most_frequent(training, first);
  double abs_tv = 0.0;
  std::string names;
  for (int k : {first, second}) {
    const double tv = distribution_distance(absolute_heatmap(training, k, window, 16).mass,
                                            absolute_heatmap(generated, k, window, 16).mass);
    abs_tv = std::max(abs_tv, tv);
    names += " " + s.categories->category(k).name + " " + fmt("%.3f", tv);
  }
  const double t = seconds_since(t0);
  o.pass = pt.pairs > 0 && pg.pairs > 0 && pos_tv <= 0.35 && ang_tv <= 0.2 && abs_tv <= 0.35 && t < 300;
  o.detail = "bed->stand position tv " + fmt("%.3f", pos_tv) + " (<= 0.35), angle tv " + fmt("%.3f", ang_tv) +
             " (<= 0.2), pairs " + std::to_string(pt.pairs) + "/" + std::to_string(pg.pairs) + "; absolute tv" + names +
             " (<= 0.35); " + fmt("%.1f", t) + " s (< 300 s)";
  return o;
}

Outcome completion(Context& ctx) {
  Outcome o;
  if (!ctx.model) {
    o.detail = "no trained model";
    return o;
  }
  const TrainState& s = *ctx.model;
  const auto t0 = Clock::now();
  CompletionOptions opt;
  opt.alpha = 1e-3;
  opt.restarts = 8;
  int self_ok = 0, object_ok = 0;
  double worst_object = 0.0;
  for (int i = 0; i < 50; ++i) {
    Rng rng(1000 + i);
    Eigen::VectorXd z(s.nets.z_dim);
    for (int k = 0; k < z.size(); ++k) z(k) = rng.normal();
    // The generator output itself, before canonicalization, as the input.
    const SceneMatrix partial = unflatten(s.categories, decode(s, z));
    const CompletionResult full = complete(s, partial, full_mask(*s.categories), opt);
    self_ok += full.data_term <= 1e-2;

    std::vector<int> present;
    for (int j = 0; j < partial.num_objects(); ++j) {
      if (partial.exists(j)) present.push_back(j);
    }
    if (present.empty()) continue;
    const int col = present[rng.uniform_int(0, static_cast<int>(present.size()) - 1)];
    const CompletionResult one = complete(s, partial, column_mask(*s.categories, {col}), opt);
    const double residual = std::sqrt(one.data_term);
    worst_object = std::max(worst_object, residual);
    object_ok += residual <= 0.1;
  }
  const double t = seconds_since(t0);
  o.pass = self_ok >= 40 && object_ok == 50 && t < 300;
  o.detail = "self-completion " + std::to_string(self_ok) + "/50 with data term <= 1e-2 (>= 80%); single object " +
             std::to_string(object_ok) + "/50 within 0.1, worst " + fmt("%.4f", worst_object) + "; " + fmt("%.1f", t) +
             " s (< 300 s)";
  return o;
}

Outcome latency(Context& ctx) {
  Outcome o;
  if (!ctx.model) {
    o.detail = "no trained model";
    return o;
  }
  const TrainState& s = *ctx.model;
  Rng rng(104);
  std::vector<double> ms;
  for (int i = 0; i < 210; ++i) {
    const Eigen::VectorXd z = random_vector(s.nets.z_dim, rng);
    const auto t0 = Clock::now();
    const SceneMatrix m = synth(s, z);
    const double t = 1000.0 * seconds_since(t0);
    if (i >= 10 && m.num_objects() > 0) ms.push_back(t);
  }
  std::sort(ms.begin(), ms.end());
  const double median = ms[ms.size() / 2];
  o.pass = median < 30.0;
  o.detail = "median " + fmt("%.3f", median) + " ms (< 30 ms), max " + fmt("%.3f", ms.back()) + " ms over " +
             std::to_string(ms.size()) + " calls";
  return o;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), {"scenegen", "-q"});
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = run_cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return code;
}

std::map<std::string, std::string> directory_bytes(const std::string& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_text_file(e.path().string());
  }
  return files;
}

// Runs the command twice into the same output directory and compares every
// file. Returns an empty string on success.
std::string twice(const std::string& name, const std::string& out, std::vector<std::string> args) {
  args.push_back("--out");
  args.push_back(out);
  fs::remove_all(out);
  if (run(args) != 0) return name + " failed";
  const auto first = directory_bytes(out);
  fs::remove_all(out);
  if (run(args) != 0) return name + " failed on rerun";
  const auto second = directory_bytes(out);
  if (first.empty()) return name + " wrote nothing";
  if (first != second) return name + " outputs differ";
  return "";
}

Outcome determinism(Context& ctx) {
  Outcome o;
  const auto t0 = Clock::now();
  const std::string d = ctx.work + "/cli";
  fs::create_directories(d);
  std::vector<std::string> failures;
  int commands = 0;
  auto check = [&](const std::string& name, const std::string& out, std::vector<std::string> args) {
    ++commands;
    const std::string f = twice(name, out, std::move(args));
    if (!f.empty()) failures.push_back(f);
  };

  check("gen-corpus", d + "/gen", {"gen-corpus", "--spec", "bedroom", "--n", "40", "--seed", "3"});
  check("align", d + "/align", {"align", "--corpus", d + "/gen/corpus.jsonl", "--k", "8"});
  write_text_file(d + "/train.json", train_config_to_json(tiny_train_config()).dump());
  check("train", d + "/train", {"train", "--corpus", d + "/align/aligned.jsonl", "--config", d + "/train.json"});

  // CLI resume: drop the last checkpoint and continue from the one before.
  bool cli_resume = false;
  {
    const std::string last = d + "/train/" + checkpoint_name(tiny_train_config().t_outer);
    const std::string expected = read_text_file(last);
    fs::remove(last);
    cli_resume = run({"train", "--corpus", d + "/align/aligned.jsonl", "--config", d + "/train.json", "--out",
                      d + "/train", "--resume"}) == 0 &&
                 fs::exists(last) && read_text_file(last) == expected;
    if (!cli_resume) failures.push_back("train --resume differs");
  }

  if (ctx.model) {
    const std::string ck = ctx.train_dir;
    const std::string corpus = d + "/aligned_full.jsonl";
    write_corpus_file(corpus, ctx.model->latent);
    write_text_file(d + "/a.json", write_scene_json(ctx.model->latent[0]));
    check("synth", d + "/synth", {"synth", "--checkpoint", ck, "--n", "20", "--seed", "5", "--svg"});
    check("interp", d + "/interp",
          {"interp", "--checkpoint", ck, "--corpus", corpus, "--a", "0", "--b", "1", "--steps", "5"});
    check("complete", d + "/complete",
          {"complete", "--checkpoint", ck, "--partial", d + "/a.json", "--restarts", "2", "--iters", "100"});
    check("render", d + "/render", {"render", "--input", d + "/a.json", "--resolution", "64"});
    check("eval", d + "/eval",
          {"eval", "--checkpoint", ck, "--corpus", corpus, "--anchor", "bed", "--second", "stand", "--n", "200"});
  } else {
    failures.push_back("no trained model for the downstream commands");
  }

  // Resume of the full training run from its midpoint.
  bool full_resume = false;
  if (ctx.model) {
    const int mid = ctx.model->config.t_outer / 2;
    TrainState s = load_checkpoint(ctx.train_dir + "/" + checkpoint_name(mid));
    run_training(s);
    const std::string final_path = ctx.train_dir + "/" + checkpoint_name(ctx.model->config.t_outer);
    const auto bytes = serialize_state(s);
    const std::string saved = read_text_file(final_path);
    full_resume = s == *ctx.model && std::string(bytes.begin(), bytes.end()) == saved;
    if (!full_resume) failures.push_back("full train resume from " + checkpoint_name(mid) + " differs");
  }

  const double t = seconds_since(t0);
  o.pass = failures.empty();
  o.detail = std::to_string(commands) + " subcommands rerun byte-identical" +
             std::string(cli_resume ? ", cli resume equal" : "") +
             std::string(full_resume ? ", full run resumed mid-way equals uninterrupted" : "") + "; " +
             fmt("%.1f", t) + " s";
  for (const auto& f : failures) o.detail += "; " + f;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work-dir", work, "Directory for corpora, checkpoints and CLI outputs");
  app.add_option("--only", only, "Run only these criteria (1-9); later ones may need earlier products");
  CLI11_PARSE(app, argc, argv);
  set_log_level(LogLevel::Quiet);
  fs::create_directories(work);

  Context ctx;
  ctx.work = fs::absolute(work).string();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient fidelity", gradient_fidelity},
      {"exact sub-solvers", exact_subsolvers},
      {"synchronization recovery", synchronization},
      {"alignment pipeline", [&] { return alignment_pipeline(ctx); }},
      {"training monotonicity", [&] { return training_monotonicity(ctx); }},
      {"what is learned", [&] { return what_is_learned(ctx); }},
      {"completion", [&] { return completion(ctx); }},
      {"synthesis latency", [&] { return latency(ctx); }},
      {"determinism", [&] { return determinism(ctx); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
