#include "scenegen/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <regex>

namespace scenegen {
namespace {

const char* kind_name(nn::LayerKind k) {
  switch (k) {
    case nn::LayerKind::FullyConnected: return "fc";
    case nn::LayerKind::SparselyConnected: return "sc";
    case nn::LayerKind::Conv2d: return "conv2d";
    case nn::LayerKind::LeakyRelu: return "leaky_relu";
  }
  return "";
}

nn::LayerKind kind_from(const std::string& s, const std::string& path) {
  if (s == "fc") return nn::LayerKind::FullyConnected;
  if (s == "sc") return nn::LayerKind::SparselyConnected;
  if (s == "conv2d") return nn::LayerKind::Conv2d;
  if (s == "leaky_relu") return nn::LayerKind::LeakyRelu;
  throw ParseError(path + ".kind: unknown layer kind '" + s + "'");
}

Json gradients_json(const nn::Gradients& g) {
  Json a = Json::array();
  for (const auto& lg : g) a.push_back({{"weights", lg.weights}, {"bias", lg.bias}});
  return a;
}

nn::Gradients gradients_from(const Json& j) {
  nn::Gradients g;
  for (const auto& e : j) g.push_back({e.at("weights").get<std::vector<double>>(), e.at("bias").get<std::vector<double>>()});
  return g;
}

Json adam_json(const nn::AdamState& s) {
  return Json{{"lr", s.config.lr},   {"beta1", s.config.beta1}, {"beta2", s.config.beta2},
              {"eps", s.config.eps}, {"step", s.step},          {"m", gradients_json(s.m)},
              {"v", gradients_json(s.v)}};
}

nn::AdamState adam_from(const Json& j) {
  nn::AdamState s;
  s.config = {j.at("lr").get<double>(), j.at("beta1").get<double>(), j.at("beta2").get<double>(),
              j.at("eps").get<double>()};
  s.step = j.at("step").get<std::int64_t>();
  s.m = gradients_from(j.at("m"));
  s.v = gradients_from(j.at("v"));
  return s;
}

void check_adam(const nn::AdamState& a, const nn::Network& net, const std::string& what) {
  if (a.m.size() != net.layers().size() || a.v.size() != net.layers().size()) {
    throw ParseError("checkpoint: optimizer state '" + what + "' does not match its network");
  }
  for (std::size_t i = 0; i < a.m.size(); ++i) {
    const auto& l = net.layers()[i];
    if (a.m[i].weights.size() != l.weights.size() || a.v[i].weights.size() != l.weights.size() ||
        a.m[i].bias.size() != l.bias.size() || a.v[i].bias.size() != l.bias.size()) {
      throw ParseError("checkpoint: optimizer state '" + what + "' does not match its network");
    }
  }
}

std::vector<double> matrix_values(const SceneMatrix& m) {
  return std::vector<double>(m.values().data(), m.values().data() + m.values().size());
}

SceneMatrix scene_from_values(const ConfigPtr& cfg, const Json& j, const std::string& path) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != static_cast<std::size_t>(cfg->rows()) * cfg->num_objects()) {
    throw ParseError(path + ": scene size does not match the category config");
  }
  return SceneMatrix(cfg, Eigen::Map<const Eigen::MatrixXd>(v.data(), cfg->rows(), cfg->num_objects()));
}

}  // namespace

Json network_to_json(const nn::Network& net) {
  Json layers = Json::array();
  for (const auto& l : net.layers()) {
    const auto& s = l.spec;
    layers.push_back({{"kind", kind_name(s.kind)},
                      {"in_dim", s.in_dim},
                      {"out_dim", s.out_dim},
                      {"in_channels", s.in_channels},
                      {"out_channels", s.out_channels},
                      {"kernel", s.kernel},
                      {"stride", s.stride},
                      {"in_height", s.in_height},
                      {"in_width", s.in_width},
                      {"out_height", s.out_height},
                      {"out_width", s.out_width},
                      {"leaky_slope", s.leaky_slope},
                      {"weights", l.weights},
                      {"bias", l.bias},
                      {"conn_offset", l.conn_offset},
                      {"conn_input", l.conn_input}});
  }
  return Json{{"layers", layers}};
}

nn::Network network_from_json(const Json& j, const std::string& path) {
  std::vector<nn::Layer> layers;
  try {
    const Json& arr = j.at("layers");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const Json& lj = arr[i];
      const std::string p = path + ".layers[" + std::to_string(i) + "]";
      nn::Layer l;
      auto& s = l.spec;
      s.kind = kind_from(lj.at("kind").get<std::string>(), p);
      s.in_dim = lj.at("in_dim").get<int>();
      s.out_dim = lj.at("out_dim").get<int>();
      s.in_channels = lj.at("in_channels").get<int>();
      s.out_channels = lj.at("out_channels").get<int>();
      s.kernel = lj.at("kernel").get<int>();
      s.stride = lj.at("stride").get<int>();
      s.in_height = lj.at("in_height").get<int>();
      s.in_width = lj.at("in_width").get<int>();
      s.out_height = lj.at("out_height").get<int>();
      s.out_width = lj.at("out_width").get<int>();
      s.leaky_slope = lj.at("leaky_slope").get<double>();
      l.weights = lj.at("weights").get<std::vector<double>>();
      l.bias = lj.at("bias").get<std::vector<double>>();
      l.conn_offset = lj.at("conn_offset").get<std::vector<int>>();
      l.conn_input = lj.at("conn_input").get<std::vector<int>>();

      std::size_t expect_w = 0, expect_b = 0;
      switch (s.kind) {
        case nn::LayerKind::FullyConnected:
          expect_w = static_cast<std::size_t>(s.in_dim) * s.out_dim;
          expect_b = s.out_dim;
          break;
        case nn::LayerKind::SparselyConnected:
          if (l.conn_offset.size() != static_cast<std::size_t>(s.out_dim) + 1 || l.conn_offset.front() != 0 ||
              static_cast<std::size_t>(l.conn_offset.back()) != l.conn_input.size()) {
            throw ParseError(p + ": inconsistent connectivity");
          }
          for (std::size_t o = 0; o + 1 < l.conn_offset.size(); ++o) {
            if (l.conn_offset[o + 1] <= l.conn_offset[o]) throw ParseError(p + ": output unit without inputs");
          }
          for (int in : l.conn_input) {
            if (in < 0 || in >= s.in_dim) throw ParseError(p + ": connection index out of range");
          }
          expect_w = l.conn_input.size();
          expect_b = s.out_dim;
          break;
        case nn::LayerKind::Conv2d:
          expect_w = static_cast<std::size_t>(s.out_channels) * s.in_channels * s.kernel * s.kernel;
          expect_b = s.out_channels;
          break;
        case nn::LayerKind::LeakyRelu:
          if (s.in_dim != s.out_dim) throw ParseError(p + ": activation must preserve its dimension");
          break;
      }
      if (l.weights.size() != expect_w || l.bias.size() != expect_b) {
        throw ParseError(p + ": parameter count does not match the layer shape");
      }
      layers.push_back(std::move(l));
    }
  } catch (const Json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    return nn::Network(std::move(layers));
  } catch (const ConfigError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::vector<std::uint8_t> serialize_state(const TrainState& s) {
  Json scenes = Json::array();
  for (int i = 0; i < s.num_scenes(); ++i) {
    scenes.push_back({{"input", matrix_values(s.inputs[i])},
                      {"latent", matrix_values(s.latent[i])},
                      {"motion", motion_to_json(s.motions[i])},
                      {"permutation", permutation_to_json(s.permutations[i])}});
  }
  Json history = Json::array();
  for (const auto& r : s.history) history.push_back({r.outer, r.inner, r.phase, r.term, r.value});
  Json j{{"format", "scenegen-checkpoint"},
         {"version", kCheckpointVersion},
         {"config", train_config_to_json(s.config)},
         {"categories", config_to_json(*s.categories)},
         {"window", {{"center", {s.window.center.x(), s.window.center.y()}},
                     {"half_extent", s.window.half_extent},
                     {"resolution", s.window.resolution}}},
         {"z_dim", s.nets.z_dim},
         {"encoder", network_to_json(s.nets.encoder)},
         {"decoder", network_to_json(s.nets.decoder)},
         {"discriminator", network_to_json(s.nets.discriminator)},
         {"image_critic", network_to_json(s.image_critic)},
         {"adam_encoder", adam_json(s.adam_encoder)},
         {"adam_decoder", adam_json(s.adam_decoder)},
         {"adam_critic", adam_json(s.adam_critic)},
         {"adam_image_critic", adam_json(s.adam_image_critic)},
         {"scenes", scenes},
         {"outer_done", s.outer_done},
         {"generator_phases", s.generator_phases},
         {"discriminator_phases", s.discriminator_phases},
         {"consistency_violations", s.consistency_violations},
         {"rng", s.rng.serialize()},
         {"history", history}};
  return Json::to_cbor(j);
}

TrainState deserialize_state(const std::vector<std::uint8_t>& bytes) {
  Json j;
  try {
    j = Json::from_cbor(bytes);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("checkpoint: not a valid CBOR document: ") + e.what());
  }
  TrainState s;
  try {
    if (j.value("format", std::string()) != "scenegen-checkpoint") throw ParseError("checkpoint: unknown format");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw ParseError("checkpoint: unsupported version " + std::to_string(version));
    }
    s.config = train_config_from_json(j.at("config"));
    s.categories = make_config(config_from_json(j.at("categories"), "checkpoint.categories"));
    const Json& w = j.at("window");
    s.window.center = Eigen::Vector2d(w.at("center")[0].get<double>(), w.at("center")[1].get<double>());
    s.window.half_extent = w.at("half_extent").get<double>();
    s.window.resolution = w.at("resolution").get<int>();
    s.nets.z_dim = j.at("z_dim").get<int>();
    s.nets.encoder = network_from_json(j.at("encoder"), "checkpoint.encoder");
    s.nets.decoder = network_from_json(j.at("decoder"), "checkpoint.decoder");
    s.nets.discriminator = network_from_json(j.at("discriminator"), "checkpoint.discriminator");
    s.image_critic = network_from_json(j.at("image_critic"), "checkpoint.image_critic");
    s.adam_encoder = adam_from(j.at("adam_encoder"));
    s.adam_decoder = adam_from(j.at("adam_decoder"));
    s.adam_critic = adam_from(j.at("adam_critic"));
    s.adam_image_critic = adam_from(j.at("adam_image_critic"));
    check_adam(s.adam_encoder, s.nets.encoder, "encoder");
    check_adam(s.adam_decoder, s.nets.decoder, "decoder");
    check_adam(s.adam_critic, s.nets.discriminator, "discriminator");
    check_adam(s.adam_image_critic, s.image_critic, "image_critic");
    const int input_dim = s.categories->rows() * s.categories->num_objects();
    if (s.nets.encoder.input_dim() != input_dim || s.nets.encoder.output_dim() != 2 * s.nets.z_dim ||
        s.nets.decoder.input_dim() != s.nets.z_dim || s.nets.decoder.output_dim() != input_dim ||
        s.nets.discriminator.input_dim() != input_dim || s.nets.discriminator.output_dim() != 1 ||
        s.image_critic.input_dim() != s.window.resolution * s.window.resolution ||
        s.image_critic.output_dim() != 1) {
      throw ParseError("checkpoint: network shapes do not match the category config");
    }
    const Json& scenes = j.at("scenes");
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      const std::string p = "checkpoint.scenes[" + std::to_string(i) + "]";
      s.inputs.push_back(scene_from_values(s.categories, scenes[i].at("input"), p + ".input"));
      s.latent.push_back(scene_from_values(s.categories, scenes[i].at("latent"), p + ".latent"));
      s.motions.push_back(motion_from_json(scenes[i].at("motion"), p + ".motion"));
      s.permutations.push_back(permutation_from_json(scenes[i].at("permutation"), p + ".permutation"));
      if (!s.permutations.back().conforms(*s.categories)) throw ParseError(p + ".permutation: wrong shape");
    }
    s.outer_done = j.at("outer_done").get<int>();
    s.generator_phases = j.at("generator_phases").get<int>();
    s.discriminator_phases = j.at("discriminator_phases").get<int>();
    s.consistency_violations = j.at("consistency_violations").get<int>();
    s.rng.deserialize(j.at("rng").get<std::string>());
    for (const auto& r : j.at("history")) {
      s.history.push_back({r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<std::string>(),
                           r.at(3).get<std::string>(), r.at(4).get<double>()});
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  return s;
}

void save_checkpoint(const std::string& path, const TrainState& s) {
  const auto bytes = serialize_state(s);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error("cannot write checkpoint '" + tmp + "'");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error("cannot write checkpoint '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_state(bytes);
}

std::string checkpoint_name(int outer_done) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%03d.bin", outer_done);
  return buf;
}

void write_training_outputs(const std::string& dir, const TrainState& s) {
  std::filesystem::create_directories(dir);
  save_checkpoint((std::filesystem::path(dir) / checkpoint_name(s.outer_done)).string(), s);
  write_text_file((std::filesystem::path(dir) / "loss_trace.csv").string(), loss_trace_csv(s.history));
}

std::string latest_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) return {};
  static const std::regex pattern(R"(ckpt_(\d+)\.bin)");
  int best = -1;
  std::string path;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) {
      const int n = std::stoi(m[1].str());
      if (n > best) {
        best = n;
        path = entry.path().string();
      }
    }
  }
  return path;
}

}  // namespace scenegen
