#include "scenegen/scene_io.hpp"

#include <fstream>
#include <sstream>

namespace scenegen {
namespace {

const Json& field(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(path + "." + key + ": missing field");
  return *it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path + ": expected an integer");
  return j.get<int>();
}

template <int N>
Eigen::Matrix<double, N, 1> fixed_vector(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != N) {
    throw ParseError(path + ": expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

Json config_to_json(const CategoryConfig& config) {
  Json cats = Json::array();
  for (const auto& c : config.categories()) {
    cats.push_back({{"name", c.name},
                    {"max_multiplicity", c.max_multiplicity},
                    {"class_constant", c.class_constant}});
  }
  return {{"categories", cats}, {"descriptor_dim", config.descriptor_dim()}};
}

CategoryConfig config_from_json(const Json& j, const std::string& path) {
  const Json& cats = field(j, "categories", path);
  if (!cats.is_array()) throw ParseError(path + ".categories: expected an array");
  std::vector<Category> out;
  for (std::size_t k = 0; k < cats.size(); ++k) {
    const std::string p = path + ".categories[" + std::to_string(k) + "]";
    const Json& name = field(cats[k], "name", p);
    if (!name.is_string()) throw ParseError(p + ".name: expected a string");
    out.push_back({name.get<std::string>(),
                   integer(field(cats[k], "max_multiplicity", p), p + ".max_multiplicity"),
                   number(field(cats[k], "class_constant", p), p + ".class_constant")});
  }
  const int d = integer(field(j, "descriptor_dim", path), path + ".descriptor_dim");
  try {
    return CategoryConfig(std::move(out), d);
  } catch (const ConfigError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Json scene_to_json(const SceneMatrix& m) {
  const auto& cfg = m.config();
  Json objects = Json::array();
  for (int k = 0; k < cfg.num_categories(); ++k) {
    for (int a = 0; a < cfg.block_size(k); ++a) {
      const int j = cfg.block_begin(k) + a;
      const auto& v = m.values();
      objects.push_back({{"category", k},
                         {"slot", a},
                         {"existence", v(kExistenceRow, j)},
                         {"center", vector_json(v.block<3, 1>(kCenterRow, j))},
                         {"front", vector_json(v.block<2, 1>(kFrontRow, j))},
                         {"size", vector_json(v.block<3, 1>(kSizeRow, j))},
                         {"descriptor", vector_json(v.col(j).tail(cfg.descriptor_dim()))}});
    }
  }
  return {{"config", config_to_json(cfg)}, {"objects", objects}};
}

SceneMatrix scene_from_json(const Json& j, const ConfigPtr& shared) {
  CategoryConfig parsed = config_from_json(field(j, "config", "scene"), "scene.config");
  ConfigPtr cfg = (shared && *shared == parsed) ? shared : make_config(std::move(parsed));
  const Json& objects = field(j, "objects", "scene");
  if (!objects.is_array()) throw ParseError("scene.objects: expected an array");

  SceneMatrix m(cfg);
  std::vector<char> seen(cfg->num_objects(), 0);
  const int d = cfg->descriptor_dim();
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string p = "scene.objects[" + std::to_string(i) + "]";
    const Json& o = objects[i];
    const int k = integer(field(o, "category", p), p + ".category");
    const int a = integer(field(o, "slot", p), p + ".slot");
    if (k < 0 || k >= cfg->num_categories()) throw ParseError(p + ".category: out of range");
    if (a < 0 || a >= cfg->block_size(k)) throw ParseError(p + ".slot: out of range");
    const int col = cfg->block_begin(k) + a;
    if (seen[col]) {
      throw ParseError(p + ": duplicate slot " + std::to_string(a) + " of category '" +
                       cfg->category(k).name + "'");
    }
    seen[col] = 1;
    auto& v = m.values();
    v(kExistenceRow, col) = number(field(o, "existence", p), p + ".existence");
    v.block<3, 1>(kCenterRow, col) = fixed_vector<3>(field(o, "center", p), p + ".center");
    v.block<2, 1>(kFrontRow, col) = fixed_vector<2>(field(o, "front", p), p + ".front");
    v.block<3, 1>(kSizeRow, col) = fixed_vector<3>(field(o, "size", p), p + ".size");
    const Json& desc = field(o, "descriptor", p);
    if (!desc.is_array() || static_cast<int>(desc.size()) != d) {
      throw ParseError(p + ".descriptor: expected an array of " + std::to_string(d) + " numbers");
    }
    for (int r = 0; r < d; ++r) {
      v(kDescriptorRow + r, col) = number(desc[r], p + ".descriptor[" + std::to_string(r) + "]");
    }
  }
  for (int col = 0; col < cfg->num_objects(); ++col) {
    if (!seen[col]) {
      const int k = cfg->category_of(col);
      throw ParseError("scene.objects: missing slot " + std::to_string(col - cfg->block_begin(k)) +
                       " of category '" + cfg->category(k).name + "'");
    }
  }
  return m;
}

std::string write_scene_json(const SceneMatrix& m) { return scene_to_json(m).dump(2) + "\n"; }

SceneMatrix read_scene_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("scene: invalid JSON: ") + e.what());
  }
  return scene_from_json(j);
}

Json motion_to_json(const RigidMotion& t) {
  return {{"theta", t.theta}, {"t", {t.t.x(), t.t.y(), t.t.z()}}};
}

RigidMotion motion_from_json(const Json& j, const std::string& path) {
  RigidMotion t;
  t.theta = number(field(j, "theta", path), path + ".theta");
  t.t = fixed_vector<3>(field(j, "t", path), path + ".t");
  return t;
}

Json permutation_to_json(const PermutationSet& s) { return Json(s.maps()); }

PermutationSet permutation_from_json(const Json& j, const std::string& path) {
  try {
    return PermutationSet(j.get<std::vector<std::vector<int>>>());
  } catch (const Json::exception& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_corpus(std::ostream& os, const std::vector<SceneMatrix>& scenes) {
  for (const auto& s : scenes) os << scene_to_json(s).dump() << "\n";
}

std::vector<SceneMatrix> read_corpus(std::istream& is) {
  std::vector<SceneMatrix> out;
  ConfigPtr shared;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(scene_from_json(Json::parse(line), shared));
    } catch (const Json::parse_error& e) {
      throw ParseError("corpus line " + std::to_string(lineno) + ": invalid JSON: " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
    shared = out.back().config_ptr();
  }
  return out;
}

void write_corpus_file(const std::string& path, const std::vector<SceneMatrix>& scenes) {
  std::ostringstream os;
  write_corpus(os, scenes);
  write_text_file(path, os.str());
}

std::vector<SceneMatrix> read_corpus_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open corpus file '" + path + "'");
  return read_corpus(is);
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write '" + path + "'");
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace scenegen
