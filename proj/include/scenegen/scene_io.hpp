#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scenegen/scene.hpp"

namespace scenegen {

using Json = nlohmann::json;

Json config_to_json(const CategoryConfig& config);
// Throws ParseError with the JSON path of the offending field.
CategoryConfig config_from_json(const Json& j, const std::string& path = "config");

Json scene_to_json(const SceneMatrix& m);
// `shared` lets many scenes reuse one config object when the parsed config is
// equal to it.
SceneMatrix scene_from_json(const Json& j, const ConfigPtr& shared = nullptr);

std::string write_scene_json(const SceneMatrix& m);
SceneMatrix read_scene_json(std::string_view text);

Json motion_to_json(const RigidMotion& t);
RigidMotion motion_from_json(const Json& j, const std::string& path = "motion");
Json permutation_to_json(const PermutationSet& s);
PermutationSet permutation_from_json(const Json& j, const std::string& path = "permutation");

// JSON-lines corpus: one compact scene object per line.
void write_corpus(std::ostream& os, const std::vector<SceneMatrix>& scenes);
std::vector<SceneMatrix> read_corpus(std::istream& is);
void write_corpus_file(const std::string& path, const std::vector<SceneMatrix>& scenes);
std::vector<SceneMatrix> read_corpus_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace scenegen
