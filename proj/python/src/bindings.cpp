#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scenegen/align.hpp"
#include "scenegen/assignment.hpp"
#include "scenegen/checkpoint.hpp"
#include "scenegen/cli.hpp"
#include "scenegen/corpus.hpp"
#include "scenegen/synthesis.hpp"
#include "scenegen/topview.hpp"
#include "scenegen/trainer.hpp"

namespace py = pybind11;
using namespace scenegen;

namespace {

CorpusSpec spec_from(const std::string& name_or_json) {
  if (name_or_json == "bedroom") return default_bedroom_spec();
  if (name_or_json == "livingroom") return default_livingroom_spec();
  return corpus_spec_from_json(Json::parse(name_or_json));
}

}  // namespace

PYBIND11_MODULE(_scenegen, m) {
  m.doc() = "Scene arrangement synthesis: corpora, joint alignment, training and synthesis";

  // Later registrations are tried first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidInputError>(m, "InvalidInputError", PyExc_ValueError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<CategoryConfig, std::shared_ptr<CategoryConfig>>(m, "CategoryConfig")
      .def_static(
          "uniform",
          [](const std::vector<std::string>& names, int multiplicity, int descriptor_dim) {
            return std::make_shared<CategoryConfig>(CategoryConfig::uniform(names, multiplicity, descriptor_dim));
          },
          py::arg("names"), py::arg("multiplicity"), py::arg("descriptor_dim"))
      .def_static("from_json",
                  [](const std::string& s) { return std::make_shared<CategoryConfig>(config_from_json(Json::parse(s))); })
      .def("to_json", [](const CategoryConfig& c) { return config_to_json(c).dump(); })
      .def_property_readonly("num_categories", &CategoryConfig::num_categories)
      .def_property_readonly("descriptor_dim", &CategoryConfig::descriptor_dim)
      .def_property_readonly("rows", &CategoryConfig::rows)
      .def_property_readonly("num_objects", &CategoryConfig::num_objects)
      .def_property_readonly("names",
                             [](const CategoryConfig& c) {
                               std::vector<std::string> n;
                               for (const auto& k : c.categories()) n.push_back(k.name);
                               return n;
                             })
      .def("block_begin", &CategoryConfig::block_begin)
      .def("block_size", &CategoryConfig::block_size)
      .def("category_of", &CategoryConfig::category_of)
      .def("find", [](const CategoryConfig& c, const std::string& name) { return c.find(name); });

  py::class_<SceneMatrix>(m, "Scene")
      .def(py::init([](std::shared_ptr<CategoryConfig> c, const Eigen::MatrixXd& values) {
             return SceneMatrix(std::const_pointer_cast<const CategoryConfig>(c), values);
           }),
           py::arg("config"), py::arg("values"))
      .def_static("from_json", [](const std::string& s) { return read_scene_json(s); })
      .def("to_json", &write_scene_json)
      .def_property(
          "values", [](const SceneMatrix& s) { return s.values(); },
          [](SceneMatrix& s, const Eigen::MatrixXd& v) {
            if (v.rows() != s.rows() || v.cols() != s.num_objects()) throw ConfigError("values: shape mismatch");
            s.values() = v;
          })
      .def_property_readonly("config",
                             [](const SceneMatrix& s) { return std::const_pointer_cast<CategoryConfig>(s.config_ptr()); })
      .def("exists", &SceneMatrix::exists)
      .def("count_existing", &SceneMatrix::count_existing)
      .def("__eq__", &SceneMatrix::operator==);

  py::class_<RigidMotion>(m, "RigidMotion")
      .def(py::init([](double theta, const Eigen::Vector3d& t) { return RigidMotion{theta, t}; }),
           py::arg("theta") = 0.0, py::arg("t") = Eigen::Vector3d::Zero())
      .def_readwrite("theta", &RigidMotion::theta)
      .def_readwrite("t", &RigidMotion::t)
      .def("inverse", &RigidMotion::inverse)
      .def("__repr__", [](const RigidMotion& r) {
        return "RigidMotion(theta=" + std::to_string(r.theta) + ", t=[" + std::to_string(r.t.x()) + ", " +
               std::to_string(r.t.y()) + ", " + std::to_string(r.t.z()) + "])";
      });

  py::class_<PermutationSet>(m, "PermutationSet")
      .def(py::init<std::vector<std::vector<int>>>(), py::arg("maps"))
      .def_property_readonly("maps", &PermutationSet::maps)
      .def("inverse", &PermutationSet::inverse)
      .def("is_identity", &PermutationSet::is_identity);

  m.def("apply_transform", &apply_transform, py::arg("scene"), py::arg("motion"), py::arg("permutation"));
  m.def("canonicalize", [](const SceneMatrix& s) { return canonicalize(s); });
  m.def(
      "solve_assignment",
      [](const Eigen::MatrixXd& cost) {
        const Assignment a = solve_assignment(cost);
        return py::make_tuple(a.permutation, a.total_cost);
      },
      py::arg("cost"), "Exact minimum-cost assignment: (permutation, total cost)");
  m.def(
      "solve_procrustes",
      [](const SceneMatrix& target, const SceneMatrix& source, std::optional<std::vector<double>> weights) {
        const std::vector<double> w = weights ? *weights : existence_weights(target, source);
        return solve_procrustes(target, source, w);
      },
      py::arg("target"), py::arg("source"), py::arg("weights") = py::none());

  m.def(
      "project",
      [](const SceneMatrix& s, double half_extent, int resolution, std::optional<Eigen::Vector2d> center) {
        ViewWindow w;
        w.half_extent = half_extent;
        w.resolution = resolution;
        if (center) w.center = *center;
        return project(s, w).values;
      },
      py::arg("scene"), py::arg("half_extent") = 3.0, py::arg("resolution") = 128, py::arg("center") = py::none());
  m.def("render_svg", [](const SceneMatrix& s) { return render_svg(s); });

  py::class_<GeneratedCorpus>(m, "GeneratedCorpus")
      .def_readonly("scenes", &GeneratedCorpus::scenes)
      .def_readonly("canonical", &GeneratedCorpus::canonical)
      .def_readonly("poses", &GeneratedCorpus::poses)
      .def_readonly("shuffles", &GeneratedCorpus::shuffles);
  m.def(
      "generate_corpus",
      [](const std::string& spec, std::optional<int> n, std::optional<std::uint64_t> seed) {
        CorpusSpec s = spec_from(spec);
        if (n) s.num_scenes = *n;
        if (seed) s.seed = *seed;
        return generate_corpus(s);
      },
      py::arg("spec") = "bedroom", py::arg("n") = py::none(), py::arg("seed") = py::none(),
      "Synthetic corpus from 'bedroom', 'livingroom' or a corpus spec JSON string");

  py::class_<AlignmentResult>(m, "AlignmentResult")
      .def_readonly("aligned", &AlignmentResult::aligned)
      .def_property_readonly("motions", [](const AlignmentResult& r) { return r.poses.motions; })
      .def_property_readonly("permutations", [](const AlignmentResult& r) { return r.poses.permutations; })
      .def("report", [](const AlignmentResult& r) { return alignment_report(r).dump(); });
  m.def(
      "align_corpus",
      [](const std::vector<SceneMatrix>& scenes, int k) {
        AlignOptions o;
        o.k = k;
        py::gil_scoped_release release;
        return align_corpus(scenes, o);
      },
      py::arg("scenes"), py::arg("k") = 0);

  py::class_<TrainState>(m, "Model")
      .def_property_readonly("z_dim", [](const TrainState& s) { return s.nets.z_dim; })
      .def_property_readonly("outer_done", [](const TrainState& s) { return s.outer_done; })
      .def_property_readonly("consistency_violations", [](const TrainState& s) { return s.consistency_violations; })
      .def_property_readonly("latent", [](const TrainState& s) { return s.latent; })
      .def_property_readonly("config", [](const TrainState& s) { return std::const_pointer_cast<CategoryConfig>(s.categories); })
      .def("reconstruction_mse", &reconstruction_mse)
      .def("synth", &synth, py::arg("z"))
      .def(
          "synth_batch", [](const TrainState& s, int n, std::uint64_t seed) { return synth_batch(s, n, seed); },
          py::arg("n"), py::arg("seed") = 1)
      .def("encode", &encode_mean, py::arg("scene"))
      .def(
          "complete",
          [](const TrainState& s, const SceneMatrix& partial, std::optional<Eigen::MatrixXd> mask, double alpha,
             int restarts, int iters, std::uint64_t seed) {
            CompletionOptions o;
            o.alpha = alpha;
            o.restarts = restarts;
            o.iters = iters;
            o.seed = seed;
            std::vector<int> present;
            for (int j = 0; j < partial.num_objects(); ++j) {
              if (partial.exists(j)) present.push_back(j);
            }
            const CompletionMask mk = mask ? *mask : column_mask(partial.config(), present);
            py::gil_scoped_release release;
            const CompletionResult r = complete(s, partial, mk, o);
            py::gil_scoped_acquire acquire;
            py::dict d;
            d["scene"] = r.scene;
            d["z"] = r.z;
            d["motion"] = r.motion;
            d["permutation"] = r.permutation;
            d["data_term"] = r.data_term;
            d["objective"] = r.objective;
            return d;
          },
          py::arg("partial"), py::arg("mask") = py::none(), py::arg("alpha") = 1e-3, py::arg("restarts") = 8,
          py::arg("iters") = 500, py::arg("seed") = 1);
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
  m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("model"));
  m.def(
      "train",
      [](const std::vector<SceneMatrix>& aligned, const std::string& config_json) {
        const TrainConfig c = train_config_from_json(Json::parse(config_json.empty() ? "{}" : config_json));
        py::gil_scoped_release release;
        return train(aligned, c);
      },
      py::arg("aligned"), py::arg("config_json") = "", "Train on an aligned corpus; config keys as in the CLI JSON");

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "scenegen");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Run a scenegen subcommand; returns the exit code");
}
