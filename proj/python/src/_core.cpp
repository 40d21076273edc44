#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "claimgraph/config.hpp"
#include "claimgraph/embed_store.hpp"
#include "claimgraph/pipeline.hpp"
#include "claimgraph/simgraph.hpp"
#include "claimgraph/stats.hpp"
#include "claimgraph/synth.hpp"

namespace py = pybind11;
namespace cg = claimgraph;
using nlohmann::json;

namespace {

using Matrix = py::array_t<float, py::array::c_style | py::array::forcecast>;

py::tuple store_to_python(const cg::EmbeddingStore& store) {
  Matrix m({store.size(), store.dimension()});
  auto view = m.mutable_unchecked<2>();
  for (std::size_t r = 0; r < store.size(); ++r) {
    const auto row = store.row(r);
    for (std::size_t j = 0; j < store.dimension(); ++j) view(r, j) = row[j];
  }
  return py::make_tuple(store.ids(), m);
}

cg::EmbeddingStore store_from_python(const std::vector<cg::RecordId>& ids, const Matrix& matrix) {
  if (matrix.ndim() != 2) {
    throw cg::Error("vectors must be a 2-D array");
  }
  if (static_cast<std::size_t>(matrix.shape(0)) != ids.size()) {
    throw cg::Error("ids and vectors differ in length");
  }
  cg::EmbeddingStore store(static_cast<std::size_t>(matrix.shape(1)));
  const auto d = static_cast<std::size_t>(matrix.shape(1));
  for (std::size_t r = 0; r < ids.size(); ++r) {
    store.add(ids[r], std::span<const float>(matrix.data(static_cast<py::ssize_t>(r), 0), d));
  }
  return store;
}

cg::PipelineOptions make_options(const std::string& workdir, const std::string& config_json,
                                 const std::string& input, const std::string& vectors, bool force) {
  cg::PipelineOptions o;
  o.config = cg::config_from_json(config_json.empty() ? json::object() : json::parse(config_json));
  o.workdir = workdir;
  o.input = input;
  o.vectors = vectors;
  o.force = force;
  return o;
}

py::dict outcome_dict(const cg::StageOutcome& o) {
  py::dict d;
  d["stage"] = std::string(cg::to_string(o.stage));
  d["skipped"] = o.skipped;
  d["seconds"] = o.seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the claimgraph pipeline.";

  static py::exception<cg::Error> error(m, "ClaimgraphError", PyExc_RuntimeError);
  static py::exception<cg::ConfigError> config_error(m, "ConfigError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const cg::ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const cg::Error& e) {
      py::set_error(error, e.what());
    } catch (const json::exception& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  m.def("default_config", [] { return cg::to_json(cg::PipelineConfig{}).dump(); },
        "Default pipeline configuration as a JSON string.");
  m.def("config_keys", &cg::config_keys);
  m.def(
      "validate_config",
      [](const std::string& config_json) { return cg::to_json(cg::config_from_json(json::parse(config_json))).dump(); },
      py::arg("config_json"), "Validates a JSON config and returns it with defaults filled in.");

  m.def(
      "cosine", [](std::vector<float> a, std::vector<float> b) { return cg::cosine(a, b); }, py::arg("a"),
      py::arg("b"));

  m.def(
      "load_vectors", [](const std::filesystem::path& path) { return store_to_python(cg::load_vector_file(path)); },
      py::arg("path"), "Reads a CGV1 file as (ids, float32 matrix of unit rows).");
  m.def(
      "write_vectors",
      [](const std::filesystem::path& path, const std::vector<cg::RecordId>& ids, const Matrix& vectors) {
        cg::write_vector_file(store_from_python(ids, vectors), path);
      },
      py::arg("path"), py::arg("ids"), py::arg("vectors"));

  m.def(
      "threshold_clusters",
      [](const std::vector<cg::RecordId>& ids, const Matrix& vectors, double threshold, bool exact) {
        auto store = std::make_shared<const cg::EmbeddingStore>(store_from_python(ids, vectors));
        cg::IndexParams p;
        if (exact) {
          p.n_probe_bits = p.table_bits;
        }
        py::gil_scoped_release release;
        const auto graph = cg::build_graph(cg::HyperplaneIndex::build(store, p), threshold);
        std::vector<std::vector<cg::RecordId>> out;
        for (auto& c : cg::connected_components(graph)) out.push_back(std::move(c.members));
        return out;
      },
      py::arg("ids"), py::arg("vectors"), py::arg("threshold") = 0.875, py::arg("exact") = false,
      "Connected components of the similarity-threshold graph, each sorted by id.");

  m.def(
      "synth_generate",
      [](const std::string& spec_json) {
        const auto corpus = cg::generate(cg::synth_spec_from_json(json::parse(spec_json)));
        std::string records;
        for (const auto& r : corpus.records) {
          records += r.dump();
          records += '\n';
        }
        auto [ids, matrix] = store_to_python(corpus.vectors).cast<std::pair<py::object, py::object>>();
        return py::make_tuple(records, ids, matrix, corpus.truth);
      },
      py::arg("spec_json"), "Returns (records JSONL, ids, vectors, truth labels).");

  m.def(
      "adjusted_rand_index",
      [](const std::vector<long long>& a, const std::vector<long long>& b) { return cg::stats::adjusted_rand_index(a, b); },
      py::arg("a"), py::arg("b"));
  m.def(
      "welch_t",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = cg::stats::welch_t(a, b);
        return py::make_tuple(r.t, r.df, r.p);
      },
      py::arg("a"), py::arg("b"), "Welch t-test: (t, df, two-sided p).");

  m.def(
      "run_stage",
      [](const std::string& stage, const std::string& workdir, const std::string& config_json,
         const std::string& input, const std::string& vectors, bool force) {
        const auto s = cg::parse_stage(stage);
        if (!s) {
          throw cg::Error("unknown stage \"" + stage + "\"");
        }
        const auto opts = make_options(workdir, config_json, input, vectors, force);
        cg::Logger log(opts.workdir / "log.jsonl", false);
        cg::StageOutcome outcome;
        {
          py::gil_scoped_release release;
          std::filesystem::create_directories(opts.workdir);
          outcome = cg::run_stage(*s, opts, log);
        }
        return outcome_dict(outcome);
      },
      py::arg("stage"), py::arg("workdir"), py::arg("config_json") = "", py::arg("input") = "",
      py::arg("vectors") = "", py::arg("force") = false);

  m.def(
      "run_all",
      [](const std::string& workdir, const std::string& config_json, const std::string& input,
         const std::string& vectors, bool force) {
        const auto opts = make_options(workdir, config_json, input, vectors, force);
        std::filesystem::create_directories(opts.workdir);
        cg::Logger log(opts.workdir / "log.jsonl", false);
        std::vector<cg::StageOutcome> outcomes;
        {
          py::gil_scoped_release release;
          outcomes = cg::run_all(opts, log);
        }
        py::list out;
        for (const auto& o : outcomes) out.append(outcome_dict(o));
        return out;
      },
      py::arg("workdir"), py::arg("config_json") = "", py::arg("input") = "", py::arg("vectors") = "",
      py::arg("force") = false);
}
