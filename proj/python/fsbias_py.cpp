/*
 * Copyright 2026 The fsbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>

#include <nlohmann/json.hpp>

#include "fsbias/corpus.hpp"
#include "fsbias/embed.hpp"
#include "fsbias/error.hpp"
#include "fsbias/experiment.hpp"
#include "fsbias/metrics.hpp"
#include "fsbias/select.hpp"
#include "fsbias/task.hpp"

namespace py = pybind11;
using namespace fsbias;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<Post> to_posts(const py::list& items) {
  std::vector<Post> posts;
  for (const auto& item : items) {
    const auto d = item.cast<py::dict>();
    Post p{d["id"].cast<std::string>(), d["text"].cast<std::string>(), std::nullopt};
    if (d.contains("label") && !d["label"].is_none()) p.label = d["label"].cast<std::string>();
    posts.push_back(std::move(p));
  }
  return posts;
}

py::list shots_to_python(const ShotSet& set) {
  py::list out;
  for (const auto& s : set.shots) {
    py::dict d;
    d["id"] = s.post.id;
    d["text"] = s.post.text;
    d["label"] = s.true_label;
    d["similarity"] = s.similarity ? py::cast(*s.similarity) : py::none();
    out.append(d);
  }
  return out;
}

TokenizerConfig tokenizer(bool lowercase, std::size_t min_token_length) {
  TokenizerConfig c;
  c.lowercase = lowercase;
  c.min_token_length = min_token_length;
  return c;
}

py::dict f1_to_python(const F1Report& r) {
  py::dict d;
  d["f1_binary_pos"] = r.f1_binary_pos ? py::cast(*r.f1_binary_pos) : py::none();
  d["f1_macro"] = r.f1_macro;
  d["f1_weighted"] = r.f1_weighted;
  d["accuracy"] = r.accuracy;
  py::list per_class;
  for (const auto& c : r.per_class) {
    py::dict m;
    m["label"] = c.label;
    m["precision"] = c.precision;
    m["recall"] = c.recall;
    m["f1"] = c.f1;
    m["support"] = c.support;
    per_class.append(m);
  }
  d["per_class"] = per_class;
  d["confusion"] = r.confusion;
  return d;
}

}  // namespace

PYBIND11_MODULE(_fsbias, m) {
  m.doc() = "Few-shot social bias classification core";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<UsageError>(m, "UsageError", base);
  py::register_exception<DataError>(m, "DataError", base);
  auto backend = py::register_exception<BackendError>(m, "BackendError", base);
  py::register_exception<TransportError>(m, "TransportError", backend);

  m.def("builtin_task_names", &builtin_task_names);
  m.def("task", [](const std::string& name_or_path) {
    return to_python(task_to_json(resolve_task(name_or_path)));
  }, py::arg("name_or_path"), "Builtin task name or task JSON path, as a dict.");

  m.def("tokenize", [](const std::string& text, bool lowercase, std::size_t min_len) {
    return tokenize(text, tokenizer(lowercase, min_len));
  }, py::arg("text"), py::arg("lowercase") = true, py::arg("min_token_length") = 2);

  py::class_<TfidfModel>(m, "TfidfModel")
      .def_static("fit", [](const std::vector<std::string>& corpus, bool lowercase,
                            std::size_t min_len) {
        return fit_tfidf(corpus, tokenizer(lowercase, min_len));
      }, py::arg("corpus"), py::arg("lowercase") = true, py::arg("min_token_length") = 2)
      .def_property_readonly("vocabulary", &TfidfModel::vocabulary)
      .def_property_readonly("idf", &TfidfModel::idf)
      .def_property_readonly("document_frequency", &TfidfModel::document_frequency)
      .def("transform", [](const TfidfModel& model, const std::string& text) {
        std::vector<std::string> terms(model.vocabulary().size());
        for (const auto& [t, i] : model.vocabulary()) terms[i] = t;
        std::map<std::string, double> out;
        const SparseVector v = transform(model, text);
        for (const auto& [i, w] : v.entries()) out[terms[i]] = w;
        return out;
      }, py::arg("text"), "Nonzero weights by term.")
      .def("similarity", [](const TfidfModel& model, const std::string& a,
                            const std::string& b) {
        return cosine(transform(model, a), transform(model, b));
      }, py::arg("a"), py::arg("b"));

  m.def("edit_distance",
        py::overload_cast<std::string_view, std::string_view>(&edit_distance),
        py::arg("a"), py::arg("b"));
  m.def("dedup_ratio", [](const std::string& q, const std::string& x,
                          const std::string& denominator) {
    return dedup_ratio(q, x, parse_ratio_denominator(denominator));
  }, py::arg("q"), py::arg("x"), py::arg("denominator") = "sum");

  m.def("roc_auc", [](const std::vector<double>& scores, const std::vector<bool>& positive) {
    if (scores.size() != positive.size()) throw DataError("scores and labels differ in length");
    std::vector<ScoredLabel> s;
    for (std::size_t i = 0; i < scores.size(); ++i) s.push_back({scores[i], positive[i]});
    return roc_auc_binary(s);
  }, py::arg("scores"), py::arg("positive"));
  m.def("f1_scores", [](const std::vector<std::string>& predicted,
                        const std::vector<std::string>& gold,
                        const std::vector<std::string>& classes, bool binary) {
    return f1_to_python(f1_scores(predicted, gold, classes, binary));
  }, py::arg("predicted"), py::arg("gold"), py::arg("classes"), py::arg("binary") = false);

  m.def("select_similarity_balanced", [](const std::string& task, const py::list& posts,
                                         const std::vector<double>& similarities,
                                         std::size_t k) {
    const auto repo = LabeledRepository::from_posts(resolve_task(task), to_posts(posts));
    return shots_to_python(select_similarity_balanced(repo, similarities, k));
  }, py::arg("task"), py::arg("posts"), py::arg("similarities"), py::arg("k"));
  m.def("select_stratified_balanced", [](const std::string& task, const py::list& posts,
                                         const std::vector<double>& similarities,
                                         std::size_t k) {
    const auto repo = LabeledRepository::from_posts(resolve_task(task), to_posts(posts));
    return shots_to_python(select_stratified_balanced(repo, similarities, k));
  }, py::arg("task"), py::arg("posts"), py::arg("similarities"), py::arg("k"));
  m.def("histogram_bin_edges", [](const std::vector<double>& values) {
    return histogram_bin_edges(values);
  }, py::arg("values"));

  m.def("load_config", [](const std::filesystem::path& path) {
    const auto cfg = load_experiment_config(path);
    py::dict d;
    d["fingerprint"] = cfg.fingerprint();
    d["config"] = to_python(cfg.semantic_json());
    return d;
  }, py::arg("path"), "Parsed experiment config with its fingerprint.");
  m.def("run_experiment", [](const std::filesystem::path& config,
                             const std::filesystem::path& out) {
    const auto cfg = load_experiment_config(config);
    RunOptions opts;
    opts.out_root = out;
    RunSummary summary;
    {
      py::gil_scoped_release release;
      summary = run_experiment(cfg, opts);
    }
    auto d = to_python(summary.to_json());
    d["run_dir"] = summary.run_dir.string();
    return d;
  }, py::arg("config"), py::arg("out") = "runs",
     "Runs every cell of the sweep and returns the summary.");
}
