// Python bindings for the core pipeline: corpus prep, the five model
// kinds, training, ranking, and evaluation. Heavy calls release the GIL.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "temsearch/corpus.hpp"
#include "temsearch/eval.hpp"
#include "temsearch/models.hpp"
#include "temsearch/synth.hpp"
#include "temsearch/trainer.hpp"

namespace py = pybind11;
using namespace temsearch;

namespace {

ModelKind kind_from(const std::string& name) {
  const auto kind = model_kind_from_name(name);
  if (!kind) throw std::invalid_argument("unknown model kind '" + name + "' (expected qem hem aem zam tem)");
  return *kind;
}

void check_query_id(const Dataset& ds, int query) {
  if (query < 0 || query >= static_cast<int>(ds.queries.size()))
    throw std::out_of_range("query id " + std::to_string(query) + " out of range");
}

}  // namespace

PYBIND11_MODULE(_temsearch, m) {
  m.doc() = "personalized product search: embedding models, training, evaluation";

  // --- corpus ---

  py::class_<ReviewRecord>(m, "ReviewRecord")
      .def(py::init<>())
      .def(py::init([](std::string user_id, std::string item_id, long long timestamp, std::string text) {
             ReviewRecord r;
             r.user_id = std::move(user_id);
             r.item_id = std::move(item_id);
             r.timestamp = timestamp;
             r.text = std::move(text);
             return r;
           }),
           py::arg("user_id"), py::arg("item_id"), py::arg("timestamp"), py::arg("text"))
      .def_readwrite("user_id", &ReviewRecord::user_id)
      .def_readwrite("item_id", &ReviewRecord::item_id)
      .def_readwrite("timestamp", &ReviewRecord::timestamp)
      .def_readwrite("text", &ReviewRecord::text);

  py::class_<ItemMeta>(m, "ItemMeta")
      .def(py::init<>())
      .def(py::init([](std::string item_id, std::vector<std::vector<std::string>> categories) {
             ItemMeta meta;
             meta.item_id = std::move(item_id);
             meta.categories = std::move(categories);
             return meta;
           }),
           py::arg("item_id"), py::arg("categories"))
      .def_readwrite("item_id", &ItemMeta::item_id)
      .def_readwrite("categories", &ItemMeta::categories);

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("n_users", &SynthConfig::n_users)
      .def_readwrite("n_items", &SynthConfig::n_items)
      .def_readwrite("n_categories", &SynthConfig::n_categories)
      .def_readwrite("n_user_clusters", &SynthConfig::n_user_clusters)
      .def_readwrite("purchases_per_user", &SynthConfig::purchases_per_user)
      .def_readwrite("words_per_review", &SynthConfig::words_per_review)
      .def_readwrite("preferred_prob", &SynthConfig::preferred_prob)
      .def_readwrite("seed", &SynthConfig::seed);

  py::class_<SynthCorpus>(m, "SynthCorpus")
      .def_readonly("reviews", &SynthCorpus::reviews)
      .def_readonly("items", &SynthCorpus::items);

  m.def("synth_generate", &synth_generate, py::arg("config"),
        "Planted-preference corpus: user clusters with preferred item sets.");

  py::class_<SplitConfig>(m, "SplitConfig")
      .def(py::init<>())
      .def_readwrite("train_ratio", &SplitConfig::train_ratio)
      .def_readwrite("valid_ratio", &SplitConfig::valid_ratio)
      .def_readwrite("query_train_frac", &SplitConfig::query_train_frac)
      .def_readwrite("seed", &SplitConfig::seed);

  py::class_<DatasetConfig>(m, "DatasetConfig")
      .def(py::init<>())
      .def_readwrite("min_count", &DatasetConfig::min_count)
      .def_readwrite("split", &DatasetConfig::split);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("user_ids", &Dataset::user_ids)
      .def_readonly("item_ids", &Dataset::item_ids)
      .def_property_readonly("n_users", &Dataset::n_users)
      .def_property_readonly("n_items", &Dataset::n_items)
      .def_property_readonly("vocab_size", [](const Dataset& ds) { return ds.vocab.size(); })
      .def_property_readonly("n_queries", [](const Dataset& ds) { return static_cast<int>(ds.queries.size()); })
      .def_property_readonly("train_rows", [](const Dataset& ds) { return ds.split.train.size(); })
      .def_property_readonly("valid_rows", [](const Dataset& ds) { return ds.split.valid.size(); })
      .def_property_readonly("test_rows", [](const Dataset& ds) { return ds.split.test.size(); })
      .def_readonly("stats", &Dataset::stats)
      .def("word_id", [](const Dataset& ds, const std::string& word) { return ds.vocab.id_of(word); },
           py::arg("word"), "Vocabulary id, -1 when absent.")
      .def(
          "query_term_ids",
          [](const Dataset& ds, int query) {
            check_query_id(ds, query);
            return ds.queries[query].terms;
          },
          py::arg("query"))
      .def(
          "query_term_strings",
          [](const Dataset& ds, int query) {
            check_query_id(ds, query);
            return ds.queries[query].term_strings;
          },
          py::arg("query"))
      .def(
          "user_history",
          [](const Dataset& ds, int user, long long before_timestamp, int max_len) {
            return user_history(ds.split, user, before_timestamp, max_len);
          },
          py::arg("user"), py::arg("before_timestamp"), py::arg("max_len"),
          "Train items of the user strictly before the timestamp, newest max_len.");

  m.def(
      "build_dataset",
      [](const std::vector<ReviewRecord>& reviews, const std::vector<ItemMeta>& items,
         const DatasetConfig& cfg) { return build_dataset(reviews, items, cfg); },
      py::arg("reviews"), py::arg("items"), py::arg("config"), py::call_guard<py::gil_scoped_release>(),
      "Index, build queries, split chronologically, build the train vocabulary.");
  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("dir"));
  m.def("load_dataset", &load_dataset, py::arg("dir"));
  m.def("load_reviews_jsonl", &load_reviews_jsonl, py::arg("path"));
  m.def("load_items_jsonl", &load_items_jsonl, py::arg("path"));
  m.def("tokenize", &tokenize, py::arg("text"), "Lowercase, split on non-alphanumeric bytes.");

  // --- models ---

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_property(
          "kind", [](const ModelConfig& c) { return std::string(model_kind_name(c.kind)); },
          [](ModelConfig& c, const std::string& name) { c.kind = kind_from(name); })
      .def_readwrite("d", &ModelConfig::d)
      .def_readwrite("heads", &ModelConfig::heads)
      .def_readwrite("layers", &ModelConfig::layers)
      .def_readwrite("d_ff", &ModelConfig::d_ff)
      .def_readwrite("lambda_", &ModelConfig::lambda)
      .def_readwrite("negatives", &ModelConfig::negatives)
      .def_readwrite("max_len", &ModelConfig::max_len)
      .def("validate", &ModelConfig::validate);

  py::class_<ModelParams>(m, "Model")
      .def_readonly("config", &ModelParams::config)
      .def_readonly("vocab_size", &ModelParams::vocab_size)
      .def_readonly("n_items", &ModelParams::n_items)
      .def_readonly("n_users", &ModelParams::n_users)
      .def("param_names",
           [](const ModelParams& p) {
             std::vector<std::string> names;
             p.for_each_param([&](const std::string& name, const ad::Tensor&) { names.push_back(name); });
             return names;
           })
      .def(
          "param",
          [](const ModelParams& p, const std::string& name) {
            py::object out;
            p.for_each_param([&](const std::string& n, const ad::Tensor& t) {
              if (n == name) out = py::make_tuple(t.shape, t.data);
            });
            if (!out) throw std::out_of_range("no parameter named '" + name + "'");
            return out;
          },
          py::arg("name"), "(shape, flat row-major values) for one parameter tensor.");

  m.def("init_model", &init_model, py::arg("config"), py::arg("vocab_size"), py::arg("n_items"),
        py::arg("n_users"), py::arg("seed"));
  m.def("save_model", &save_model, py::arg("params"), py::arg("path"),
        py::arg("extra_meta") = std::map<std::string, std::string>{});
  m.def("load_model", &load_model, py::arg("path"));

  py::class_<FrozenIntent>(m, "FrozenIntent")
      .def_property_readonly("vector", [](const FrozenIntent& f) { return f.m.data; })
      .def_readonly("attention", &FrozenIntent::attention);

  m.def("frozen_intent", &frozen_intent, py::arg("params"), py::arg("query_terms"), py::arg("user"),
        py::arg("history"), "Purchase intent plus the per-layer query-row attention trace.");

  // --- training ---

  py::class_<TrainerConfig>(m, "TrainerConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainerConfig::epochs)
      .def_readwrite("batch_size", &TrainerConfig::batch_size)
      .def_readwrite("lr", &TrainerConfig::lr)
      .def_readwrite("window", &TrainerConfig::window)
      .def_readwrite("gen_weight", &TrainerConfig::gen_weight)
      .def_readwrite("lang_weight", &TrainerConfig::lang_weight)
      .def_readwrite("seed", &TrainerConfig::seed)
      .def("validate", &TrainerConfig::validate);

  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("gen_loss", &EpochRecord::gen_loss)
      .def_readonly("lang_loss", &EpochRecord::lang_loss)
      .def_readonly("examples", &EpochRecord::examples)
      .def_readonly("lang_examples", &EpochRecord::lang_examples)
      .def_readonly("wall_seconds", &EpochRecord::wall_seconds);

  py::class_<TrainReport>(m, "TrainReport")
      .def_readonly("epochs", &TrainReport::epochs)
      .def_readonly("seed", &TrainReport::seed)
      .def_readonly("skipped_empty_query", &TrainReport::skipped_empty_query);

  m.def("train_model", &train_model, py::arg("params"), py::arg("dataset"), py::arg("config"),
        py::arg("report_path") = std::string(), py::call_guard<py::gil_scoped_release>(),
        "Adam over the joint objective; bitwise deterministic per seed.");

  // --- ranking and metrics ---

  py::class_<RankedList>(m, "RankedList")
      .def_readonly("items", &RankedList::items)
      .def_readonly("scores", &RankedList::scores);

  m.def("rank_from_scores", &rank_from_scores, py::arg("scores"),
        "Ids by score descending, ties by id ascending.");
  m.def("rank_items", &rank_items, py::arg("params"), py::arg("dataset"), py::arg("user"),
        py::arg("query_terms"), py::arg("filter_train_items") = false,
        py::call_guard<py::gil_scoped_release>());
  m.def("mrr", &mrr, py::arg("ranked"), py::arg("relevant"));
  m.def("precision_at", &precision_at, py::arg("ranked"), py::arg("relevant"), py::arg("k") = 20);
  m.def("ndcg_at", &ndcg_at, py::arg("ranked"), py::arg("relevant"), py::arg("k") = 20);
  m.def("paired_t_test", &paired_t_test, py::arg("a"), py::arg("b"),
        "Two-sided p-value for matched metric vectors.");

  // --- evaluation ---

  py::class_<EvalConfig>(m, "EvalConfig")
      .def(py::init<>())
      .def_readwrite("split", &EvalConfig::split)
      .def_readwrite("cutoff", &EvalConfig::cutoff)
      .def_readwrite("workers", &EvalConfig::workers)
      .def_readwrite("filter_train_items", &EvalConfig::filter_train_items)
      .def("validate", &EvalConfig::validate);

  py::class_<ContextMetrics>(m, "ContextMetrics")
      .def_readonly("user", &ContextMetrics::user)
      .def_readonly("query", &ContextMetrics::query)
      .def_readonly("mrr", &ContextMetrics::mrr)
      .def_readonly("ndcg", &ContextMetrics::ndcg)
      .def_readonly("prec", &ContextMetrics::prec);

  py::class_<PValues>(m, "PValues")
      .def_readonly("mrr", &PValues::mrr)
      .def_readonly("ndcg", &PValues::ndcg)
      .def_readonly("prec", &PValues::prec);

  py::class_<MetricsReport>(m, "MetricsReport")
      .def_readonly("model", &MetricsReport::model)
      .def_readonly("split", &MetricsReport::split)
      .def_readonly("cutoff", &MetricsReport::cutoff)
      .def_readonly("skipped_oov", &MetricsReport::skipped_oov)
      .def_readonly("contexts", &MetricsReport::contexts)
      .def_readonly("mrr", &MetricsReport::mrr)
      .def_readonly("ndcg", &MetricsReport::ndcg)
      .def_readonly("prec", &MetricsReport::prec)
      .def_readonly("vs_baseline", &MetricsReport::vs_baseline);

  m.def(
      "evaluate",
      [](ModelParams& params, const Dataset& ds, const EvalConfig& cfg, const MetricsReport* baseline) {
        return evaluate(params, ds, cfg, baseline);
      },
      py::arg("params"), py::arg("dataset"), py::arg("config"), py::arg("baseline") = nullptr,
      py::call_guard<py::gil_scoped_release>(),
      "Every (user, query) context of the split; identical for any worker count.");
  m.def("compare_reports", &compare_reports, py::arg("a"), py::arg("b"));
  m.def("render_report_table", &render_report_table, py::arg("report"));
  m.def("save_report_json", &save_report_json, py::arg("report"), py::arg("path"));
  m.def("load_report_json", &load_report_json, py::arg("path"));
  m.def("save_context_tsv", &save_context_tsv, py::arg("report"), py::arg("path"));
}
