// Command line surface: prepare, synth, train, eval, compare, inspect.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "temsearch/corpus.hpp"
#include "temsearch/eval.hpp"
#include "temsearch/models.hpp"
#include "temsearch/synth.hpp"
#include "temsearch/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// thrown for bad invocations (missing inputs, bad flag values) -> exit 2
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat JSON config: keys mirror long flag names; explicit flags win.
class ConfigOverlay {
 public:
  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw usage_error("cannot open config file: " + path);
    try {
      in >> j_;
    } catch (const std::exception& e) {
      throw usage_error("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j_.is_object()) throw usage_error("config file must hold a flat JSON object");
  }

  template <typename T>
  void fill(const CLI::Option* opt, const char* key, T& var) const {
    if (opt != nullptr && opt->count() > 0) return;
    if (!j_.contains(key)) return;
    try {
      var = j_.at(key).get<T>();
    } catch (const std::exception&) {
      throw usage_error(std::string("config key '") + key + "' has the wrong type");
    }
  }

 private:
  json j_ = json::object();
};

// Tracks files created by one run so a failure can remove partial output.
class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    if (dir.empty()) throw usage_error("--out must not be empty");
    fs::create_directories(dir_);
  }

  std::string path(const std::string& name, bool keep_on_error = false) {
    const std::string p = (dir_ / name).string();
    if (!keep_on_error) created_.push_back(p);
    return p;
  }

  void discard() {
    for (const std::string& p : created_) {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  }

 private:
  fs::path dir_;
  std::vector<std::string> created_;
};

void write_snapshot(OutputDir& out, const std::string& command, const json& resolved) {
  json j = resolved;
  j["command"] = command;
  // kept on error so failed runs stay reproducible
  std::ofstream f(out.path("config.resolved.json", true), std::ios::trunc);
  f << j.dump(2) << '\n';
}

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw usage_error(std::string(flag) + " is required");
  if (!fs::exists(path)) throw usage_error(std::string(flag) + ": no such file: " + path);
}

void require_seed(int64_t seed) {
  if (seed < 0) throw usage_error("--seed is required (non-negative integer)");
}

temsearch::ModelKind parse_kind(const std::string& name) {
  const std::optional<temsearch::ModelKind> kind = temsearch::model_kind_from_name(name);
  if (!kind) throw usage_error("unknown model '" + name + "'; supported: qem hem aem zam tem");
  return *kind;
}

const char* split_label(temsearch::Split s) {
  switch (s) {
    case temsearch::Split::train: return "train";
    case temsearch::Split::valid: return "valid";
    default: return "test";
  }
}

void write_manifest(const temsearch::Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.good()) throw std::runtime_error("cannot write manifest: " + path);
  out << "#user\tquery_id\titem\ttimestamp\tsplit\n";
  const std::vector<const std::vector<temsearch::SplitRow>*> parts = {
      &ds.split.train, &ds.split.valid, &ds.split.test};
  const char* labels[] = {"train", "valid", "test"};
  for (size_t p = 0; p < parts.size(); ++p)
    for (const temsearch::SplitRow& row : *parts[p])
      out << ds.user_ids[static_cast<size_t>(row.user)] << '\t' << row.query << '\t'
          << ds.item_ids[static_cast<size_t>(row.item)] << '\t' << row.timestamp << '\t'
          << labels[p] << '\n';
}

void write_stats(const temsearch::Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.good()) throw std::runtime_error("cannot write stats: " + path);
  out << "#Users\t" << ds.stats.at("users") << '\n';
  out << "#Items\t" << ds.stats.at("items") << '\n';
  out << "#Reviews\t" << ds.stats.at("reviews") << '\n';
  out << "#Queries\t" << ds.stats.at("queries") << '\n';
  out << "#TrainPurchases\t" << ds.stats.at("train_purchases") << '\n';
  out << "#ValidPurchases\t" << ds.stats.at("valid_purchases") << '\n';
  out << "#TestPurchases\t" << ds.stats.at("test_purchases") << '\n';
}

int cmd_prepare(const std::string& reviews_path, const std::string& items_path,
                const std::string& out_dir, int64_t seed, int min_count, double train_ratio,
                double valid_ratio, double query_train_frac) {
  OutputDir out(out_dir);
  json resolved = {{"reviews", reviews_path},   {"items", items_path},
                   {"out", out_dir},            {"seed", seed},
                   {"min-count", min_count},    {"train-ratio", train_ratio},
                   {"valid-ratio", valid_ratio}, {"query-train-frac", query_train_frac}};
  write_snapshot(out, "prepare", resolved);
  try {
    const std::vector<temsearch::ReviewRecord> reviews = temsearch::load_reviews_jsonl(reviews_path);
    const std::vector<temsearch::ItemMeta> metas = temsearch::load_items_jsonl(items_path);
    temsearch::DatasetConfig cfg;
    cfg.min_count = min_count;
    cfg.split.train_ratio = train_ratio;
    cfg.split.valid_ratio = valid_ratio;
    cfg.split.query_train_frac = query_train_frac;
    cfg.split.seed = static_cast<uint64_t>(seed);
    const temsearch::Dataset ds = temsearch::build_dataset(reviews, metas, cfg, &std::cerr);
    temsearch::save_dataset(ds, out.path("dataset"));
    write_manifest(ds, out.path("split_manifest.tsv"));
    write_stats(ds, out.path("stats.txt"));
    std::cout << "prepared " << ds.stats.at("reviews") << " reviews: " << ds.n_users()
              << " users, " << ds.n_items() << " items, " << ds.stats.at("queries")
              << " queries\n";
  } catch (...) {
    out.discard();
    throw;
  }
  return 0;
}

int cmd_synth(const std::string& out_dir, int64_t seed, const temsearch::SynthConfig& base) {
  OutputDir out(out_dir);
  temsearch::SynthConfig cfg = base;
  cfg.seed = static_cast<uint64_t>(seed);
  json resolved = {{"out", out_dir},
                   {"seed", seed},
                   {"users", cfg.n_users},
                   {"items", cfg.n_items},
                   {"categories", cfg.n_categories},
                   {"clusters", cfg.n_user_clusters},
                   {"purchases", cfg.purchases_per_user},
                   {"words-per-review", cfg.words_per_review},
                   {"preferred-prob", cfg.preferred_prob}};
  write_snapshot(out, "synth", resolved);
  try {
    const temsearch::SynthCorpus corpus = temsearch::synth_generate(cfg);
    std::ofstream rf(out.path("reviews.jsonl"), std::ios::trunc);
    for (const temsearch::ReviewRecord& r : corpus.reviews) {
      const json line = {{"user_id", r.user_id},
                         {"item_id", r.item_id},
                         {"timestamp", r.timestamp},
                         {"text", r.text}};
      rf << line.dump() << '\n';
    }
    std::ofstream mf(out.path("items.jsonl"), std::ios::trunc);
    for (const temsearch::ItemMeta& m : corpus.items) {
      const json line = {{"item_id", m.item_id}, {"categories", m.categories}};
      mf << line.dump() << '\n';
    }
    std::cout << "generated " << corpus.reviews.size() << " reviews over " << corpus.items.size()
              << " items\n";
  } catch (...) {
    out.discard();
    throw;
  }
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out_dir, const std::string& model,
              int64_t seed, const temsearch::ModelConfig& mc_in, const temsearch::TrainerConfig& tc_in) {
  temsearch::ModelConfig mc = mc_in;
  mc.kind = parse_kind(model);
  try {
    mc.validate();
  } catch (const std::exception& e) {
    throw usage_error(e.what());
  }
  temsearch::TrainerConfig tc = tc_in;
  tc.seed = static_cast<uint64_t>(seed);
  try {
    tc.validate();
  } catch (const std::exception& e) {
    throw usage_error(e.what());
  }

  OutputDir out(out_dir);
  json resolved = {{"data", data_dir},       {"out", out_dir},
                   {"model", model},         {"seed", seed},
                   {"dim", mc.d},            {"heads", mc.heads},
                   {"layers", mc.layers},    {"dff", mc.d_ff},
                   {"lambda", mc.lambda},    {"negatives", mc.negatives},
                   {"max-len", mc.max_len},  {"epochs", tc.epochs},
                   {"batch-size", tc.batch_size}, {"lr", tc.lr},
                   {"window", tc.window},    {"gen-weight", tc.gen_weight},
                   {"lang-weight", tc.lang_weight}};
  write_snapshot(out, "train", resolved);
  try {
    const temsearch::Dataset ds = temsearch::load_dataset(data_dir);
    temsearch::ModelParams params = temsearch::init_model(mc, ds.vocab.size(), ds.n_items(),
                                                          ds.n_users(), static_cast<uint64_t>(seed));
    // the report stays on a training abort: it holds the abort record
    const temsearch::TrainReport report =
        temsearch::train_model(params, ds, tc, out.path("train_report.jsonl", true));
    temsearch::save_model(params, out.path("model.bin"),
                          {{"trained_epochs", std::to_string(report.epochs.size())}});
    if (report.epochs.empty()) {
      std::cout << "trained 0 epochs; checkpoint equals initialization\n";
    } else {
      const temsearch::EpochRecord& last = report.epochs.back();
      std::cout << "trained " << report.epochs.size() << " epochs; final gen_loss "
                << last.gen_loss << ", lang_loss " << last.lang_loss << '\n';
    }
  } catch (...) {
    out.discard();
    throw;
  }
  return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& checkpoint,
             const std::string& out_dir, const std::string& baseline_path,
             const temsearch::EvalConfig& ec) {
  try {
    ec.validate();
  } catch (const std::exception& e) {
    throw usage_error(e.what());
  }
  OutputDir out(out_dir);
  json resolved = {{"data", data_dir},
                   {"checkpoint", checkpoint},
                   {"out", out_dir},
                   {"split", ec.split},
                   {"cutoff", ec.cutoff},
                   {"workers", ec.workers},
                   {"filter-train-items", ec.filter_train_items},
                   {"baseline", baseline_path}};
  write_snapshot(out, "eval", resolved);
  try {
    const temsearch::Dataset ds = temsearch::load_dataset(data_dir);
    temsearch::ModelParams params = temsearch::load_model(checkpoint);
    std::optional<temsearch::MetricsReport> baseline;
    if (!baseline_path.empty()) baseline = temsearch::load_report_json(baseline_path);
    const temsearch::MetricsReport report =
        temsearch::evaluate(params, ds, ec, baseline ? &*baseline : nullptr);
    temsearch::save_report_json(report, out.path("eval_report.json"));
    temsearch::save_context_tsv(report, out.path("eval_contexts.tsv"));
    std::cout << temsearch::render_report_table(report);
  } catch (...) {
    out.discard();
    throw;
  }
  return 0;
}

int cmd_compare(const std::string& path_a, const std::string& path_b, const std::string& out_dir) {
  const temsearch::MetricsReport a = temsearch::load_report_json(path_a);
  const temsearch::MetricsReport b = temsearch::load_report_json(path_b);
  const temsearch::PValues p = temsearch::compare_reports(a, b);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %10s %10s %12s %s\n", "metric", a.model.c_str(),
                b.model.c_str(), "p-value", "significant(p<0.05)");
  std::string table = buf;
  const struct {
    const char* name;
    double va, vb, pv;
  } rows[] = {{"MRR", a.mrr, b.mrr, p.mrr},
              {"NDCG", a.ndcg, b.ndcg, p.ndcg},
              {"P", a.prec, b.prec, p.prec}};
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-10s %10.4f %10.4f %12.4g %s\n", r.name, r.va, r.vb, r.pv,
                  r.pv < 0.05 ? "yes" : "no");
    table += buf;
  }
  std::cout << table;
  if (!out_dir.empty()) {
    OutputDir out(out_dir);
    json resolved = {{"report-a", path_a}, {"report-b", path_b}, {"out", out_dir}};
    write_snapshot(out, "compare", resolved);
    try {
      json j = {{"report_a", path_a},
                {"report_b", path_b},
                {"p_values", {{"mrr", p.mrr}, {"ndcg", p.ndcg}, {"prec", p.prec}}}};
      std::ofstream f(out.path("compare.json"), std::ios::trunc);
      f << j.dump(2) << '\n';
    } catch (...) {
      out.discard();
      throw;
    }
  }
  return 0;
}

int cmd_inspect(const std::string& data_dir, const std::string& checkpoint,
                const std::string& user, int query, int64_t at_timestamp) {
  const temsearch::Dataset ds = temsearch::load_dataset(data_dir);
  temsearch::ModelParams params = temsearch::load_model(checkpoint);

  int uidx = -1;
  for (size_t i = 0; i < ds.user_ids.size(); ++i)
    if (ds.user_ids[i] == user) uidx = static_cast<int>(i);
  if (uidx < 0 && !user.empty() && user.find_first_not_of("0123456789") == std::string::npos)
    uidx = std::stoi(user);
  if (uidx < 0 || uidx >= ds.n_users())
    throw std::runtime_error("unknown user '" + user + "' (no such id, index out of range)");
  if (query < 0 || query >= static_cast<int>(ds.queries.size()))
    throw std::runtime_error("query id out of range: " + std::to_string(query) + " (corpus has " +
                             std::to_string(ds.queries.size()) + " queries)");
  const temsearch::Query& q = ds.queries[static_cast<size_t>(query)];
  if (q.terms.empty())
    throw std::runtime_error("query " + std::to_string(query) + " has no in-vocabulary terms");

  const std::vector<int> history =
      temsearch::user_history(ds.split, uidx, at_timestamp, params.config.max_len);
  const temsearch::FrozenIntent intent = temsearch::frozen_intent(params, q.terms, uidx, history);

  std::cout << "model " << temsearch::model_kind_name(params.config.kind) << "  user "
            << ds.user_ids[static_cast<size_t>(uidx)] << " (index " << uidx << ")  query "
            << query << " (";
  for (size_t t = 0; t < q.term_strings.size(); ++t)
    std::cout << (t ? " " : "") << q.term_strings[t];
  std::cout << ")\n";
  std::cout << "history (" << history.size() << " items, oldest first):";
  for (int h : history) std::cout << ' ' << ds.item_ids[static_cast<size_t>(h)];
  std::cout << '\n';

  const temsearch::ModelKind kind = params.config.kind;
  if (intent.attention.empty()) {
    if (kind == temsearch::ModelKind::aem)
      std::cout << "history empty: intent equals the encoded query, no attention trace\n";
    else
      std::cout << "no attention trace: " << temsearch::model_kind_name(kind)
                << " composes the intent without attention\n";
    return 0;
  }
  for (size_t layer = 0; layer < intent.attention.size(); ++layer) {
    const std::vector<float>& row = intent.attention[layer];
    if (kind == temsearch::ModelKind::tem)
      std::cout << "layer " << layer + 1 << " attention (query row):\n";
    else
      std::cout << "attention over history:\n";
    for (size_t pos = 0; pos < row.size(); ++pos) {
      std::string label;
      size_t item_at = pos;
      if (kind == temsearch::ModelKind::tem) {
        if (pos == 0)
          label = "[query]";
        else
          item_at = pos - 1;
      } else if (kind == temsearch::ModelKind::zam) {
        if (pos == 0)
          label = "[zero]";
        else
          item_at = pos - 1;
      }
      if (label.empty()) label = ds.item_ids[static_cast<size_t>(history[item_at])];
      char buf[80];
      std::snprintf(buf, sizeof buf, "  %-12s %.5f\n", label.c_str(), row[pos]);
      std::cout << buf;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embedding models for personalized product search"};
  app.require_subcommand(1);

  // prepare
  auto* prep = app.add_subcommand("prepare", "ingest reviews/items and build the dataset");
  std::string prep_reviews, prep_items, prep_out, prep_config;
  int64_t prep_seed = -1;
  int prep_min_count = 5;
  double prep_train_ratio = 0.8, prep_valid_ratio = 0.1, prep_qtf = 0.7;
  auto* prep_reviews_o = prep->add_option("--reviews", prep_reviews, "reviews JSONL file");
  auto* prep_items_o = prep->add_option("--items", prep_items, "item metadata JSONL file");
  auto* prep_out_o = prep->add_option("--out", prep_out, "output directory");
  auto* prep_seed_o = prep->add_option("--seed", prep_seed, "split seed (required)");
  auto* prep_min_o = prep->add_option("--min-count", prep_min_count, "vocabulary threshold");
  auto* prep_tr_o = prep->add_option("--train-ratio", prep_train_ratio, "per-user train share");
  auto* prep_va_o = prep->add_option("--valid-ratio", prep_valid_ratio, "per-user valid share");
  auto* prep_qt_o = prep->add_option("--query-train-frac", prep_qtf, "train query pool share");
  prep->add_option("--config", prep_config, "flat JSON config; flags override");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a planted-preference corpus");
  std::string synth_out, synth_config;
  int64_t synth_seed = -1;
  temsearch::SynthConfig sc;
  auto* synth_out_o = synth->add_option("--out", synth_out, "output directory");
  auto* synth_seed_o = synth->add_option("--seed", synth_seed, "generator seed (required)");
  auto* synth_users_o = synth->add_option("--users", sc.n_users, "number of users");
  auto* synth_items_o = synth->add_option("--items", sc.n_items, "number of items");
  auto* synth_cats_o = synth->add_option("--categories", sc.n_categories, "number of categories");
  auto* synth_clus_o = synth->add_option("--clusters", sc.n_user_clusters, "user clusters");
  auto* synth_pur_o = synth->add_option("--purchases", sc.purchases_per_user, "purchases per user");
  auto* synth_wpr_o = synth->add_option("--words-per-review", sc.words_per_review, "review length");
  auto* synth_pp_o = synth->add_option("--preferred-prob", sc.preferred_prob,
                                       "chance a purchase follows the cluster preference");
  synth->add_option("--config", synth_config, "flat JSON config; flags override");

  // train
  auto* train = app.add_subcommand("train", "train a model on a prepared dataset");
  std::string train_data, train_out, train_model_name, train_config;
  int64_t train_seed = -1;
  temsearch::ModelConfig mc;
  temsearch::TrainerConfig tc;
  auto* train_data_o = train->add_option("--data", train_data, "prepared dataset directory");
  auto* train_out_o = train->add_option("--out", train_out, "output directory");
  auto* train_model_o = train->add_option("--model", train_model_name, "qem|hem|aem|zam|tem");
  auto* train_seed_o = train->add_option("--seed", train_seed, "init/train seed (required)");
  auto* train_dim_o = train->add_option("--dim", mc.d, "embedding width");
  auto* train_heads_o = train->add_option("--heads", mc.heads, "attention heads");
  auto* train_layers_o = train->add_option("--layers", mc.layers, "transformer layers");
  auto* train_dff_o = train->add_option("--dff", mc.d_ff, "feed-forward width");
  auto* train_lambda_o = train->add_option("--lambda", mc.lambda, "query/user mix");
  auto* train_neg_o = train->add_option("--negatives", mc.negatives, "negative samples");
  auto* train_maxlen_o = train->add_option("--max-len", mc.max_len, "history truncation");
  auto* train_epochs_o = train->add_option("--epochs", tc.epochs, "training epochs");
  auto* train_bs_o = train->add_option("--batch-size", tc.batch_size, "examples per batch");
  auto* train_lr_o = train->add_option("--lr", tc.lr, "Adam learning rate");
  auto* train_win_o = train->add_option("--window", tc.window, "review word window");
  auto* train_gw_o = train->add_option("--gen-weight", tc.gen_weight, "generation loss weight");
  auto* train_lw_o = train->add_option("--lang-weight", tc.lang_weight, "language loss weight");
  train->add_option("--config", train_config, "flat JSON config; flags override");

  // eval
  auto* ev = app.add_subcommand("eval", "rank the collection and report metrics");
  std::string eval_data, eval_checkpoint, eval_out, eval_baseline, eval_config;
  temsearch::EvalConfig ec;
  auto* eval_data_o = ev->add_option("--data", eval_data, "prepared dataset directory");
  auto* eval_ckpt_o = ev->add_option("--checkpoint", eval_checkpoint, "model checkpoint");
  auto* eval_out_o = ev->add_option("--out", eval_out, "output directory");
  auto* eval_split_o = ev->add_option("--split", ec.split, "test or valid");
  auto* eval_cutoff_o = ev->add_option("--cutoff", ec.cutoff, "metric cutoff");
  auto* eval_workers_o = ev->add_option("--workers", ec.workers, "parallel ranking workers");
  auto* eval_filter_o = ev->add_flag("--filter-train-items", ec.filter_train_items,
                                     "drop the user's train purchases from the candidates");
  auto* eval_base_o = ev->add_option("--baseline", eval_baseline, "baseline report JSON");
  ev->add_option("--config", eval_config, "flat JSON config; flags override");

  // compare
  auto* cmp = app.add_subcommand("compare", "paired significance between two reports");
  std::string cmp_a, cmp_b, cmp_out;
  cmp->add_option("report_a", cmp_a, "first report JSON")->required();
  cmp->add_option("report_b", cmp_b, "second report JSON")->required();
  cmp->add_option("--out", cmp_out, "optional output directory");

  // inspect
  auto* ins = app.add_subcommand("inspect", "print a checkpoint's attention trace");
  std::string ins_data, ins_checkpoint, ins_user;
  int ins_query = -1;
  int64_t ins_at = std::numeric_limits<int64_t>::max();
  auto* ins_data_o = ins->add_option("--data", ins_data, "prepared dataset directory");
  auto* ins_ckpt_o = ins->add_option("--checkpoint", ins_checkpoint, "model checkpoint");
  ins->add_option("--user", ins_user, "user id or index");
  ins->add_option("--query", ins_query, "query id");
  ins->add_option("--at-timestamp", ins_at,
                  "history cutoff; purchases at or after it are hidden");

  try {
    app.parse(argc, argv);

    if (prep->parsed()) {
      ConfigOverlay cfg;
      if (!prep_config.empty()) cfg.load(prep_config);
      cfg.fill(prep_reviews_o, "reviews", prep_reviews);
      cfg.fill(prep_items_o, "items", prep_items);
      cfg.fill(prep_out_o, "out", prep_out);
      cfg.fill(prep_seed_o, "seed", prep_seed);
      cfg.fill(prep_min_o, "min-count", prep_min_count);
      cfg.fill(prep_tr_o, "train-ratio", prep_train_ratio);
      cfg.fill(prep_va_o, "valid-ratio", prep_valid_ratio);
      cfg.fill(prep_qt_o, "query-train-frac", prep_qtf);
      require_seed(prep_seed);
      require_file(prep_reviews, "--reviews");
      require_file(prep_items, "--items");
      return cmd_prepare(prep_reviews, prep_items, prep_out, prep_seed, prep_min_count,
                         prep_train_ratio, prep_valid_ratio, prep_qtf);
    }
    if (synth->parsed()) {
      ConfigOverlay cfg;
      if (!synth_config.empty()) cfg.load(synth_config);
      cfg.fill(synth_out_o, "out", synth_out);
      cfg.fill(synth_seed_o, "seed", synth_seed);
      cfg.fill(synth_users_o, "users", sc.n_users);
      cfg.fill(synth_items_o, "items", sc.n_items);
      cfg.fill(synth_cats_o, "categories", sc.n_categories);
      cfg.fill(synth_clus_o, "clusters", sc.n_user_clusters);
      cfg.fill(synth_pur_o, "purchases", sc.purchases_per_user);
      cfg.fill(synth_wpr_o, "words-per-review", sc.words_per_review);
      cfg.fill(synth_pp_o, "preferred-prob", sc.preferred_prob);
      require_seed(synth_seed);
      return cmd_synth(synth_out, synth_seed, sc);
    }
    if (train->parsed()) {
      ConfigOverlay cfg;
      if (!train_config.empty()) cfg.load(train_config);
      cfg.fill(train_data_o, "data", train_data);
      cfg.fill(train_out_o, "out", train_out);
      cfg.fill(train_model_o, "model", train_model_name);
      cfg.fill(train_seed_o, "seed", train_seed);
      cfg.fill(train_dim_o, "dim", mc.d);
      cfg.fill(train_heads_o, "heads", mc.heads);
      cfg.fill(train_layers_o, "layers", mc.layers);
      cfg.fill(train_dff_o, "dff", mc.d_ff);
      cfg.fill(train_lambda_o, "lambda", mc.lambda);
      cfg.fill(train_neg_o, "negatives", mc.negatives);
      cfg.fill(train_maxlen_o, "max-len", mc.max_len);
      cfg.fill(train_epochs_o, "epochs", tc.epochs);
      cfg.fill(train_bs_o, "batch-size", tc.batch_size);
      cfg.fill(train_lr_o, "lr", tc.lr);
      cfg.fill(train_win_o, "window", tc.window);
      cfg.fill(train_gw_o, "gen-weight", tc.gen_weight);
      cfg.fill(train_lw_o, "lang-weight", tc.lang_weight);
      require_seed(train_seed);
      if (train_model_name.empty()) throw usage_error("--model is required");
      if (train_data.empty() || !fs::exists(train_data))
        throw usage_error("--data: no such directory: " + train_data);
      return cmd_train(train_data, train_out, train_model_name, train_seed, mc, tc);
    }
    if (ev->parsed()) {
      ConfigOverlay cfg;
      if (!eval_config.empty()) cfg.load(eval_config);
      cfg.fill(eval_data_o, "data", eval_data);
      cfg.fill(eval_ckpt_o, "checkpoint", eval_checkpoint);
      cfg.fill(eval_out_o, "out", eval_out);
      cfg.fill(eval_split_o, "split", ec.split);
      cfg.fill(eval_cutoff_o, "cutoff", ec.cutoff);
      cfg.fill(eval_workers_o, "workers", ec.workers);
      cfg.fill(eval_filter_o, "filter-train-items", ec.filter_train_items);
      cfg.fill(eval_base_o, "baseline", eval_baseline);
      if (eval_data.empty() || !fs::exists(eval_data))
        throw usage_error("--data: no such directory: " + eval_data);
      require_file(eval_checkpoint, "--checkpoint");
      return cmd_eval(eval_data, eval_checkpoint, eval_out, eval_baseline, ec);
    }
    if (cmp->parsed()) {
      require_file(cmp_a, "report_a");
      require_file(cmp_b, "report_b");
      return cmd_compare(cmp_a, cmp_b, cmp_out);
    }
    if (ins->parsed()) {
      if (ins_data.empty() || !fs::exists(ins_data))
        throw usage_error("--data: no such directory: " + ins_data);
      require_file(ins_checkpoint, "--checkpoint");
      if (ins_user.empty()) throw usage_error("--user is required");
      if (ins_query < 0) throw usage_error("--query is required (non-negative id)");
      return cmd_inspect(ins_data, ins_checkpoint, ins_user, ins_query, ins_at);
    }
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    std::cerr << app.help() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
