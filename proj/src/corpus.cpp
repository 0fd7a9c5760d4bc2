#include "temsearch/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "temsearch/rng.hpp"

namespace temsearch {

namespace {

using nlohmann::json;

std::vector<std::string> split_tsv(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

long long to_ll(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": not an integer: '" + s + "'");
  }
}

void check_id(const std::string& id, const std::string& where) {
  if (id.empty()) throw std::runtime_error(where + ": empty id");
  if (id.find_first_of("\t\n\r") != std::string::npos)
    throw std::runtime_error(where + ": id contains tab/newline: '" + id + "'");
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "?";
}

std::optional<Split> split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "valid") return Split::valid;
  if (name == "test") return Split::test;
  return std::nullopt;
}

// --- queries ---

std::vector<std::vector<std::string>> query_term_lists(const ItemMeta& meta,
                                                       const std::unordered_set<std::string>& stopwords,
                                                       std::ostream* warn) {
  std::vector<std::vector<std::string>> out;
  for (const auto& path : meta.categories) {
    std::vector<std::string> terms;
    std::unordered_set<std::string> seen;
    for (const std::string& level : path) {
      for (std::string& tok : tokenize(level)) {
        if (stopwords.count(tok) || seen.count(tok)) continue;
        seen.insert(tok);
        terms.push_back(std::move(tok));
      }
    }
    if (terms.empty()) {
      if (warn) *warn << "warning: category path of item '" << meta.item_id << "' empty after filtering, skipped\n";
      continue;
    }
    out.push_back(std::move(terms));
  }
  return out;
}

BuiltQueries build_queries(const std::vector<const ItemMeta*>& metas_by_item,
                           const std::unordered_set<std::string>& stopwords, std::ostream* warn) {
  BuiltQueries built;
  built.item_queries.resize(metas_by_item.size());
  std::unordered_map<std::string, int> id_by_key;
  for (size_t item = 0; item < metas_by_item.size(); ++item) {
    if (!metas_by_item[item]) continue;
    const auto lists = query_term_lists(*metas_by_item[item], stopwords, warn);
    const size_t n_paths = metas_by_item[item]->categories.size();
    built.skipped_paths += static_cast<long long>(n_paths - lists.size());
    for (const auto& terms : lists) {
      std::string key;
      for (const auto& t : terms) {
        key += t;
        key += ' ';
      }
      auto [it, inserted] = id_by_key.emplace(key, static_cast<int>(built.queries.size()));
      if (inserted) {
        Query q;
        q.query_id = it->second;
        q.term_strings = terms;
        built.queries.push_back(std::move(q));
      }
      auto& iq = built.item_queries[item];
      if (std::find(iq.begin(), iq.end(), it->second) == iq.end()) iq.push_back(it->second);
    }
  }
  return built;
}

// --- vocabulary ---

Vocabulary build_vocabulary(const std::vector<const std::string*>& texts, int min_count) {
  std::unordered_map<std::string, long long> counts;
  std::vector<std::string> first_seen;
  for (const std::string* text : texts) {
    for (const std::string& tok : tokenize(*text)) {
      auto [it, inserted] = counts.emplace(tok, 0);
      if (inserted) first_seen.push_back(tok);
      it->second += 1;
    }
  }
  Vocabulary v;
  for (const std::string& w : first_seen) {
    const long long c = counts.at(w);
    if (c < min_count) continue;
    v.word_to_id.emplace(w, static_cast<int>(v.id_to_word.size()));
    v.id_to_word.push_back(w);
    v.frequency.push_back(c);
  }
  if (v.id_to_word.empty())
    throw std::runtime_error("build_vocabulary: no word reaches min_count=" + std::to_string(min_count));
  return v;
}

// --- split ---

DatasetSplit split_dataset(const std::vector<Purchase>& purchases,
                           const std::vector<std::vector<int>>& item_queries, int n_queries, int n_users,
                           const SplitConfig& cfg) {
  if (!cfg.seed.has_value())
    throw std::invalid_argument("split_dataset: a seed is required, splits must be reproducible");
  const int n_items = static_cast<int>(item_queries.size());

  std::vector<uint8_t> purchased(n_items, 0);
  for (const Purchase& p : purchases) {
    if (p.user < 0 || p.user >= n_users || p.item < 0 || p.item >= n_items)
      throw std::invalid_argument("split_dataset: purchase references unknown user or item");
    purchased[static_cast<size_t>(p.item)] = 1;
  }
  for (int i = 0; i < n_items; ++i)
    if (purchased[static_cast<size_t>(i)] && item_queries[static_cast<size_t>(i)].empty())
      throw std::invalid_argument("split_dataset: purchased item " + std::to_string(i) + " has no query");

  DatasetSplit out;
  out.purchases = purchases;
  out.labels.assign(purchases.size(), Split::train);
  out.query_in_train_pool.assign(static_cast<size_t>(n_queries), 0);

  // (a) shuffle query ids, first 70% to the train pool
  {
    std::vector<int> qids(static_cast<size_t>(n_queries));
    for (int i = 0; i < n_queries; ++i) qids[static_cast<size_t>(i)] = i;
    Rng rng(mix_seed(*cfg.seed, 1));
    for (int i = n_queries - 1; i > 0; --i)
      std::swap(qids[static_cast<size_t>(i)], qids[rng.uniform_int(static_cast<uint32_t>(i + 1))]);
    const int n_train_pool = std::clamp(
        static_cast<int>(std::floor(cfg.query_train_frac * n_queries + 0.5)), 0, n_queries);
    for (int i = 0; i < n_train_pool; ++i) out.query_in_train_pool[static_cast<size_t>(qids[static_cast<size_t>(i)])] = 1;
  }

  // (b) an item whose queries all fell in the test pool gets one moved back
  {
    Rng rng(mix_seed(*cfg.seed, 2));
    for (int i = 0; i < n_items; ++i) {
      if (!purchased[static_cast<size_t>(i)]) continue;
      const auto& qs = item_queries[static_cast<size_t>(i)];
      bool any_train = false;
      for (int q : qs) any_train = any_train || out.query_in_train_pool[static_cast<size_t>(q)];
      if (!any_train) {
        const int pick = qs[rng.uniform_int(static_cast<uint32_t>(qs.size()))];
        out.query_in_train_pool[static_cast<size_t>(pick)] = 1;
      }
    }
  }

  // (c) per user: chronological 0.8/0.1/0.1 cut, ties broken by input order
  std::vector<std::vector<int>> by_user(static_cast<size_t>(n_users));
  for (size_t p = 0; p < purchases.size(); ++p) by_user[static_cast<size_t>(purchases[p].user)].push_back(static_cast<int>(p));
  for (auto& list : by_user)
    std::sort(list.begin(), list.end(), [&](int a, int b) {
      const Purchase& pa = purchases[static_cast<size_t>(a)];
      const Purchase& pb = purchases[static_cast<size_t>(b)];
      return pa.timestamp != pb.timestamp ? pa.timestamp < pb.timestamp : pa.order < pb.order;
    });
  for (const auto& list : by_user) {
    const int n = static_cast<int>(list.size());
    const int n_tr = static_cast<int>(std::floor(cfg.train_ratio * n));
    const int n_va = static_cast<int>(std::floor(cfg.valid_ratio * n));
    for (int k = 0; k < n; ++k)
      out.labels[static_cast<size_t>(list[static_cast<size_t>(k)])] =
          k < n_tr ? Split::train : (k < n_tr + n_va ? Split::valid : Split::test);
  }

  // (d) valid/test purchases whose item has no test-pool query move back
  auto has_test_query = [&](int item) {
    for (int q : item_queries[static_cast<size_t>(item)])
      if (!out.query_in_train_pool[static_cast<size_t>(q)]) return true;
    return false;
  };
  for (size_t p = 0; p < purchases.size(); ++p)
    if (out.labels[p] != Split::train && !has_test_query(purchases[p].item)) out.labels[p] = Split::train;

  // (e) repair chronology broken by (d): nothing older than the user's
  // newest train purchase may stay in valid/test
  for (const auto& list : by_user) {
    long long newest_train = std::numeric_limits<long long>::min();
    for (int p : list)
      if (out.labels[static_cast<size_t>(p)] == Split::train)
        newest_train = std::max(newest_train, purchases[static_cast<size_t>(p)].timestamp);
    for (int p : list)
      if (out.labels[static_cast<size_t>(p)] != Split::train && purchases[static_cast<size_t>(p)].timestamp < newest_train)
        out.labels[static_cast<size_t>(p)] = Split::train;
  }

  // expand purchases into (user, query, item, t) rows and build the
  // chronological per-user train index
  out.user_train.resize(static_cast<size_t>(n_users));
  for (size_t u = 0; u < by_user.size(); ++u) {
    for (int p : by_user[u]) {
      const Purchase& pur = purchases[static_cast<size_t>(p)];
      const Split label = out.labels[static_cast<size_t>(p)];
      if (label == Split::train) out.user_train[u].push_back(p);
      for (int q : item_queries[static_cast<size_t>(pur.item)]) {
        const bool in_train = out.query_in_train_pool[static_cast<size_t>(q)] != 0;
        if (label == Split::train && in_train)
          out.train.push_back({pur.user, q, pur.item, pur.timestamp});
        else if (label == Split::valid && !in_train)
          out.valid.push_back({pur.user, q, pur.item, pur.timestamp});
        else if (label == Split::test && !in_train)
          out.test.push_back({pur.user, q, pur.item, pur.timestamp});
      }
    }
  }

  // the four invariants, checked on every produced split
  for (const auto& list : by_user) {
    long long newest_train = std::numeric_limits<long long>::min();
    for (int p : list)
      if (out.labels[static_cast<size_t>(p)] == Split::train)
        newest_train = std::max(newest_train, purchases[static_cast<size_t>(p)].timestamp);
    for (int p : list)
      if (out.labels[static_cast<size_t>(p)] != Split::train && purchases[static_cast<size_t>(p)].timestamp < newest_train)
        throw std::logic_error("split_dataset: chronology invariant violated");
  }
  for (int i = 0; i < n_items; ++i) {
    if (!purchased[static_cast<size_t>(i)]) continue;
    bool any_train = false;
    for (int q : item_queries[static_cast<size_t>(i)]) any_train = any_train || out.query_in_train_pool[static_cast<size_t>(q)];
    if (!any_train) throw std::logic_error("split_dataset: item left without a train query");
  }
  for (size_t p = 0; p < purchases.size(); ++p)
    if (out.labels[p] != Split::train && !has_test_query(purchases[p].item))
      throw std::logic_error("split_dataset: valid/test purchase left without an eligible query");

  return out;
}

std::vector<int> user_history(const DatasetSplit& split, int user, long long before_timestamp, int max_len) {
  std::vector<int> items;
  if (user < 0 || user >= static_cast<int>(split.user_train.size()) || max_len <= 0) return items;
  for (int p : split.user_train[static_cast<size_t>(user)]) {
    const Purchase& pur = split.purchases[static_cast<size_t>(p)];
    if (pur.timestamp < before_timestamp) items.push_back(pur.item);
  }
  if (static_cast<int>(items.size()) > max_len)
    items.erase(items.begin(), items.end() - max_len);
  return items;
}

// --- ingestion ---

namespace {

json parse_line(const std::string& line, const std::string& path, long long lineno) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
  }
}

const json& field(const json& obj, const char* native, const char* amazon, const std::string& where) {
  if (obj.contains(native)) return obj.at(native);
  if (obj.contains(amazon)) return obj.at(amazon);
  throw std::runtime_error(where + ": missing field '" + native + "' (or '" + amazon + "')");
}

}  // namespace

std::vector<ReviewRecord> load_reviews_jsonl(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<ReviewRecord> out;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const json obj = parse_line(line, path, lineno);
    ReviewRecord r;
    try {
      r.user_id = field(obj, "user_id", "reviewerID", where).get<std::string>();
      r.item_id = field(obj, "item_id", "asin", where).get<std::string>();
      r.timestamp = field(obj, "timestamp", "unixReviewTime", where).get<long long>();
      if (obj.contains("text"))
        r.text = obj.at("text").get<std::string>();
      else if (obj.contains("reviewText"))
        r.text = obj.at("reviewText").get<std::string>();
    } catch (const json::exception& e) {
      throw std::runtime_error(where + ": wrong field type: " + e.what());
    }
    check_id(r.user_id, where);
    check_id(r.item_id, where);
    if (r.timestamp <= 0) throw std::runtime_error(where + ": timestamp must be positive");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ItemMeta> load_items_jsonl(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<ItemMeta> out;
  std::unordered_set<std::string> seen;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const json obj = parse_line(line, path, lineno);
    ItemMeta m;
    try {
      m.item_id = field(obj, "item_id", "asin", where).get<std::string>();
      m.categories = obj.at("categories").get<std::vector<std::vector<std::string>>>();
    } catch (const json::exception& e) {
      throw std::runtime_error(where + ": wrong field type: " + e.what());
    }
    check_id(m.item_id, where);
    if (m.categories.empty()) throw std::runtime_error(where + ": item '" + m.item_id + "' has no category path");
    if (!seen.insert(m.item_id).second)
      throw std::runtime_error(where + ": duplicate item '" + m.item_id + "'");
    out.push_back(std::move(m));
  }
  return out;
}

// --- full prep ---

Dataset build_dataset(const std::vector<ReviewRecord>& reviews, const std::vector<ItemMeta>& metas,
                      const DatasetConfig& cfg, std::ostream* warn) {
  Dataset ds;

  std::unordered_map<std::string, const ItemMeta*> meta_by_id;
  for (const ItemMeta& m : metas) {
    if (!meta_by_id.emplace(m.item_id, &m).second)
      throw std::invalid_argument("build_dataset: duplicate item meta '" + m.item_id + "'");
  }

  long long dropped_no_meta = 0;
  for (const ReviewRecord& r : reviews) {
    check_id(r.user_id, "review");
    check_id(r.item_id, "review");
    if (r.timestamp <= 0) throw std::invalid_argument("build_dataset: non-positive timestamp");
    if (!meta_by_id.count(r.item_id)) ++dropped_no_meta;
  }
  if (dropped_no_meta && warn)
    *warn << "warning: dropped " << dropped_no_meta << " reviews of items without metadata\n";

  // candidate items: reviewed and carrying metadata, first-appearance order
  std::unordered_map<std::string, int> item_index;
  std::vector<std::string> item_ids;
  std::vector<const ItemMeta*> metas_by_item;
  for (const ReviewRecord& r : reviews) {
    auto mit = meta_by_id.find(r.item_id);
    if (mit == meta_by_id.end()) continue;
    if (item_index.emplace(r.item_id, static_cast<int>(item_ids.size())).second) {
      item_ids.push_back(r.item_id);
      metas_by_item.push_back(mit->second);
    }
  }

  BuiltQueries built = build_queries(metas_by_item, stopword_set(), warn);

  // keep only items that produced at least one query
  std::vector<int> remap(item_ids.size(), -1);
  {
    std::vector<std::string> kept_ids;
    std::vector<std::vector<int>> kept_queries;
    for (size_t i = 0; i < item_ids.size(); ++i) {
      if (built.item_queries[i].empty()) continue;
      remap[i] = static_cast<int>(kept_ids.size());
      kept_ids.push_back(item_ids[i]);
      kept_queries.push_back(std::move(built.item_queries[i]));
    }
    ds.item_ids = std::move(kept_ids);
    ds.item_queries = std::move(kept_queries);
  }
  ds.queries = std::move(built.queries);

  // purchases over kept items; users indexed by first appearance
  std::unordered_map<std::string, int> user_index;
  std::vector<Purchase> purchases;
  std::vector<const std::string*> purchase_texts;
  long long dropped_no_query = 0;
  for (const ReviewRecord& r : reviews) {
    auto iit = item_index.find(r.item_id);
    if (iit == item_index.end()) continue;  // no metadata, counted above
    const int mapped = remap[static_cast<size_t>(iit->second)];
    if (mapped < 0) {
      ++dropped_no_query;
      continue;
    }
    auto [uit, inserted] = user_index.emplace(r.user_id, static_cast<int>(ds.user_ids.size()));
    if (inserted) ds.user_ids.push_back(r.user_id);
    Purchase p;
    p.user = uit->second;
    p.item = mapped;
    p.timestamp = r.timestamp;
    p.order = static_cast<int>(purchases.size());
    purchases.push_back(p);
    purchase_texts.push_back(&r.text);
  }
  if (dropped_no_query && warn)
    *warn << "warning: dropped " << dropped_no_query << " reviews of items without a usable query\n";
  if (purchases.empty()) throw std::runtime_error("build_dataset: no usable purchases");

  ds.split = split_dataset(purchases, ds.item_queries, static_cast<int>(ds.queries.size()),
                           static_cast<int>(ds.user_ids.size()), cfg.split);

  // vocabulary from train reviews only
  std::vector<const std::string*> train_texts;
  for (size_t p = 0; p < purchases.size(); ++p)
    if (ds.split.labels[p] == Split::train) train_texts.push_back(purchase_texts[p]);
  if (train_texts.empty()) throw std::runtime_error("build_dataset: train split is empty");
  ds.vocab = build_vocabulary(train_texts, cfg.min_count);

  // resolve query terms against the vocabulary; out-of-vocab terms drop out
  long long empty_queries = 0;
  for (Query& q : ds.queries) {
    q.terms.clear();
    for (const std::string& w : q.term_strings) {
      const int id = ds.vocab.id_of(w);
      if (id >= 0) q.terms.push_back(id);
    }
    if (q.terms.empty()) ++empty_queries;
  }
  if (empty_queries && warn)
    *warn << "warning: " << empty_queries << " queries have no in-vocabulary terms and will be skipped\n";

  // per-item word streams from train reviews, input order
  ds.split.item_words.assign(ds.item_ids.size(), {});
  for (size_t p = 0; p < purchases.size(); ++p) {
    if (ds.split.labels[p] != Split::train) continue;
    auto& stream = ds.split.item_words[static_cast<size_t>(purchases[p].item)];
    for (const std::string& tok : tokenize(*purchase_texts[p])) {
      const int id = ds.vocab.id_of(tok);
      if (id >= 0) stream.push_back(id);
    }
  }

  ds.item_train_purchases.assign(ds.item_ids.size(), 0);
  for (size_t p = 0; p < purchases.size(); ++p)
    if (ds.split.labels[p] == Split::train) ds.item_train_purchases[static_cast<size_t>(purchases[p].item)] += 1;

  long long n_train_purch = 0, n_valid_purch = 0, n_test_purch = 0;
  for (Split s : ds.split.labels) {
    n_train_purch += s == Split::train;
    n_valid_purch += s == Split::valid;
    n_test_purch += s == Split::test;
  }
  ds.stats = {
      {"users", static_cast<long long>(ds.user_ids.size())},
      {"items", static_cast<long long>(ds.item_ids.size())},
      {"reviews", static_cast<long long>(purchases.size())},
      {"queries", static_cast<long long>(ds.queries.size())},
      {"vocab_words", ds.vocab.size()},
      {"train_purchases", n_train_purch},
      {"valid_purchases", n_valid_purch},
      {"test_purchases", n_test_purch},
      {"train_rows", static_cast<long long>(ds.split.train.size())},
      {"valid_rows", static_cast<long long>(ds.split.valid.size())},
      {"test_rows", static_cast<long long>(ds.split.test.size())},
      {"dropped_reviews_no_meta", dropped_no_meta},
      {"dropped_reviews_no_query", dropped_no_query},
      {"skipped_category_paths", built.skipped_paths},
      {"queries_empty_after_vocab", empty_queries},
  };
  return ds;
}

// --- persistence ---

namespace {

std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(xs[i]);
  }
  return out;
}

std::vector<int> parse_ints(const std::string& s, const std::string& where) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(static_cast<int>(to_ll(tok, where)));
  return out;
}

std::string join_strings(const std::vector<std::string>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ' ';
    out += xs[i];
  }
  return out;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };

  {
    std::ofstream out = open_out(path("users.tsv"));
    for (const auto& u : ds.user_ids) out << u << '\n';
  }
  {
    std::ofstream out = open_out(path("items.tsv"));
    for (const auto& i : ds.item_ids) out << i << '\n';
  }
  {
    std::ofstream out = open_out(path("vocab.tsv"));
    for (int w = 0; w < ds.vocab.size(); ++w)
      out << ds.vocab.id_to_word[static_cast<size_t>(w)] << '\t' << ds.vocab.frequency[static_cast<size_t>(w)] << '\n';
  }
  {
    std::ofstream out = open_out(path("queries.tsv"));
    for (const Query& q : ds.queries)
      out << int(ds.split.query_in_train_pool[static_cast<size_t>(q.query_id)]) << '\t'
          << join_strings(q.term_strings) << '\t' << join_ints(q.terms) << '\n';
  }
  {
    std::ofstream out = open_out(path("item_queries.tsv"));
    for (const auto& qs : ds.item_queries) out << join_ints(qs) << '\n';
  }
  {
    std::ofstream out = open_out(path("purchases.tsv"));
    for (size_t p = 0; p < ds.split.purchases.size(); ++p) {
      const Purchase& pur = ds.split.purchases[p];
      out << pur.user << '\t' << pur.item << '\t' << pur.timestamp << '\t' << pur.order << '\t'
          << split_name(ds.split.labels[p]) << '\n';
    }
  }
  {
    // the audit manifest: every expanded row with string ids
    std::ofstream out = open_out(path("split.tsv"));
    const auto dump = [&](const std::vector<SplitRow>& rows, const char* label) {
      for (const SplitRow& r : rows)
        out << ds.user_ids[static_cast<size_t>(r.user)] << '\t' << r.query << '\t'
            << ds.item_ids[static_cast<size_t>(r.item)] << '\t' << r.timestamp << '\t' << label << '\n';
    };
    dump(ds.split.train, "train");
    dump(ds.split.valid, "valid");
    dump(ds.split.test, "test");
  }
  {
    std::ofstream out = open_out(path("item_words.tsv"));
    for (const auto& ws : ds.split.item_words) out << join_ints(ws) << '\n';
  }
  {
    nlohmann::json j;
    for (const auto& [k, v] : ds.stats) j[k] = v;
    std::ofstream out = open_out(path("stats.json"));
    out << j.dump(2) << '\n';
  }
}

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
  Dataset ds;

  {
    std::ifstream in = open_in(path("users.tsv"));
    std::string line;
    while (std::getline(in, line)) ds.user_ids.push_back(line);
  }
  {
    std::ifstream in = open_in(path("items.tsv"));
    std::string line;
    while (std::getline(in, line)) ds.item_ids.push_back(line);
  }
  {
    std::ifstream in = open_in(path("vocab.tsv"));
    std::string line;
    long long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto cols = split_tsv(line);
      const std::string where = path("vocab.tsv") + ":" + std::to_string(lineno);
      if (cols.size() != 2) throw std::runtime_error(where + ": expected 2 columns");
      ds.vocab.word_to_id.emplace(cols[0], static_cast<int>(ds.vocab.id_to_word.size()));
      ds.vocab.id_to_word.push_back(cols[0]);
      ds.vocab.frequency.push_back(to_ll(cols[1], where));
    }
  }
  {
    std::ifstream in = open_in(path("queries.tsv"));
    std::string line;
    long long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto cols = split_tsv(line);
      const std::string where = path("queries.tsv") + ":" + std::to_string(lineno);
      if (cols.size() != 3) throw std::runtime_error(where + ": expected 3 columns");
      Query q;
      q.query_id = static_cast<int>(ds.queries.size());
      std::istringstream terms(cols[1]);
      std::string tok;
      while (terms >> tok) q.term_strings.push_back(tok);
      q.terms = parse_ints(cols[2], where);
      ds.split.query_in_train_pool.push_back(static_cast<uint8_t>(to_ll(cols[0], where) != 0));
      ds.queries.push_back(std::move(q));
    }
  }
  {
    std::ifstream in = open_in(path("item_queries.tsv"));
    std::string line;
    while (std::getline(in, line)) ds.item_queries.push_back(parse_ints(line, path("item_queries.tsv")));
    if (ds.item_queries.size() != ds.item_ids.size())
      throw std::runtime_error("load_dataset: item_queries.tsv row count does not match items.tsv");
  }
  {
    std::ifstream in = open_in(path("purchases.tsv"));
    std::string line;
    long long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto cols = split_tsv(line);
      const std::string where = path("purchases.tsv") + ":" + std::to_string(lineno);
      if (cols.size() != 5) throw std::runtime_error(where + ": expected 5 columns");
      Purchase p;
      p.user = static_cast<int>(to_ll(cols[0], where));
      p.item = static_cast<int>(to_ll(cols[1], where));
      p.timestamp = to_ll(cols[2], where);
      p.order = static_cast<int>(to_ll(cols[3], where));
      const auto label = split_from_name(cols[4]);
      if (!label) throw std::runtime_error(where + ": unknown split label '" + cols[4] + "'");
      ds.split.purchases.push_back(p);
      ds.split.labels.push_back(*label);
    }
  }
  {
    std::unordered_map<std::string, int> user_index, item_index;
    for (size_t i = 0; i < ds.user_ids.size(); ++i) user_index.emplace(ds.user_ids[i], static_cast<int>(i));
    for (size_t i = 0; i < ds.item_ids.size(); ++i) item_index.emplace(ds.item_ids[i], static_cast<int>(i));
    std::ifstream in = open_in(path("split.tsv"));
    std::string line;
    long long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto cols = split_tsv(line);
      const std::string where = path("split.tsv") + ":" + std::to_string(lineno);
      if (cols.size() != 5) throw std::runtime_error(where + ": expected 5 columns");
      SplitRow r;
      auto uit = user_index.find(cols[0]);
      auto iit = item_index.find(cols[2]);
      if (uit == user_index.end() || iit == item_index.end())
        throw std::runtime_error(where + ": row references unknown user or item");
      r.user = uit->second;
      r.query = static_cast<int>(to_ll(cols[1], where));
      r.item = iit->second;
      r.timestamp = to_ll(cols[3], where);
      const auto label = split_from_name(cols[4]);
      if (!label) throw std::runtime_error(where + ": unknown split label '" + cols[4] + "'");
      if (*label == Split::train)
        ds.split.train.push_back(r);
      else if (*label == Split::valid)
        ds.split.valid.push_back(r);
      else
        ds.split.test.push_back(r);
    }
  }
  {
    std::ifstream in = open_in(path("item_words.tsv"));
    std::string line;
    while (std::getline(in, line)) ds.split.item_words.push_back(parse_ints(line, path("item_words.tsv")));
    if (ds.split.item_words.size() != ds.item_ids.size())
      throw std::runtime_error("load_dataset: item_words.tsv row count does not match items.tsv");
  }
  {
    std::ifstream in = open_in(path("stats.json"));
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path("stats.json") + ": " + e.what());
    }
    for (const auto& [k, v] : j.items()) ds.stats[k] = v.get<long long>();
  }

  // recomputed indexes: chronological per-user train purchases, item counts
  ds.split.user_train.assign(ds.user_ids.size(), {});
  ds.item_train_purchases.assign(ds.item_ids.size(), 0);
  std::vector<std::vector<int>> by_user(ds.user_ids.size());
  for (size_t p = 0; p < ds.split.purchases.size(); ++p)
    by_user[static_cast<size_t>(ds.split.purchases[p].user)].push_back(static_cast<int>(p));
  for (auto& list : by_user)
    std::sort(list.begin(), list.end(), [&](int a, int b) {
      const Purchase& pa = ds.split.purchases[static_cast<size_t>(a)];
      const Purchase& pb = ds.split.purchases[static_cast<size_t>(b)];
      return pa.timestamp != pb.timestamp ? pa.timestamp < pb.timestamp : pa.order < pb.order;
    });
  for (size_t u = 0; u < by_user.size(); ++u)
    for (int p : by_user[u])
      if (ds.split.labels[static_cast<size_t>(p)] == Split::train) {
        ds.split.user_train[u].push_back(p);
        ds.item_train_purchases[static_cast<size_t>(ds.split.purchases[static_cast<size_t>(p)].item)] += 1;
      }

  return ds;
}

}  // namespace temsearch
