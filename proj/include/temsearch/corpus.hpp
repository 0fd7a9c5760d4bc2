#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace temsearch {

struct ReviewRecord {
  std::string user_id;
  std::string item_id;
  long long timestamp = 0;  // seconds; > 0
  std::string text;
};

struct ItemMeta {
  std::string item_id;
  std::vector<std::vector<std::string>> categories;  // multi-level paths
};

struct Query {
  int query_id = -1;
  std::vector<std::string> term_strings;  // stopword-free, dedup'd, original order
  std::vector<int> terms;                 // vocabulary ids; out-of-vocab terms dropped
};

struct Vocabulary {
  std::unordered_map<std::string, int> word_to_id;
  std::vector<std::string> id_to_word;
  std::vector<long long> frequency;

  int size() const { return static_cast<int>(id_to_word.size()); }
  // -1 when absent
  int id_of(const std::string& word) const {
    auto it = word_to_id.find(word);
    return it == word_to_id.end() ? -1 : it->second;
  }
};

enum class Split : uint8_t { train = 0, valid = 1, test = 2 };

const char* split_name(Split s);
std::optional<Split> split_from_name(const std::string& name);

// One purchase event (= one review). `order` is the arrival index and breaks
// timestamp ties, which are common with day-granular data.
struct Purchase {
  int user = -1;
  int item = -1;
  long long timestamp = 0;
  int order = 0;
};

// One (user, query, item, timestamp) row of the expanded split manifest.
struct SplitRow {
  int user = -1;
  int query = -1;
  int item = -1;
  long long timestamp = 0;
};

struct DatasetSplit {
  std::vector<Purchase> purchases;
  std::vector<Split> labels;                 // parallel to purchases
  std::vector<uint8_t> query_in_train_pool;  // by query id
  std::vector<SplitRow> train, valid, test;  // expanded purchase x query rows
  std::vector<std::vector<int>> user_train;  // user -> purchase indices, chronological
  std::vector<std::vector<int>> item_words;  // item -> word ids from train reviews only
};

// Everything downstream of data prep: immutable once built.
struct Dataset {
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  Vocabulary vocab;
  std::vector<Query> queries;
  std::vector<std::vector<int>> item_queries;     // item -> query ids, insertion order
  DatasetSplit split;
  std::vector<long long> item_train_purchases;    // item -> train purchase count
  std::unordered_map<std::string, long long> stats;

  int n_users() const { return static_cast<int>(user_ids.size()); }
  int n_items() const { return static_cast<int>(item_ids.size()); }
};

// --- text ---

// Lowercase, split on any non-alphanumeric byte, drop empties.
std::vector<std::string> tokenize(const std::string& text);

// Fixed English stopword list (tokenized forms, so contraction fragments
// like "isn"/"t" are included).
const std::unordered_set<std::string>& stopword_set();

// --- queries ---

// Term lists for one item's category paths: words concatenated level by
// level, stopwords removed, later duplicates dropped. Paths that end up
// empty are skipped (a warning goes to `warn` when given).
std::vector<std::vector<std::string>> query_term_lists(const ItemMeta& meta,
                                                       const std::unordered_set<std::string>& stopwords,
                                                       std::ostream* warn = nullptr);

struct BuiltQueries {
  std::vector<Query> queries;                  // query_id = position
  std::vector<std::vector<int>> item_queries;  // by item index
  long long skipped_paths = 0;
};

// Queries for the whole collection; identical term lists share one query_id,
// assigned in first-appearance order (items scanned by index, paths in input
// order) so the result is deterministic and stable.
BuiltQueries build_queries(const std::vector<const ItemMeta*>& metas_by_item,
                           const std::unordered_set<std::string>& stopwords, std::ostream* warn = nullptr);

// --- vocabulary ---

// Words counted over the given texts; those below min_count dropped; ids in
// first-appearance order. Empty result → error.
Vocabulary build_vocabulary(const std::vector<const std::string*>& texts, int min_count);

// --- split ---

struct SplitConfig {
  double train_ratio = 0.8;
  double valid_ratio = 0.1;  // test takes the remainder
  double query_train_frac = 0.7;
  std::optional<uint64_t> seed;  // required; splitting must be reproducible
};

// The chronological split with query pools and move-back repairs:
//   (a) queries shuffled, 70% to the train pool, the rest shared by
//       valid+test; (b) a purchased item with no train-pool query gets one
//       of its queries moved back; (c) per user, purchases sorted by
//       (timestamp, order) and cut 0.8/0.1/0.1; (d) a valid/test purchase
//       whose item has no test-pool query moves back to train; (e) any
//       valid/test purchase older than the user's newest train purchase
//       moves back to train, restoring chronology broken by (d).
// item_words is left empty here; the caller fills it once the vocabulary
// exists (train reviews only).
DatasetSplit split_dataset(const std::vector<Purchase>& purchases,
                           const std::vector<std::vector<int>>& item_queries, int n_queries, int n_users,
                           const SplitConfig& cfg);

// Train-split purchases of the user strictly before the timestamp,
// chronological, truncated to the most recent max_len. Unknown user or no
// prior purchases → empty.
std::vector<int> user_history(const DatasetSplit& split, int user, long long before_timestamp, int max_len);

// --- ingestion ---

// Line-delimited JSON. Accepts native field names (user_id, item_id,
// timestamp, text) or the public Amazon dump's (reviewerID, asin,
// unixReviewTime, reviewText). Malformed lines raise with the line number.
std::vector<ReviewRecord> load_reviews_jsonl(const std::string& path);

// Native (item_id, categories) or Amazon metadata (asin, categories).
std::vector<ItemMeta> load_items_jsonl(const std::string& path);

struct DatasetConfig {
  int min_count = 5;
  SplitConfig split;
};

// Full data prep: index users/items, build queries, split, build the
// vocabulary from train reviews only, resolve query terms, and collect
// per-item train word streams. Reviews of items without a usable query are
// dropped and counted in stats.
Dataset build_dataset(const std::vector<ReviewRecord>& reviews, const std::vector<ItemMeta>& metas,
                      const DatasetConfig& cfg, std::ostream* warn = nullptr);

// --- persistence (a directory of TSV/JSON artifacts) ---

void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace temsearch
