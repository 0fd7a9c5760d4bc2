#pragma once

#include <optional>
#include <string>
#include <vector>

#include "temsearch/corpus.hpp"
#include "temsearch/models.hpp"

namespace temsearch {

// Full-collection ranking for one (user, query) context. Scores are
// non-increasing; exact score ties break by item id ascending so the order
// is deterministic and invariant under strictly increasing score maps.
struct RankedList {
  std::vector<int> items;
  std::vector<float> scores;
};

// Order ids 0..n-1 by (score descending, id ascending).
RankedList rank_from_scores(const std::vector<float>& scores);

// Scores every item by dot(item_emb, m) where m is the frozen purchase
// intent. History comes from the user's train purchases only (most recent
// max_len). filter_train_items drops the user's train items from the
// candidate list; the default keeps the whole collection.
// Throws if query_terms is empty or user is out of range.
RankedList rank_items(ModelParams& params, const Dataset& ds, int user,
                      const std::vector<int>& query_terms, bool filter_train_items = false);

// Ranking metrics over a full list. relevant must be non-empty; duplicates
// in it are ignored. precision keeps k in the denominator even when fewer
// items exist; ndcg uses binary gains, discount 1/log2(rank+1), and an
// ideal list of min(|relevant|, k) hits.
double mrr(const RankedList& ranked, const std::vector<int>& relevant);
double precision_at(const RankedList& ranked, const std::vector<int>& relevant, int k = 20);
double ndcg_at(const RankedList& ranked, const std::vector<int>& relevant, int k = 20);

// Two-sided paired t-test p-value for matched metric vectors (equal length
// >= 2). All differences exactly zero -> 1. Zero variance with a nonzero
// mean has no finite t, so the p -> 0 guard returns 1e-300.
double paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct ContextMetrics {
  int user = -1;
  int query = -1;
  double mrr = 0.0;
  double ndcg = 0.0;
  double prec = 0.0;
};

struct PValues {
  double mrr = 1.0;
  double ndcg = 1.0;
  double prec = 1.0;
};

struct MetricsReport {
  std::string model;
  std::string split;
  int cutoff = 20;
  long long skipped_oov = 0;  // contexts whose query had no in-vocab terms
  std::vector<ContextMetrics> contexts;  // sorted by (user, query)
  double mrr = 0.0;  // macro averages over contexts
  double ndcg = 0.0;
  double prec = 0.0;
  std::optional<PValues> vs_baseline;
};

struct EvalConfig {
  std::string split = "test";  // "test" or "valid"
  int cutoff = 20;
  int workers = 1;
  bool filter_train_items = false;
  void validate() const;
};

// Iterates every (user, query) context of the chosen split; the relevant
// set is the items that context purchased there. Contexts are independent,
// so they fan out across workers; rows merge in (user, query) order, making
// the report identical for any worker count. A baseline report attaches
// per-metric paired t-test p-values over the matched contexts.
MetricsReport evaluate(ModelParams& params, const Dataset& ds, const EvalConfig& cfg,
                       const MetricsReport* baseline = nullptr);

// Paired significance between two reports over identical context sets.
PValues compare_reports(const MetricsReport& a, const MetricsReport& b);

// One row per model: MRR / NDCG@k / P@k, plus the significance line when
// a baseline was attached.
std::string render_report_table(const MetricsReport& report);

void save_report_json(const MetricsReport& report, const std::string& path);
MetricsReport load_report_json(const std::string& path);

// Per-context dump: user, query id, then the three metrics, tab-separated.
void save_context_tsv(const MetricsReport& report, const std::string& path);

}  // namespace temsearch
