#include "temsearch/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace temsearch {

namespace {

std::set<int> unique_relevant(const std::vector<int>& relevant) {
  if (relevant.empty()) throw std::invalid_argument("relevant set is empty");
  return {relevant.begin(), relevant.end()};
}

void check_cutoff(int k) {
  if (k < 1) throw std::invalid_argument("metric cutoff must be >= 1");
}

// Lentz continued fraction for the incomplete beta; converges in a few
// dozen terms for the t-distribution arguments used here.
double incomplete_beta_cf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < 1e-30) d = 1e-30;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < 1e-30) d = 1e-30;
    c = 1.0 + aa / c;
    if (std::abs(c) < 1e-30) c = 1e-30;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < 1e-30) d = 1e-30;
    c = 1.0 + aa / c;
    if (std::abs(c) < 1e-30) c = 1e-30;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 3e-12) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

// Regularized incomplete beta I_x(a, b).
double reg_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * incomplete_beta_cf(a, b, x) / a;
  return 1.0 - front * incomplete_beta_cf(b, a, 1.0 - x) / b;
}

struct EvalContext {
  int user = -1;
  int query = -1;
  std::vector<int> relevant;
};

}  // namespace

RankedList rank_from_scores(const std::vector<float>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const float sa = scores[static_cast<size_t>(a)];
    const float sb = scores[static_cast<size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });
  RankedList out;
  out.items = std::move(order);
  out.scores.reserve(scores.size());
  for (int id : out.items) out.scores.push_back(scores[static_cast<size_t>(id)]);
  return out;
}

RankedList rank_items(ModelParams& params, const Dataset& ds, int user,
                      const std::vector<int>& query_terms, bool filter_train_items) {
  if (query_terms.empty()) throw std::invalid_argument("query has no in-vocabulary terms");
  if (user < 0 || user >= ds.n_users()) throw std::invalid_argument("user id out of range");
  const std::vector<int> history = user_history(ds.split, user,
                                                std::numeric_limits<long long>::max(),
                                                params.config.max_len);
  const FrozenIntent intent = frozen_intent(params, query_terms, user, history);

  std::vector<int> candidates;
  if (filter_train_items) {
    std::set<int> bought;
    for (int idx : ds.split.user_train[static_cast<size_t>(user)])
      bought.insert(ds.split.purchases[static_cast<size_t>(idx)].item);
    for (int i = 0; i < params.n_items; ++i)
      if (bought.count(i) == 0) candidates.push_back(i);
  } else {
    candidates.resize(static_cast<size_t>(params.n_items));
    std::iota(candidates.begin(), candidates.end(), 0);
  }

  const std::vector<float> scores = score_items(params, intent.m, candidates);
  std::vector<int> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const float sa = scores[static_cast<size_t>(a)];
    const float sb = scores[static_cast<size_t>(b)];
    if (sa != sb) return sa > sb;
    return candidates[static_cast<size_t>(a)] < candidates[static_cast<size_t>(b)];
  });
  RankedList out;
  out.items.reserve(order.size());
  out.scores.reserve(order.size());
  for (int pos : order) {
    out.items.push_back(candidates[static_cast<size_t>(pos)]);
    out.scores.push_back(scores[static_cast<size_t>(pos)]);
  }
  return out;
}

double mrr(const RankedList& ranked, const std::vector<int>& relevant) {
  const std::set<int> rel = unique_relevant(relevant);
  for (size_t r = 0; r < ranked.items.size(); ++r)
    if (rel.count(ranked.items[r]) > 0) return 1.0 / static_cast<double>(r + 1);
  return 0.0;
}

double precision_at(const RankedList& ranked, const std::vector<int>& relevant, int k) {
  const std::set<int> rel = unique_relevant(relevant);
  check_cutoff(k);
  double hits = 0.0;
  for (size_t r = 0; r < ranked.items.size() && r < static_cast<size_t>(k); ++r)
    hits += rel.count(ranked.items[r]) > 0 ? 1.0 : 0.0;
  return hits / static_cast<double>(k);
}

double ndcg_at(const RankedList& ranked, const std::vector<int>& relevant, int k) {
  const std::set<int> rel = unique_relevant(relevant);
  check_cutoff(k);
  double dcg = 0.0;
  for (size_t r = 0; r < ranked.items.size() && r < static_cast<size_t>(k); ++r)
    if (rel.count(ranked.items[r]) > 0) dcg += 1.0 / std::log2(static_cast<double>(r + 2));
  double idcg = 0.0;
  const size_t ideal = std::min(rel.size(), static_cast<size_t>(k));
  for (size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r + 2));
  return dcg / idcg;
}

double paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired t-test needs equal lengths");
  const size_t n = a.size();
  if (n < 2) throw std::invalid_argument("paired t-test needs at least 2 pairs");
  std::vector<double> diff(n);
  bool all_zero = true;
  for (size_t i = 0; i < n; ++i) {
    diff[i] = a[i] - b[i];
    all_zero = all_zero && diff[i] == 0.0;
  }
  if (all_zero) return 1.0;
  const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double d : diff) var += (d - mean) * (d - mean);
  var /= static_cast<double>(n - 1);
  if (var == 0.0) return 1e-300;  // nonzero constant shift: |t| has no finite value
  const double t = mean / std::sqrt(var / static_cast<double>(n));
  const double df = static_cast<double>(n - 1);
  return reg_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

void EvalConfig::validate() const {
  if (split != "test" && split != "valid")
    throw std::invalid_argument("eval split must be \"test\" or \"valid\"");
  check_cutoff(cutoff);
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
}

MetricsReport evaluate(ModelParams& params, const Dataset& ds, const EvalConfig& cfg,
                       const MetricsReport* baseline) {
  cfg.validate();
  if (params.vocab_size != ds.vocab.size())
    throw std::invalid_argument("checkpoint vocabulary size " + std::to_string(params.vocab_size) +
                                " does not match corpus vocabulary size " +
                                std::to_string(ds.vocab.size()));
  if (params.n_items != ds.n_items())
    throw std::invalid_argument("checkpoint item count " + std::to_string(params.n_items) +
                                " does not match corpus item count " +
                                std::to_string(ds.n_items()));
  if (params.config.kind == ModelKind::hem && params.n_users != ds.n_users())
    throw std::invalid_argument("checkpoint user count " + std::to_string(params.n_users) +
                                " does not match corpus user count " +
                                std::to_string(ds.n_users()));

  const std::vector<SplitRow>& rows = cfg.split == "test" ? ds.split.test : ds.split.valid;
  std::map<std::pair<int, int>, std::set<int>> grouped;
  for (const SplitRow& row : rows) grouped[{row.user, row.query}].insert(row.item);

  MetricsReport report;
  report.model = model_kind_name(params.config.kind);
  report.split = cfg.split;
  report.cutoff = cfg.cutoff;

  std::vector<EvalContext> contexts;
  for (const auto& [key, items] : grouped) {
    if (ds.queries[static_cast<size_t>(key.second)].terms.empty()) {
      ++report.skipped_oov;
      continue;
    }
    EvalContext c;
    c.user = key.first;
    c.query = key.second;
    c.relevant.assign(items.begin(), items.end());
    contexts.push_back(std::move(c));
  }

  // contexts are independent; workers pull indices and fill disjoint slots,
  // so the merged rows never depend on scheduling
  std::vector<ContextMetrics> out(contexts.size());
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&]() {
    try {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= contexts.size()) return;
        const EvalContext& c = contexts[i];
        const RankedList ranked =
            rank_items(params, ds, c.user, ds.queries[static_cast<size_t>(c.query)].terms,
                       cfg.filter_train_items);
        ContextMetrics& m = out[i];
        m.user = c.user;
        m.query = c.query;
        m.mrr = mrr(ranked, c.relevant);
        m.ndcg = ndcg_at(ranked, c.relevant, cfg.cutoff);
        m.prec = precision_at(ranked, c.relevant, cfg.cutoff);
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };
  const int workers =
      std::max(1, std::min<int>(cfg.workers, static_cast<int>(contexts.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  report.contexts = std::move(out);
  for (const ContextMetrics& m : report.contexts) {
    report.mrr += m.mrr;
    report.ndcg += m.ndcg;
    report.prec += m.prec;
  }
  if (!report.contexts.empty()) {
    const double n = static_cast<double>(report.contexts.size());
    report.mrr /= n;
    report.ndcg /= n;
    report.prec /= n;
  }
  if (baseline != nullptr) report.vs_baseline = compare_reports(report, *baseline);
  return report;
}

PValues compare_reports(const MetricsReport& a, const MetricsReport& b) {
  if (a.contexts.size() != b.contexts.size())
    throw std::invalid_argument("reports cover different numbers of contexts");
  std::vector<double> am, bm, an, bn, ap, bp;
  for (size_t i = 0; i < a.contexts.size(); ++i) {
    const ContextMetrics& ca = a.contexts[i];
    const ContextMetrics& cb = b.contexts[i];
    if (ca.user != cb.user || ca.query != cb.query)
      throw std::invalid_argument("reports cover different contexts; cannot pair them");
    am.push_back(ca.mrr);
    bm.push_back(cb.mrr);
    an.push_back(ca.ndcg);
    bn.push_back(cb.ndcg);
    ap.push_back(ca.prec);
    bp.push_back(cb.prec);
  }
  PValues p;
  p.mrr = paired_t_test(am, bm);
  p.ndcg = paired_t_test(an, bn);
  p.prec = paired_t_test(ap, bp);
  return p;
}

std::string render_report_table(const MetricsReport& report) {
  const std::string ndcg_head = "NDCG@" + std::to_string(report.cutoff);
  const std::string prec_head = "P@" + std::to_string(report.cutoff);
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-10s %10s %10s %10s\n", "model", "MRR", ndcg_head.c_str(),
                prec_head.c_str());
  out += buf;
  std::snprintf(buf, sizeof buf, "%-10s %10.4f %10.4f %10.4f\n", report.model.c_str(), report.mrr,
                report.ndcg, report.prec);
  out += buf;
  std::snprintf(buf, sizeof buf, "contexts: %zu (%s split), skipped for empty query: %lld\n",
                report.contexts.size(), report.split.c_str(), report.skipped_oov);
  out += buf;
  if (report.vs_baseline.has_value()) {
    std::snprintf(buf, sizeof buf,
                  "paired t-test vs baseline: MRR p=%.4g, %s p=%.4g, %s p=%.4g\n",
                  report.vs_baseline->mrr, ndcg_head.c_str(), report.vs_baseline->ndcg,
                  prec_head.c_str(), report.vs_baseline->prec);
    out += buf;
  }
  return out;
}

void save_report_json(const MetricsReport& report, const std::string& path) {
  nlohmann::json j;
  j["model"] = report.model;
  j["split"] = report.split;
  j["cutoff"] = report.cutoff;
  j["skipped_oov"] = report.skipped_oov;
  j["mrr"] = report.mrr;
  j["ndcg"] = report.ndcg;
  j["prec"] = report.prec;
  nlohmann::json rows = nlohmann::json::array();
  for (const ContextMetrics& m : report.contexts) {
    rows.push_back({{"user", m.user},
                    {"query", m.query},
                    {"mrr", m.mrr},
                    {"ndcg", m.ndcg},
                    {"prec", m.prec}});
  }
  j["contexts"] = std::move(rows);
  if (report.vs_baseline.has_value()) {
    j["p_values"] = {{"mrr", report.vs_baseline->mrr},
                     {"ndcg", report.vs_baseline->ndcg},
                     {"prec", report.vs_baseline->prec}};
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out.good()) throw std::runtime_error("cannot write report: " + path);
  out << j.dump(2) << '\n';
}

MetricsReport load_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot read report: " + path);
  nlohmann::json j;
  in >> j;
  MetricsReport report;
  report.model = j.at("model").get<std::string>();
  report.split = j.at("split").get<std::string>();
  report.cutoff = j.at("cutoff").get<int>();
  report.skipped_oov = j.at("skipped_oov").get<long long>();
  report.mrr = j.at("mrr").get<double>();
  report.ndcg = j.at("ndcg").get<double>();
  report.prec = j.at("prec").get<double>();
  for (const nlohmann::json& row : j.at("contexts")) {
    ContextMetrics m;
    m.user = row.at("user").get<int>();
    m.query = row.at("query").get<int>();
    m.mrr = row.at("mrr").get<double>();
    m.ndcg = row.at("ndcg").get<double>();
    m.prec = row.at("prec").get<double>();
    report.contexts.push_back(m);
  }
  if (j.contains("p_values")) {
    PValues p;
    p.mrr = j["p_values"].at("mrr").get<double>();
    p.ndcg = j["p_values"].at("ndcg").get<double>();
    p.prec = j["p_values"].at("prec").get<double>();
    report.vs_baseline = p;
  }
  return report;
}

void save_context_tsv(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.good()) throw std::runtime_error("cannot write context dump: " + path);
  char buf[160];
  std::snprintf(buf, sizeof buf, "#user\tquery_id\tmrr\tndcg%d\tp%d\n", report.cutoff,
                report.cutoff);
  out << buf;
  for (const ContextMetrics& m : report.contexts) {
    std::snprintf(buf, sizeof buf, "%d\t%d\t%.17g\t%.17g\t%.17g\n", m.user, m.query, m.mrr,
                  m.ndcg, m.prec);
    out << buf;
  }
}

}  // namespace temsearch
