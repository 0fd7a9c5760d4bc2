// Acceptance gates: ten end-to-end criteria, one PASS/FAIL line each.
// Exits 0 only if every criterion passes. Oracles come from tests/oracle
// and stay independent of the library code under test.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracle/metrics_ref.hpp"
#include "oracle/model_ref.hpp"
#include "temsearch/corpus.hpp"
#include "temsearch/eval.hpp"
#include "temsearch/models.hpp"
#include "temsearch/rng.hpp"
#include "temsearch/synth.hpp"
#include "temsearch/trainer.hpp"

namespace fs = std::filesystem;
using namespace temsearch;
using temsearch::ad::NodeId;
using temsearch::ad::Tape;
using temsearch::ad::Tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

ModelConfig make_config(ModelKind kind, int d, int heads, int layers, int d_ff, int max_len) {
  ModelConfig cfg;
  cfg.kind = kind;
  cfg.d = d;
  cfg.heads = heads;
  cfg.layers = layers;
  cfg.d_ff = d_ff;
  cfg.max_len = max_len;
  return cfg;
}

const ModelKind all_kinds[] = {ModelKind::qem, ModelKind::hem, ModelKind::aem, ModelKind::zam,
                               ModelKind::tem};

// ---------------------------------------------------------------- criterion 1

// Central finite differences in 64-bit on the full training objective:
// d=8, h=2, l=2, |history|=3, V=20, 15 items; 200 sampled coordinates per
// model kind, relative error <=1e-3 on >=99% of them, <=1e-2 worst case.
Outcome c1_gradients() {
  double worst_overall = 0.0;
  double min_agree = 1.0;
  for (ModelKind kind : all_kinds) {
    ModelConfig cfg = make_config(kind, 8, 2, 2, 16, 6);
    ModelParams p = init_model(cfg, 20, 15, 4, 2026 + static_cast<uint64_t>(kind));

    oracle::RefExample ex;
    ex.terms = {1, 5, 9};
    ex.user = 2;
    ex.history = {3, 7, 11};
    ex.positive = 4;
    ex.item_negatives = {2, 9, 13};
    ex.window = {0, 6, 12};
    ex.word_negatives = {{1, 8}, {14, 3}, {5, 17}};

    Tape tape;
    ParamBinding b = bind_params(tape, p);
    const IntentResult intent = purchase_intent(tape, b, ex.terms, ex.user, ex.history);
    const NodeId gen = item_generation_loss(tape, b, intent.m, ex.positive, ex.item_negatives);
    const NodeId lang = item_language_loss(tape, b, ex.positive, ex.window, ex.word_negatives);
    const NodeId loss = ad::add(tape, gen, lang);
    const ad::Gradients grads = tape.backward(loss);

    oracle::RefParams rp = oracle::widen(p);

    // flat coordinate space over every bound parameter
    std::vector<size_t> cumulative;  // exclusive prefix sums
    size_t total = 0;
    for (const auto& [name, id] : b.named) {
      cumulative.push_back(total);
      total += oracle::ref_tensor(rp, name)->v.size();
    }

    Rng rng(9000 + static_cast<uint64_t>(kind));
    const double h = 1e-3;
    const auto fd_at = [&](oracle::RefTensor* rt, size_t i, double step) {
      const double x0 = rt->v[i];
      rt->v[i] = x0 + step;
      const double fp = oracle::ref_total_loss(rp, ex);
      rt->v[i] = x0 - step;
      const double fm = oracle::ref_total_loss(rp, ex);
      rt->v[i] = x0;
      return (fp - fm) / (2.0 * step);
    };

    int ok = 0, measured = 0, kinks = 0;
    const int samples = 200;
    while (measured < samples) {
      const size_t g = rng.uniform_int(static_cast<uint32_t>(total));
      size_t slot = cumulative.size() - 1;
      while (cumulative[slot] > g) --slot;
      const size_t i = g - cumulative[slot];
      const auto& [name, id] = b.named[slot];

      oracle::RefTensor* rt = oracle::ref_tensor(rp, name);
      const double fd = fd_at(rt, i, h);
      // a ReLU kink inside the +-h window breaks the instrument, not the
      // gradient: central differences at self-inconsistent scales get the
      // coordinate resampled (the reference is 64-bit, so any real
      // disagreement this large can only be non-smoothness)
      const double fd_fine = fd_at(rt, i, h / 10.0);
      if (std::abs(fd - fd_fine) / std::max({std::abs(fd), std::abs(fd_fine), 1e-4}) > 1e-3) {
        if (++kinks > 100) return {false, fmt("%s: %d kink-straddling samples", model_kind_name(kind), kinks)};
        continue;
      }
      ++measured;
      const double a = static_cast<double>(grads.at(id).data[i]);
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4});
      worst_overall = std::max(worst_overall, rel);
      if (rel <= 1e-3) ++ok;
      if (rel > 1e-2)
        return {false, fmt("%s %s[%zu]: analytic %.6g vs fd %.6g (rel %.3g)",
                           model_kind_name(kind), name.c_str(), i, a, fd, rel)};
    }
    min_agree = std::min(min_agree, ok / static_cast<double>(samples));
  }
  if (min_agree < 0.99) return {false, fmt("agreement dropped to %.1f%%", 100.0 * min_agree)};
  return {true, fmt("5 kinds x 200 coords, min agree %.1f%%, worst rel %.2g",
                    100.0 * min_agree, worst_overall)};
}

// ---------------------------------------------------------------- criterion 2

// ZAM's structural ceiling: the query enters with coefficient exactly 1 and
// the zero slot keeps the history's softmax mass strictly below 1.
Outcome c2_zam_bound() {
  Rng rng(31337);
  const std::pair<int, int> shapes[] = {{2, 1}, {4, 1}, {4, 2}, {8, 2}, {8, 4}};
  double max_mass = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto [d, heads] = shapes[rng.uniform_int(5)];
    const int vocab = 3 + static_cast<int>(rng.uniform_int(6));
    const int items = 2 + static_cast<int>(rng.uniform_int(9));
    const int n_hist = static_cast<int>(rng.uniform_int(7));  // 0..6 incl. empty
    ModelParams p = init_model(make_config(ModelKind::zam, d, heads, 1, 8, 8), vocab, items, 1,
                               40000 + static_cast<uint64_t>(trial));
    for (auto& t : p.attn_wq)
      for (float& v : t.data) v *= rng.uniform(0.5f, 10.0f);  // some sharply peaked trials

    std::vector<int> terms(1 + rng.uniform_int(3));
    for (int& t : terms) t = static_cast<int>(rng.uniform_int(static_cast<uint32_t>(vocab)));
    std::vector<int> history(static_cast<size_t>(n_hist));
    for (int& h : history) h = static_cast<int>(rng.uniform_int(static_cast<uint32_t>(items)));

    Tape tape;
    const ParamBinding b = bind_params(tape, p);
    const IntentResult r = zam_intent(tape, b, terms, history);
    if (r.attention.size() != 1 || r.attention[0].size() != history.size() + 1)
      return {false, fmt("trial %d: trace shape wrong", trial)};
    if (!(r.attention[0][0] > 0.0f))
      return {false, fmt("trial %d: zero slot lost all mass", trial)};
    double mass = 0.0;
    for (size_t s = 1; s < r.attention[0].size(); ++s)
      mass += static_cast<double>(r.attention[0][s]);
    if (!(mass < 1.0)) return {false, fmt("trial %d: history mass %.17g", trial, mass)};
    max_mass = std::max(max_mass, mass);

    // coefficient exactly 1: with the history's item rows zeroed the
    // personalization term vanishes and m must equal q bitwise
    ModelParams pz = p;
    for (int hitem : history)
      for (int c = 0; c < d; ++c) pz.item_emb.at(hitem, c) = 0.0f;
    Tape tz;
    const ParamBinding bz = bind_params(tz, pz);
    const Tensor qv = tz.value(encode_query(tz, bz, terms));
    const IntentResult rz = zam_intent(tz, bz, terms, history);
    const Tensor mv = tz.value(rz.m);
    for (int c = 0; c < d; ++c)
      if (mv.at(0, c) != qv.at(0, c))
        return {false, fmt("trial %d: query coefficient not exactly 1 at col %d", trial, c)};
  }
  return {true, fmt("1000 configs, max history mass %.6f, coefficient exact", max_mass)};
}

// ---------------------------------------------------------------- criterion 3

// Constructive TEM logits drive the query-position weight to both extremes.
Outcome c3_tem_attention_range() {
  ModelConfig cfg = make_config(ModelKind::tem, 4, 1, 1, 4, 20);
  ModelParams p = init_model(cfg, 3, 2, 1, 73);
  // zero query-side encoder so the position-0 row is exactly pos_emb row 0
  p.w_phi = Tensor::zeros(4, 4);
  p.b_phi = Tensor::zeros(1, 4);
  for (float& v : p.word_emb.data) v = 0.0f;
  Tensor identity = Tensor::zeros(4, 4);
  for (int i = 0; i < 4; ++i) identity.at(i, i) = 1.0f;
  p.layers[0].wq = {identity};
  p.layers[0].wk = {identity};

  p.pos_emb = Tensor::zeros(cfg.max_len + 1, 4);
  p.pos_emb.at(0, 0) = 100.0f;
  for (float& v : p.item_emb.data) v = 0.0f;
  float high, low;
  {
    Tape tape;
    const ParamBinding b = bind_params(tape, p);
    high = tem_intent(tape, b, {0}, {1}).attention[0][0];
  }
  p.pos_emb.at(0, 0) = 1.0f;
  p.item_emb.at(1, 0) = 100.0f;
  {
    Tape tape;
    const ParamBinding b = bind_params(tape, p);
    low = tem_intent(tape, b, {0}, {1}).attention[0][0];
  }
  if (!(high > 0.99f)) return {false, fmt("could not push weight above 0.99 (got %.6f)", high)};
  if (!(low < 0.01f)) return {false, fmt("could not push weight below 0.01 (got %.6f)", low)};
  return {true, fmt("query weight driven to %.2g and %.6f", low, high)};
}

// ---------------------------------------------------------------- criterion 4

// Degeneracies: empty-history AEM/ZAM return q bitwise; TEM with zeroed
// positional rows ignores history order (<=1e-6); trace rows sum to 1+-1e-6.
Outcome c4_degeneracy() {
  Rng rng(555);
  double worst_perm = 0.0, worst_rowsum = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const uint64_t seed = 7000 + static_cast<uint64_t>(trial);

    // empty history falls back to the bare query
    for (ModelKind kind : {ModelKind::aem, ModelKind::zam}) {
      ModelParams p = init_model(make_config(kind, 4, 2, 1, 8, 8), 6, 5, 1, seed);
      Tape tape;
      const ParamBinding b = bind_params(tape, p);
      const Tensor qv = tape.value(encode_query(tape, b, {1, 3}));
      const IntentResult r = kind == ModelKind::aem ? aem_intent(tape, b, {1, 3}, {})
                                                    : zam_intent(tape, b, {1, 3}, {});
      const Tensor mv = tape.value(r.m);
      for (int c = 0; c < 4; ++c)
        if (mv.at(0, c) != qv.at(0, c))
          return {false, fmt("trial %d: empty-history %s differs from q at col %d", trial,
                             model_kind_name(kind), c)};
    }

    // permutation invariance with zeroed positional embeddings
    ModelConfig tcfg = make_config(ModelKind::tem, 4, 2, 2, 8, 8);
    ModelParams pt = init_model(tcfg, 6, 8, 1, seed);
    pt.pos_emb = Tensor::zeros(tcfg.max_len + 1, 4);
    std::vector<int> hist = {0, 3, 5, 2};
    std::vector<int> perm = hist;
    for (size_t i = perm.size(); i > 1; --i)
      std::swap(perm[i - 1], perm[rng.uniform_int(static_cast<uint32_t>(i))]);
    Tape ta, tb;
    const ParamBinding ba = bind_params(ta, pt);
    const ParamBinding bb = bind_params(tb, pt);
    const IntentResult ra = tem_intent(ta, ba, {2}, hist);
    const IntentResult rb = tem_intent(tb, bb, {2}, perm);
    for (int c = 0; c < 4; ++c) {
      const double gap =
          std::abs(static_cast<double>(ta.value(ra.m).at(0, c)) - tb.value(rb.m).at(0, c));
      worst_perm = std::max(worst_perm, gap);
      if (gap > 1e-6) return {false, fmt("trial %d: permutation moved col %d by %.3g", trial, c, gap)};
    }

    // attention rows sum to one: AEM, ZAM, and every TEM layer
    auto check_rows = [&](const IntentResult& r, const char* who) -> std::string {
      for (const std::vector<float>& row : r.attention) {
        double sum = 0.0;
        for (float w : row) sum += static_cast<double>(w);
        worst_rowsum = std::max(worst_rowsum, std::abs(sum - 1.0));
        if (std::abs(sum - 1.0) > 1e-6) return fmt("trial %d: %s row sums to %.9f", trial, who, sum);
      }
      return "";
    };
    ModelParams pa = init_model(make_config(ModelKind::aem, 4, 2, 1, 8, 8), 6, 8, 1, seed + 50);
    ModelParams pz = init_model(make_config(ModelKind::zam, 4, 2, 1, 8, 8), 6, 8, 1, seed + 60);
    ModelParams pf = init_model(tcfg, 6, 8, 1, seed + 70);
    Tape t1, t2, t3;
    const ParamBinding b1 = bind_params(t1, pa);
    const ParamBinding b2 = bind_params(t2, pz);
    const ParamBinding b3 = bind_params(t3, pf);
    for (const auto& [r, who] :
         {std::pair{aem_intent(t1, b1, {1}, {0, 2, 7}), "aem"},
          std::pair{zam_intent(t2, b2, {1}, {4, 4, 1}), "zam"},
          std::pair{tem_intent(t3, b3, {1}, {5, 0, 6, 3}), "tem"}}) {
      const std::string err = check_rows(r, who);
      if (!err.empty()) return {false, err};
    }
  }
  return {true, fmt("25 trials; worst permutation gap %.2g, worst row-sum gap %.2g", worst_perm,
                    worst_rowsum)};
}

// ---------------------------------------------------------------- criterion 5

// Ranking metrics equal definitional brute force on every pattern tried.
Outcome c5_metric_oracle() {
  Rng rng(60601);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(6));
    std::vector<float> scores(static_cast<size_t>(n));
    std::vector<double> wide(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int grid = static_cast<int>(rng.uniform_int(33)) - 16;  // eighths in [-2, 2]
      scores[static_cast<size_t>(i)] = static_cast<float>(grid) / 8.0f;
      wide[static_cast<size_t>(i)] = static_cast<double>(grid) / 8.0;
    }
    std::vector<int> relevant;
    for (int i = 0; i < n; ++i)
      if (rng.uniform_int(2) == 0) relevant.push_back(i);
    if (relevant.empty()) relevant.push_back(static_cast<int>(rng.uniform_int(static_cast<uint32_t>(n))));
    if (rng.uniform_int(4) == 0) relevant.push_back(relevant[0]);  // duplicates must not count twice

    const RankedList ranked = rank_from_scores(scores);
    const std::vector<int> ref_ranked = oracle::ref_rank(wide);
    const std::set<int> rel_set(relevant.begin(), relevant.end());

    const double d_mrr = std::abs(mrr(ranked, relevant) - oracle::ref_mrr(ref_ranked, rel_set));
    worst = std::max(worst, d_mrr);
    if (d_mrr > 1e-12) return {false, fmt("trial %d: MRR off by %.3g", trial, d_mrr)};
    for (int k : {1, 2, 3, 6, 20}) {
      const double d_p =
          std::abs(precision_at(ranked, relevant, k) - oracle::ref_precision_at(ref_ranked, rel_set, k));
      const double d_n = std::abs(ndcg_at(ranked, relevant, k) - oracle::ref_ndcg_at(ref_ranked, rel_set, k));
      worst = std::max({worst, d_p, d_n});
      if (d_p > 1e-12 || d_n > 1e-12)
        return {false, fmt("trial %d k=%d: P off %.3g, NDCG off %.3g", trial, k, d_p, d_n)};
    }
  }
  return {true, fmt("10000 patterns, worst deviation %.2g", worst)};
}

// ---------------------------------------------------------------- criterion 6

// The four DatasetSplit invariants, restated, over 100 random corpora.
int split_violations(const DatasetSplit& s, const std::vector<std::vector<int>>& item_queries) {
  int bad = 0;

  // 1. chronology: per user, no valid/test purchase older than a train one
  std::unordered_map<int, long long> newest_train;
  for (size_t p = 0; p < s.purchases.size(); ++p)
    if (s.labels[p] == Split::train) {
      auto [it, fresh] = newest_train.emplace(s.purchases[p].user, s.purchases[p].timestamp);
      if (!fresh) it->second = std::max(it->second, s.purchases[p].timestamp);
    }
  for (size_t p = 0; p < s.purchases.size(); ++p)
    if (s.labels[p] != Split::train) {
      auto it = newest_train.find(s.purchases[p].user);
      if (it != newest_train.end() && s.purchases[p].timestamp < it->second) ++bad;
    }

  // 2. no query id shared between train rows and valid/test rows
  std::set<int> train_qs;
  for (const SplitRow& r : s.train) train_qs.insert(r.query);
  for (const SplitRow& r : s.valid) bad += train_qs.count(r.query) ? 1 : 0;
  for (const SplitRow& r : s.test) bad += train_qs.count(r.query) ? 1 : 0;

  // 3. every purchased item keeps a train-pool query
  for (const Purchase& p : s.purchases) {
    bool any = false;
    for (int q : item_queries[static_cast<size_t>(p.item)])
      any = any || s.query_in_train_pool[static_cast<size_t>(q)] != 0;
    if (!any) ++bad;
  }

  // 4. every valid/test purchase has an eligible shared-pool query
  for (size_t p = 0; p < s.purchases.size(); ++p) {
    if (s.labels[p] == Split::train) continue;
    bool any = false;
    for (int q : item_queries[static_cast<size_t>(s.purchases[p].item)])
      any = any || s.query_in_train_pool[static_cast<size_t>(q)] == 0;
    if (!any) ++bad;
  }
  return bad;
}

Outcome c6_split_invariants() {
  Rng rng(112233);
  int violations = 0;
  long long eval_rows = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SynthConfig sc;
    sc.n_categories = 2 + trial % 3;
    const int per_cat = 2 + static_cast<int>(rng.uniform_int(5));
    sc.n_items = sc.n_categories * per_cat;
    sc.n_user_clusters = 1 + static_cast<int>(rng.uniform_int(static_cast<uint32_t>(std::min(4, per_cat))));
    sc.n_users = 4 + static_cast<int>(rng.uniform_int(9));
    sc.purchases_per_user = 6 + static_cast<int>(rng.uniform_int(11));
    sc.words_per_review = 6;
    sc.seed = 80000 + static_cast<uint64_t>(trial);
    const SynthCorpus corpus = synth_generate(sc);

    DatasetConfig dc;
    dc.min_count = 1;
    dc.split.seed = 90000 + static_cast<uint64_t>(trial);
    const Dataset ds = build_dataset(corpus.reviews, corpus.items, dc);
    violations += split_violations(ds.split, ds.item_queries);
    eval_rows += static_cast<long long>(ds.split.valid.size() + ds.split.test.size());
  }
  if (violations > 0) return {false, fmt("%d violations across 100 corpora", violations)};
  return {true, fmt("100 corpora, 0 violations (%lld valid/test rows exercised)", eval_rows)};
}

// ------------------------------------------------------- criteria 7 and 8

struct PlantedResult {
  double mrr[5] = {0, 0, 0, 0, 0};  // by all_kinds order
  double seconds = 0.0;
};

PlantedResult run_planted(int clusters) {
  const auto t0 = std::chrono::steady_clock::now();
  SynthConfig sc;  // defaults: 50 users, 200 items, 8 categories, 40 purchases
  sc.n_user_clusters = clusters;
  sc.seed = 7;
  const SynthCorpus corpus = synth_generate(sc);

  // Split seed frozen after scanning pool compositions: 21 gives a shared
  // valid/test pool rich in category and family queries for both the
  // 4-cluster and 1-cluster corpora (103 and 55 test contexts), with no
  // degenerate whole-catalog query.
  DatasetConfig dc;
  dc.min_count = 5;
  dc.split.seed = 21;
  const Dataset ds = build_dataset(corpus.reviews, corpus.items, dc);

  PlantedResult out;
  for (size_t k = 0; k < 5; ++k) {
    ModelConfig mc = make_config(all_kinds[k], 32, 2, 1, 64, 20);
    ModelParams params = init_model(mc, ds.vocab.size(), ds.n_items(), ds.n_users(), 11);
    TrainerConfig tc;
    tc.epochs = 20;
    tc.batch_size = 16;
    tc.lr = 0.005f;
    tc.seed = 13;
    train_model(params, ds, tc);

    EvalConfig ec;
    ec.split = "test";
    ec.workers = 1;
    out.mrr[k] = evaluate(params, ds, ec).mrr;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// Personalization lifts ranking quality when the generator plants cluster
// preferences. Thresholds were checked once against the generator's
// analytic optimum and then frozen: the shared pool mixes category contexts
// (non-personalized ceiling ~ H(25)/25 ~ 0.153, cluster-aware ~ 0.37) and
// five-item family contexts (ceiling H(5)/5 ~ 0.457, cluster-aware ~ 0.86),
// giving an aggregate qem ceiling ~ 0.29 -- under the 0.35 bound -- and an
// aggregate personalized optimum ~ 0.59, ratio ~ 2x against a fully trained
// qem, so 1.5x against the qem a 20-epoch budget actually reaches is
// attainable without being vacuous.
Outcome c7_planted_preference() {
  const PlantedResult r = run_planted(4);
  const double qem = r.mrr[0];
  std::string detail = fmt("qem %.3f, hem %.3f, aem %.3f, zam %.3f, tem %.3f in %.0fs", r.mrr[0],
                           r.mrr[1], r.mrr[2], r.mrr[3], r.mrr[4], r.seconds);
  if (r.seconds >= 600.0) return {false, "runtime budget exceeded: " + detail};
  if (!(qem <= 0.35)) return {false, "qem sees the planted signal: " + detail};
  for (size_t k = 1; k < 5; ++k)
    if (!(r.mrr[k] >= 1.5 * qem))
      return {false, fmt("%s below 1.5x qem: ", model_kind_name(all_kinds[k])) + detail};
  if (!(r.mrr[4] >= r.mrr[3] - 0.02)) return {false, "tem trails zam: " + detail};
  return {true, detail};
}

// With one cluster the planted signal vanishes and personalization must not
// pretend otherwise.
Outcome c8_negative_control() {
  const PlantedResult r = run_planted(1);
  const double qem = r.mrr[0];
  std::string detail = fmt("qem %.3f, hem %.3f, aem %.3f, zam %.3f, tem %.3f in %.0fs", r.mrr[0],
                           r.mrr[1], r.mrr[2], r.mrr[3], r.mrr[4], r.seconds);
  for (size_t k = 1; k < 5; ++k)
    if (std::abs(r.mrr[k] - qem) > 0.03)
      return {false, fmt("%s drifts from qem: ", model_kind_name(all_kinds[k])) + detail};
  return {true, detail};
}

// ---------------------------------------------------------------- criterion 9

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TEMSEARCH_BIN) + " " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return raw == -1 ? -1 : (WIFEXITED(raw) ? WEXITSTATUS(raw) : -1);
}

Outcome c9_determinism() {
  const fs::path dir = fs::temp_directory_path() / ("temsearch_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  struct Cleanup {
    fs::path d;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(d, ec);
    }
  } cleanup{dir};
  const auto at = [&](const char* n) { return (dir / n).string(); };

  if (run_cli("synth --out " + at("data") + " --seed 5 --users 10 --items 16 --categories 4"
              " --clusters 2 --purchases 12") != 0)
    return {false, "synth run failed"};
  if (run_cli("prepare --reviews " + at("data") + "/reviews.jsonl --items " + at("data") +
              "/items.jsonl --out " + at("prep") + " --seed 31 --min-count 1") != 0)
    return {false, "prepare run failed"};

  const std::string flags = " --model tem --seed 9 --dim 16 --dff 16 --epochs 2 --batch-size 64";
  if (run_cli("train --data " + at("prep") + "/dataset --out " + at("a") + flags) != 0 ||
      run_cli("train --data " + at("prep") + "/dataset --out " + at("b") + flags) != 0)
    return {false, "train run failed"};
  if (slurp(dir / "a" / "model.bin") != slurp(dir / "b" / "model.bin"))
    return {false, "same-seed checkpoints differ"};

  // fan-out evaluation must not depend on the worker count
  const Dataset ds = load_dataset(at("prep") + "/dataset");
  ModelParams params = load_model(at("a") + "/model.bin");
  for (int workers : {1, 2, 4, 8}) {
    EvalConfig ec;
    ec.workers = workers;
    const MetricsReport rep = evaluate(params, ds, ec);
    save_report_json(rep, at(("rep" + std::to_string(workers)).c_str()));
  }
  const std::string rep1 = slurp(dir / "rep1");
  for (int workers : {2, 4, 8})
    if (slurp(dir / ("rep" + std::to_string(workers))) != rep1)
      return {false, fmt("report changed at %d workers", workers)};
  return {true, "checkpoints byte-identical; reports identical at 1/2/4/8 workers"};
}

// --------------------------------------------------------------- criterion 10

Outcome c10_significance() {
  // classic paired sleep-gain data (10 subjects, two drugs)
  const std::vector<double> drug1 = {0.7, -1.6, -0.2, -1.2, -0.1, 3.4, 3.7, 0.8, 0.0, 2.0};
  const std::vector<double> drug2 = {1.9, 0.8, 1.1, 0.1, -0.1, 4.4, 5.5, 1.6, 4.6, 3.4};
  const double p = paired_t_test(drug1, drug2);
  if (std::abs(p - 0.0028329) > 1e-3) return {false, fmt("sleep-data p=%.7f", p)};
  const double self = paired_t_test(drug2, drug2);
  if (self != 1.0) return {false, fmt("identical inputs gave p=%.17g", self)};
  return {true, fmt("sleep-data p=%.7f, identical inputs p=1", p)};
}

}  // namespace

int main() {
  const struct {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  } criteria[] = {
      {1, "gradient correctness", c1_gradients},
      {2, "zam personalization bound", c2_zam_bound},
      {3, "tem attention range", c3_tem_attention_range},
      {4, "degeneracy suite", c4_degeneracy},
      {5, "metric oracle", c5_metric_oracle},
      {6, "split invariants", c6_split_invariants},
      {7, "planted-preference experiment", c7_planted_preference},
      {8, "negative control", c8_negative_control},
      {9, "determinism", c9_determinism},
      {10, "significance machinery", c10_significance},
  };

  bool all = true;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%2d] %s  %-32s %s (%.1fs)\n", c.id, o.pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && o.pass;
  }
  std::printf(all ? "acceptance: all 10 criteria pass\n" : "acceptance: FAILED\n");
  return all ? 0 : 1;
}
