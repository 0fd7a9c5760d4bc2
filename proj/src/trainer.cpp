#include "temsearch/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "json.hpp"
#include "temsearch/adam.hpp"

namespace temsearch {

using ad::NodeId;
using ad::Tape;
using ad::Tensor;
using json = nlohmann::json;

NegSampler::NegSampler(const std::vector<long long>& frequencies, double exponent, uint64_t seed)
    : rng_(seed) {
  if (frequencies.empty()) throw std::invalid_argument("negative sampler: empty frequency table");
  cdf_.resize(frequencies.size());
  double total = 0.0;
  for (size_t i = 0; i < frequencies.size(); ++i) {
    if (frequencies[i] < 0) throw std::invalid_argument("negative sampler: negative frequency");
    if (frequencies[i] > 0) {
      total += std::pow(static_cast<double>(frequencies[i]), exponent);
      ++support_;
    }
    cdf_[i] = total;
  }
  if (total <= 0.0) throw std::invalid_argument("negative sampler: every frequency is zero");
  for (double& x : cdf_) x /= total;
  cdf_.back() = 1.0;
}

int NegSampler::draw_cdf() {
  const double u = rng_.uniform_double();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(std::min<size_t>(static_cast<size_t>(it - cdf_.begin()), cdf_.size() - 1));
}

std::vector<int> NegSampler::sample(int k, const std::vector<int>& exclude) {
  if (k < 1) throw std::invalid_argument("sample_negatives: k must be at least 1");
  std::unordered_set<int> ex(exclude.begin(), exclude.end());
  auto mass = [&](int id) { return cdf_[static_cast<size_t>(id)] - (id > 0 ? cdf_[static_cast<size_t>(id) - 1] : 0.0); };
  int excluded_live = 0;
  for (int id : ex)
    if (id >= 0 && id < static_cast<int>(cdf_.size()) && mass(id) > 0.0) ++excluded_live;
  if (excluded_live >= support_)
    throw std::runtime_error("sample_negatives: exclusion set exhausts the sampling support");

  std::vector<int> out;
  out.reserve(static_cast<size_t>(k));
  for (int n = 0; n < k; ++n) {
    int picked = -1;
    for (int tries = 0; tries < 32 && picked < 0; ++tries) {
      const int c = draw_cdf();
      if (!ex.count(c)) picked = c;
    }
    if (picked < 0) {
      // exact draw over the surviving support
      double live = 0.0;
      for (int id = 0; id < static_cast<int>(cdf_.size()); ++id)
        if (!ex.count(id)) live += mass(id);
      double target = rng_.uniform_double() * live;
      for (int id = 0; id < static_cast<int>(cdf_.size()); ++id) {
        if (ex.count(id) || mass(id) <= 0.0) continue;
        picked = id;
        target -= mass(id);
        if (target < 0.0) break;
      }
    }
    out.push_back(picked);
  }
  return out;
}

void TrainerConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("trainer config: epochs must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("trainer config: batch_size must be positive");
  if (!(lr >= 0.0f)) throw std::invalid_argument("trainer config: lr must be non-negative");
  if (window < 1) throw std::invalid_argument("trainer config: window must be positive");
  if (gen_weight < 0.0f || lang_weight < 0.0f)
    throw std::invalid_argument("trainer config: loss weights must be non-negative");
}

BaseExamples build_base_examples(const Dataset& ds, int max_len) {
  if (max_len < 1) throw std::invalid_argument("build_base_examples: max_len must be positive");
  BaseExamples out;
  for (const SplitRow& row : ds.split.train) {
    if (ds.queries[static_cast<size_t>(row.query)].terms.empty()) {
      ++out.skipped_empty_query;
      continue;
    }
    std::vector<int> hist =
        user_history(ds.split, row.user, row.timestamp, std::numeric_limits<int>::max());
    hist.erase(std::remove(hist.begin(), hist.end(), row.item), hist.end());
    if (static_cast<int>(hist.size()) > max_len)
      hist.erase(hist.begin(), hist.end() - max_len);
    TrainExample ex;
    ex.user = row.user;
    ex.query = row.query;
    ex.item = row.item;
    ex.timestamp = row.timestamp;
    ex.history = std::move(hist);
    out.examples.push_back(std::move(ex));
  }
  return out;
}

std::vector<Batch> make_batches(const std::vector<TrainExample>& base,
                                const std::vector<std::vector<int>>& item_words, int batch_size, int epoch,
                                uint64_t seed, int window_size) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be positive");
  if (window_size < 1) throw std::invalid_argument("make_batches: window_size must be positive");

  std::vector<TrainExample> pool = base;
  Rng shuffle_rng(mix_seed(mix_seed(seed, 0xBA7C), static_cast<uint64_t>(epoch)));
  for (size_t i = pool.size(); i > 1; --i) {
    const size_t j = shuffle_rng.uniform_int(static_cast<uint32_t>(i));
    std::swap(pool[i - 1], pool[j]);
  }

  Rng window_rng(mix_seed(mix_seed(seed, 0x90D0), static_cast<uint64_t>(epoch)));
  for (TrainExample& ex : pool) {
    for (int h : ex.history)
      if (h == ex.item) throw std::logic_error("make_batches: positive item leaked into its history");
    const std::vector<int>& words = item_words.at(static_cast<size_t>(ex.item));
    if (words.empty()) continue;
    if (static_cast<int>(words.size()) <= window_size) {
      ex.window = words;
    } else {
      const uint32_t span = static_cast<uint32_t>(words.size() - static_cast<size_t>(window_size) + 1);
      const size_t p = window_rng.uniform_int(span);
      ex.window.assign(words.begin() + static_cast<long>(p), words.begin() + static_cast<long>(p) + window_size);
    }
  }

  std::vector<Batch> batches;
  for (size_t start = 0; start < pool.size(); start += static_cast<size_t>(batch_size)) {
    Batch b;
    const size_t end = std::min(pool.size(), start + static_cast<size_t>(batch_size));
    b.examples.assign(pool.begin() + static_cast<long>(start), pool.begin() + static_cast<long>(end));
    for (const TrainExample& ex : b.examples)
      b.max_history = std::max(b.max_history, static_cast<int>(ex.history.size()));
    for (const TrainExample& ex : b.examples) {
      std::vector<int> row = ex.history;
      row.resize(static_cast<size_t>(b.max_history), -1);
      b.padded.push_back(std::move(row));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

TrainReport train_model(ModelParams& params, const Dataset& ds, const TrainerConfig& cfg,
                        const std::string& report_path) {
  cfg.validate();
  params.config.validate();
  if (params.vocab_size != static_cast<int>(ds.vocab.size()))
    throw std::invalid_argument("train: model vocabulary size does not match the dataset");
  if (params.n_items != static_cast<int>(ds.item_ids.size()))
    throw std::invalid_argument("train: model item count does not match the dataset");
  if (params.config.kind == ModelKind::hem && params.n_users != static_cast<int>(ds.user_ids.size()))
    throw std::invalid_argument("train: model user count does not match the dataset");

  BaseExamples base = build_base_examples(ds, params.config.max_len);
  if (base.examples.empty()) throw std::invalid_argument("train: no usable training rows");

  std::vector<long long> item_freq(ds.item_ids.size(), 0);
  for (const SplitRow& row : ds.split.train) ++item_freq[static_cast<size_t>(row.item)];
  NegSampler item_sampler(item_freq, 0.75, mix_seed(cfg.seed, 21));
  NegSampler word_sampler(ds.vocab.frequency, 0.75, mix_seed(cfg.seed, 22));
  const int k = params.config.negatives;

  ad::AdamConfig acfg;
  acfg.lr = cfg.lr;
  ad::Adam adam(acfg);

  std::vector<std::pair<std::string, Tensor*>> slots;
  params.for_each_param([&](const std::string& name, Tensor& t) { slots.emplace_back(name, &t); });

  std::ofstream report_file;
  if (!report_path.empty()) {
    report_file.open(report_path, std::ios::trunc);
    if (!report_file) throw std::runtime_error("train: cannot write report file '" + report_path + "'");
  }

  TrainReport report;
  report.seed = cfg.seed;
  report.skipped_empty_query = base.skipped_empty_query;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<Batch> batches =
        make_batches(base.examples, ds.split.item_words, cfg.batch_size, epoch, cfg.seed, cfg.window);
    double gen_sum = 0.0, lang_sum = 0.0;
    long long n_examples = 0, n_lang = 0;

    for (size_t bi = 0; bi < batches.size(); ++bi) {
      try {
        const Batch& batch = batches[bi];
        Tape tape;
        const ParamBinding binding = bind_params(tape, params);
        std::vector<NodeId> totals;
        for (const TrainExample& ex : batch.examples) {
          const IntentResult intent = purchase_intent(
              tape, binding, ds.queries[static_cast<size_t>(ex.query)].terms, ex.user, ex.history);
          const NodeId gen = item_generation_loss(tape, binding, intent.m, ex.item,
                                                  k > 0 ? item_sampler.sample(k, {ex.item})
                                                        : std::vector<int>{});
          gen_sum += static_cast<double>(tape.value(gen).at(0, 0));
          ++n_examples;
          NodeId total = cfg.gen_weight == 1.0f ? gen : ad::scale(tape, gen, cfg.gen_weight);
          if (!ex.window.empty() && cfg.lang_weight > 0.0f) {
            std::vector<std::vector<int>> word_negs;
            for (int w : ex.window)
              word_negs.push_back(k > 0 ? word_sampler.sample(k, {w}) : std::vector<int>{});
            const NodeId lang = item_language_loss(tape, binding, ex.item, ex.window, word_negs);
            lang_sum += static_cast<double>(tape.value(lang).at(0, 0));
            ++n_lang;
            total = ad::add(tape, total,
                            cfg.lang_weight == 1.0f ? lang : ad::scale(tape, lang, cfg.lang_weight));
          }
          totals.push_back(total);
        }
        const NodeId batch_loss =
            ad::scale(tape, ad::add_n(tape, totals), 1.0f / static_cast<float>(batch.examples.size()));
        const ad::Gradients grads = tape.backward(batch_loss);
        for (size_t s = 0; s < binding.named.size(); ++s)
          adam.step(binding.named[s].first, *slots[s].second, grads.at(binding.named[s].second));
      } catch (const std::exception& e) {
        if (report_file) {
          json j;
          j["aborted"] = true;
          j["epoch"] = epoch;
          j["batch"] = bi;
          j["error"] = e.what();
          report_file << j.dump() << "\n" << std::flush;
        }
        throw std::runtime_error("training aborted at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(bi) + ": " + e.what());
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.examples = n_examples;
    rec.lang_examples = n_lang;
    rec.gen_loss = n_examples > 0 ? gen_sum / static_cast<double>(n_examples) : 0.0;
    rec.lang_loss = n_lang > 0 ? lang_sum / static_cast<double>(n_lang) : 0.0;
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(rec);
    if (report_file) {
      json j;
      j["epoch"] = rec.epoch;
      j["gen_loss"] = rec.gen_loss;
      j["lang_loss"] = rec.lang_loss;
      j["examples"] = rec.examples;
      j["lang_examples"] = rec.lang_examples;
      j["wall_seconds"] = rec.wall_seconds;
      report_file << j.dump() << "\n" << std::flush;
    }
  }
  return report;
}

}  // namespace temsearch
