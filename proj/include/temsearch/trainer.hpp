#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "temsearch/corpus.hpp"
#include "temsearch/models.hpp"
#include "temsearch/rng.hpp"

namespace temsearch {

// One training row: a purchase with its leakage-safe history and, once an
// epoch materializes it, a window of review words from the positive item.
struct TrainExample {
  int user = -1;
  int query = -1;
  int item = -1;
  long long timestamp = 0;
  std::vector<int> history;  // positive item removed, newest max_len kept
  std::vector<int> window;   // empty if the item has no usable review words
};

// Draws ids proportionally to frequency^exponent, excluding a small set.
class NegSampler {
 public:
  NegSampler(const std::vector<long long>& frequencies, double exponent, uint64_t seed);

  // k ids, none in exclude. Rejection-samples first, falls back to an exact
  // draw over the surviving support when the exclusion keeps winning.
  std::vector<int> sample(int k, const std::vector<int>& exclude);

  int support() const { return support_; }

 private:
  std::vector<double> cdf_;
  Rng rng_;
  int support_ = 0;

  int draw_cdf();
};

struct Batch {
  std::vector<TrainExample> examples;
  int max_history = 0;                     // padded length of this batch
  std::vector<std::vector<int>> padded;    // histories right-padded with -1
};

struct BaseExamples {
  std::vector<TrainExample> examples;  // windows not yet sampled
  int skipped_empty_query = 0;         // rows whose query lost every term to the vocabulary
};

// All train-split rows, each with its history frozen; windows are sampled
// per epoch by make_batches.
BaseExamples build_base_examples(const Dataset& ds, int max_len);

// Epoch-shuffled batches. The shuffle and the per-example review windows
// are functions of (seed, epoch) alone, so a repeat call is identical.
std::vector<Batch> make_batches(const std::vector<TrainExample>& base,
                                const std::vector<std::vector<int>>& item_words, int batch_size, int epoch,
                                uint64_t seed, int window_size);

struct TrainerConfig {
  int epochs = 20;
  int batch_size = 384;
  float lr = 5e-4f;
  int window = 5;
  float gen_weight = 1.0f;
  float lang_weight = 1.0f;
  uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double gen_loss = 0.0;      // mean generation loss per example
  double lang_loss = 0.0;     // mean language loss per window-bearing example
  long long examples = 0;
  long long lang_examples = 0;
  double wall_seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  uint64_t seed = 0;
  int skipped_empty_query = 0;
};

// Joint optimization of the generation and language objectives with Adam,
// single-threaded and bitwise deterministic per seed. Appends one JSON line
// per epoch to report_path when non-empty; on a poisoned batch, appends an
// abort record and rethrows with the epoch/batch position in the message.
TrainReport train_model(ModelParams& params, const Dataset& ds, const TrainerConfig& cfg,
                        const std::string& report_path = "");

}  // namespace temsearch
