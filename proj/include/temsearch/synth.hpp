#pragma once

#include <cstdint>
#include <vector>

#include "temsearch/corpus.hpp"

namespace temsearch {

struct SynthConfig {
  int n_users = 50;
  int n_items = 200;
  int n_categories = 8;       // one query per category
  int n_user_clusters = 4;    // 1 disables the preference signal entirely
  int purchases_per_user = 40;
  int words_per_review = 12;
  double preferred_prob = 0.9;  // chance a purchase comes from the cluster's preferred items
  uint64_t seed = 0;
};

struct SynthCorpus {
  std::vector<ReviewRecord> reviews;  // one per purchase, timestamps strictly increasing per user
  std::vector<ItemMeta> items;
};

// Planted-preference corpus. Items are split evenly across categories and,
// within a category, round-robin across clusters ("style groups"). A user in
// cluster g buys, per purchase: a uniform category, then with preferred_prob
// a uniform item from the category's cluster-g items, otherwise a uniform
// item from the whole category. Review text mixes category words, the item's
// family word, its style-group words, an item-specific word, and shared
// filler so the category/query words are always in-vocabulary. Each item
// carries three category paths — its category, a ~5-item family slice of the
// category, and its style line — so the eval split's shared query pool
// survives the move-back rules and the query space is dense enough for the
// encoder to generalize to held-out queries.
SynthCorpus synth_generate(const SynthConfig& cfg);

// Which cluster an actor belongs to / which cluster prefers an item, for
// generator self-checks.
int synth_user_cluster(const SynthConfig& cfg, int user);
int synth_item_cluster(const SynthConfig& cfg, int item);
int synth_item_category(const SynthConfig& cfg, int item);

}  // namespace temsearch
