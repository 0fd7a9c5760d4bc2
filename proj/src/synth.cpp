#include "temsearch/synth.hpp"

#include <stdexcept>
#include <string>

#include "temsearch/rng.hpp"

namespace temsearch {

namespace {

std::string padded(const char* prefix, int n) {
  std::string digits = std::to_string(n);
  std::string out(prefix);
  for (size_t i = digits.size(); i < 5; ++i) out += '0';
  return out + digits;
}

void validate(const SynthConfig& cfg) {
  if (cfg.n_users < 1 || cfg.n_items < 1 || cfg.n_categories < 1 || cfg.n_user_clusters < 1 ||
      cfg.purchases_per_user < 1 || cfg.words_per_review < 1)
    throw std::invalid_argument("synth_generate: all sizes must be positive");
  if (cfg.n_items % cfg.n_categories != 0)
    throw std::invalid_argument("synth_generate: n_items must be divisible by n_categories");
  if (cfg.n_items / cfg.n_categories < cfg.n_user_clusters)
    throw std::invalid_argument("synth_generate: need at least n_user_clusters items per category");
  if (cfg.preferred_prob < 0.0 || cfg.preferred_prob > 1.0)
    throw std::invalid_argument("synth_generate: preferred_prob must be in [0,1]");
}

}  // namespace

int synth_user_cluster(const SynthConfig& cfg, int user) { return user % cfg.n_user_clusters; }
int synth_item_cluster(const SynthConfig& cfg, int item) { return item % cfg.n_user_clusters; }
int synth_item_category(const SynthConfig& cfg, int item) { return item / (cfg.n_items / cfg.n_categories); }

SynthCorpus synth_generate(const SynthConfig& cfg) {
  validate(cfg);
  const int items_per_cat = cfg.n_items / cfg.n_categories;

  SynthCorpus out;
  out.items.reserve(static_cast<size_t>(cfg.n_items));
  const int fam_width = items_per_cat < 5 ? items_per_cat : 5;
  const int fams_per_cat = (items_per_cat + fam_width - 1) / fam_width;
  for (int i = 0; i < cfg.n_items; ++i) {
    const int c = synth_item_category(cfg, i);
    const int fam = c * fams_per_cat + (i % items_per_cat) / fam_width;
    ItemMeta m;
    m.item_id = padded("i", i);
    // three paths per item: category, family (a ~5-item slice of the
    // category), and style line. Items need more than one query or the
    // shared valid/test query pool drains completely (every single-query
    // item pulls its query back into train); the families also densify the
    // query space so the query encoder sees enough distinct term sets to
    // generalize to held-out queries — the family path repeats the category
    // word, which keeps category words inside trained queries even when the
    // plain category query lands in the shared pool. "The" exercises
    // stopword removal; "Line" and "Pack" are absent from review text so
    // query resolution drops them.
    m.categories = {{"The Shop", padded("Catw", c) + " Gear", padded("Kindw", c)},
                    {padded("Catw", c) + " " + padded("Famw", fam) + " Pack"},
                    {padded("Stywa", synth_item_cluster(cfg, i)) + " Line"}};
    out.items.push_back(std::move(m));
  }

  // preferred items per (category, cluster)
  std::vector<std::vector<std::vector<int>>> preferred(
      static_cast<size_t>(cfg.n_categories),
      std::vector<std::vector<int>>(static_cast<size_t>(cfg.n_user_clusters)));
  for (int i = 0; i < cfg.n_items; ++i)
    preferred[static_cast<size_t>(synth_item_category(cfg, i))][static_cast<size_t>(synth_item_cluster(cfg, i))]
        .push_back(i);

  const int n_filler = 30;
  Rng rng(mix_seed(cfg.seed, 7));
  out.reviews.reserve(static_cast<size_t>(cfg.n_users) * cfg.purchases_per_user);
  for (int u = 0; u < cfg.n_users; ++u) {
    const int cluster = synth_user_cluster(cfg, u);
    long long t = 100000 + u;
    for (int k = 0; k < cfg.purchases_per_user; ++k) {
      t += 1 + rng.uniform_int(3);
      const int cat = static_cast<int>(rng.uniform_int(static_cast<uint32_t>(cfg.n_categories)));
      int item;
      if (rng.uniform_double() < cfg.preferred_prob) {
        const auto& pool = preferred[static_cast<size_t>(cat)][static_cast<size_t>(cluster)];
        item = pool[rng.uniform_int(static_cast<uint32_t>(pool.size()))];
      } else {
        item = cat * items_per_cat + static_cast<int>(rng.uniform_int(static_cast<uint32_t>(items_per_cat)));
      }

      const int style = synth_item_cluster(cfg, item);
      const int fam = cat * fams_per_cat + (item % items_per_cat) / fam_width;
      std::string text;
      for (int w = 0; w < cfg.words_per_review; ++w) {
        const double r = rng.uniform_double();
        std::string word;
        if (r < 0.35) {
          switch (rng.uniform_int(4)) {
            case 0: word = padded("catw", cat); break;
            case 1: word = padded("kindw", cat); break;
            case 2: word = "shop"; break;
            default: word = "gear"; break;
          }
        } else if (r < 0.50) {
          word = padded("famw", fam);
        } else if (r < 0.65) {
          word = padded(rng.uniform_int(2) == 0 ? "stywa" : "stywb", style);
        } else if (r < 0.75) {
          word = padded("itmw", item);
        } else {
          word = padded("filw", static_cast<int>(rng.uniform_int(n_filler)));
        }
        if (w) text += ' ';
        text += word;
      }

      ReviewRecord r;
      r.user_id = padded("u", u);
      r.item_id = padded("i", item);
      r.timestamp = t;
      r.text = std::move(text);
      out.reviews.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace temsearch
