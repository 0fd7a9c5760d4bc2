#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "temsearch/ops.hpp"
#include "temsearch/tape.hpp"
#include "temsearch/tensor.hpp"

namespace temsearch {

enum class ModelKind { qem, hem, aem, zam, tem };

const char* model_kind_name(ModelKind kind);
std::optional<ModelKind> model_kind_from_name(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::tem;
  int d = 128;
  int heads = 2;         // attention heads (TEM sweep; AEM/ZAM default 1)
  int layers = 1;        // transformer layers (TEM only)
  int d_ff = 256;        // feed-forward inner width
  float lambda = 0.5f;   // HEM query/user mix
  int negatives = 5;     // k negative samples
  int max_len = 20;      // history truncation

  void validate() const;  // throws on out-of-range combinations
};

// One transformer layer: per-head projections, output projection,
// feed-forward block, and the two post-residual layer norms.
struct LayerParams {
  std::vector<ad::Tensor> wq, wk, wv;  // each d x (d/h)
  ad::Tensor wo;                       // d x d
  ad::Tensor ff1, ff1_b;               // d x d_ff, 1 x d_ff
  ad::Tensor ff2, ff2_b;               // d_ff x d, 1 x d
  ad::Tensor ln1_g, ln1_b;             // 1 x d
  ad::Tensor ln2_g, ln2_b;             // 1 x d
};

struct ModelParams {
  ModelConfig config;
  int vocab_size = 0;
  int n_items = 0;
  int n_users = 0;

  ad::Tensor word_emb;  // V x d
  ad::Tensor item_emb;  // |S_i| x d
  ad::Tensor user_emb;  // |U| x d, HEM only
  ad::Tensor pos_emb;   // (max_len+1) x d, TEM only; row 0 is the query slot
  ad::Tensor w_phi;     // d x d
  ad::Tensor b_phi;     // 1 x d

  std::vector<ad::Tensor> attn_wq, attn_wk;  // AEM/ZAM per-head d x (d/h)
  std::vector<LayerParams> layers;           // TEM

  // Visits every trainable tensor as (name, tensor) in a fixed order; the
  // same order drives init, optimizer state, and checkpoints.
  template <typename F>
  void for_each_param(F&& f) {
    visit_params(*this, f);
  }
  template <typename F>
  void for_each_param(F&& f) const {
    visit_params(*this, f);
  }

 private:
  template <typename Self, typename F>
  static void visit_params(Self& self, F& f) {
    f("word_emb", self.word_emb);
    f("item_emb", self.item_emb);
    if (self.user_emb.numel() > 0) f("user_emb", self.user_emb);
    if (self.pos_emb.numel() > 0) f("pos_emb", self.pos_emb);
    f("w_phi", self.w_phi);
    f("b_phi", self.b_phi);
    for (size_t h = 0; h < self.attn_wq.size(); ++h) {
      f("attn.wq." + std::to_string(h), self.attn_wq[h]);
      f("attn.wk." + std::to_string(h), self.attn_wk[h]);
    }
    for (size_t l = 0; l < self.layers.size(); ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      for (size_t h = 0; h < self.layers[l].wq.size(); ++h) {
        f(p + "wq." + std::to_string(h), self.layers[l].wq[h]);
        f(p + "wk." + std::to_string(h), self.layers[l].wk[h]);
        f(p + "wv." + std::to_string(h), self.layers[l].wv[h]);
      }
      f(p + "wo", self.layers[l].wo);
      f(p + "ff1", self.layers[l].ff1);
      f(p + "ff1_b", self.layers[l].ff1_b);
      f(p + "ff2", self.layers[l].ff2);
      f(p + "ff2_b", self.layers[l].ff2_b);
      f(p + "ln1_g", self.layers[l].ln1_g);
      f(p + "ln1_b", self.layers[l].ln1_b);
      f(p + "ln2_g", self.layers[l].ln2_g);
      f(p + "ln2_b", self.layers[l].ln2_b);
    }
  }
};

// Fresh parameters: embedding tables uniform(-0.5/d, 0.5/d), projections
// Xavier-uniform, biases zero, layer-norm gains one.
ModelParams init_model(const ModelConfig& cfg, int vocab_size, int n_items, int n_users, uint64_t seed);

void save_model(const ModelParams& p, const std::string& path,
                const std::map<std::string, std::string>& extra_meta = {});
ModelParams load_model(const std::string& path);

// Parameters recorded as tape leaves for one or more forward passes.
struct LayerBinding {
  std::vector<ad::NodeId> wq, wk, wv;
  ad::NodeId wo, ff1, ff1_b, ff2, ff2_b, ln1_g, ln1_b, ln2_g, ln2_b;
};

struct ParamBinding {
  const ModelParams* params = nullptr;
  ad::NodeId word_emb = -1, item_emb = -1, user_emb = -1, pos_emb = -1, w_phi = -1, b_phi = -1;
  std::vector<ad::NodeId> attn_wq, attn_wk;
  std::vector<LayerBinding> layers;
  std::vector<std::pair<std::string, ad::NodeId>> named;  // for_each order
};

ParamBinding bind_params(ad::Tape& tape, ModelParams& p);

// tanh(W_phi * mean(word embeddings) + b_phi), Eq.-2 shape. [1 x d]
ad::NodeId encode_query(ad::Tape& tape, const ParamBinding& b, const std::vector<int>& term_ids);

struct IntentResult {
  ad::NodeId m = -1;  // [1 x d]
  // per layer, the query-row attention weights over this model's slots:
  // AEM: history items; ZAM: zero slot then history items; TEM: query
  // position then history items. Rows sum to 1 over live entries.
  std::vector<std::vector<float>> attention;
};

IntentResult qem_intent(ad::Tape& tape, const ParamBinding& b, const std::vector<int>& query_terms);
IntentResult hem_intent(ad::Tape& tape, const ParamBinding& b, const std::vector<int>& query_terms, int user,
                        float lambda);
IntentResult aem_intent(ad::Tape& tape, const ParamBinding& b, const std::vector<int>& query_terms,
                        const std::vector<int>& history);
IntentResult zam_intent(ad::Tape& tape, const ParamBinding& b, const std::vector<int>& query_terms,
                        const std::vector<int>& history);
IntentResult tem_intent(ad::Tape& tape, const ParamBinding& b, const std::vector<int>& query_terms,
                        const std::vector<int>& history);

// Dispatch on b.params->config.kind (history/user ignored where unused).
IntentResult purchase_intent(ad::Tape& tape, const ParamBinding& b, const std::vector<int>& query_terms,
                             int user, const std::vector<int>& history);

// One full transformer encoder layer (post-norm). X is [(1+n) x d]; the
// query row is position 0. Appends the query-row attention weights to
// trace_out when given.
ad::NodeId transformer_layer(ad::Tape& tape, const LayerBinding& lb, ad::NodeId x, int heads,
                             std::vector<float>* query_row_trace = nullptr);

// Eq. 1 trained by negative sampling: -log s(i+ . m) - sum log s(-i- . m).
ad::NodeId item_generation_loss(ad::Tape& tape, const ParamBinding& b, ad::NodeId m, int positive,
                                const std::vector<int>& negatives);
// Exact-softmax form over the whole collection (oracle / small-scale mode).
ad::NodeId item_generation_loss_exact(ad::Tape& tape, const ParamBinding& b, ad::NodeId m, int positive);

// Eq. 3 mirror: words of the item's reviews against the word table, one
// negative set per window word.
ad::NodeId item_language_loss(ad::Tape& tape, const ParamBinding& b, int item, const std::vector<int>& window,
                              const std::vector<std::vector<int>>& negatives);
ad::NodeId item_language_loss_exact(ad::Tape& tape, const ParamBinding& b, int item,
                                    const std::vector<int>& window);

// Tape-free scoring for ranking: dot(item_emb[c], m) per candidate.
std::vector<float> score_items(const ModelParams& p, const ad::Tensor& m, const std::vector<int>& candidates);

// Tape-free intent for evaluation workers: runs the forward on a scratch
// tape and returns the plain intent vector plus the attention trace.
struct FrozenIntent {
  ad::Tensor m;
  std::vector<std::vector<float>> attention;
};
FrozenIntent frozen_intent(ModelParams& p, const std::vector<int>& query_terms, int user,
                           const std::vector<int>& history);

}  // namespace temsearch
