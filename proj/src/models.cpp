#include "temsearch/models.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "temsearch/checkpoint.hpp"
#include "temsearch/rng.hpp"

namespace temsearch {

using ad::NodeId;
using ad::Tape;
using ad::Tensor;

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::qem: return "qem";
    case ModelKind::hem: return "hem";
    case ModelKind::aem: return "aem";
    case ModelKind::zam: return "zam";
    case ModelKind::tem: return "tem";
  }
  throw std::logic_error("model_kind_name: unknown kind");
}

std::optional<ModelKind> model_kind_from_name(const std::string& name) {
  if (name == "qem") return ModelKind::qem;
  if (name == "hem") return ModelKind::hem;
  if (name == "aem") return ModelKind::aem;
  if (name == "zam") return ModelKind::zam;
  if (name == "tem") return ModelKind::tem;
  return std::nullopt;
}

void ModelConfig::validate() const {
  if (d <= 0) throw std::invalid_argument("model config: d must be positive");
  if (heads <= 0) throw std::invalid_argument("model config: heads must be positive");
  if (d % heads != 0) throw std::invalid_argument("model config: d must be divisible by heads");
  if (kind == ModelKind::tem && layers < 1)
    throw std::invalid_argument("model config: tem needs at least one layer");
  if (kind == ModelKind::tem && d_ff <= 0)
    throw std::invalid_argument("model config: d_ff must be positive");
  if (lambda < 0.0f || lambda > 1.0f)
    throw std::invalid_argument("model config: lambda must lie in [0, 1]");
  if (negatives < 0) throw std::invalid_argument("model config: negatives must be non-negative");
  if (max_len <= 0) throw std::invalid_argument("model config: max_len must be positive");
}

namespace {

bool uses_attention(ModelKind kind) { return kind == ModelKind::aem || kind == ModelKind::zam; }

// Allocates every tensor of a model at its final shape, zero-filled.
ModelParams make_shell(const ModelConfig& cfg, int vocab_size, int n_items, int n_users) {
  cfg.validate();
  if (vocab_size <= 0) throw std::invalid_argument("model: vocab_size must be positive");
  if (n_items <= 0) throw std::invalid_argument("model: n_items must be positive");
  if (cfg.kind == ModelKind::hem && n_users <= 0)
    throw std::invalid_argument("model: hem needs at least one user");
  if (n_users < 0) throw std::invalid_argument("model: n_users must be non-negative");

  ModelParams p;
  p.config = cfg;
  p.vocab_size = vocab_size;
  p.n_items = n_items;
  p.n_users = n_users;
  const int d = cfg.d;
  const int dh = d / cfg.heads;

  p.word_emb = Tensor::zeros(vocab_size, d);
  p.item_emb = Tensor::zeros(n_items, d);
  if (cfg.kind == ModelKind::hem) p.user_emb = Tensor::zeros(n_users, d);
  if (cfg.kind == ModelKind::tem) p.pos_emb = Tensor::zeros(cfg.max_len + 1, d);
  p.w_phi = Tensor::zeros(d, d);
  p.b_phi = Tensor::zeros(1, d);

  if (uses_attention(cfg.kind)) {
    for (int h = 0; h < cfg.heads; ++h) {
      p.attn_wq.push_back(Tensor::zeros(d, dh));
      p.attn_wk.push_back(Tensor::zeros(d, dh));
    }
  }
  if (cfg.kind == ModelKind::tem) {
    for (int l = 0; l < cfg.layers; ++l) {
      LayerParams lp;
      for (int h = 0; h < cfg.heads; ++h) {
        lp.wq.push_back(Tensor::zeros(d, dh));
        lp.wk.push_back(Tensor::zeros(d, dh));
        lp.wv.push_back(Tensor::zeros(d, dh));
      }
      lp.wo = Tensor::zeros(d, d);
      lp.ff1 = Tensor::zeros(d, cfg.d_ff);
      lp.ff1_b = Tensor::zeros(1, cfg.d_ff);
      lp.ff2 = Tensor::zeros(cfg.d_ff, d);
      lp.ff2_b = Tensor::zeros(1, d);
      lp.ln1_g = Tensor::zeros(1, d);
      lp.ln1_b = Tensor::zeros(1, d);
      lp.ln2_g = Tensor::zeros(1, d);
      lp.ln2_b = Tensor::zeros(1, d);
      p.layers.push_back(std::move(lp));
    }
  }
  return p;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

enum class InitScheme { embedding, xavier, zero, one };

InitScheme scheme_for(const std::string& name) {
  if (ends_with(name, "_emb")) return InitScheme::embedding;
  if (ends_with(name, "ln1_g") || ends_with(name, "ln2_g")) return InitScheme::one;
  if (name == "b_phi" || ends_with(name, "_b")) return InitScheme::zero;
  return InitScheme::xavier;
}

std::string format_float(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

}  // namespace

ModelParams init_model(const ModelConfig& cfg, int vocab_size, int n_items, int n_users, uint64_t seed) {
  ModelParams p = make_shell(cfg, vocab_size, n_items, n_users);
  Rng rng(mix_seed(seed, 11));
  const float emb_range = 0.5f / static_cast<float>(cfg.d);
  p.for_each_param([&](const std::string& name, Tensor& t) {
    switch (scheme_for(name)) {
      case InitScheme::embedding:
        for (float& v : t.data) v = rng.uniform(-emb_range, emb_range);
        break;
      case InitScheme::xavier: {
        const float limit = std::sqrt(6.0f / static_cast<float>(t.rows() + t.cols()));
        for (float& v : t.data) v = rng.uniform(-limit, limit);
        break;
      }
      case InitScheme::zero:
        break;  // shell is zero-filled
      case InitScheme::one:
        for (float& v : t.data) v = 1.0f;
        break;
    }
  });
  return p;
}

void save_model(const ModelParams& p, const std::string& path,
                const std::map<std::string, std::string>& extra_meta) {
  ad::Checkpoint ck;
  ck.meta = extra_meta;
  p.for_each_param([&](const std::string& name, const Tensor& t) { ck.arrays[name] = t; });
  ck.meta["kind"] = model_kind_name(p.config.kind);
  ck.meta["d"] = std::to_string(p.config.d);
  ck.meta["heads"] = std::to_string(p.config.heads);
  ck.meta["layers"] = std::to_string(p.config.layers);
  ck.meta["d_ff"] = std::to_string(p.config.d_ff);
  ck.meta["lambda"] = format_float(p.config.lambda);
  ck.meta["negatives"] = std::to_string(p.config.negatives);
  ck.meta["max_len"] = std::to_string(p.config.max_len);
  ck.meta["vocab_size"] = std::to_string(p.vocab_size);
  ck.meta["n_items"] = std::to_string(p.n_items);
  ck.meta["n_users"] = std::to_string(p.n_users);
  ck.save(path);
}

ModelParams load_model(const std::string& path) {
  const ad::Checkpoint ck = ad::Checkpoint::load(path);
  auto meta = [&](const char* key) -> const std::string& {
    auto it = ck.meta.find(key);
    if (it == ck.meta.end())
      throw std::runtime_error("model checkpoint: missing meta '" + std::string(key) + "'");
    return it->second;
  };
  ModelConfig cfg;
  const auto kind = model_kind_from_name(meta("kind"));
  if (!kind)
    throw std::runtime_error("model checkpoint: unknown kind '" + meta("kind") +
                             "'; supported kinds: qem hem aem zam tem");
  cfg.kind = *kind;
  cfg.d = std::stoi(meta("d"));
  cfg.heads = std::stoi(meta("heads"));
  cfg.layers = std::stoi(meta("layers"));
  cfg.d_ff = std::stoi(meta("d_ff"));
  cfg.lambda = std::strtof(meta("lambda").c_str(), nullptr);
  cfg.negatives = std::stoi(meta("negatives"));
  cfg.max_len = std::stoi(meta("max_len"));

  ModelParams p = make_shell(cfg, std::stoi(meta("vocab_size")), std::stoi(meta("n_items")),
                             std::stoi(meta("n_users")));
  size_t used = 0;
  p.for_each_param([&](const std::string& name, Tensor& t) {
    auto it = ck.arrays.find(name);
    if (it == ck.arrays.end())
      throw std::runtime_error("model checkpoint: missing array '" + name + "'");
    if (!it->second.same_shape(t))
      throw std::runtime_error("model checkpoint: array '" + name + "' has shape " +
                               it->second.shape_str() + ", expected " + t.shape_str());
    t = it->second;
    ++used;
  });
  if (used != ck.arrays.size())
    throw std::runtime_error("model checkpoint: contains arrays this model does not declare");
  return p;
}

ParamBinding bind_params(Tape& tape, ModelParams& p) {
  ParamBinding b;
  b.params = &p;
  std::map<std::string, NodeId> ids;
  p.for_each_param([&](const std::string& name, Tensor& t) {
    const NodeId id = tape.leaf(t);
    ids[name] = id;
    b.named.emplace_back(name, id);
  });
  auto get = [&](const std::string& name) { return ids.at(name); };
  b.word_emb = get("word_emb");
  b.item_emb = get("item_emb");
  if (ids.count("user_emb")) b.user_emb = get("user_emb");
  if (ids.count("pos_emb")) b.pos_emb = get("pos_emb");
  b.w_phi = get("w_phi");
  b.b_phi = get("b_phi");
  for (size_t h = 0; h < p.attn_wq.size(); ++h) {
    b.attn_wq.push_back(get("attn.wq." + std::to_string(h)));
    b.attn_wk.push_back(get("attn.wk." + std::to_string(h)));
  }
  for (size_t l = 0; l < p.layers.size(); ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    LayerBinding lb;
    for (size_t h = 0; h < p.layers[l].wq.size(); ++h) {
      lb.wq.push_back(get(pre + "wq." + std::to_string(h)));
      lb.wk.push_back(get(pre + "wk." + std::to_string(h)));
      lb.wv.push_back(get(pre + "wv." + std::to_string(h)));
    }
    lb.wo = get(pre + "wo");
    lb.ff1 = get(pre + "ff1");
    lb.ff1_b = get(pre + "ff1_b");
    lb.ff2 = get(pre + "ff2");
    lb.ff2_b = get(pre + "ff2_b");
    lb.ln1_g = get(pre + "ln1_g");
    lb.ln1_b = get(pre + "ln1_b");
    lb.ln2_g = get(pre + "ln2_g");
    lb.ln2_b = get(pre + "ln2_b");
    b.layers.push_back(lb);
  }
  return b;
}

NodeId encode_query(Tape& tape, const ParamBinding& b, const std::vector<int>& term_ids) {
  if (term_ids.empty()) throw std::invalid_argument("encode_query: query has no terms");
  const NodeId words = ad::embedding_lookup(tape, b.word_emb, term_ids);
  const NodeId mean = ad::mean_rows(tape, words);
  const NodeId proj = ad::matmul(tape, mean, b.w_phi);
  return ad::tanh_op(tape, ad::add(tape, proj, b.b_phi));
}

IntentResult qem_intent(Tape& tape, const ParamBinding& b, const std::vector<int>& query_terms) {
  IntentResult r;
  r.m = encode_query(tape, b, query_terms);
  return r;
}

IntentResult hem_intent(Tape& tape, const ParamBinding& b, const std::vector<int>& query_terms, int user,
                        float lambda) {
  if (lambda < 0.0f || lambda > 1.0f) throw std::invalid_argument("hem_intent: lambda must lie in [0, 1]");
  IntentResult r;
  const NodeId q = encode_query(tape, b, query_terms);
  const int n_users = b.user_emb >= 0 ? tape.value(b.user_emb).rows() : 0;
  if (user < 0 || user >= n_users) {
    r.m = q;  // unseen user: fall back to the query alone
    return r;
  }
  const NodeId u = ad::embedding_lookup(tape, b.user_emb, {user});
  r.m = ad::add(tape, ad::scale(tape, q, lambda), ad::scale(tape, u, 1.0f - lambda));
  return r;
}

namespace {

// Shared AEM/ZAM body. ZAM prepends an all-zero key/value slot, so the
// history can never absorb the full softmax mass.
IntentResult attention_intent(Tape& tape, const ParamBinding& b, const std::vector<int>& query_terms,
                              const std::vector<int>& history, bool zero_slot) {
  IntentResult r;
  const NodeId q = encode_query(tape, b, query_terms);
  if (b.attn_wq.empty()) throw std::logic_error("attention intent: model has no attention projections");
  if (history.empty()) {
    r.m = q;
    if (zero_slot) r.attention.push_back({1.0f});  // empty sum: the zero slot takes all mass
    return r;
  }

  const NodeId items = ad::embedding_lookup(tape, b.item_emb, history);
  NodeId keys_in = items;
  if (zero_slot) {
    const NodeId zero = tape.leaf(Tensor::zeros(1, tape.value(items).cols()));
    keys_in = ad::concat_rows(tape, {zero, items});
  }

  const int heads = static_cast<int>(b.attn_wq.size());
  const int dh = tape.value(b.attn_wq[0]).cols();
  const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(dh));
  const int slots = tape.value(keys_in).rows();

  std::vector<NodeId> pooled;
  std::vector<float> trace(static_cast<size_t>(slots), 0.0f);
  for (int h = 0; h < heads; ++h) {
    const NodeId qh = ad::matmul(tape, q, b.attn_wq[h]);
    const NodeId kh = ad::matmul(tape, keys_in, b.attn_wk[h]);
    const NodeId logits = ad::scale(tape, ad::matmul(tape, qh, ad::transpose(tape, kh)), inv_sqrt);
    const NodeId w = ad::row_softmax(tape, logits);
    // Values are raw embedding slices; the zero slot contributes exactly 0.
    const NodeId vh = heads == 1 ? keys_in : ad::slice_cols(tape, keys_in, h * dh, (h + 1) * dh);
    pooled.push_back(ad::matmul(tape, w, vh));
    const Tensor& wv = tape.value(w);
    for (int s = 0; s < slots; ++s) trace[static_cast<size_t>(s)] += wv.at(0, s) / static_cast<float>(heads);
  }
  const NodeId pers = heads == 1 ? pooled[0] : ad::concat_cols(tape, pooled);
  r.m = ad::add(tape, q, pers);  // the query keeps coefficient exactly 1
  r.attention.push_back(std::move(trace));
  return r;
}

}  // namespace

IntentResult aem_intent(Tape& tape, const ParamBinding& b, const std::vector<int>& query_terms,
                        const std::vector<int>& history) {
  return attention_intent(tape, b, query_terms, history, /*zero_slot=*/false);
}

IntentResult zam_intent(Tape& tape, const ParamBinding& b, const std::vector<int>& query_terms,
                        const std::vector<int>& history) {
  return attention_intent(tape, b, query_terms, history, /*zero_slot=*/true);
}

NodeId transformer_layer(Tape& tape, const LayerBinding& lb, NodeId x, int heads,
                         std::vector<float>* query_row_trace) {
  const int rows = tape.value(x).rows();
  const int d = tape.value(x).cols();
  if (heads <= 0 || static_cast<size_t>(heads) != lb.wq.size())
    throw std::invalid_argument("transformer_layer: head count does not match projections");
  const int dh = d / heads;
  const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(dh));

  std::vector<NodeId> head_out;
  std::vector<float> trace(static_cast<size_t>(rows), 0.0f);
  for (int h = 0; h < heads; ++h) {
    const NodeId qh = ad::matmul(tape, x, lb.wq[h]);
    const NodeId kh = ad::matmul(tape, x, lb.wk[h]);
    const NodeId vh = ad::matmul(tape, x, lb.wv[h]);
    const NodeId logits = ad::scale(tape, ad::matmul(tape, qh, ad::transpose(tape, kh)), inv_sqrt);
    const NodeId a = ad::row_softmax(tape, logits);
    head_out.push_back(ad::matmul(tape, a, vh));
    const Tensor& av = tape.value(a);
    for (int s = 0; s < rows; ++s) trace[static_cast<size_t>(s)] += av.at(0, s) / static_cast<float>(heads);
  }
  const NodeId concat = heads == 1 ? head_out[0] : ad::concat_cols(tape, head_out);
  const NodeId attended = ad::matmul(tape, concat, lb.wo);
  const NodeId x1 = ad::layer_norm(tape, ad::add(tape, x, attended), lb.ln1_g, lb.ln1_b);
  const NodeId inner = ad::relu(tape, ad::add_row(tape, ad::matmul(tape, x1, lb.ff1), lb.ff1_b));
  const NodeId ff = ad::add_row(tape, ad::matmul(tape, inner, lb.ff2), lb.ff2_b);
  const NodeId x2 = ad::layer_norm(tape, ad::add(tape, x1, ff), lb.ln2_g, lb.ln2_b);
  if (query_row_trace) *query_row_trace = std::move(trace);
  return x2;
}

IntentResult tem_intent(Tape& tape, const ParamBinding& b, const std::vector<int>& query_terms,
                        const std::vector<int>& history) {
  if (b.pos_emb < 0) throw std::logic_error("tem_intent: model has no positional table");
  const int max_len = tape.value(b.pos_emb).rows() - 1;
  if (static_cast<int>(history.size()) > max_len)
    throw std::invalid_argument("tem_intent: history longer than max_len");
  if (b.layers.empty()) throw std::logic_error("tem_intent: model has no transformer layers");

  IntentResult r;
  const NodeId q = encode_query(tape, b, query_terms);
  const NodeId q0 = ad::add(tape, q, ad::embedding_lookup(tape, b.pos_emb, {0}));
  NodeId x = q0;
  if (!history.empty()) {
    // Positions renumber 1..n oldest-to-newest over the kept window.
    std::vector<int> positions(history.size());
    for (size_t i = 0; i < history.size(); ++i) positions[i] = static_cast<int>(i) + 1;
    const NodeId items = ad::embedding_lookup(tape, b.item_emb, history);
    const NodeId pos = ad::embedding_lookup(tape, b.pos_emb, positions);
    x = ad::concat_rows(tape, {q0, ad::add(tape, items, pos)});
  }
  const int heads = static_cast<int>(b.layers[0].wq.size());
  for (const LayerBinding& lb : b.layers) {
    std::vector<float> trace;
    x = transformer_layer(tape, lb, x, heads, &trace);
    r.attention.push_back(std::move(trace));
  }
  r.m = ad::slice_rows(tape, x, 0, 1);
  return r;
}

IntentResult purchase_intent(Tape& tape, const ParamBinding& b, const std::vector<int>& query_terms,
                             int user, const std::vector<int>& history) {
  if (!b.params) throw std::logic_error("purchase_intent: unbound parameters");
  switch (b.params->config.kind) {
    case ModelKind::qem: return qem_intent(tape, b, query_terms);
    case ModelKind::hem: return hem_intent(tape, b, query_terms, user, b.params->config.lambda);
    case ModelKind::aem: return aem_intent(tape, b, query_terms, history);
    case ModelKind::zam: return zam_intent(tape, b, query_terms, history);
    case ModelKind::tem: return tem_intent(tape, b, query_terms, history);
  }
  throw std::logic_error("purchase_intent: unknown model kind");
}

NodeId item_generation_loss(Tape& tape, const ParamBinding& b, NodeId m, int positive,
                            const std::vector<int>& negatives) {
  const NodeId mt = ad::transpose(tape, m);
  const NodeId pos = ad::embedding_lookup(tape, b.item_emb, {positive});
  const NodeId pos_term = ad::logsigmoid(tape, ad::matmul(tape, pos, mt));
  NodeId total = pos_term;
  if (!negatives.empty()) {
    const NodeId negs = ad::embedding_lookup(tape, b.item_emb, negatives);
    const NodeId neg_scores = ad::scale(tape, ad::matmul(tape, negs, mt), -1.0f);
    total = ad::add(tape, pos_term, ad::sum_all(tape, ad::logsigmoid(tape, neg_scores)));
  }
  return ad::scale(tape, total, -1.0f);
}

NodeId item_generation_loss_exact(Tape& tape, const ParamBinding& b, NodeId m, int positive) {
  const NodeId scores = ad::matmul(tape, b.item_emb, ad::transpose(tape, m));
  return ad::neg_log_softmax_entry(tape, scores, positive);
}

NodeId item_language_loss(Tape& tape, const ParamBinding& b, int item, const std::vector<int>& window,
                          const std::vector<std::vector<int>>& negatives) {
  if (window.empty()) throw std::invalid_argument("item_language_loss: empty word window");
  if (negatives.size() != window.size())
    throw std::invalid_argument("item_language_loss: need one negative set per window word");
  const NodeId ctx = ad::transpose(tape, ad::embedding_lookup(tape, b.item_emb, {item}));
  const NodeId words = ad::embedding_lookup(tape, b.word_emb, window);
  const NodeId pos_term = ad::sum_all(tape, ad::logsigmoid(tape, ad::matmul(tape, words, ctx)));
  std::vector<int> flat;
  for (const auto& set : negatives) flat.insert(flat.end(), set.begin(), set.end());
  NodeId total = pos_term;
  if (!flat.empty()) {
    const NodeId negs = ad::embedding_lookup(tape, b.word_emb, flat);
    const NodeId neg_scores = ad::scale(tape, ad::matmul(tape, negs, ctx), -1.0f);
    total = ad::add(tape, pos_term, ad::sum_all(tape, ad::logsigmoid(tape, neg_scores)));
  }
  return ad::scale(tape, total, -1.0f);
}

NodeId item_language_loss_exact(Tape& tape, const ParamBinding& b, int item,
                                const std::vector<int>& window) {
  if (window.empty()) throw std::invalid_argument("item_language_loss: empty word window");
  const NodeId ctx = ad::transpose(tape, ad::embedding_lookup(tape, b.item_emb, {item}));
  const NodeId scores = ad::matmul(tape, b.word_emb, ctx);
  std::vector<NodeId> terms;
  for (int w : window) terms.push_back(ad::neg_log_softmax_entry(tape, scores, w));
  return terms.size() == 1 ? terms[0] : ad::add_n(tape, terms);
}

std::vector<float> score_items(const ModelParams& p, const Tensor& m, const std::vector<int>& candidates) {
  if (m.rows() != 1 || m.cols() != p.config.d)
    throw std::invalid_argument("score_items: intent must be [1 x d], got " + m.shape_str());
  std::vector<float> out;
  out.reserve(candidates.size());
  for (int c : candidates) {
    if (c < 0 || c >= p.item_emb.rows())
      throw std::out_of_range("score_items: item id " + std::to_string(c) + " outside the collection");
    float s = 0.0f;
    for (int j = 0; j < p.config.d; ++j) s += p.item_emb.at(c, j) * m.at(0, j);
    out.push_back(s);
  }
  return out;
}

FrozenIntent frozen_intent(ModelParams& p, const std::vector<int>& query_terms, int user,
                           const std::vector<int>& history) {
  Tape tape;
  const ParamBinding b = bind_params(tape, p);
  const IntentResult r = purchase_intent(tape, b, query_terms, user, history);
  FrozenIntent out;
  out.m = tape.value(r.m);
  out.attention = r.attention;
  return out;
}

}  // namespace temsearch
