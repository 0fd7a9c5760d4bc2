#pragma once

#include <string>
#include <unordered_map>

#include "temsearch/tensor.hpp"

namespace temsearch::ad {

struct AdamConfig {
  float lr = 5e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// One optimizer slot per named parameter: first/second moment estimates
// plus the per-parameter step count used for bias correction.
struct AdamState {
  Tensor m;
  Tensor v;
  long long t = 0;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one bias-corrected Adam update in place. State is created lazily
  // on first sight of a name. A non-finite gradient entry is a poisoned
  // update and aborts, naming the parameter.
  void step(const std::string& name, Tensor& param, const Tensor& grad);

  const AdamConfig& config() const { return cfg_; }
  const AdamState* state(const std::string& name) const;
  std::unordered_map<std::string, AdamState>& states() { return states_; }
  const std::unordered_map<std::string, AdamState>& states() const { return states_; }

 private:
  AdamConfig cfg_;
  std::unordered_map<std::string, AdamState> states_;
};

}  // namespace temsearch::ad
