#include "temsearch/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace temsearch::ad {

void Adam::step(const std::string& name, Tensor& param, const Tensor& grad) {
  if (!param.same_shape(grad))
    throw std::invalid_argument("adam: gradient shape " + grad.shape_str() + " does not match parameter '" +
                                name + "' " + param.shape_str());
  if (!grad.all_finite())
    throw std::runtime_error("adam: non-finite gradient for parameter '" + name + "'");

  auto it = states_.find(name);
  if (it == states_.end()) {
    AdamState fresh;
    fresh.m = Tensor(param.shape, 0.0f);
    fresh.v = Tensor(param.shape, 0.0f);
    it = states_.emplace(name, std::move(fresh)).first;
  }
  AdamState& st = it->second;
  if (!st.m.same_shape(param))
    throw std::invalid_argument("adam: stored state shape " + st.m.shape_str() + " does not match parameter '" +
                                name + "' " + param.shape_str());

  st.t += 1;
  const float b1t = 1.0f - std::pow(cfg_.beta1, static_cast<float>(st.t));
  const float b2t = 1.0f - std::pow(cfg_.beta2, static_cast<float>(st.t));
  for (size_t i = 0; i < param.data.size(); ++i) {
    const float g = grad.data[i];
    st.m.data[i] = cfg_.beta1 * st.m.data[i] + (1.0f - cfg_.beta1) * g;
    st.v.data[i] = cfg_.beta2 * st.v.data[i] + (1.0f - cfg_.beta2) * g * g;
    const float mhat = st.m.data[i] / b1t;
    const float vhat = st.v.data[i] / b2t;
    param.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

const AdamState* Adam::state(const std::string& name) const {
  auto it = states_.find(name);
  return it == states_.end() ? nullptr : &it->second;
}

}  // namespace temsearch::ad
