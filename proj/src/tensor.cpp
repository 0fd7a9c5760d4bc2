#include "temsearch/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace temsearch::ad {

Tensor::Tensor(std::vector<int> shape_in, float fill) : shape(std::move(shape_in)) {
  long long n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension in shape " + shape_str());
    n *= d;
  }
  data.assign(static_cast<size_t>(n), fill);
}

Tensor Tensor::zeros(int rows, int cols) { return Tensor({rows, cols}); }

Tensor Tensor::row(std::vector<float> values) {
  Tensor t;
  t.shape = {1, static_cast<int>(values.size())};
  t.data = std::move(values);
  return t;
}

Tensor Tensor::scalar(float value) {
  Tensor t;
  t.shape = {1, 1};
  t.data = {value};
  return t;
}

Tensor Tensor::from_rows(int rows, int cols, std::vector<float> values) {
  if (static_cast<long long>(values.size()) != static_cast<long long>(rows) * cols)
    throw std::invalid_argument("Tensor::from_rows: data length does not match shape");
  Tensor t;
  t.shape = {rows, cols};
  t.data = std::move(values);
  return t;
}

long long Tensor::numel() const {
  long long n = 1;
  for (int d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

int Tensor::rows() const {
  if (shape.size() != 2) throw std::invalid_argument("Tensor::rows: tensor is not rank-2, shape " + shape_str());
  return shape[0];
}

int Tensor::cols() const {
  if (shape.size() != 2) throw std::invalid_argument("Tensor::cols: tensor is not rank-2, shape " + shape_str());
  return shape[1];
}

float& Tensor::at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
float Tensor::at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

bool Tensor::all_finite() const {
  for (float v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

void check_rank2(const Tensor& t, const char* op) {
  if (t.shape.size() != 2)
    throw std::invalid_argument(std::string(op) + ": expected rank-2 tensor, got shape " + t.shape_str());
}

}  // namespace temsearch::ad
