#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace temsearch::ad {

// Dense row-major float tensor. Rank is arbitrary in principle but every op
// in this library works on rank-2 tensors; vectors are [1 x d] rows and
// scalars are [1 x 1].
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<int> shape_in, float fill = 0.0f);

  static Tensor zeros(int rows, int cols);
  static Tensor row(std::vector<float> values);        // [1 x n]
  static Tensor scalar(float value);                   // [1 x 1]
  static Tensor from_rows(int rows, int cols, std::vector<float> values);

  long long numel() const;
  int rank() const { return static_cast<int>(shape.size()); }
  int rows() const;
  int cols() const;
  bool is_scalar() const { return numel() == 1; }

  float& at(int r, int c);
  float at(int r, int c) const;

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
  std::string shape_str() const;
};

// Thrown on shape/contract violations; message names the offending shapes.
void check_rank2(const Tensor& t, const char* op);

}  // namespace temsearch::ad
