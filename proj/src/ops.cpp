#include "temsearch/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace temsearch::ad {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

// C[m x n] += A[m x k] * B[k x n]. Each cell accumulates in double and
// rounds once, so a reordered reduction (e.g. a permuted history) lands on
// the same float.
void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const int m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> acc(static_cast<size_t>(n));
  for (int i = 0; i < m; ++i) {
    const float* arow = &a.data[static_cast<size_t>(i) * k];
    float* crow = &c.data[static_cast<size_t>(i) * n];
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const float* brow = &b.data[static_cast<size_t>(p) * n];
      for (int j = 0; j < n; ++j) acc[static_cast<size_t>(j)] += av * static_cast<double>(brow[j]);
    }
    for (int j = 0; j < n; ++j) crow[j] += static_cast<float>(acc[static_cast<size_t>(j)]);
  }
}

Tensor transpose_of(const Tensor& x) {
  Tensor y = Tensor::zeros(x.cols(), x.rows());
  for (int r = 0; r < x.rows(); ++r)
    for (int c = 0; c < x.cols(); ++c) y.at(c, r) = x.at(r, c);
  return y;
}

}  // namespace

NodeId matmul(Tape& t, NodeId a, NodeId b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  check_rank2(av, "matmul");
  check_rank2(bv, "matmul");
  if (av.cols() != bv.rows())
    throw std::invalid_argument("matmul: inner dimensions disagree, " + av.shape_str() + " vs " + bv.shape_str());

  Tensor out = Tensor::zeros(av.rows(), bv.cols());
  matmul_acc(av, bv, out);

  return t.record("matmul", std::move(out), {a, b}, [](const BackwardCtx& ctx) {
    const Tensor& A = *ctx.inputs[0];
    const Tensor& B = *ctx.inputs[1];
    // dA = dC * B^T, dB = A^T * dC
    matmul_acc(ctx.out_grad, transpose_of(B), *ctx.input_grads[0]);
    matmul_acc(transpose_of(A), ctx.out_grad, *ctx.input_grads[1]);
  });
}

NodeId transpose(Tape& t, NodeId a) {
  const Tensor& av = t.value(a);
  check_rank2(av, "transpose");
  return t.record("transpose", transpose_of(av), {a}, [](const BackwardCtx& ctx) {
    Tensor gt = transpose_of(ctx.out_grad);
    Tensor& gin = *ctx.input_grads[0];
    for (size_t i = 0; i < gin.data.size(); ++i) gin.data[i] += gt.data[i];
  });
}

NodeId add(Tape& t, NodeId a, NodeId b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  check_same_shape(av, bv, "add");
  Tensor out = av;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
  return t.record("add", std::move(out), {a, b}, [](const BackwardCtx& ctx) {
    for (int side = 0; side < 2; ++side) {
      Tensor& g = *ctx.input_grads[side];
      for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += ctx.out_grad.data[i];
    }
  });
}

NodeId add_row(Tape& t, NodeId x, NodeId bias) {
  const Tensor& xv = t.value(x);
  const Tensor& bv = t.value(bias);
  check_rank2(xv, "add_row");
  if (bv.rows() != 1 || bv.cols() != xv.cols())
    throw std::invalid_argument("add_row: bias must be [1 x " + std::to_string(xv.cols()) + "], got " + bv.shape_str());
  Tensor out = xv;
  for (int r = 0; r < xv.rows(); ++r)
    for (int c = 0; c < xv.cols(); ++c) out.at(r, c) += bv.data[static_cast<size_t>(c)];
  return t.record("add_row", std::move(out), {x, bias}, [](const BackwardCtx& ctx) {
    Tensor& gx = *ctx.input_grads[0];
    Tensor& gb = *ctx.input_grads[1];
    const int m = gx.rows(), n = gx.cols();
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) {
        const float g = ctx.out_grad.at(r, c);
        gx.at(r, c) += g;
        gb.data[static_cast<size_t>(c)] += g;
      }
  });
}

NodeId add_n(Tape& t, const std::vector<NodeId>& xs) {
  if (xs.empty()) throw std::invalid_argument("add_n: empty input list");
  Tensor out = t.value(xs[0]);
  for (size_t i = 1; i < xs.size(); ++i) {
    const Tensor& v = t.value(xs[i]);
    check_same_shape(out, v, "add_n");
    for (size_t j = 0; j < out.data.size(); ++j) out.data[j] += v.data[j];
  }
  return t.record("add_n", std::move(out), xs, [](const BackwardCtx& ctx) {
    for (Tensor* g : ctx.input_grads)
      for (size_t i = 0; i < g->data.size(); ++i) g->data[i] += ctx.out_grad.data[i];
  });
}

NodeId scale(Tape& t, NodeId a, float s) {
  Tensor out = t.value(a);
  for (float& v : out.data) v *= s;
  return t.record("scale", std::move(out), {a}, [s](const BackwardCtx& ctx) {
    Tensor& g = *ctx.input_grads[0];
    for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += s * ctx.out_grad.data[i];
  });
}

NodeId tanh_op(Tape& t, NodeId a) {
  Tensor out = t.value(a);
  for (float& v : out.data) v = std::tanh(v);
  return t.record("tanh", std::move(out), {a}, [](const BackwardCtx& ctx) {
    Tensor& g = *ctx.input_grads[0];
    for (size_t i = 0; i < g.data.size(); ++i) {
      const float y = ctx.out_value.data[i];
      g.data[i] += (1.0f - y * y) * ctx.out_grad.data[i];
    }
  });
}

NodeId relu(Tape& t, NodeId a) {
  Tensor out = t.value(a);
  for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
  return t.record("relu", std::move(out), {a}, [](const BackwardCtx& ctx) {
    Tensor& g = *ctx.input_grads[0];
    for (size_t i = 0; i < g.data.size(); ++i)
      if (ctx.inputs[0]->data[i] > 0.0f) g.data[i] += ctx.out_grad.data[i];
  });
}

NodeId logsigmoid(Tape& t, NodeId a) {
  Tensor out = t.value(a);
  for (float& v : out.data) {
    // log(1/(1+exp(-x))), split on sign to avoid overflow
    v = v >= 0.0f ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v));
  }
  return t.record("logsigmoid", std::move(out), {a}, [](const BackwardCtx& ctx) {
    Tensor& g = *ctx.input_grads[0];
    for (size_t i = 0; i < g.data.size(); ++i) {
      const float x = ctx.inputs[0]->data[i];
      // d/dx log(sigmoid(x)) = sigmoid(-x)
      const float s = x >= 0.0f ? std::exp(-x) / (1.0f + std::exp(-x)) : 1.0f / (1.0f + std::exp(x));
      g.data[i] += s * ctx.out_grad.data[i];
    }
  });
}

NodeId mean_rows(Tape& t, NodeId x) {
  const Tensor& xv = t.value(x);
  check_rank2(xv, "mean_rows");
  const int m = xv.rows(), n = xv.cols();
  Tensor out = Tensor::zeros(1, n);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) out.data[static_cast<size_t>(c)] += xv.at(r, c);
  for (float& v : out.data) v /= static_cast<float>(m);
  return t.record("mean_rows", std::move(out), {x}, [m](const BackwardCtx& ctx) {
    Tensor& g = *ctx.input_grads[0];
    const int n2 = g.cols();
    const float inv = 1.0f / static_cast<float>(m);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n2; ++c) g.at(r, c) += ctx.out_grad.data[static_cast<size_t>(c)] * inv;
  });
}

NodeId sum_all(Tape& t, NodeId x) {
  const Tensor& xv = t.value(x);
  float s = 0.0f;
  for (float v : xv.data) s += v;
  return t.record("sum_all", Tensor::scalar(s), {x}, [](const BackwardCtx& ctx) {
    Tensor& g = *ctx.input_grads[0];
    const float go = ctx.out_grad.data[0];
    for (float& v : g.data) v += go;
  });
}

NodeId row_softmax(Tape& t, NodeId x, const std::vector<uint8_t>* mask) {
  const Tensor& xv = t.value(x);
  check_rank2(xv, "row_softmax");
  const int m = xv.rows(), n = xv.cols();
  if (mask && static_cast<long long>(mask->size()) != xv.numel())
    throw std::invalid_argument("row_softmax: mask size does not match tensor " + xv.shape_str());

  auto live = [&](int r, int c) { return !mask || (*mask)[static_cast<size_t>(r) * n + c] != 0; };

  Tensor out = Tensor::zeros(m, n);
  for (int r = 0; r < m; ++r) {
    float mx = -std::numeric_limits<float>::infinity();
    for (int c = 0; c < n; ++c)
      if (live(r, c)) mx = std::max(mx, xv.at(r, c));
    if (!std::isfinite(mx))
      throw std::invalid_argument("row_softmax: fully masked row " + std::to_string(r));
    double denom = 0.0;  // double sum: permuting a row must not move its weights
    for (int c = 0; c < n; ++c)
      if (live(r, c)) {
        out.at(r, c) = std::exp(xv.at(r, c) - mx);
        denom += static_cast<double>(out.at(r, c));
      }
    for (int c = 0; c < n; ++c)
      if (live(r, c)) out.at(r, c) = static_cast<float>(out.at(r, c) / denom);
  }

  std::vector<uint8_t> mask_copy = mask ? *mask : std::vector<uint8_t>();
  return t.record("row_softmax", std::move(out), {x}, [mask_copy, m, n](const BackwardCtx& ctx) {
    Tensor& g = *ctx.input_grads[0];
    auto live = [&](int r, int c) {
      return mask_copy.empty() || mask_copy[static_cast<size_t>(r) * n + c] != 0;
    };
    for (int r = 0; r < m; ++r) {
      float dot = 0.0f;
      for (int c = 0; c < n; ++c)
        if (live(r, c)) dot += ctx.out_value.at(r, c) * ctx.out_grad.at(r, c);
      for (int c = 0; c < n; ++c)
        if (live(r, c)) g.at(r, c) += ctx.out_value.at(r, c) * (ctx.out_grad.at(r, c) - dot);
    }
  });
}

NodeId layer_norm(Tape& t, NodeId x, NodeId gain, NodeId bias, float eps) {
  const Tensor& xv = t.value(x);
  const Tensor& gv = t.value(gain);
  const Tensor& bv = t.value(bias);
  check_rank2(xv, "layer_norm");
  if (gv.rows() != 1 || gv.cols() != xv.cols() || bv.rows() != 1 || bv.cols() != xv.cols())
    throw std::invalid_argument("layer_norm: gain/bias must be [1 x " + std::to_string(xv.cols()) + "]");

  const int m = xv.rows(), n = xv.cols();
  Tensor out = Tensor::zeros(m, n);
  for (int r = 0; r < m; ++r) {
    float mu = 0.0f;
    for (int c = 0; c < n; ++c) mu += xv.at(r, c);
    mu /= static_cast<float>(n);
    float var = 0.0f;
    for (int c = 0; c < n; ++c) {
      const float d = xv.at(r, c) - mu;
      var += d * d;
    }
    var /= static_cast<float>(n);
    const float inv_sd = 1.0f / std::sqrt(var + eps);
    for (int c = 0; c < n; ++c)
      out.at(r, c) = gv.data[static_cast<size_t>(c)] * (xv.at(r, c) - mu) * inv_sd + bv.data[static_cast<size_t>(c)];
  }

  return t.record("layer_norm", std::move(out), {x, gain, bias}, [eps](const BackwardCtx& ctx) {
    const Tensor& X = *ctx.inputs[0];
    const Tensor& G = *ctx.inputs[1];
    Tensor& gx = *ctx.input_grads[0];
    Tensor& gg = *ctx.input_grads[1];
    Tensor& gb = *ctx.input_grads[2];
    const int m = X.rows(), n = X.cols();
    for (int r = 0; r < m; ++r) {
      float mu = 0.0f;
      for (int c = 0; c < n; ++c) mu += X.at(r, c);
      mu /= static_cast<float>(n);
      float var = 0.0f;
      for (int c = 0; c < n; ++c) {
        const float d = X.at(r, c) - mu;
        var += d * d;
      }
      var /= static_cast<float>(n);
      const float inv_sd = 1.0f / std::sqrt(var + eps);

      // dxhat = dy * g; dx = inv_sd * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
      float mean_dxhat = 0.0f, mean_dxhat_xhat = 0.0f;
      for (int c = 0; c < n; ++c) {
        const float xhat = (X.at(r, c) - mu) * inv_sd;
        const float dxhat = ctx.out_grad.at(r, c) * G.data[static_cast<size_t>(c)];
        mean_dxhat += dxhat;
        mean_dxhat_xhat += dxhat * xhat;
      }
      mean_dxhat /= static_cast<float>(n);
      mean_dxhat_xhat /= static_cast<float>(n);
      for (int c = 0; c < n; ++c) {
        const float xhat = (X.at(r, c) - mu) * inv_sd;
        const float dxhat = ctx.out_grad.at(r, c) * G.data[static_cast<size_t>(c)];
        gx.at(r, c) += inv_sd * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
        gg.data[static_cast<size_t>(c)] += ctx.out_grad.at(r, c) * xhat;
        gb.data[static_cast<size_t>(c)] += ctx.out_grad.at(r, c);
      }
    }
  });
}

NodeId embedding_lookup(Tape& t, NodeId table, const std::vector<int>& ids) {
  const Tensor& tv = t.value(table);
  check_rank2(tv, "embedding_lookup");
  const int v = tv.rows(), d = tv.cols();
  if (ids.empty()) throw std::invalid_argument("embedding_lookup: empty id list");
  Tensor out = Tensor::zeros(static_cast<int>(ids.size()), d);
  for (size_t k = 0; k < ids.size(); ++k) {
    const int id = ids[k];
    if (id < 0 || id >= v)
      throw std::out_of_range("embedding_lookup: id " + std::to_string(id) + " out of range [0, " +
                              std::to_string(v) + ")");
    std::copy_n(&tv.data[static_cast<size_t>(id) * d], d, &out.data[k * static_cast<size_t>(d)]);
  }
  std::vector<int> ids_copy = ids;
  return t.record("embedding_lookup", std::move(out), {table}, [ids_copy, d](const BackwardCtx& ctx) {
    Tensor& g = *ctx.input_grads[0];
    for (size_t k = 0; k < ids_copy.size(); ++k) {
      float* dst = &g.data[static_cast<size_t>(ids_copy[k]) * d];
      const float* src = &ctx.out_grad.data[k * static_cast<size_t>(d)];
      for (int c = 0; c < d; ++c) dst[c] += src[c];
    }
  });
}

NodeId slice_rows(Tape& t, NodeId x, int row_begin, int row_end) {
  const Tensor& xv = t.value(x);
  check_rank2(xv, "slice_rows");
  if (row_begin < 0 || row_end > xv.rows() || row_begin >= row_end)
    throw std::invalid_argument("slice_rows: invalid range [" + std::to_string(row_begin) + ", " +
                                std::to_string(row_end) + ") for " + xv.shape_str());
  const int n = xv.cols();
  Tensor out = Tensor::zeros(row_end - row_begin, n);
  std::copy_n(&xv.data[static_cast<size_t>(row_begin) * n], out.data.size(), out.data.begin());
  return t.record("slice_rows", std::move(out), {x}, [row_begin, n](const BackwardCtx& ctx) {
    Tensor& g = *ctx.input_grads[0];
    float* dst = &g.data[static_cast<size_t>(row_begin) * n];
    for (size_t i = 0; i < ctx.out_grad.data.size(); ++i) dst[i] += ctx.out_grad.data[i];
  });
}

NodeId slice_cols(Tape& t, NodeId x, int col_begin, int col_end) {
  const Tensor& xv = t.value(x);
  check_rank2(xv, "slice_cols");
  if (col_begin < 0 || col_end > xv.cols() || col_begin >= col_end)
    throw std::invalid_argument("slice_cols: invalid range [" + std::to_string(col_begin) + ", " +
                                std::to_string(col_end) + ") for " + xv.shape_str());
  const int m = xv.rows(), w = col_end - col_begin;
  Tensor out = Tensor::zeros(m, w);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = xv.at(r, col_begin + c);
  return t.record("slice_cols", std::move(out), {x}, [col_begin, w](const BackwardCtx& ctx) {
    Tensor& g = *ctx.input_grads[0];
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < w; ++c) g.at(r, col_begin + c) += ctx.out_grad.at(r, c);
  });
}

NodeId concat_rows(Tape& t, const std::vector<NodeId>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_rows: empty input list");
  const int n = t.value(xs[0]).cols();
  int m = 0;
  for (NodeId id : xs) {
    const Tensor& v = t.value(id);
    if (v.cols() != n) throw std::invalid_argument("concat_rows: column mismatch");
    m += v.rows();
  }
  Tensor out = Tensor::zeros(m, n);
  size_t off = 0;
  std::vector<int> row_counts;
  for (NodeId id : xs) {
    const Tensor& v = t.value(id);
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + off);
    off += v.data.size();
    row_counts.push_back(v.rows());
  }
  return t.record("concat_rows", std::move(out), xs, [row_counts, n](const BackwardCtx& ctx) {
    size_t off = 0;
    for (size_t i = 0; i < ctx.input_grads.size(); ++i) {
      Tensor& g = *ctx.input_grads[i];
      const size_t len = static_cast<size_t>(row_counts[i]) * n;
      for (size_t j = 0; j < len; ++j) g.data[j] += ctx.out_grad.data[off + j];
      off += len;
    }
  });
}

NodeId concat_cols(Tape& t, const std::vector<NodeId>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_cols: empty input list");
  const int m = t.value(xs[0]).rows();
  int n = 0;
  std::vector<int> widths;
  for (NodeId id : xs) {
    const Tensor& v = t.value(id);
    if (v.rows() != m) throw std::invalid_argument("concat_cols: row mismatch");
    n += v.cols();
    widths.push_back(v.cols());
  }
  Tensor out = Tensor::zeros(m, n);
  int coff = 0;
  for (NodeId id : xs) {
    const Tensor& v = t.value(id);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < v.cols(); ++c) out.at(r, coff + c) = v.at(r, c);
    coff += v.cols();
  }
  return t.record("concat_cols", std::move(out), xs, [widths, m](const BackwardCtx& ctx) {
    int coff = 0;
    for (size_t i = 0; i < ctx.input_grads.size(); ++i) {
      Tensor& g = *ctx.input_grads[i];
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < widths[static_cast<size_t>(i)]; ++c) g.at(r, c) += ctx.out_grad.at(r, coff + c);
      coff += widths[static_cast<size_t>(i)];
    }
  });
}

NodeId neg_log_softmax_entry(Tape& t, NodeId scores, int index) {
  const Tensor& sv = t.value(scores);
  check_rank2(sv, "neg_log_softmax_entry");
  if (sv.cols() != 1) throw std::invalid_argument("neg_log_softmax_entry: scores must be a column, got " + sv.shape_str());
  const int n = sv.rows();
  if (index < 0 || index >= n)
    throw std::out_of_range("neg_log_softmax_entry: index " + std::to_string(index) + " out of range");

  float mx = sv.data[0];
  for (float v : sv.data) mx = std::max(mx, v);
  float denom = 0.0f;
  for (float v : sv.data) denom += std::exp(v - mx);
  const float loss = std::log(denom) + mx - sv.data[static_cast<size_t>(index)];

  return t.record("neg_log_softmax_entry", Tensor::scalar(loss), {scores}, [index](const BackwardCtx& ctx) {
    const Tensor& s = *ctx.inputs[0];
    Tensor& g = *ctx.input_grads[0];
    float mx = s.data[0];
    for (float v : s.data) mx = std::max(mx, v);
    float denom = 0.0f;
    for (float v : s.data) denom += std::exp(v - mx);
    const float go = ctx.out_grad.data[0];
    for (size_t i = 0; i < s.data.size(); ++i) {
      const float p = std::exp(s.data[i] - mx) / denom;
      g.data[i] += go * (p - (static_cast<int>(i) == index ? 1.0f : 0.0f));
    }
  });
}

}  // namespace temsearch::ad
