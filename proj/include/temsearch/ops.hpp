#pragma once

#include <cstdint>
#include <vector>

#include "temsearch/tape.hpp"

namespace temsearch::ad {

// Graph-building ops. Each records one node on the tape and returns its id.
// All tensors are rank-2; a boolean mask, where accepted, is a row-major
// uint8 array matching the tensor (0 = dead position).

NodeId matmul(Tape& t, NodeId a, NodeId b);           // [m x k] * [k x n]
NodeId transpose(Tape& t, NodeId a);
NodeId add(Tape& t, NodeId a, NodeId b);              // same shape
NodeId add_row(Tape& t, NodeId x, NodeId bias);       // [m x n] + [1 x n] per row
NodeId add_n(Tape& t, const std::vector<NodeId>& xs); // same-shape sum
NodeId scale(Tape& t, NodeId a, float s);
NodeId tanh_op(Tape& t, NodeId a);
NodeId relu(Tape& t, NodeId a);
NodeId logsigmoid(Tape& t, NodeId a);                 // log(sigmoid(x)), numerically stable
NodeId mean_rows(Tape& t, NodeId x);                  // [m x n] -> [1 x n]
NodeId sum_all(Tape& t, NodeId x);                    // -> [1 x 1]

// Row softmax, stabilized by subtracting each row's max over live entries.
// Masked-out entries are exactly 0 in the output and receive no gradient.
NodeId row_softmax(Tape& t, NodeId x, const std::vector<uint8_t>* mask = nullptr);

// Per-row normalization: gain * (x - mean) / sqrt(var + eps) + bias.
NodeId layer_norm(Tape& t, NodeId x, NodeId gain, NodeId bias, float eps = 1e-5f);

// Gathers rows of a [V x d] table; backward scatters only into touched rows.
NodeId embedding_lookup(Tape& t, NodeId table, const std::vector<int>& ids);

NodeId slice_rows(Tape& t, NodeId x, int row_begin, int row_end);
NodeId slice_cols(Tape& t, NodeId x, int col_begin, int col_end);
NodeId concat_rows(Tape& t, const std::vector<NodeId>& xs);
NodeId concat_cols(Tape& t, const std::vector<NodeId>& xs);

// -log softmax(scores)[index] for a column of scores [n x 1]; the exact
// cross-entropy used by the full-softmax objectives.
NodeId neg_log_softmax_entry(Tape& t, NodeId scores, int index);

}  // namespace temsearch::ad
