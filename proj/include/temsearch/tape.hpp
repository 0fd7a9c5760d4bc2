#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "temsearch/tensor.hpp"

namespace temsearch::ad {

using NodeId = int;

// Inputs handed to a node's backward rule. Gradients accumulate (+=) into
// input_grads, which are pre-allocated to the input shapes.
struct BackwardCtx {
  const Tensor& out_value;
  const Tensor& out_grad;
  std::vector<const Tensor*> inputs;
  std::vector<Tensor*> input_grads;
};

using BackwardRule = std::function<void(const BackwardCtx&)>;

// Per-node gradients produced by Tape::backward. Nodes off the path from the
// loss hold exact zeros.
class Gradients {
 public:
  Gradients(std::vector<Tensor> by_node, const std::vector<std::vector<int>>& shapes);
  const Tensor& at(NodeId id) const;

 private:
  std::vector<Tensor> by_node_;
};

// Records a computation graph in construction order, which is a topological
// order by definition: an op can only consume already-recorded nodes. The
// tape is single-writer; run concurrent inference on per-worker tapes.
class Tape {
 public:
  NodeId leaf(Tensor value);
  NodeId record(const char* op, Tensor value, std::vector<NodeId> inputs, BackwardRule rule);

  const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
  size_t size() const { return nodes_.size(); }

  // Drops every node with id >= n. Used to roll a worker tape back to its
  // parameter leaves between evaluation contexts.
  void reset_to(size_t n);

  // Reverse-mode sweep from a scalar loss node; visits each recorded node at
  // most once, in reverse recording order.
  Gradients backward(NodeId loss) const;

 private:
  struct Node {
    Tensor value;
    std::vector<NodeId> inputs;
    BackwardRule rule;  // empty for leaves
  };
  std::deque<Node> nodes_;
};

}  // namespace temsearch::ad
