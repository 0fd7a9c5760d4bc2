#include "temsearch/tape.hpp"

#include <stdexcept>
#include <string>

namespace temsearch::ad {

Gradients::Gradients(std::vector<Tensor> by_node, const std::vector<std::vector<int>>& shapes)
    : by_node_(std::move(by_node)) {
  for (size_t i = 0; i < by_node_.size(); ++i) {
    if (by_node_[i].data.empty()) by_node_[i] = Tensor(shapes[i]);  // off-path: exact zeros
  }
}

const Tensor& Gradients::at(NodeId id) const {
  if (id < 0 || static_cast<size_t>(id) >= by_node_.size())
    throw std::out_of_range("Gradients::at: unknown node id " + std::to_string(id));
  return by_node_[static_cast<size_t>(id)];
}

NodeId Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr});
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::record(const char* op, Tensor value, std::vector<NodeId> inputs, BackwardRule rule) {
  if (!value.all_finite())
    throw std::runtime_error(std::string(op) + ": non-finite value in forward output");
  for (NodeId in : inputs) {
    if (in < 0 || static_cast<size_t>(in) >= nodes_.size())
      throw std::invalid_argument(std::string(op) + ": input node " + std::to_string(in) + " not on this tape");
  }
  nodes_.push_back(Node{std::move(value), std::move(inputs), std::move(rule)});
  return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::reset_to(size_t n) {
  if (n > nodes_.size()) throw std::invalid_argument("Tape::reset_to: size larger than tape");
  nodes_.resize(n);
}

Gradients Tape::backward(NodeId loss) const {
  if (loss < 0 || static_cast<size_t>(loss) >= nodes_.size())
    throw std::invalid_argument("backward: loss node not on this tape");
  if (!nodes_[static_cast<size_t>(loss)].value.is_scalar())
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                nodes_[static_cast<size_t>(loss)].value.shape_str());

  std::vector<Tensor> grads(nodes_.size());
  std::vector<std::vector<int>> shapes(nodes_.size());
  for (size_t i = 0; i < nodes_.size(); ++i) shapes[i] = nodes_[i].value.shape;

  grads[static_cast<size_t>(loss)] = Tensor::scalar(1.0f);

  for (NodeId id = loss; id >= 0; --id) {
    const Node& node = nodes_[static_cast<size_t>(id)];
    Tensor& out_grad = grads[static_cast<size_t>(id)];
    if (out_grad.data.empty() || !node.rule) continue;

    BackwardCtx ctx{node.value, out_grad, {}, {}};
    ctx.inputs.reserve(node.inputs.size());
    ctx.input_grads.reserve(node.inputs.size());
    for (NodeId in : node.inputs) {
      Tensor& g = grads[static_cast<size_t>(in)];
      if (g.data.empty()) g = Tensor(nodes_[static_cast<size_t>(in)].value.shape);
      ctx.inputs.push_back(&nodes_[static_cast<size_t>(in)].value);
      ctx.input_grads.push_back(&g);
    }
    node.rule(ctx);
  }
  return Gradients(std::move(grads), shapes);
}

}  // namespace temsearch::ad
