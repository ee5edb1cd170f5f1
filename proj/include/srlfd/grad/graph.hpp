#pragma once

#include <array>
#include <deque>
#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "srlfd/grad/parameters.hpp"
#include "srlfd/grad/tensor.hpp"

namespace srlfd::grad {

using NodeId = std::size_t;

enum class OpKind : std::uint8_t {
  kInput,
  kParameter,
  kConv2d,
  kConvTranspose2d,
  kMaxPool,
  kUnpool,
  kScaledTanh,
  kTanh,
  kRelu,
  kDense,
  kReshape,
  kSliceRows,
  kConcatCols,
  kAdd,
  kSub,
  kScale,
  kSum,
  kMean,
  kMse,
};

const char* op_name(OpKind kind);

// Gradients of a scalar loss with respect to the parameters that were on a
// path to it. Parameters not reachable from the loss have no entry.
class GradientTable {
 public:
  const Tensor* find(const Parameter& p) const;
  bool contains(const Parameter& p) const { return find(p) != nullptr; }
  std::size_t size() const noexcept { return entries_.size(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void insert(Parameter& p, Tensor grad);

 private:
  std::vector<std::pair<Parameter*, Tensor>> entries_;
  std::unordered_map<const Parameter*, std::size_t> index_;
};

// Define-by-run computation graph. Every builder call evaluates its op
// immediately and appends a node; nodes are therefore in topological order.
// Parameter nodes alias the Parameter's tensor, so the graph must not
// outlive the ParameterSet it was built from.
//
// Layout conventions: images are B x H x W x C, conv kernels kh x kw x C x F,
// dense weights n x m applied as x * W + b along the last axis.
class Graph {
 public:
  // Constant unless requires_grad, in which case gradient_wrt() can reach it.
  NodeId input(Tensor value, bool requires_grad = false);
  // Read-only view of an external tensor; never receives gradient.
  NodeId constant_ref(const Tensor& value);
  // Same Parameter passed twice yields the same node.
  NodeId param(Parameter& p);

  NodeId conv2d(NodeId x, NodeId kernels, NodeId bias);
  // Adjoint of conv2d w.r.t. its input: kernels kh x kw x F x C map a
  // C-channel H x W map onto an F-channel (H+kh-1) x (W+kw-1) map.
  NodeId conv_transpose2d(NodeId x, NodeId kernels, NodeId bias);
  // 2x2 window, stride 1, valid. Ties go to the first maximum in row-major scan.
  NodeId maxpool2x2(NodeId x);
  // H x W -> (H+1) x (W+1); each output is the mean of the inputs whose
  // 2x2/stride-1 window covers it.
  NodeId unpool2x2(NodeId x);
  NodeId scaled_tanh(NodeId x);
  NodeId tanh(NodeId x);
  NodeId relu(NodeId x);
  NodeId dense(NodeId x, NodeId weights, NodeId bias);
  NodeId reshape(NodeId x, Shape shape);
  // Rows [begin, end) along axis 0.
  NodeId slice_rows(NodeId x, std::size_t begin, std::size_t end);
  // Concatenation along the last axis; leading dims must agree.
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId x, double factor);
  NodeId sum(NodeId x);
  NodeId mean(NodeId x);
  // Mean over the leading (batch) axis of the squared L2 row error. Rank-1
  // operands count as a single sample.
  NodeId mse(NodeId pred, NodeId target);

  const Tensor& value(NodeId id) const;
  OpKind kind(NodeId id) const { return nodes_.at(id).kind; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Reverse-mode sweep over the ancestors of `loss` only.
  GradientTable backward(NodeId loss);
  // Gradient of `loss` w.r.t. an arbitrary node (e.g. an input), computed
  // by the same sweep. Zero tensor when the node is not an ancestor.
  Tensor gradient_wrt(NodeId loss, NodeId node);

 private:
  struct Node {
    OpKind kind{};
    std::array<NodeId, 3> in{};
    std::uint8_t arity = 0;
    bool requires_grad = false;
    Tensor owned;
    const Tensor* ext = nullptr;
    Parameter* param = nullptr;
    std::vector<std::uint32_t> argmax;
    double factor = 0.0;
    std::size_t lo = 0;
  };

  struct GradBuffer {
    std::vector<Tensor> grad;
    std::vector<bool> present;
    std::vector<bool> live;
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;
  void require_scalar_finite(NodeId loss) const;
  GradBuffer sweep(NodeId loss);
  void backprop_node(NodeId id, GradBuffer& buf);

  std::deque<Node> nodes_;  // deque: value() references stay valid as the graph grows
  std::unordered_map<const Parameter*, NodeId> param_nodes_;
};

}  // namespace srlfd::grad
