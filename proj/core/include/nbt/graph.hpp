#pragma once

// Define-by-run reverse-mode differentiation over the small operation set the
// belief tracker needs. A Graph is a tape: nodes are appended in evaluation
// order, so the tape order is already a topological order and backward() walks
// it in reverse.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include "nbt/tensor.hpp"

namespace nbt {

// A trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Ordered, named collection of parameters. Element addresses are stable, so
// graphs may hold references while the set is alive.
class ParameterSet {
 public:
  Parameter& add(std::string name, Tensor init);

  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  const Parameter* find(std::string_view name) const;

  std::size_t size() const noexcept { return params_.size(); }
  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }
  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  void zero_grad();
  // Multiplies every accumulated gradient by `s`.
  void scale_grad(double s);
  // Total number of scalar entries.
  std::size_t scalar_count() const;

  // Copies parameter values (not gradients) from `other`, which must have the
  // same names and shapes.
  void assign_values(const ParameterSet& other);

 private:
  std::deque<Parameter> params_;
};

// Handle to a node in a Graph.
struct Var {
  std::uint32_t id = 0;
};

class Graph {
 public:
  enum class Op : std::uint8_t {
    kInput,
    kParam,
    kAffine,
    kSigmoid,
    kRelu,
    kMaxPool,
    kMul,
    kScale,
    kDot,
    kAdd,
    kSum,
    kSoftmaxXent,
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // Leaf whose gradient is tracked.
  Var input(Tensor value);
  // Leaf treated as a constant: no gradient is propagated into it.
  Var constant(Tensor value);
  Var scalar_constant(double v);
  // Leaf bound to a parameter. Gradients reaching it are accumulated directly
  // into `p.grad`, so grad(var) reports the parameter's running total.
  Var param(Parameter& p);
  // Parameter leaf used read-only (inference); no gradient is tracked.
  Var frozen(const Parameter& p);

  // W·x + b. x may be a vector [n] or a matrix [n×T]; in the matrix case b is
  // added to every column.
  Var affine(Var w, Var x, Var b);
  Var sigmoid(Var x);
  // Subgradient at 0 is 0.
  Var relu(Var x);
  // Row-wise max over columns of an [L×T] matrix. Ties go to the lowest
  // column index.
  Var maxpool_over_time(Var m);
  Var mul(Var a, Var b);
  // s·a where s is a one-element node.
  Var scale(Var a, Var s);
  Var dot(Var a, Var b);
  Var add(Var a, Var b);
  Var sum(Var a);
  // -log softmax(logits)[label], stabilized with log-sum-exp.
  Var softmax_xent(Var logits, std::size_t label);

  // Accumulates d(root)/d(node) into every node reachable from `root`.
  // Throws NumericsError if root is not a scalar or if called a second time
  // without zero_grad().
  void backward(Var root);
  // Clears node gradients so backward() may run again. Parameter gradients
  // are left untouched; use ParameterSet::zero_grad() for those.
  void zero_grad();

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Op op = Op::kInput;
    std::uint32_t parents[3] = {0, 0, 0};
    std::uint8_t nparents = 0;
    bool requires_grad = false;
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    const Tensor* value_ref = nullptr;
    std::vector<std::uint32_t> argmax;
    std::size_t label = 0;
  };

  Var push(Node node);
  Node& node(Var v);
  const Node& node(Var v) const;
  const Tensor& val(std::uint32_t id) const;
  Tensor& grad_slot(std::uint32_t id);
  void backprop_node(std::uint32_t id);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace nbt
