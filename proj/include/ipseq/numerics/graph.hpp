#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ipseq/numerics/param_store.hpp"
#include "ipseq/numerics/tensor.hpp"

namespace ipseq {

// Handle to a node in a Graph.
struct Var {
  std::size_t id = std::numeric_limits<std::size_t>::max();
  bool valid() const { return id != std::numeric_limits<std::size_t>::max(); }
};

enum class OpKind {
  kInput,
  kParam,
  kMatMul,
  kAdd,
  kMul,
  kTanh,
  kSigmoid,
  kSoftmax,
  kConcat,
  kLookup,
  kSum,
  kMean,
  kLog,
};

std::string_view op_name(OpKind kind);

// A straight-line program over a closed set of rank-2 operations.
//
// Building a node only records the instruction and infers its shape (shape
// errors surface here). forward() evaluates every node not yet evaluated, so a
// graph can be extended and re-run incrementally. backward() propagates a
// seed gradient from one node and accumulates (+=) into the parameter store.
//
// Broadcasting is limited to the second operand of add/mul, which may be a
// 1xN row (broadcast over rows) or a 1x1 scalar.
class Graph {
 public:
  explicit Graph(const ParamStore* params = nullptr) : params_(params) {}

  Var input(std::string name, Tensor value);
  Var constant(double value);
  Var param(std::string_view name);

  // Rebinds a named input; every node is re-evaluated by the next forward().
  void set_input(std::string_view name, Tensor value);

  Var matmul(Var a, Var b, bool transpose_b = false);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var softmax(Var a);
  Var concat(std::span<const Var> parts, int axis);
  Var lookup(Var table, std::vector<std::uint32_t> rows);
  Var sum(Var a);
  Var mean(Var a);
  Var log(Var a);

  void forward();
  void invalidate() { evaluated_ = 0; }
  bool is_evaluated() const { return evaluated_ == nodes_.size(); }

  const Tensor& value(Var v) const;
  const Shape& shape(Var v) const { return node(v).shape; }
  std::size_t size() const { return nodes_.size(); }

  // Requires a completed forward(). Parameter gradients are added into
  // `grads`, which must be the store this graph reads parameters from.
  void backward(Var output, const Tensor& seed, ParamStore* grads = nullptr);

  // Gradient of the last backward() with respect to any node (zeros if the
  // node did not contribute).
  const Tensor& grad(Var v) const;

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Shape shape;
    Tensor value;
    const Tensor* ref = nullptr;  // parameter leaves read the store directly
    std::size_t param_index = 0;
    std::vector<std::uint32_t> rows;
    int axis = 0;
    bool transpose_b = false;
    std::string name;
  };

  const Node& node(Var v) const;
  Var push(Node n);
  void evaluate(Node& n);
  void propagate(const Node& n, const Tensor& g, std::vector<Tensor>& grads);
  const Tensor& val(std::size_t id) const {
    const auto& n = nodes_[id];
    return n.ref ? *n.ref : n.value;
  }

  const ParamStore* params_;
  std::vector<Node> nodes_;
  std::size_t evaluated_ = 0;
  std::unordered_map<std::string, std::size_t> inputs_by_name_;
  std::unordered_map<std::string, std::size_t> params_by_name_;
  std::unordered_map<double, std::size_t> constants_;
  mutable std::vector<Tensor> grads_;
};

}  // namespace ipseq
