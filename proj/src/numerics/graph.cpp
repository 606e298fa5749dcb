#include "ipseq/numerics/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ipseq {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kParam: return "param";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kConcat: return "concat";
    case OpKind::kLookup: return "lookup";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kLog: return "log";
  }
  return "?";
}

namespace {

bool is_matrix(const Shape& s) { return s.size() == 2; }

// Second operand broadcast mode for add/mul.
enum class Broadcast { kNone, kRow, kScalar };

Broadcast broadcast_mode(const Shape& a, const Shape& b) {
  if (a == b) return Broadcast::kNone;
  if (b[0] == 1 && b[1] == 1) return Broadcast::kScalar;
  if (b[0] == 1 && b[1] == a[1]) return Broadcast::kRow;
  throw ShapeError("broadcast", {a, b});
}

// Sums a full-size gradient down to the shape of a broadcast operand.
Tensor reduce_to(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  auto out = Tensor::zeros(target);
  const auto cols = g.cols();
  const auto data = g.data();
  if (target[1] == 1) {
    double s = 0.0;
    for (double v : data) s += v;
    out[0] = s;
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) out[i % cols] += data[i];
  }
  return out;
}

void accumulate(Tensor& dst, const Tensor& src) {
  if (dst.empty()) {
    dst = src;
    return;
  }
  auto d = dst.mutable_data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

const Graph::Node& Graph::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw std::out_of_range("graph: invalid variable");
  return nodes_[v.id];
}

Var Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::input(std::string name, Tensor value) {
  if (!is_matrix(value.shape())) throw ShapeError("input", {value.shape()});
  if (!name.empty() && inputs_by_name_.contains(name)) {
    throw std::invalid_argument("graph: duplicate input name " + name);
  }
  Node n{.kind = OpKind::kInput};
  n.shape = value.shape();
  n.value = std::move(value);
  n.name = name;
  Var v = push(std::move(n));
  if (!name.empty()) inputs_by_name_.emplace(std::move(name), v.id);
  return v;
}

Var Graph::constant(double value) {
  if (auto it = constants_.find(value); it != constants_.end()) return Var{it->second};
  Var v = input("", Tensor::scalar(value));
  constants_.emplace(value, v.id);
  return v;
}

Var Graph::param(std::string_view name) {
  if (auto it = params_by_name_.find(std::string(name)); it != params_by_name_.end()) {
    return Var{it->second};
  }
  if (!params_) throw std::logic_error("graph: no parameter store bound");
  auto index = params_->index(name);
  const Tensor& t = params_->entry(index).value;
  if (!is_matrix(t.shape())) throw ShapeError("param", {t.shape()});
  Node n{.kind = OpKind::kParam};
  n.shape = t.shape();
  n.ref = &t;
  n.param_index = index;
  n.name = std::string(name);
  Var v = push(std::move(n));
  params_by_name_.emplace(std::string(name), v.id);
  return v;
}

void Graph::set_input(std::string_view name, Tensor value) {
  auto it = inputs_by_name_.find(std::string(name));
  if (it == inputs_by_name_.end()) throw std::out_of_range("graph: unknown input " + std::string(name));
  auto& n = nodes_[it->second];
  if (value.shape() != n.shape) throw ShapeError("set_input", {n.shape, value.shape()});
  n.value = std::move(value);
  evaluated_ = 0;
}

Var Graph::matmul(Var a, Var b, bool transpose_b) {
  const auto& sa = node(a).shape;
  const auto& sb = node(b).shape;
  std::size_t inner_b = transpose_b ? sb[1] : sb[0];
  std::size_t out_cols = transpose_b ? sb[0] : sb[1];
  if (sa[1] != inner_b) throw ShapeError(transpose_b ? "matmul(transpose_b)" : "matmul", {sa, sb});
  Node n{.kind = OpKind::kMatMul, .inputs = {a.id, b.id}, .shape = {sa[0], out_cols}};
  n.transpose_b = transpose_b;
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) {
  const auto& sa = node(a).shape;
  const auto& sb = node(b).shape;
  try {
    broadcast_mode(sa, sb);
  } catch (const ShapeError&) {
    throw ShapeError("add", {sa, sb});
  }
  return push(Node{.kind = OpKind::kAdd, .inputs = {a.id, b.id}, .shape = sa});
}

Var Graph::mul(Var a, Var b) {
  const auto& sa = node(a).shape;
  const auto& sb = node(b).shape;
  try {
    broadcast_mode(sa, sb);
  } catch (const ShapeError&) {
    throw ShapeError("mul", {sa, sb});
  }
  return push(Node{.kind = OpKind::kMul, .inputs = {a.id, b.id}, .shape = sa});
}

Var Graph::tanh(Var a) {
  return push(Node{.kind = OpKind::kTanh, .inputs = {a.id}, .shape = node(a).shape});
}

Var Graph::sigmoid(Var a) {
  return push(Node{.kind = OpKind::kSigmoid, .inputs = {a.id}, .shape = node(a).shape});
}

Var Graph::softmax(Var a) {
  return push(Node{.kind = OpKind::kSoftmax, .inputs = {a.id}, .shape = node(a).shape});
}

Var Graph::log(Var a) {
  return push(Node{.kind = OpKind::kLog, .inputs = {a.id}, .shape = node(a).shape});
}

Var Graph::concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no operands");
  if (axis != 0 && axis != 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  std::vector<Shape> shapes;
  Node n{.kind = OpKind::kConcat};
  n.axis = axis;
  Shape out = node(parts[0]).shape;
  out[axis] = 0;
  const int other = 1 - axis;
  for (Var p : parts) {
    const auto& s = node(p).shape;
    shapes.push_back(s);
    n.inputs.push_back(p.id);
    out[axis] += s[axis];
  }
  for (const auto& s : shapes) {
    if (s[other] != shapes[0][other]) throw ShapeError("concat", shapes);
  }
  n.shape = out;
  return push(std::move(n));
}

Var Graph::lookup(Var table, std::vector<std::uint32_t> rows) {
  const auto& st = node(table).shape;
  if (rows.empty()) throw std::invalid_argument("lookup: no rows requested");
  for (auto r : rows) {
    if (r >= st[0]) {
      throw std::out_of_range("lookup: row " + std::to_string(r) + " out of range for table " +
                              shape_string(st));
    }
  }
  Node n{.kind = OpKind::kLookup, .inputs = {table.id}, .shape = {rows.size(), st[1]}};
  n.rows = std::move(rows);
  return push(std::move(n));
}

Var Graph::sum(Var a) {
  return push(Node{.kind = OpKind::kSum, .inputs = {a.id}, .shape = {1, 1}});
}

Var Graph::mean(Var a) {
  return push(Node{.kind = OpKind::kMean, .inputs = {a.id}, .shape = {1, 1}});
}

void Graph::forward() {
  for (; evaluated_ < nodes_.size(); ++evaluated_) evaluate(nodes_[evaluated_]);
}

const Tensor& Graph::value(Var v) const {
  const auto& n = node(v);
  if (v.id >= evaluated_) throw std::logic_error("graph: value read before forward()");
  return n.ref ? *n.ref : n.value;
}

void Graph::evaluate(Node& n) {
  switch (n.kind) {
    case OpKind::kInput:
    case OpKind::kParam:
      return;
    case OpKind::kMatMul: {
      const auto& a = val(n.inputs[0]);
      const auto& b = val(n.inputs[1]);
      const std::size_t m = a.rows(), k = a.cols(), cols = n.shape[1];
      std::vector<double> out(m * cols, 0.0);
      const double* pa = a.data().data();
      const double* pb = b.data().data();
      if (!n.transpose_b) {
        for (std::size_t i = 0; i < m; ++i) {
          double* row = out.data() + i * cols;
          for (std::size_t p = 0; p < k; ++p) {
            const double x = pa[i * k + p];
            const double* brow = pb + p * cols;
            for (std::size_t j = 0; j < cols; ++j) row[j] += x * brow[j];
          }
        }
      } else {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < cols; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += pa[i * k + p] * pb[j * k + p];
            out[i * cols + j] = s;
          }
        }
      }
      n.value = Tensor(n.shape, std::move(out));
      return;
    }
    case OpKind::kAdd:
    case OpKind::kMul: {
      const auto& a = val(n.inputs[0]);
      const auto& b = val(n.inputs[1]);
      const auto mode = broadcast_mode(a.shape(), b.shape());
      const auto pa = a.data();
      const auto pb = b.data();
      const std::size_t cols = a.cols();
      std::vector<double> out(pa.size());
      const bool is_add = n.kind == OpKind::kAdd;
      for (std::size_t i = 0; i < pa.size(); ++i) {
        const double y = mode == Broadcast::kNone ? pb[i] : mode == Broadcast::kRow ? pb[i % cols] : pb[0];
        out[i] = is_add ? pa[i] + y : pa[i] * y;
      }
      n.value = Tensor(n.shape, std::move(out));
      return;
    }
    case OpKind::kTanh:
    case OpKind::kSigmoid:
    case OpKind::kLog: {
      const auto pa = val(n.inputs[0]).data();
      std::vector<double> out(pa.size());
      for (std::size_t i = 0; i < pa.size(); ++i) {
        const double x = pa[i];
        if (n.kind == OpKind::kTanh) {
          out[i] = std::tanh(x);
        } else if (n.kind == OpKind::kSigmoid) {
          out[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        } else {
          out[i] = std::log(x);
        }
      }
      n.value = Tensor(n.shape, std::move(out));
      return;
    }
    case OpKind::kSoftmax: {
      const auto& a = val(n.inputs[0]);
      const std::size_t rows = a.rows(), cols = a.cols();
      const auto pa = a.data();
      std::vector<double> out(pa.size());
      for (std::size_t r = 0; r < rows; ++r) {
        const double* x = pa.data() + r * cols;
        double* y = out.data() + r * cols;
        const double mx = *std::max_element(x, x + cols);
        double z = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
          y[j] = std::exp(x[j] - mx);
          z += y[j];
        }
        for (std::size_t j = 0; j < cols; ++j) y[j] /= z;
      }
      n.value = Tensor(n.shape, std::move(out));
      return;
    }
    case OpKind::kConcat: {
      std::vector<double> out(shape_numel(n.shape));
      const std::size_t cols = n.shape[1];
      if (n.axis == 0) {
        std::size_t offset = 0;
        for (auto id : n.inputs) {
          const auto d = val(id).data();
          std::copy(d.begin(), d.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
          offset += d.size();
        }
      } else {
        std::size_t col0 = 0;
        for (auto id : n.inputs) {
          const auto& t = val(id);
          const std::size_t c = t.cols();
          for (std::size_t r = 0; r < t.rows(); ++r) {
            for (std::size_t j = 0; j < c; ++j) out[r * cols + col0 + j] = t.at(r, j);
          }
          col0 += c;
        }
      }
      n.value = Tensor(n.shape, std::move(out));
      return;
    }
    case OpKind::kLookup: {
      const auto& table = val(n.inputs[0]);
      const std::size_t cols = n.shape[1];
      std::vector<double> out(n.rows.size() * cols);
      const auto d = table.data();
      for (std::size_t i = 0; i < n.rows.size(); ++i) {
        std::copy_n(d.begin() + static_cast<std::ptrdiff_t>(n.rows[i] * cols), cols,
                    out.begin() + static_cast<std::ptrdiff_t>(i * cols));
      }
      n.value = Tensor(n.shape, std::move(out));
      return;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      const auto d = val(n.inputs[0]).data();
      double s = 0.0;
      for (double v : d) s += v;
      if (n.kind == OpKind::kMean) s /= static_cast<double>(d.size());
      n.value = Tensor::scalar(s);
      return;
    }
  }
}

void Graph::backward(Var output, const Tensor& seed, ParamStore* grads) {
  if (!is_evaluated()) throw std::logic_error("graph: backward() before forward()");
  const auto& out = node(output);
  if (seed.shape() != out.shape) throw ShapeError("backward seed", {out.shape, seed.shape()});
  if (grads && grads != params_) {
    throw std::invalid_argument("graph: gradients must go to the store the graph reads from");
  }
  grads_.assign(nodes_.size(), Tensor());
  grads_[output.id] = seed;
  for (std::size_t id = output.id + 1; id-- > 0;) {
    if (grads_[id].empty()) continue;
    const auto& n = nodes_[id];
    if (n.kind == OpKind::kParam) {
      if (grads) {
        auto g = grads->entry(n.param_index).grad.mutable_data();
        const auto s = grads_[id].data();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += s[i];
      }
      continue;
    }
    propagate(n, grads_[id], grads_);
  }
}

const Tensor& Graph::grad(Var v) const {
  const auto& n = node(v);
  if (grads_.size() < nodes_.size()) grads_.resize(nodes_.size());
  if (grads_[v.id].empty()) grads_[v.id] = Tensor::zeros(n.shape);
  return grads_[v.id];
}

void Graph::propagate(const Node& n, const Tensor& g, std::vector<Tensor>& grads) {
  const auto gd = g.data();
  switch (n.kind) {
    case OpKind::kInput:
    case OpKind::kParam:
      return;
    case OpKind::kMatMul: {
      const auto& a = val(n.inputs[0]);
      const auto& b = val(n.inputs[1]);
      const std::size_t m = a.rows(), k = a.cols(), cols = n.shape[1];
      std::vector<double> da(m * k, 0.0), db(b.numel(), 0.0);
      const double* pa = a.data().data();
      const double* pb = b.data().data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
          const double gij = gd[i * cols + j];
          if (gij == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) {
            // C = A B: dA[i,p] += g[i,j] B[p,j], dB[p,j] += A[i,p] g[i,j].
            // C = A B^T: dA[i,p] += g[i,j] B[j,p], dB[j,p] += A[i,p] g[i,j].
            const std::size_t bi = n.transpose_b ? j * k + p : p * cols + j;
            da[i * k + p] += gij * pb[bi];
            db[bi] += pa[i * k + p] * gij;
          }
        }
      }
      accumulate(grads[n.inputs[0]], Tensor(a.shape(), std::move(da)));
      accumulate(grads[n.inputs[1]], Tensor(b.shape(), std::move(db)));
      return;
    }
    case OpKind::kAdd: {
      const auto& b = val(n.inputs[1]);
      accumulate(grads[n.inputs[0]], g);
      accumulate(grads[n.inputs[1]], reduce_to(g, b.shape()));
      return;
    }
    case OpKind::kMul: {
      const auto& a = val(n.inputs[0]);
      const auto& b = val(n.inputs[1]);
      const auto mode = broadcast_mode(a.shape(), b.shape());
      const auto pa = a.data();
      const auto pb = b.data();
      const std::size_t cols = a.cols();
      std::vector<double> da(pa.size()), db_full(pa.size());
      for (std::size_t i = 0; i < pa.size(); ++i) {
        const double y = mode == Broadcast::kNone ? pb[i] : mode == Broadcast::kRow ? pb[i % cols] : pb[0];
        da[i] = gd[i] * y;
        db_full[i] = gd[i] * pa[i];
      }
      accumulate(grads[n.inputs[0]], Tensor(a.shape(), std::move(da)));
      accumulate(grads[n.inputs[1]], reduce_to(Tensor(a.shape(), std::move(db_full)), b.shape()));
      return;
    }
    case OpKind::kTanh:
    case OpKind::kSigmoid:
    case OpKind::kLog: {
      const auto y = n.value.data();
      const auto x = val(n.inputs[0]).data();
      std::vector<double> dx(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (n.kind == OpKind::kTanh) {
          dx[i] = gd[i] * (1.0 - y[i] * y[i]);
        } else if (n.kind == OpKind::kSigmoid) {
          dx[i] = gd[i] * y[i] * (1.0 - y[i]);
        } else {
          dx[i] = gd[i] / x[i];
        }
      }
      accumulate(grads[n.inputs[0]], Tensor(n.shape, std::move(dx)));
      return;
    }
    case OpKind::kSoftmax: {
      const auto y = n.value.data();
      const std::size_t rows = n.shape[0], cols = n.shape[1];
      std::vector<double> dx(y.size());
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < cols; ++j) dot += gd[r * cols + j] * y[r * cols + j];
        for (std::size_t j = 0; j < cols; ++j) {
          dx[r * cols + j] = y[r * cols + j] * (gd[r * cols + j] - dot);
        }
      }
      accumulate(grads[n.inputs[0]], Tensor(n.shape, std::move(dx)));
      return;
    }
    case OpKind::kConcat: {
      const std::size_t cols = n.shape[1];
      std::size_t offset = 0;
      for (auto id : n.inputs) {
        const auto& s = nodes_[id].shape;
        std::vector<double> part(shape_numel(s));
        if (n.axis == 0) {
          std::copy_n(gd.begin() + static_cast<std::ptrdiff_t>(offset * cols), part.size(), part.begin());
          offset += s[0];
        } else {
          for (std::size_t r = 0; r < s[0]; ++r) {
            for (std::size_t j = 0; j < s[1]; ++j) part[r * s[1] + j] = gd[r * cols + offset + j];
          }
          offset += s[1];
        }
        accumulate(grads[id], Tensor(s, std::move(part)));
      }
      return;
    }
    case OpKind::kLookup: {
      const auto& ts = nodes_[n.inputs[0]].shape;
      const std::size_t cols = ts[1];
      auto dt = Tensor::zeros(ts);
      auto d = dt.mutable_data();
      for (std::size_t i = 0; i < n.rows.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) d[n.rows[i] * cols + j] += gd[i * cols + j];
      }
      accumulate(grads[n.inputs[0]], dt);
      return;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      const auto& s = nodes_[n.inputs[0]].shape;
      double v = gd[0];
      if (n.kind == OpKind::kMean) v /= static_cast<double>(shape_numel(s));
      accumulate(grads[n.inputs[0]], Tensor::filled(s, v));
      return;
    }
  }
}

}  // namespace ipseq
