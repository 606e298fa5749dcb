#include "ipseq/numerics/tensor.hpp"

#include <cmath>
#include <sstream>

namespace ipseq {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) throw std::invalid_argument("tensor: empty shape");
  for (auto d : shape_) {
    if (d == 0) throw std::invalid_argument("tensor: zero extent in shape " + shape_string(shape_));
  }
  if (shape_numel(shape_) != data_.size()) {
    throw std::invalid_argument("tensor: shape " + shape_string(shape_) + " needs " +
                                std::to_string(shape_numel(shape_)) + " values, got " +
                                std::to_string(data_.size()));
  }
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::row(std::vector<double> values) {
  auto n = values.size();
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, {value}); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::identity(std::size_t n) {
  auto t = zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  if (shape_.size() != 2) throw std::logic_error("rows() on tensor of shape " + shape_string(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  if (shape_.size() != 2) throw std::logic_error("cols() on tensor of shape " + shape_string(shape_));
  return shape_[1];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {
std::string describe(const std::string& op, const std::vector<Shape>& shapes) {
  std::string msg = op + ": incompatible shapes";
  for (const auto& s : shapes) msg += " " + shape_string(s);
  return msg;
}
}  // namespace

ShapeError::ShapeError(const std::string& op, const std::vector<Shape>& shapes)
    : std::invalid_argument(describe(op, shapes)), op_(op) {}

}  // namespace ipseq
