#include "ipseq/numerics/param_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace ipseq {

std::size_t ParamStore::add(std::string name, Tensor value) {
  if (by_name_.contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  auto grad = Tensor::zeros(value.shape());
  std::size_t i = entries_.size();
  by_name_.emplace(name, i);
  entries_.push_back({std::move(name), std::move(value), std::move(grad)});
  return i;
}

bool ParamStore::contains(std::string_view name) const {
  return by_name_.find(std::string(name)) != by_name_.end();
}

std::size_t ParamStore::index(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) throw std::out_of_range("unknown parameter: " + std::string(name));
  return it->second;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) {
    auto g = e.grad.mutable_data();
    std::fill(g.begin(), g.end(), 0.0);
  }
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& e : entries_) {
    for (double g : e.grad.data()) sq += g * g;
  }
  return std::sqrt(sq);
}

bool ParamStore::values_equal(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    const auto& a = entries_[i].value;
    const auto& b = other.entries_[i].value;
    if (a.shape() != b.shape()) return false;
    if (std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace ipseq
