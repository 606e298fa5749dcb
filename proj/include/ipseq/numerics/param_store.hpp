#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ipseq/numerics/tensor.hpp"

namespace ipseq {

// Named trainable parameters, each with a same-shaped gradient accumulator.
// Insertion order is preserved and is the serialization order.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  // Throws on duplicate names.
  std::size_t add(std::string name, Tensor value);

  bool contains(std::string_view name) const;
  std::size_t index(std::string_view name) const;

  const Tensor& value(std::string_view name) const { return entries_[index(name)].value; }
  Tensor& value(std::string_view name) { return entries_[index(name)].value; }
  const Tensor& grad(std::string_view name) const { return entries_[index(name)].grad; }
  Tensor& grad(std::string_view name) { return entries_[index(name)].grad; }

  const Entry& entry(std::size_t i) const { return entries_[i]; }
  Entry& entry(std::size_t i) { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  std::size_t parameter_count() const;
  void zero_grad();
  double grad_norm() const;

  // Bitwise comparison of names, shapes and values.
  bool values_equal(const ParamStore& other) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

}  // namespace ipseq
