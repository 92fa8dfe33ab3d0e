#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mmsense/tensor/tensor.hpp"

namespace mmsense::model {

enum class ParamKind { weight, bias, gamma, beta, running_mean, running_var };

[[nodiscard]] inline bool is_learnable(ParamKind k) {
  return k != ParamKind::running_mean && k != ParamKind::running_var;
}

struct ParamInfo {
  std::string name;
  ad::Shape shape;
  ParamKind kind;
  friend bool operator==(const ParamInfo&, const ParamInfo&) = default;
};

/// Ordered, named tensors of a model. Batch-norm running statistics are
/// registered alongside the learnable tensors but excluded from learnable().
template <class T>
class ModelParams {
 public:
  ad::Tensor<T>& add(const std::string& name, ad::Shape shape, ParamKind kind) {
    if (index_.count(name)) throw ConfigError("parameter '" + name + "' registered twice");
    index_.emplace(name, entries_.size());
    entries_.push_back({ParamInfo{name, shape, kind}, ad::Tensor<T>(std::move(shape))});
    return entries_.back().tensor;
  }

  [[nodiscard]] bool contains(const std::string& name) const { return index_.count(name) != 0; }

  ad::Tensor<T>& operator[](const std::string& name) { return entries_.at(lookup(name)).tensor; }
  const ad::Tensor<T>& operator[](const std::string& name) const { return entries_.at(lookup(name)).tensor; }

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] const ParamInfo& info(std::size_t i) const { return entries_.at(i).info; }
  ad::Tensor<T>& tensor(std::size_t i) { return entries_.at(i).tensor; }
  [[nodiscard]] const ad::Tensor<T>& tensor(std::size_t i) const { return entries_.at(i).tensor; }

  [[nodiscard]] std::vector<ParamInfo> registry() const {
    std::vector<ParamInfo> r;
    r.reserve(entries_.size());
    for (const auto& e : entries_) r.push_back(e.info);
    return r;
  }

  /// Handles (shared storage) of the learnable tensors, in registration order.
  [[nodiscard]] std::vector<ad::Tensor<T>> learnable() const {
    std::vector<ad::Tensor<T>> out;
    for (const auto& e : entries_)
      if (is_learnable(e.info.kind)) out.push_back(e.tensor);
    return out;
  }

  [[nodiscard]] std::size_t learnable_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_)
      if (is_learnable(e.info.kind)) n += e.tensor.numel();
    return n;
  }

  void set_requires_grad(bool on) {
    for (auto& e : entries_)
      if (is_learnable(e.info.kind)) e.tensor.set_requires_grad(on);
  }

  void zero_grad() {
    for (auto& e : entries_)
      if (e.tensor.requires_grad()) e.tensor.zero_grad();
  }

 private:
  struct Entry {
    ParamInfo info;
    ad::Tensor<T> tensor;
  };

  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace mmsense::model
