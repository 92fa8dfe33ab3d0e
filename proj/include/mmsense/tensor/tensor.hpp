#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmsense/core/error.hpp"

namespace mmsense::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string to_string(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

enum class Mode { train, infer };

/// Dense row-major tensor handle.
///
/// Copies share storage, like an autograd variable; use clone() for a deep,
/// detached copy. When requires_grad is set a same-shape gradient buffer is
/// allocated alongside the values.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{0}, bool requires_grad = false)
      : impl_(std::make_shared<Impl>()) {
    for (auto e : shape)
      if (e == 0) throw ShapeError("tensor extents must be positive, got " + to_string(shape));
    impl_->shape = std::move(shape);
    impl_->data.assign(ad::numel(impl_->shape), fill);
    set_requires_grad(requires_grad);
  }

  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false)
      : impl_(std::make_shared<Impl>()) {
    if (ad::numel(shape) != values.size())
      throw ShapeError("tensor data length " + std::to_string(values.size()) +
                       " does not match shape " + to_string(shape));
    for (auto e : shape)
      if (e == 0) throw ShapeError("tensor extents must be positive, got " + to_string(shape));
    impl_->shape = std::move(shape);
    impl_->data = std::move(values);
    set_requires_grad(requires_grad);
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), T{0}); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), T{1}); }
  static Tensor scalar(T v) { return Tensor(Shape{1}, v); }

  [[nodiscard]] bool defined() const noexcept { return impl_ != nullptr; }
  [[nodiscard]] const Shape& shape() const { return impl_->shape; }
  [[nodiscard]] std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }
  [[nodiscard]] std::size_t rank() const { return impl_->shape.size(); }
  [[nodiscard]] std::size_t numel() const { return impl_->data.size(); }

  [[nodiscard]] std::span<T> data() { return impl_->data; }
  [[nodiscard]] std::span<const T> data() const { return impl_->data; }
  [[nodiscard]] const std::vector<T>& values() const { return impl_->data; }

  [[nodiscard]] bool requires_grad() const noexcept { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool on) {
    impl_->requires_grad = on;
    if (on && impl_->grad.size() != impl_->data.size()) impl_->grad.assign(impl_->data.size(), T{0});
    if (!on) impl_->grad.clear();
  }
  // Gradient buffers are reachable through const handles: backward rules
  // accumulate into inputs they only read values from.
  [[nodiscard]] std::span<T> grad() const { return impl_->grad; }
  void zero_grad() const { std::fill(impl_->grad.begin(), impl_->grad.end(), T{0}); }

  [[nodiscard]] T item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
    return impl_->data[0];
  }

  T& operator[](std::size_t i) { return impl_->data[i]; }
  const T& operator[](std::size_t i) const { return impl_->data[i]; }

  /// Row-major multi-index access, bounds checked.
  template <class... I>
  T& at(I... idx) {
    return impl_->data[offset({static_cast<std::size_t>(idx)...})];
  }
  template <class... I>
  const T& at(I... idx) const {
    return impl_->data[offset({static_cast<std::size_t>(idx)...})];
  }

  [[nodiscard]] Tensor clone() const { return Tensor(shape(), impl_->data); }

  template <class U>
  [[nodiscard]] Tensor<U> cast() const {
    return Tensor<U>(shape(), std::vector<U>(impl_->data.begin(), impl_->data.end()));
  }

  /// Same storage (handle identity).
  [[nodiscard]] bool is(const Tensor& other) const noexcept { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
  };

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    const auto& s = impl_->shape;
    if (idx.size() != s.size()) throw ShapeError("index rank mismatch for shape " + to_string(s));
    std::size_t off = 0, k = 0;
    for (auto i : idx) {
      if (i >= s[k]) throw ShapeError("index out of range for shape " + to_string(s));
      off = off * s[k++] + i;
    }
    return off;
  }

  std::shared_ptr<Impl> impl_;
};

/// Ordered record of differentiable operations.
///
/// Forward recording order is a topological order of the graph, so backward()
/// replays entries last-to-first exactly once. A tape is single-owner.
template <class T>
class Tape {
 public:
  struct Entry {
    std::string op;
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    std::function<void()> backward;
  };

  void push(Entry e) {
    if (consumed_) throw ConfigError("cannot record onto a consumed tape; clear() it first");
    entries_.push_back(std::move(e));
  }

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool consumed() const noexcept { return consumed_; }
  [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }

  /// Drops every recorded intermediate and makes the tape reusable.
  void clear() {
    entries_.clear();
    consumed_ = false;
  }

 private:
  template <class U>
  friend void backward(Tensor<U> loss, Tape<U>& tape);

  std::vector<Entry> entries_;
  bool consumed_ = false;
};

namespace detail {
template <class T>
inline thread_local Tape<T>* active_tape = nullptr;
}

/// Routes operator recording on this thread to `tape` while in scope.
template <class T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape) : prev_(detail::active_tape<T>) { detail::active_tape<T> = &tape; }
  ~TapeScope() { detail::active_tape<T> = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* prev_;
};

template <class T>
Tape<T>* active_tape() noexcept {
  return detail::active_tape<T>;
}

/// Records `out` as produced by `op` from `inputs` when a tape is active and
/// any input requires a gradient. `bw` reads out.grad() and accumulates into
/// the inputs' gradients.
template <class T, class Backward>
void record(std::string_view op, std::vector<Tensor<T>> inputs, Tensor<T>& out, Backward&& bw) {
  Tape<T>* tape = active_tape<T>();
  if (!tape) return;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor<T>& t) { return t.defined() && t.requires_grad(); });
  if (!any) return;
  out.set_requires_grad(true);
  tape->push({std::string(op), std::move(inputs), out, std::function<void()>(std::forward<Backward>(bw))});
}

/// Throws NumericError when any value of `t` is NaN or infinite.
template <class T>
void check_finite(const Tensor<T>& t, std::string_view op) {
  for (T v : t.data())
    if (!std::isfinite(v)) throw NumericError("non-finite value produced by " + std::string(op));
}

/// Throws NumericError when any gradient entry of `t` is NaN or infinite.
template <class T>
void check_finite_grad(const Tensor<T>& t, std::string_view what) {
  if (!t.requires_grad()) return;
  for (T v : t.grad())
    if (!std::isfinite(v)) throw NumericError("non-finite " + std::string(what));
}

/// Reverse-mode sweep: seeds d(loss)/d(loss) = 1 and replays the tape backwards.
/// Gradients accumulate into every requires_grad tensor reached.
template <class T>
void backward(Tensor<T> loss, Tape<T>& tape) {
  if (!loss.defined() || loss.numel() != 1)
    throw ConfigError("backward() needs a scalar loss, got shape " +
                      (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
  if (tape.consumed_) throw ConfigError("tape already consumed by a previous backward()");
  if (!loss.requires_grad()) throw ConfigError("loss does not depend on any tensor requiring grad");
  loss.grad()[0] += T{1};
  for (auto it = tape.entries_.rbegin(); it != tape.entries_.rend(); ++it) it->backward();
  tape.consumed_ = true;
}

}  // namespace mmsense::ad
