// Named real-valued parameter tensors. DenoiserParams, their gradients and
// the Adam moment buffers all share this layout.
#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace londn {

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t numel() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(std::vector<Tensor> tensors) : tensors_(std::move(tensors)) {
    for (const auto& t : tensors_)
      if (t.values.size() != t.numel())
        throw std::invalid_argument("tensor " + t.name + ": value count does not match shape");
  }

  std::size_t size() const { return tensors_.size(); }
  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  std::size_t numel() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.values.size();
    return n;
  }

  ParamSet zeros_like() const {
    ParamSet out = *this;
    for (auto& t : out.tensors_) std::fill(t.values.begin(), t.values.end(), 0.0);
    return out;
  }

  bool same_layout(const ParamSet& o) const {
    if (o.tensors_.size() != tensors_.size()) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i)
      if (tensors_[i].name != o.tensors_[i].name || tensors_[i].shape != o.tensors_[i].shape)
        return false;
    return true;
  }

  void require_layout(const ParamSet& o) const {
    if (!same_layout(o)) throw std::invalid_argument("parameter layout mismatch");
  }

  /// this += alpha * o
  void axpy(double alpha, const ParamSet& o) {
    require_layout(o);
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      auto& a = tensors_[i].values;
      const auto& b = o.tensors_[i].values;
      for (std::size_t k = 0; k < a.size(); ++k) a[k] += alpha * b[k];
    }
  }

  void scale(double s) {
    for (auto& t : tensors_)
      for (auto& v : t.values) v *= s;
  }

  double dot(const ParamSet& o) const {
    require_layout(o);
    double acc = 0.0;
    for (std::size_t i = 0; i < tensors_.size(); ++i)
      for (std::size_t k = 0; k < tensors_[i].values.size(); ++k)
        acc += tensors_[i].values[k] * o.tensors_[i].values[k];
    return acc;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& t : tensors_)
      for (double v : t.values) m = std::max(m, std::abs(v));
    return m;
  }

  bool all_finite() const {
    for (const auto& t : tensors_)
      for (double v : t.values)
        if (!std::isfinite(v)) return false;
    return true;
  }

  /// Flat coordinate access across all tensors, in declaration order.
  double& flat(std::size_t idx) {
    for (auto& t : tensors_) {
      if (idx < t.values.size()) return t.values[idx];
      idx -= t.values.size();
    }
    throw std::out_of_range("ParamSet::flat index out of range");
  }
  double flat(std::size_t idx) const { return const_cast<ParamSet*>(this)->flat(idx); }

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<Tensor> tensors_;
};

}  // namespace londn
