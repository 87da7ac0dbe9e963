// Adam with a multi-step learning-rate schedule and an l1 weight penalty.
#pragma once

#include <cmath>
#include <vector>

#include "londn/tensor.hpp"

namespace londn {

struct LrSchedule {
  double base = 6e-5;
  std::vector<std::size_t> milestones{100, 150};
  double decay = 0.65;

  /// Rate used during 0-based `epoch`: base * decay^(#milestones <= epoch).
  double rate(std::size_t epoch) const {
    double lr = base;
    for (auto m : milestones)
      if (epoch >= m) lr *= decay;
    return lr;
  }

  static LrSchedule local() { return {6e-5, {100, 150}, 0.65}; }
  static LrSchedule global() { return {1e-4, {50, 100}, 0.6}; }

  friend bool operator==(const LrSchedule&, const LrSchedule&) = default;
};

struct AdamState {
  ParamSet m;
  ParamSet v;
  std::size_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  LrSchedule schedule;

  AdamState() = default;
  AdamState(const ParamSet& like, LrSchedule sched)
      : m(like.zeros_like()), v(like.zeros_like()), schedule(std::move(sched)) {}
};

inline double l1_sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// One bias-corrected Adam update. `grads` is augmented with
/// l1_weight * sign(theta) before the moments are updated.
inline void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, double l1_weight,
                      std::size_t epoch) {
  params.require_layout(grads);
  if (!state.m.same_layout(params)) {
    state.m = params.zeros_like();
    state.v = params.zeros_like();
  }
  state.step += 1;
  const double lr = state.schedule.rate(epoch);
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& p = params[t].values;
    const auto& g = grads[t].values;
    auto& m = state.m[t].values;
    auto& v = state.v[t].values;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k] + l1_weight * l1_sign(p[k]);
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace londn
