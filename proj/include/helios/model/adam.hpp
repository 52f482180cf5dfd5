#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "helios/error.hpp"
#include "helios/model/network.hpp"

namespace helios {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Constant learning rate for the first `hold_fraction` of steps, then linear decay that
/// reaches 0 at the final step.
struct LrSchedule {
  double base_lr = 5e-4;
  double hold_fraction = 0.3;
  std::int64_t total_steps = 1;

  std::int64_t hold_steps() const {
    return static_cast<std::int64_t>(std::floor(hold_fraction * static_cast<double>(total_steps)));
  }

  double at(std::int64_t step) const {
    require(total_steps >= 1 && step >= 0 && step < total_steps, ErrorCode::kInvalidArgument,
            "learning-rate step out of range");
    const std::int64_t hold = hold_steps();
    const std::int64_t last = total_steps - 1;
    if (step < hold || last <= hold) return step == last && last > 0 ? 0.0 : base_lr;
    return base_lr * static_cast<double>(last - step) / static_cast<double>(last - hold);
  }
};

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m_w, v_w, m_b, v_b;
  std::int64_t t = 0;

  static AdamState like(const Parameters<T>& p) {
    AdamState s;
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      s.m_w.emplace_back(p.weights[i].size(), T(0));
      s.v_w.emplace_back(p.weights[i].size(), T(0));
      s.m_b.emplace_back(p.biases[i].size(), T(0));
      s.v_b.emplace_back(p.biases[i].size(), T(0));
    }
    return s;
  }
};

namespace detail {

template <typename T>
void adam_tensor(std::vector<T>& p, const std::vector<T>& g, std::vector<T>& m, std::vector<T>& v,
                 const AdamConfig& cfg, double lr, double bc1, double bc2) {
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  const T step = static_cast<T>(lr / bc1), eps = static_cast<T>(cfg.eps);
  const T inv_bc2 = static_cast<T>(1.0 / bc2);
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * g[i];
    v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
    p[i] -= step * m[i] / (std::sqrt(v[i] * inv_bc2) + eps);
  }
}

}  // namespace detail

/// One Adam update. Layers with `frozen[i]` set are left untouched, moments included.
template <typename T>
void adam_step(Parameters<T>& params, const Parameters<T>& grads, AdamState<T>& state, const AdamConfig& cfg,
               double lr, const std::vector<bool>& frozen = {}) {
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    if (i < frozen.size() && frozen[i]) continue;
    detail::adam_tensor(params.weights[i], grads.weights[i], state.m_w[i], state.v_w[i], cfg, lr, bc1, bc2);
    detail::adam_tensor(params.biases[i], grads.biases[i], state.m_b[i], state.v_b[i], cfg, lr, bc1, bc2);
  }
}

}  // namespace helios
