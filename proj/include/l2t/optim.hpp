#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "l2t/error.hpp"
#include "l2t/param_utils.hpp"
#include "l2t/tensor.hpp"

namespace l2t::optim {

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Throws ConfigError naming the offending field.
  void validate(const std::string& component = "optimizer") const;
};

/// Full-size defaults per component.
OptimizerConfig student_defaults();
OptimizerConfig teacher_defaults();
OptimizerConfig dln_defaults();

template <class T>
struct AdamWState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::uint64_t step = 0;
};

template <class P>
AdamWState<typename P::value_type> make_adamw_state(const P& params) {
  AdamWState<typename P::value_type> s;
  params.visit([&](const std::string&, const auto& t) {
    s.m.emplace_back(t.shape());
    s.v.emplace_back(t.shape());
  });
  return s;
}

/// One AdamW update with decoupled weight decay:
/// p ← p − lr·(m̂/(√v̂ + ε) + wd·p).
/// Throws NumericalError (parameters untouched) if any gradient is non-finite.
template <class P>
void adamw_step(P& params, const P& grads, AdamWState<typename P::value_type>& state,
                const OptimizerConfig& cfg, double lr_now) {
  using T = typename P::value_type;
  auto p_arrays = named_arrays(params);
  auto g_arrays = named_arrays(grads);
  if (p_arrays.size() != g_arrays.size() || p_arrays.size() != state.m.size()) {
    throw ShapeError("adamw_step: parameter, gradient and state array counts differ");
  }
  for (std::size_t a = 0; a < g_arrays.size(); ++a) {
    if (g_arrays[a].tensor->shape() != p_arrays[a].tensor->shape()) {
      throw ShapeError("adamw_step: gradient shape mismatch for " + p_arrays[a].name);
    }
    for (T g : g_arrays[a].tensor->values()) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NumericalError("non-finite gradient in " + g_arrays[a].name);
      }
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t a = 0; a < p_arrays.size(); ++a) {
    auto& p = *p_arrays[a].tensor;
    const auto& g = *g_arrays[a].tensor;
    auto& m = state.m[a];
    auto& v = state.v[a];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double m_hat = mi / bc1;
      const double v_hat = vi / bc2;
      const double pi = p[i];
      p[i] = static_cast<T>(pi - lr_now * (m_hat / (std::sqrt(v_hat) + cfg.epsilon) +
                                           cfg.weight_decay * pi));
    }
  }
}

/// Linear warmup to lr_max over warmup_steps, then half-cosine down to lr_min
/// at total_steps.
double cosine_warmup_lr(std::uint64_t step, std::uint64_t total_steps, std::uint64_t warmup_steps,
                        double lr_max, double lr_min);

/// Global L2 norm over every array; when it exceeds max_norm all arrays are
/// scaled by max_norm / norm. Returns the pre-clip norm.
template <class P>
double clip_grad_norm(P& grads, double max_norm) {
  if (!(max_norm > 0)) throw ConfigError("clip max_norm must be positive");
  double sq = 0;
  grads.visit([&](const std::string&, const auto& t) {
    for (auto v : t.values()) sq += static_cast<double>(v) * v;
  });
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    grads.visit([&](const std::string&, auto& t) {
      for (auto& v : t.values()) v = static_cast<std::decay_t<decltype(v)>>(v * scale);
    });
  }
  return norm;
}

/// Single-array adapter so free-standing tensors can be clipped.
template <class T>
struct ArrayList {
  using value_type = T;
  std::vector<Tensor<T>> arrays;

  template <class F>
  void visit(F&& f) {
    for (std::size_t i = 0; i < arrays.size(); ++i) f(std::to_string(i), arrays[i]);
  }
  template <class F>
  void visit(F&& f) const {
    for (std::size_t i = 0; i < arrays.size(); ++i) f(std::to_string(i), arrays[i]);
  }
};

}  // namespace l2t::optim
