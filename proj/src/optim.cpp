#include "l2t/optim.hpp"

#include <numbers>

namespace l2t::optim {

void OptimizerConfig::validate(const std::string& component) const {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ConfigError(component + "_" + field + ": " + why);
  };
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) fail("lr", "must be positive");
  if (!(weight_decay >= 0) || !std::isfinite(weight_decay)) fail("weight_decay", "must be ≥ 0");
  if (!(beta1 >= 0 && beta1 < 1)) fail("beta1", "must be in [0, 1)");
  if (!(beta2 >= 0 && beta2 < 1)) fail("beta2", "must be in [0, 1)");
  if (!(epsilon > 0)) fail("epsilon", "must be positive");
}

OptimizerConfig student_defaults() { return {2e-4, 0.15}; }
OptimizerConfig teacher_defaults() { return {2e-6, 0.01}; }
OptimizerConfig dln_defaults() { return {5e-7, 0.01}; }

double cosine_warmup_lr(std::uint64_t step, std::uint64_t total_steps, std::uint64_t warmup_steps,
                        double lr_max, double lr_min) {
  if (step < warmup_steps) {
    return lr_max * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  }
  if (total_steps <= warmup_steps) return lr_min;
  const double progress = static_cast<double>(std::min(step, total_steps) - warmup_steps) /
                          static_cast<double>(total_steps - warmup_steps);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace l2t::optim
