#include "sgt/optimizer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "sgt/error.hpp"

namespace sgt {

double schedule_factor(const AdamConfig& config, std::size_t step) {
  if (!config.schedule) return 1.0;
  if (config.total_steps == 0) {
    throw Error("tensor_engine", "scheduled Adam needs total_steps > 0", Error::Kind::kUsage);
  }
  const double progress = static_cast<double>(step) / static_cast<double>(config.total_steps);
  const double warmup = config.warmup_fraction;
  if (progress < warmup) return progress / warmup;
  if (warmup >= 1.0) return 1.0;
  return std::max(0.0, (1.0 - progress) / (1.0 - warmup));
}

void adam_step(std::vector<Tensor>& params, OptimizerState& state) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].requires_grad() || params[i].grad().size() != params[i].size()) {
      throw Error("tensor_engine", fmt::format("adam_step: parameter {} has no gradient buffer", i),
                  Error::Kind::kUsage);
    }
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw Error("tensor_engine", "adam_step: parameter list changed between steps", Error::Kind::kUsage);
  }

  const auto& cfg = state.config;
  double clip = 1.0;
  if (cfg.max_grad_norm > 0.0) {
    double sq = 0.0;
    for (const auto& p : params)
      for (double g : p.grad()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > cfg.max_grad_norm) clip = cfg.max_grad_norm / norm;
  }

  state.step += 1;
  const auto t = static_cast<double>(state.step);
  const double lr = cfg.learning_rate * schedule_factor(cfg, state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto data = params[i].mutable_data();
    const auto grad = params[i].grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double g = grad[j] * clip;
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      data[j] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

Adam::Adam(std::vector<Tensor> params, AdamConfig config) : params_(std::move(params)) {
  state_.config = config;
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

double Adam::current_learning_rate() const {
  return state_.config.learning_rate * schedule_factor(state_.config, std::max<std::size_t>(state_.step, 1));
}

}  // namespace sgt
