#pragma once

#include <cstddef>
#include <vector>

#include "sgt/tensor.hpp"

namespace sgt {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Linear warmup then linear decay to zero over total_steps. Off = constant rate.
  bool schedule = false;
  double warmup_fraction = 0.1;
  std::size_t total_steps = 0;
  /// Global-norm gradient clipping threshold; 0 disables clipping.
  double max_grad_norm = 0.0;
};

struct OptimizerState {
  AdamConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::size_t step = 0;
};

/// Learning-rate multiplier for update number `step` (1-based).
double schedule_factor(const AdamConfig& config, std::size_t step);

/// One bias-corrected Adam update of every tensor in `params` from its grad.
/// Moment buffers are created on first use.
void adam_step(std::vector<Tensor>& params, OptimizerState& state);

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config);

  void step() { adam_step(params_, state_); }
  void zero_grad();

  const OptimizerState& state() const { return state_; }
  std::size_t step_count() const { return state_.step; }
  double current_learning_rate() const;

 private:
  std::vector<Tensor> params_;
  OptimizerState state_;
};

}  // namespace sgt
