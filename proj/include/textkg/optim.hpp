#pragma once

#include <cstddef>
#include <vector>

#include "textkg/tensor.hpp"

namespace textkg {

// Adam with bias correction. L2 weight decay is folded into the gradient
// (g += wd·p) before the moment updates, and only for parameters whose decay
// flag is set — biases, gains and embedding tables train without decay.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  std::size_t step = 0;
  std::vector<std::vector<double>> m, v;

  void init(const std::vector<Tensor>& params);
};

void adam_step(std::vector<Tensor>& params, const std::vector<bool>& apply_decay, AdamState& state,
               double lr);

// Linear warmup to base_lr over the first ceil(warmup_fraction·total) steps,
// then linear decay to zero at total_steps.
struct LrSchedule {
  double base_lr = 1e-4;
  std::size_t total_steps = 1;
  double warmup_fraction = 0.1;
};

double lr_at(const LrSchedule& s, std::size_t step);

}  // namespace textkg
