#pragma once

#include <cstdint>
#include <map>

#include "ez/model.hpp"

namespace ez::trainer {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// First/second moments per parameter plus the shared step counter.
struct OptState {
  std::map<std::string, NdArray> m;
  std::map<std::string, NdArray> v;
  std::int64_t step = 0;
};

// Inverse-square-root warmup schedule:
//   lr(s) = peak_lr * sqrt(warmup) * min(s^{-1/2}, s * warmup^{-3/2})
// computed as peak_lr * min(sqrt(warmup/s), s/warmup) so the peak at
// s == warmup_steps is exact.
double lr_at(std::int64_t step, double peak_lr, std::int64_t warmup_steps);

// AdamW with decoupled weight decay:
//   m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2;  t incremented once
//   mhat = m/(1-b1^t);     vhat = v/(1-b2^t)
//   theta <- theta - lr*mhat/(sqrt(vhat)+eps) - lr*weight_decay*theta
// Updates exactly the parameters present in grads; moments are
// zero-initialized on first sight of a parameter.
void adamw_step(ParamMap& params, const ParamMap& grads, OptState& state, double lr,
                const AdamConfig& cfg);

double global_grad_norm(const ParamMap& grads);

// Scales all gradients so the global norm is at most max_norm.
void clip_global_norm(ParamMap& grads, double max_norm);

}  // namespace ez::trainer
