#include "ez/optim.hpp"

#include <cmath>

namespace ez::trainer {

double lr_at(std::int64_t step, double peak_lr, std::int64_t warmup_steps) {
  if (step < 1) raise(ErrorKind::BadConfig, "schedule step must be >= 1");
  if (warmup_steps < 1) raise(ErrorKind::BadConfig, "warmup_steps must be >= 1");
  double s = static_cast<double>(step);
  double w = static_cast<double>(warmup_steps);
  return peak_lr * std::min(std::sqrt(w / s), s / w);
}

void adamw_step(ParamMap& params, const ParamMap& grads, OptState& state, double lr,
                const AdamConfig& cfg) {
  for (const auto& [name, grad] : grads) {
    auto it = params.find(name);
    if (it == params.end())
      raise(ErrorKind::SchemaError, "gradient for unknown parameter '" + name + "'");
    if (!grad.same_shape(it->second))
      raise(ErrorKind::SchemaError, "gradient shape mismatch for '" + name + "'");
    if (!grad.all_finite())
      raise(ErrorKind::NonFiniteGradient, "non-finite gradient for '" + name + "'");
  }

  const std::int64_t t = ++state.step;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));

  for (const auto& [name, grad] : grads) {
    NdArray& theta = params.at(name);
    auto [m_it, m_new] = state.m.try_emplace(name, NdArray(grad.shape()));
    auto [v_it, v_new] = state.v.try_emplace(name, NdArray(grad.shape()));
    NdArray& m = m_it->second;
    NdArray& v = v_it->second;
    if (!m.same_shape(grad) || !v.same_shape(grad))
      raise(ErrorKind::SchemaError, "optimizer state shape mismatch for '" + name + "'");

    const double* g = grad.data();
    double* mp = m.data();
    double* vp = v.data();
    double* th = theta.data();
    for (std::size_t i = 0; i < grad.numel(); ++i) {
      mp[i] = cfg.beta1 * mp[i] + (1.0 - cfg.beta1) * g[i];
      vp[i] = cfg.beta2 * vp[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      double mhat = mp[i] / bias1;
      double vhat = vp[i] / bias2;
      th[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps)) + lr * cfg.weight_decay * th[i];
    }
  }
}

double global_grad_norm(const ParamMap& grads) {
  double total = 0.0;
  for (const auto& [name, grad] : grads)
    for (std::size_t i = 0; i < grad.numel(); ++i) total += grad.at(i) * grad.at(i);
  return std::sqrt(total);
}

void clip_global_norm(ParamMap& grads, double max_norm) {
  double norm = global_grad_norm(grads);
  if (norm <= max_norm || norm == 0.0) return;
  double scale = max_norm / norm;
  for (auto& [name, grad] : grads)
    for (std::size_t i = 0; i < grad.numel(); ++i) grad.at(i) *= scale;
}

}  // namespace ez::trainer
