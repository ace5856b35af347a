#include "ez/finetune.hpp"

#include <algorithm>

#include "ez/rng.hpp"

namespace ez::finetune {

bool glob_match(std::string_view pattern, std::string_view name) {
  // Iterative wildcard match with backtracking over the last '*'.
  std::size_t p = 0, n = 0;
  std::size_t star = std::string_view::npos, mark = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = n;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      n = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

bool glob_match_any(const std::vector<std::string>& patterns, std::string_view name) {
  return std::any_of(patterns.begin(), patterns.end(),
                     [&](const std::string& p) { return glob_match(p, name); });
}

std::string lora_a_name(const std::string& target) { return target + ".lora_a"; }
std::string lora_b_name(const std::string& target) { return target + ".lora_b"; }

namespace {

// W_eff = W + scale * B * A with B (d_out x r), A (r x d_in).
NdArray effective_weight(const NdArray& w, const NdArray& b, const NdArray& a, double scale) {
  NdArray out = w;
  const std::size_t d_out = w.rows(), d_in = w.cols(), r = a.rows();
  for (std::size_t i = 0; i < d_out; ++i)
    for (std::size_t k = 0; k < r; ++k) {
      double bik = b.at(i, k) * scale;
      if (bik == 0.0) continue;
      for (std::size_t j = 0; j < d_in; ++j) out.at(i, j) += bik * a.at(k, j);
    }
  return out;
}

class LoraModel final : public trainer::TrainableModel {
 public:
  LoraModel(std::shared_ptr<trainer::TrainableModel> base, LoRASpec spec, std::int64_t seed)
      : base_(std::move(base)), spec_(std::move(spec)) {
    if (spec_.rank < 1) raise(ErrorKind::BadConfig, "LoRA rank must be >= 1");
    if (!(spec_.alpha > 0.0)) raise(ErrorKind::BadConfig, "LoRA alpha must be positive");

    for (const auto& [name, value] : base_->params) {
      if (value.rank() == 2 && glob_match_any(spec_.target_patterns, name))
        targets_.push_back(name);
    }
    if (targets_.empty())
      raise(ErrorKind::NoTargetsMatched, "no rank-2 parameter matches the LoRA target patterns");

    params = base_->params;
    for (const auto& target : targets_) {
      const NdArray& w = base_->params.at(target);
      NdArray a({spec_.rank, w.cols()});
      rng::SplitMix64 gen(rng::mix(static_cast<std::uint64_t>(seed), rng::hash_string(target)));
      for (std::size_t i = 0; i < a.numel(); ++i)
        a.at(i) = gen.uniform(-spec_.a_init_scale, spec_.a_init_scale);
      params[lora_a_name(target)] = std::move(a);
      params[lora_b_name(target)] = NdArray({w.rows(), spec_.rank});
    }
  }

  double scale() const { return spec_.alpha / static_cast<double>(spec_.rank); }
  const std::vector<std::string>& targets() const { return targets_; }
  const LoRASpec& spec() const { return spec_; }
  const std::shared_ptr<trainer::TrainableModel>& base() const { return base_; }

  bool is_adapter_param(const std::string& name) const {
    return std::any_of(targets_.begin(), targets_.end(), [&](const std::string& t) {
      return name == lora_a_name(t) || name == lora_b_name(t);
    });
  }

  bool is_trainable(const std::string& name) const override {
    if (is_adapter_param(name)) return true;
    if (glob_match_any(spec_.trainable_patterns, name) && base_->is_trainable(name)) return true;
    return false;
  }

  trainer::ParamMap effective_params(const trainer::ParamMap& p) const {
    trainer::ParamMap eff;
    for (const auto& [name, value] : p) {
      if (is_adapter_param(name)) continue;
      eff.emplace(name, value);
    }
    for (const auto& target : targets_)
      eff[target] = effective_weight(p.at(target), p.at(lora_b_name(target)),
                                     p.at(lora_a_name(target)), scale());
    return eff;
  }

  trainer::LossAndGrads loss_and_grads(const trainer::ParamMap& p,
                                       const trainer::Batch& batch) const override {
    auto base_out = base_->loss_and_grads(effective_params(p), batch);
    trainer::LossAndGrads out;
    out.loss = base_out.loss;

    for (auto& [name, grad] : base_out.grads) {
      bool is_target = std::find(targets_.begin(), targets_.end(), name) != targets_.end();
      if (!is_target) {
        out.grads[name] = std::move(grad);
        continue;
      }
      // Chain rule through W_eff: dB = s * G * A^T, dA = s * B^T * G.
      const NdArray& a = p.at(lora_a_name(name));
      const NdArray& b = p.at(lora_b_name(name));
      const NdArray& g = grad;
      const std::size_t d_out = g.rows(), d_in = g.cols(), r = a.rows();
      const double s = scale();

      NdArray db({d_out, r});
      for (std::size_t i = 0; i < d_out; ++i)
        for (std::size_t k = 0; k < r; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < d_in; ++j) acc += g.at(i, j) * a.at(k, j);
          db.at(i, k) = s * acc;
        }
      NdArray da({r, d_in});
      for (std::size_t k = 0; k < r; ++k)
        for (std::size_t j = 0; j < d_in; ++j) {
          double acc = 0.0;
          for (std::size_t i = 0; i < d_out; ++i) acc += b.at(i, k) * g.at(i, j);
          da.at(k, j) = s * acc;
        }
      out.grads[lora_b_name(name)] = std::move(db);
      out.grads[lora_a_name(name)] = std::move(da);
    }
    return out;
  }

  std::string predict(const trainer::ParamMap& p, const dataset::Item& item) const override {
    return base_->predict(effective_params(p), item);
  }

  std::map<std::string, double> batch_metrics(const trainer::ParamMap& p,
                                              const trainer::Batch& batch) const override {
    return base_->batch_metrics(effective_params(p), batch);
  }

 private:
  std::shared_ptr<trainer::TrainableModel> base_;
  LoRASpec spec_;
  std::vector<std::string> targets_;
};

class FrozenModel final : public trainer::TrainableModel {
 public:
  FrozenModel(std::shared_ptr<trainer::TrainableModel> base, std::vector<std::string> patterns)
      : base_(std::move(base)), patterns_(std::move(patterns)) {
    params = base_->params;
  }

  bool is_trainable(const std::string& name) const override {
    if (glob_match_any(patterns_, name)) return false;
    return base_->is_trainable(name);
  }

  trainer::LossAndGrads loss_and_grads(const trainer::ParamMap& p,
                                       const trainer::Batch& batch) const override {
    return base_->loss_and_grads(p, batch);
  }
  std::string predict(const trainer::ParamMap& p, const dataset::Item& item) const override {
    return base_->predict(p, item);
  }
  std::map<std::string, double> batch_metrics(const trainer::ParamMap& p,
                                              const trainer::Batch& batch) const override {
    return base_->batch_metrics(p, batch);
  }

 private:
  std::shared_ptr<trainer::TrainableModel> base_;
  std::vector<std::string> patterns_;
};

}  // namespace

std::shared_ptr<trainer::TrainableModel> inject_lora(
    std::shared_ptr<trainer::TrainableModel> base, const LoRASpec& spec, std::int64_t seed) {
  if (!base) raise(ErrorKind::SchemaError, "inject_lora: null model");
  return std::make_shared<LoraModel>(std::move(base), spec, seed);
}

std::shared_ptr<trainer::TrainableModel> merge_lora(
    const std::shared_ptr<trainer::TrainableModel>& model) {
  auto lora = std::dynamic_pointer_cast<LoraModel>(model);
  if (!lora) raise(ErrorKind::NotAdapted, "model was not produced by inject_lora");
  auto base = lora->base();
  base->params = lora->effective_params(lora->params);
  return base;
}

std::size_t count_trainable(const trainer::TrainableModel& model) {
  std::size_t count = 0;
  for (const auto& [name, value] : model.params)
    if (model.is_trainable(name)) count += value.numel();
  return count;
}

std::shared_ptr<trainer::TrainableModel> freeze(std::shared_ptr<trainer::TrainableModel> model,
                                                const std::vector<std::string>& patterns) {
  if (!model) raise(ErrorKind::SchemaError, "freeze: null model");
  return std::make_shared<FrozenModel>(std::move(model), patterns);
}

}  // namespace ez::finetune
