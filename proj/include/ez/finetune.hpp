#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ez/model.hpp"

namespace ez::finetune {

// Low-rank adapter configuration. Patterns are globs over parameter names
// and select rank-2 parameters only; everything not matched (and not
// whitelisted by trainable_patterns) is frozen after injection.
struct LoRASpec {
  std::vector<std::string> target_patterns{"*"};
  std::size_t rank = 8;
  double alpha = 8.0;
  double a_init_scale = 0.01;
  std::vector<std::string> trainable_patterns;

  friend bool operator==(const LoRASpec&, const LoRASpec&) = default;
};

// Minimal glob: '*' matches any run, '?' matches one character.
bool glob_match(std::string_view pattern, std::string_view name);
bool glob_match_any(const std::vector<std::string>& patterns, std::string_view name);

// Wraps `base` with adapters on every matched weight W (d_out x d_in):
// A (rank x d_in) uniform in +-a_init_scale, B (d_out x rank) zeros, and the
// forward path sees W_eff = W + (alpha/rank) * B * A. B starting at zero
// makes the adapted model exactly reproduce the base at injection time.
std::shared_ptr<trainer::TrainableModel> inject_lora(
    std::shared_ptr<trainer::TrainableModel> base, const LoRASpec& spec, std::int64_t seed);

// Folds trained adapters back into plain weights: W <- W + (alpha/rank)*B*A.
// Only valid on a model produced by inject_lora.
std::shared_ptr<trainer::TrainableModel> merge_lora(
    const std::shared_ptr<trainer::TrainableModel>& model);

// Element count of all unfrozen parameters.
std::size_t count_trainable(const trainer::TrainableModel& model);

// Marks parameters matching the patterns as frozen; the trainer discards
// their gradients.
std::shared_ptr<trainer::TrainableModel> freeze(std::shared_ptr<trainer::TrainableModel> model,
                                                const std::vector<std::string>& patterns);

// Adapter parameter naming, shared with checkpoint-driven reconstruction.
std::string lora_a_name(const std::string& target);
std::string lora_b_name(const std::string& target);

}  // namespace ez::finetune
