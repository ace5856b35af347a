#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ez/augment.hpp"
#include "ez/finetune.hpp"

namespace ez::trainer {

enum class BatchingKind { Numel, Fixed };

struct BatchingConfig {
  BatchingKind kind = BatchingKind::Numel;
  std::uint64_t batch_bins = 1'000'000;  // numel
  std::size_t batch_size = 8;            // fixed
  bool shuffle = true;                   // fixed

  friend bool operator==(const BatchingConfig&, const BatchingConfig&) = default;
};

// All knobs of a training run. Parsed from a single JSON document; unknown
// keys anywhere are an error so typos fail loudly instead of training with
// defaults.
struct TrainConfig {
  std::size_t max_epoch = 10;
  double peak_lr = 1e-4;
  std::int64_t warmup_steps = 15000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  std::optional<double> grad_clip;
  std::size_t patience = 3;
  std::int64_t seed = 0;
  BatchingConfig batching;
  // Lower is better unless the name carries a ":max" suffix.
  std::string keep_best_on = "loss";

  std::optional<finetune::LoRASpec> lora;
  std::optional<finetune::AugmentationSpec> augment;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

TrainConfig parse_train_config(const nlohmann::json& doc);
TrainConfig load_train_config(const std::filesystem::path& path);

// Fully-resolved echo of the config (defaults filled in), canonical key
// order. config_hash is the sha256 of this document's compact dump.
nlohmann::json resolved_config(const TrainConfig& cfg);
std::string config_hash(const TrainConfig& cfg);

// keep_best_on helpers.
bool metric_is_max(const std::string& keep_best_on);
std::string metric_name(const std::string& keep_best_on);

}  // namespace ez::trainer
