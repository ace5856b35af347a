#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "ez/batching.hpp"
#include "ez/checkpoint.hpp"
#include "ez/config.hpp"
#include "ez/dataset.hpp"
#include "ez/model.hpp"
#include "ez/stats.hpp"

namespace ez::trainer {

struct EpochRecord {
  std::int64_t epoch = 0;
  std::int64_t step = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double lr = 0.0;
  double wall_time_sec = 0.0;
};

struct TrainResult {
  std::size_t epochs_run = 0;
  std::vector<EpochRecord> history;
  std::int64_t best_epoch = 0;
  bool stopped_early = false;
};

// Runs the two recipe steps -- statistics collection and training -- over a
// TrainableModel. Owns the optimizer state, the schedule, checkpointing and
// early stopping. Deterministic for a fixed (config, seed): a run resumed
// from the `last` checkpoint is bit-identical to an uninterrupted one.
//
// out_dir layout:
//   checkpoints/last, checkpoints/best
//   stats/<field>_shape, stats/stats.json, stats/meta.json
//   metrics.jsonl     one JSON object per epoch
//   config.resolved   the fully-resolved config echoed back
class Trainer {
 public:
  Trainer(std::shared_ptr<TrainableModel> model, TrainConfig cfg, std::filesystem::path out_dir);

  // Writes shape files and normalization stats under out_dir/stats; skipped
  // when artifacts for the same config hash and dataset length exist.
  std::vector<stats::ShapeRecord> collect_stats_phase(const dataset::EZDataset& ds);

  // Full training loop. Builds a BatchPlan per epoch unless plan_override is
  // given, in which case exactly that batch composition is used every epoch.
  // Resumes automatically when out_dir/checkpoints/last exists.
  TrainResult train(const dataset::EZDataset& train_ds, const dataset::EZDataset& valid_ds,
                    const std::optional<batching::BatchPlan>& plan_override = std::nullopt);

  // Mean loss over the dataset (fixed batches, no shuffle) plus any
  // model-reported metrics, size-weighted.
  std::map<std::string, double> evaluate(const dataset::EZDataset& ds) const;

  const TrainConfig& config() const { return cfg_; }
  const std::shared_ptr<TrainableModel>& model() const { return model_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }
  std::filesystem::path last_checkpoint_path() const { return out_dir_ / "checkpoints" / "last"; }
  std::filesystem::path best_checkpoint_path() const { return out_dir_ / "checkpoints" / "best"; }
  std::filesystem::path metrics_path() const { return out_dir_ / "metrics.jsonl"; }

 private:
  Batch materialize_batch(const dataset::EZDataset& ds, const std::vector<std::string>& ids,
                          std::uint64_t epoch_key, bool augmented) const;
  Checkpoint snapshot(std::int64_t epoch) const;
  void restore(const Checkpoint& ckpt);

  std::shared_ptr<TrainableModel> model_;
  TrainConfig cfg_;
  std::filesystem::path out_dir_;
  std::string hash_;

  OptState opt_;
  rng::SplitMix64 rng_{0};
  std::int64_t global_step_ = 0;
  double best_metric_ = 0.0;
  std::int64_t best_epoch_ = 0;
};

// metrics.jsonl helpers (shared with resume and with tests).
void append_metrics_line(const std::filesystem::path& path, const EpochRecord& record);
std::vector<EpochRecord> read_metrics_file(const std::filesystem::path& path);

}  // namespace ez::trainer
