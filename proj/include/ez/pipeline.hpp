#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "ez/reference.hpp"
#include "ez/trainer.hpp"

namespace ez::pipeline {

// Data directory -> dataset with `speech` / `text` fields, WAV-file loader.
dataset::EZDataset dataset_from_dir(const std::filesystem::path& dir);

struct TrainOutcome {
  trainer::TrainResult result;
  std::vector<std::string> labels;
};

// The whole two-phase workflow on the toy classifier: stats collection,
// then training with checkpoints and metrics under out_dir. Labels are the
// sorted distinct transcripts of the training directory, persisted to
// out_dir/labels.txt for later inference.
TrainOutcome run_training(const std::filesystem::path& train_dir,
                          const std::filesystem::path& valid_dir, trainer::TrainConfig cfg,
                          const std::filesystem::path& out_dir);

// Stats phase alone.
void run_collect_stats(const std::filesystem::path& train_dir, const trainer::TrainConfig& cfg,
                       const std::filesystem::path& out_dir);

// Predicts with the best checkpoint of a finished run and writes
// `<id>\t<prediction>` lines, sorted by id.
void run_infer(const std::filesystem::path& model_dir, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_tsv);

}  // namespace ez::pipeline
