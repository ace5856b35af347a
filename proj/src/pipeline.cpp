#include "ez/pipeline.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "ez/audio.hpp"
#include "ez/finetune.hpp"

namespace ez::pipeline {

namespace {

std::shared_ptr<trainer::TrainableModel> build_model(const std::vector<std::string>& labels,
                                                     const trainer::TrainConfig& cfg) {
  std::shared_ptr<trainer::TrainableModel> model =
      std::make_shared<reference::ToyClassifier>(labels);
  if (cfg.lora) model = finetune::inject_lora(model, *cfg.lora, cfg.seed);
  return model;
}

std::vector<std::string> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) labels.push_back(line);
  if (labels.empty()) raise(ErrorKind::IoError, "no labels in " + path.string());
  return labels;
}

}  // namespace

dataset::EZDataset dataset_from_dir(const std::filesystem::path& dir) {
  auto dd = manifest::load_data_directory(dir);
  return dataset::from_data_directory(dd, audio::load_audio_source);
}

TrainOutcome run_training(const std::filesystem::path& train_dir,
                          const std::filesystem::path& valid_dir, trainer::TrainConfig cfg,
                          const std::filesystem::path& out_dir) {
  auto train_dd = manifest::load_data_directory(train_dir);
  auto train_ds = dataset::from_data_directory(train_dd, audio::load_audio_source);
  auto valid_ds = dataset_from_dir(valid_dir);

  auto labels = reference::ToyClassifier::labels_from(train_dd);
  auto model = build_model(labels, cfg);

  trainer::Trainer tr(model, cfg, out_dir);
  TrainOutcome outcome;
  outcome.result = tr.train(train_ds, valid_ds);
  outcome.labels = labels;

  auto labels_path = out_dir / "labels.txt";
  std::ofstream out(labels_path, std::ios::trunc);
  if (!out) raise(ErrorKind::IoError, "cannot open " + labels_path.string());
  for (const auto& label : labels) out << label << '\n';
  out.flush();
  if (!out) raise(ErrorKind::IoError, "write failed for " + labels_path.string());
  return outcome;
}

void run_collect_stats(const std::filesystem::path& train_dir, const trainer::TrainConfig& cfg,
                       const std::filesystem::path& out_dir) {
  auto train_dd = manifest::load_data_directory(train_dir);
  auto train_ds = dataset::from_data_directory(train_dd, audio::load_audio_source);
  auto model = build_model(reference::ToyClassifier::labels_from(train_dd), cfg);
  trainer::Trainer tr(model, cfg, out_dir);
  tr.collect_stats_phase(train_ds);
}

void run_infer(const std::filesystem::path& model_dir, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_tsv) {
  auto config_path = model_dir / "config.resolved";
  std::ifstream cfg_in(config_path);
  if (!cfg_in) raise(ErrorKind::IoError, "cannot open " + config_path.string());
  nlohmann::json doc;
  try {
    cfg_in >> doc;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::BadConfig, config_path.string() + ": " + e.what());
  }
  auto cfg = trainer::parse_train_config(doc);

  auto labels = read_labels(model_dir / "labels.txt");
  auto model = build_model(labels, cfg);

  auto best = model_dir / "checkpoints" / "best";
  if (!std::filesystem::exists(best))
    raise(ErrorKind::IoError, "no best checkpoint under " + model_dir.string());
  auto ckpt = trainer::load_checkpoint(best);
  if (ckpt.params.size() != model->params.size())
    raise(ErrorKind::IncompatibleCheckpoint, "checkpoint parameter set does not match model");
  for (const auto& [name, value] : ckpt.params)
    if (!model->params.count(name))
      raise(ErrorKind::IncompatibleCheckpoint, "unexpected checkpoint parameter '" + name + "'");
  model->params = ckpt.params;

  auto ds = dataset_from_dir(data_dir);
  std::ofstream out(out_tsv, std::ios::trunc);
  if (!out) raise(ErrorKind::IoError, "cannot open " + out_tsv.string());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto item = ds.get_item(i);
    out << ds.ids()[i] << '\t' << model->predict(model->params, item) << '\n';
  }
  out.flush();
  if (!out) raise(ErrorKind::IoError, "write failed for " + out_tsv.string());
}

}  // namespace ez::pipeline
