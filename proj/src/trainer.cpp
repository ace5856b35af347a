#include "ez/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "ez/augment.hpp"

namespace ez::trainer {

namespace {

constexpr std::size_t kEvalBatchSize = 8;
constexpr std::uint64_t kTrainerStream = 0x7261696e65725aULL;

using nlohmann::json;

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) raise(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

void append_metrics_line(const std::filesystem::path& path, const EpochRecord& record) {
  json line = {{"epoch", record.epoch},       {"step", record.step},
               {"train_loss", record.train_loss}, {"valid_loss", record.valid_loss},
               {"lr", record.lr},             {"wall_time_sec", record.wall_time_sec}};
  std::ofstream out(path, std::ios::app);
  if (!out) raise(ErrorKind::IoError, "cannot open " + path.string());
  out << line.dump() << '\n';
  out.flush();
  if (!out) raise(ErrorKind::IoError, "write failed for " + path.string());
}

std::vector<EpochRecord> read_metrics_file(const std::filesystem::path& path) {
  std::vector<EpochRecord> records;
  std::ifstream in(path);
  if (!in) return records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      raise(ErrorKind::MalformedLine, path.string() + ": " + e.what());
    }
    EpochRecord rec;
    rec.epoch = obj.at("epoch").get<std::int64_t>();
    rec.step = obj.at("step").get<std::int64_t>();
    rec.train_loss = obj.at("train_loss").get<double>();
    rec.valid_loss = obj.at("valid_loss").get<double>();
    rec.lr = obj.at("lr").get<double>();
    rec.wall_time_sec = obj.at("wall_time_sec").get<double>();
    records.push_back(rec);
  }
  return records;
}

Trainer::Trainer(std::shared_ptr<TrainableModel> model, TrainConfig cfg,
                 std::filesystem::path out_dir)
    : model_(std::move(model)), cfg_(std::move(cfg)), out_dir_(std::move(out_dir)) {
  if (!model_) raise(ErrorKind::SchemaError, "Trainer needs a model");
  hash_ = config_hash(cfg_);
}

std::vector<stats::ShapeRecord> Trainer::collect_stats_phase(const dataset::EZDataset& ds) {
  auto stats_dir = out_dir_ / "stats";
  auto meta_path = stats_dir / "meta.json";

  std::vector<std::string> fields;
  for (const auto& [name, fn] : ds.data_info().fields) fields.push_back(name);

  // Fresh artifacts for the same config and dataset length are reused.
  if (std::filesystem::exists(meta_path)) {
    std::ifstream in(meta_path);
    json meta;
    bool usable = false;
    try {
      in >> meta;
      usable = meta.at("config_hash").get<std::string>() == hash_ &&
               meta.at("n_items").get<std::size_t>() == ds.size() &&
               meta.at("fields").get<std::vector<std::string>>() == fields;
    } catch (...) {
      usable = false;
    }
    if (usable) {
      std::map<std::string, std::map<std::string, std::vector<std::size_t>>> by_field;
      for (const auto& field : fields) {
        auto file = stats_dir / (field + "_shape");
        if (!std::filesystem::exists(file)) {
          usable = false;
          break;
        }
        for (auto& [id, dims] : stats::read_shape_file(file)) by_field[field][id] = dims;
      }
      if (usable) {
        std::vector<stats::ShapeRecord> records;
        records.reserve(ds.size());
        for (const auto& id : ds.ids()) {
          stats::ShapeRecord rec;
          rec.id = id;
          for (const auto& field : fields) {
            auto it = by_field[field].find(id);
            if (it == by_field[field].end()) {
              usable = false;
              break;
            }
            rec.dims[field] = it->second;
          }
          if (!usable) break;
          records.push_back(std::move(rec));
        }
        if (usable) return records;
      }
    }
  }

  auto [records, field_stats] = stats::collect_stats(ds, fields);
  ensure_dir(stats_dir);
  for (const auto& field : fields)
    stats::write_shape_file(stats::shapes_for_field(records, field),
                            stats_dir / (field + "_shape"));
  stats::write_stats_file(field_stats, stats_dir / "stats.json");

  json meta = {{"config_hash", hash_}, {"n_items", ds.size()}, {"fields", fields}};
  std::ofstream out(meta_path, std::ios::trunc);
  if (!out) raise(ErrorKind::IoError, "cannot open " + meta_path.string());
  out << meta.dump(2) << '\n';
  out.flush();
  if (!out) raise(ErrorKind::IoError, "write failed for " + meta_path.string());
  return records;
}

Batch Trainer::materialize_batch(const dataset::EZDataset& ds,
                                 const std::vector<std::string>& ids, std::uint64_t epoch_key,
                                 bool augmented) const {
  Batch batch;
  batch.reserve(ids.size());
  for (const auto& id : ids) {
    dataset::Item item = ds.get_item(id);
    if (augmented) {
      auto it = item.find("speech");
      if (it != item.end()) {
        if (auto* wave = std::get_if<NdArray>(&it->second); wave && wave->rank() == 1) {
          rng::SplitMix64 gen(rng::mix(epoch_key, rng::hash_string(id)));
          it->second = NdArray::vector(finetune::augment(wave->values(), *cfg_.augment, gen));
        }
      }
    }
    batch.push_back(std::move(item));
  }
  return batch;
}

Checkpoint Trainer::snapshot(std::int64_t epoch) const {
  Checkpoint ckpt;
  ckpt.epoch = epoch;
  ckpt.global_step = global_step_;
  ckpt.params = model_->params;
  ckpt.opt = opt_;
  ckpt.rng_state = rng_.state();
  ckpt.best_valid_metric = best_metric_;
  ckpt.best_epoch = best_epoch_;
  ckpt.config_hash = hash_;
  return ckpt;
}

void Trainer::restore(const Checkpoint& ckpt) {
  if (ckpt.config_hash != hash_)
    raise(ErrorKind::IncompatibleCheckpoint,
          "checkpoint was written with a different configuration");
  if (ckpt.params.size() != model_->params.size())
    raise(ErrorKind::IncompatibleCheckpoint, "checkpoint parameter set does not match model");
  for (const auto& [name, value] : ckpt.params) {
    auto it = model_->params.find(name);
    if (it == model_->params.end() || !it->second.same_shape(value))
      raise(ErrorKind::IncompatibleCheckpoint, "checkpoint parameter '" + name +
                                                   "' does not match model");
  }
  model_->params = ckpt.params;
  opt_ = ckpt.opt;
  rng_.set_state(ckpt.rng_state);
  global_step_ = ckpt.global_step;
  best_metric_ = ckpt.best_valid_metric;
  best_epoch_ = ckpt.best_epoch;
}

TrainResult Trainer::train(const dataset::EZDataset& train_ds, const dataset::EZDataset& valid_ds,
                           const std::optional<batching::BatchPlan>& plan_override) {
  if (train_ds.size() == 0) raise(ErrorKind::EmptyDataset, "training dataset is empty");
  if (valid_ds.size() == 0) raise(ErrorKind::EmptyDataset, "validation dataset is empty");

  ensure_dir(out_dir_);
  ensure_dir(out_dir_ / "checkpoints");
  {
    auto path = out_dir_ / "config.resolved";
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorKind::IoError, "cannot open " + path.string());
    out << resolved_config(cfg_).dump(2) << '\n';
  }

  std::vector<stats::ShapeRecord> shapes;
  if (!plan_override) shapes = collect_stats_phase(train_ds);

  const bool maximize = metric_is_max(cfg_.keep_best_on);
  const std::string metric = metric_name(cfg_.keep_best_on);

  TrainResult result;
  std::int64_t start_epoch = 1;

  if (std::filesystem::exists(last_checkpoint_path())) {
    Checkpoint ckpt = load_checkpoint(last_checkpoint_path());
    restore(ckpt);
    start_epoch = ckpt.epoch + 1;
    // History up to the checkpointed epoch is authoritative; anything after
    // it (a crash between the jsonl append and the checkpoint save) is
    // discarded.
    auto prior = read_metrics_file(metrics_path());
    std::ofstream out(metrics_path(), std::ios::trunc);
    for (const auto& rec : prior) {
      if (rec.epoch > ckpt.epoch) continue;
      result.history.push_back(rec);
    }
    out.close();
    for (const auto& rec : result.history) append_metrics_line(metrics_path(), rec);
    result.best_epoch = best_epoch_;
    if (best_epoch_ > 0 &&
        static_cast<std::size_t>(ckpt.epoch - best_epoch_) >= cfg_.patience) {
      result.stopped_early = true;
      result.epochs_run = result.history.size();
      return result;
    }
  } else {
    // Fresh run: zero moments for every parameter so the optimizer state key
    // set always equals the parameter key set.
    opt_ = OptState{};
    for (const auto& [name, value] : model_->params) {
      opt_.m.emplace(name, NdArray(value.shape()));
      opt_.v.emplace(name, NdArray(value.shape()));
    }
    rng_ = rng::SplitMix64(rng::mix(static_cast<std::uint64_t>(cfg_.seed), kTrainerStream));
    global_step_ = 0;
    best_metric_ = maximize ? -std::numeric_limits<double>::infinity()
                            : std::numeric_limits<double>::infinity();
    best_epoch_ = 0;
    std::ofstream(metrics_path(), std::ios::trunc);
  }

  AdamConfig adam{cfg_.beta1, cfg_.beta2, cfg_.eps, cfg_.weight_decay};

  for (std::int64_t epoch = start_epoch; epoch <= static_cast<std::int64_t>(cfg_.max_epoch);
       ++epoch) {
    auto epoch_start = std::chrono::steady_clock::now();
    std::uint64_t epoch_key = rng_.next();

    batching::BatchPlan plan;
    if (plan_override) {
      plan = *plan_override;
    } else if (cfg_.batching.kind == BatchingKind::Numel) {
      plan = batching::build_numel_sampler(shapes, cfg_.batching.batch_bins, cfg_.seed, epoch);
    } else {
      plan = batching::build_fixed_sampler(train_ds.ids(), cfg_.batching.batch_size, cfg_.seed,
                                           epoch, cfg_.batching.shuffle);
    }

    double loss_sum = 0.0;
    std::size_t item_count = 0;
    double lr = 0.0;
    for (const auto& batch_ids : plan.batches) {
      Batch batch = materialize_batch(train_ds, batch_ids, epoch_key, cfg_.augment.has_value());
      ++global_step_;
      lr = lr_at(global_step_, cfg_.peak_lr, cfg_.warmup_steps);

      LossAndGrads lg = model_->loss_and_grads(model_->params, batch);
      if (!std::isfinite(lg.loss))
        raise(ErrorKind::NonFiniteGradient,
              "loss is not finite at step " + std::to_string(global_step_));
      for (const auto& [name, grad] : lg.grads)
        if (!grad.all_finite())
          raise(ErrorKind::NonFiniteGradient, "gradient for '" + name +
                                                  "' is not finite at step " +
                                                  std::to_string(global_step_));

      for (auto it = lg.grads.begin(); it != lg.grads.end();) {
        if (!model_->is_trainable(it->first))
          it = lg.grads.erase(it);
        else
          ++it;
      }
      if (cfg_.grad_clip) clip_global_norm(lg.grads, *cfg_.grad_clip);
      adamw_step(model_->params, lg.grads, opt_, lr, adam);

      loss_sum += lg.loss * static_cast<double>(batch.size());
      item_count += batch.size();
    }

    auto valid_metrics = evaluate(valid_ds);
    auto metric_it = valid_metrics.find(metric);
    if (metric_it == valid_metrics.end())
      raise(ErrorKind::BadConfig, "keep_best_on metric '" + metric + "' not reported");

    EpochRecord rec;
    rec.epoch = epoch;
    rec.step = global_step_;
    rec.train_loss = item_count ? loss_sum / static_cast<double>(item_count) : 0.0;
    rec.valid_loss = valid_metrics.at("loss");
    rec.lr = lr;
    rec.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    result.history.push_back(rec);
    append_metrics_line(metrics_path(), rec);

    double value = metric_it->second;
    bool improved = maximize ? value > best_metric_ : value < best_metric_;
    if (improved) {
      best_metric_ = value;
      best_epoch_ = epoch;
      save_checkpoint(best_checkpoint_path(), snapshot(epoch));
    }
    save_checkpoint(last_checkpoint_path(), snapshot(epoch));

    if (static_cast<std::size_t>(epoch - best_epoch_) >= cfg_.patience) {
      result.stopped_early = true;
      break;
    }
  }

  result.best_epoch = best_epoch_;
  result.epochs_run = result.history.size();
  return result;
}

std::map<std::string, double> Trainer::evaluate(const dataset::EZDataset& ds) const {
  if (ds.size() == 0) raise(ErrorKind::EmptyDataset, "cannot evaluate an empty dataset");
  auto plan = batching::build_fixed_sampler(ds.ids(), kEvalBatchSize, 0, 0, /*shuffle=*/false);

  std::map<std::string, double> sums;
  std::size_t total = 0;
  for (const auto& batch_ids : plan.batches) {
    Batch batch;
    batch.reserve(batch_ids.size());
    for (const auto& id : batch_ids) batch.push_back(ds.get_item(id));

    double w = static_cast<double>(batch.size());
    sums["loss"] += model_->loss_and_grads(model_->params, batch).loss * w;
    for (const auto& [name, value] : model_->batch_metrics(model_->params, batch))
      sums[name] += value * w;
    total += batch.size();
  }
  std::map<std::string, double> out;
  for (const auto& [name, sum] : sums) out[name] = sum / static_cast<double>(total);
  return out;
}

}  // namespace ez::trainer
