#include "ez/config.hpp"

#include <fstream>
#include <set>

#include "ez/sha256.hpp"

namespace ez::trainer {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key))
      raise(ErrorKind::BadConfig, "unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  return it->get<T>();
}

template <class T>
T require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) raise(ErrorKind::BadConfig, "missing key '" + std::string(key) + "' in " + where);
  return it->get<T>();
}

BatchingConfig parse_batching(const json& obj) {
  check_keys(obj, {"type", "batch_bins", "batch_size", "shuffle"}, "batching");
  BatchingConfig out;
  auto type = require<std::string>(obj, "type", "batching");
  if (type == "numel") {
    out.kind = BatchingKind::Numel;
    out.batch_bins = require<std::uint64_t>(obj, "batch_bins", "batching");
    if (obj.contains("batch_size"))
      raise(ErrorKind::BadConfig, "batch_size is not valid for numel batching");
    if (out.batch_bins < 1) raise(ErrorKind::BadConfig, "batch_bins must be >= 1");
  } else if (type == "fixed") {
    out.kind = BatchingKind::Fixed;
    out.batch_size = require<std::size_t>(obj, "batch_size", "batching");
    if (obj.contains("batch_bins"))
      raise(ErrorKind::BadConfig, "batch_bins is not valid for fixed batching");
    if (out.batch_size < 1) raise(ErrorKind::BadConfig, "batch_size must be >= 1");
    out.shuffle = get_or(obj, "shuffle", true);
  } else {
    raise(ErrorKind::BadConfig, "batching type must be 'numel' or 'fixed', got '" + type + "'");
  }
  return out;
}

finetune::LoRASpec parse_lora(const json& obj) {
  check_keys(obj, {"targets", "rank", "alpha", "a_init_scale", "train_unmatched"}, "lora");
  finetune::LoRASpec spec;
  spec.target_patterns = get_or(obj, "targets", std::vector<std::string>{"*"});
  spec.rank = get_or<std::size_t>(obj, "rank", 8);
  spec.alpha = get_or(obj, "alpha", 8.0);
  spec.a_init_scale = get_or(obj, "a_init_scale", 0.01);
  spec.trainable_patterns = get_or(obj, "train_unmatched", std::vector<std::string>{});
  if (spec.rank < 1) raise(ErrorKind::BadConfig, "lora.rank must be >= 1");
  if (!(spec.alpha > 0.0)) raise(ErrorKind::BadConfig, "lora.alpha must be positive");
  if (!(spec.a_init_scale > 0.0)) raise(ErrorKind::BadConfig, "lora.a_init_scale must be positive");
  if (spec.target_patterns.empty()) raise(ErrorKind::BadConfig, "lora.targets must be non-empty");
  return spec;
}

finetune::AugmentationSpec parse_augment(const json& obj) {
  check_keys(obj, {"probability", "ops"}, "augment");
  finetune::AugmentationSpec spec = finetune::AugmentationSpec::defaults();
  spec.probability = get_or(obj, "probability", spec.probability);
  if (!(spec.probability >= 0.0 && spec.probability <= 1.0))
    raise(ErrorKind::BadConfig, "augment.probability must be in [0, 1]");
  if (obj.contains("ops")) {
    spec.ops.clear();
    for (const auto& op_obj : obj.at("ops")) {
      check_keys(op_obj, {"kind", "factors"}, "augment.ops");
      finetune::AugOp op;
      op.kind = finetune::aug_kind_from_string(require<std::string>(op_obj, "kind", "augment.ops"));
      op.factors = require<std::vector<double>>(op_obj, "factors", "augment.ops");
      if (op.factors.empty()) raise(ErrorKind::BadConfig, "augment op has no factors");
      for (double f : op.factors)
        if (!(f > 0.0)) raise(ErrorKind::BadConfig, "augment factors must be positive");
      spec.ops.push_back(std::move(op));
    }
    if (spec.ops.empty()) raise(ErrorKind::BadConfig, "augment.ops must be non-empty");
  }
  return spec;
}

}  // namespace

TrainConfig parse_train_config(const json& doc) {
  if (!doc.is_object()) raise(ErrorKind::BadConfig, "config must be a JSON object");
  check_keys(doc,
             {"max_epoch", "peak_lr", "warmup_steps", "beta1", "beta2", "eps", "weight_decay",
              "grad_clip", "patience", "seed", "batching", "keep_best_on", "lora", "augment"},
             "config");

  TrainConfig cfg;
  cfg.max_epoch = require<std::size_t>(doc, "max_epoch", "config");
  cfg.peak_lr = require<double>(doc, "peak_lr", "config");
  cfg.warmup_steps = require<std::int64_t>(doc, "warmup_steps", "config");
  cfg.beta1 = get_or(doc, "beta1", cfg.beta1);
  cfg.beta2 = get_or(doc, "beta2", cfg.beta2);
  cfg.eps = get_or(doc, "eps", cfg.eps);
  cfg.weight_decay = get_or(doc, "weight_decay", cfg.weight_decay);
  if (doc.contains("grad_clip") && !doc.at("grad_clip").is_null())
    cfg.grad_clip = doc.at("grad_clip").get<double>();
  cfg.patience = get_or(doc, "patience", cfg.patience);
  cfg.seed = require<std::int64_t>(doc, "seed", "config");
  cfg.batching = parse_batching(require<json>(doc, "batching", "config"));
  cfg.keep_best_on = get_or(doc, "keep_best_on", cfg.keep_best_on);
  if (doc.contains("lora")) cfg.lora = parse_lora(doc.at("lora"));
  if (doc.contains("augment")) cfg.augment = parse_augment(doc.at("augment"));

  if (cfg.max_epoch < 1) raise(ErrorKind::BadConfig, "max_epoch must be >= 1");
  if (!(cfg.peak_lr > 0.0)) raise(ErrorKind::BadConfig, "peak_lr must be positive");
  if (cfg.warmup_steps < 1) raise(ErrorKind::BadConfig, "warmup_steps must be >= 1");
  if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0)) raise(ErrorKind::BadConfig, "beta1 must be in (0, 1)");
  if (!(cfg.beta2 > 0.0 && cfg.beta2 < 1.0)) raise(ErrorKind::BadConfig, "beta2 must be in (0, 1)");
  if (!(cfg.eps > 0.0)) raise(ErrorKind::BadConfig, "eps must be positive");
  if (cfg.weight_decay < 0.0) raise(ErrorKind::BadConfig, "weight_decay must be >= 0");
  if (cfg.grad_clip && !(*cfg.grad_clip > 0.0))
    raise(ErrorKind::BadConfig, "grad_clip must be positive when set");
  if (cfg.patience < 1) raise(ErrorKind::BadConfig, "patience must be >= 1");
  if (metric_name(cfg.keep_best_on).empty())
    raise(ErrorKind::BadConfig, "keep_best_on must name a metric");
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::IoError, "cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    raise(ErrorKind::BadConfig, path.string() + ": " + e.what());
  }
  return parse_train_config(doc);
}

nlohmann::json resolved_config(const TrainConfig& cfg) {
  json doc;
  doc["max_epoch"] = cfg.max_epoch;
  doc["peak_lr"] = cfg.peak_lr;
  doc["warmup_steps"] = cfg.warmup_steps;
  doc["beta1"] = cfg.beta1;
  doc["beta2"] = cfg.beta2;
  doc["eps"] = cfg.eps;
  doc["weight_decay"] = cfg.weight_decay;
  doc["grad_clip"] = cfg.grad_clip ? json(*cfg.grad_clip) : json(nullptr);
  doc["patience"] = cfg.patience;
  doc["seed"] = cfg.seed;
  doc["keep_best_on"] = cfg.keep_best_on;
  if (cfg.batching.kind == BatchingKind::Numel) {
    doc["batching"] = {{"type", "numel"}, {"batch_bins", cfg.batching.batch_bins}};
  } else {
    doc["batching"] = {{"type", "fixed"},
                       {"batch_size", cfg.batching.batch_size},
                       {"shuffle", cfg.batching.shuffle}};
  }
  if (cfg.lora) {
    doc["lora"] = {{"targets", cfg.lora->target_patterns},
                   {"rank", cfg.lora->rank},
                   {"alpha", cfg.lora->alpha},
                   {"a_init_scale", cfg.lora->a_init_scale},
                   {"train_unmatched", cfg.lora->trainable_patterns}};
  }
  if (cfg.augment) {
    json ops = json::array();
    for (const auto& op : cfg.augment->ops)
      ops.push_back({{"kind", std::string(to_string(op.kind))}, {"factors", op.factors}});
    doc["augment"] = {{"probability", cfg.augment->probability}, {"ops", ops}};
  }
  return doc;
}

std::string config_hash(const TrainConfig& cfg) {
  return hashing::sha256_hex(resolved_config(cfg).dump());
}

bool metric_is_max(const std::string& keep_best_on) {
  return keep_best_on.size() > 4 && keep_best_on.substr(keep_best_on.size() - 4) == ":max";
}

std::string metric_name(const std::string& keep_best_on) {
  if (metric_is_max(keep_best_on)) return keep_best_on.substr(0, keep_best_on.size() - 4);
  return keep_best_on;
}

}  // namespace ez::trainer
