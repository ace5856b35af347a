#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ez/optim.hpp"

namespace ez::trainer {

// Full resumable trainer state. Serialized as a little-endian binary record
// so floats round-trip bit-exactly.
struct Checkpoint {
  std::int64_t epoch = 0;
  std::int64_t global_step = 0;
  ParamMap params;
  OptState opt;  // key set equals params key set
  std::uint64_t rng_state = 0;
  double best_valid_metric = 0.0;
  std::int64_t best_epoch = 0;
  std::string config_hash;

  friend bool operator==(const Checkpoint& a, const Checkpoint& b) {
    return a.epoch == b.epoch && a.global_step == b.global_step && a.params == b.params &&
           a.opt.m == b.opt.m && a.opt.v == b.opt.v && a.opt.step == b.opt.step &&
           a.rng_state == b.rng_state && a.best_valid_metric == b.best_valid_metric &&
           a.best_epoch == b.best_epoch && a.config_hash == b.config_hash;
  }
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ez::trainer
