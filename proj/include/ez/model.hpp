#pragma once

#include <map>
#include <string>
#include <vector>

#include "ez/array.hpp"
#include "ez/dataset.hpp"

namespace ez::trainer {

using ParamMap = std::map<std::string, NdArray>;
using Batch = std::vector<dataset::Item>;

struct LossAndGrads {
  double loss = 0.0;
  ParamMap grads;  // key set subset of params; shapes match
};

// The model contract the Trainer is generic over. `params` holds the current
// values; loss_and_grads and predict are pure functions of the params they
// are given, so the trainer (or a checkpoint) owns evolution of the values.
class TrainableModel {
 public:
  virtual ~TrainableModel() = default;

  ParamMap params;

  virtual LossAndGrads loss_and_grads(const ParamMap& p, const Batch& batch) const = 0;
  virtual std::string predict(const ParamMap& p, const dataset::Item& item) const = 0;

  // Extra evaluation metrics (e.g. accuracy), averaged by the trainer.
  virtual std::map<std::string, double> batch_metrics(const ParamMap& p,
                                                      const Batch& batch) const {
    (void)p;
    (void)batch;
    return {};
  }

  // Frozen parameters keep their value: the trainer discards their grads.
  virtual bool is_trainable(const std::string& name) const {
    (void)name;
    return true;
  }
};

}  // namespace ez::trainer
