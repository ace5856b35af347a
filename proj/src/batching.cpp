#include "ez/batching.hpp"

#include <algorithm>

#include "ez/rng.hpp"

namespace ez::batching {

std::uint64_t numel_of_record(const stats::ShapeRecord& record) {
  std::uint64_t total = 0;
  for (const auto& [field, dims] : record.dims) {
    std::uint64_t n = 1;
    for (std::size_t d : dims) n *= d;
    total += n;
  }
  return total;
}

BatchPlan build_numel_sampler(const std::vector<stats::ShapeRecord>& shapes,
                              std::uint64_t batch_bins, std::int64_t seed, std::int64_t epoch) {
  if (batch_bins == 0) raise(ErrorKind::BadConfig, "batch_bins must be >= 1");

  std::vector<std::pair<std::uint64_t, const std::string*>> order;
  order.reserve(shapes.size());
  for (const auto& rec : shapes) order.emplace_back(numel_of_record(rec), &rec.id);
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  });

  BatchPlan plan;
  plan.seed = seed;
  plan.epoch = epoch;
  std::vector<std::string> current;
  std::uint64_t current_numel = 0;
  for (const auto& [numel, id] : order) {
    if (!current.empty() && current_numel + numel > batch_bins) {
      plan.batches.push_back(std::move(current));
      current.clear();
      current_numel = 0;
    }
    current.push_back(*id);
    current_numel += numel;
  }
  if (!current.empty()) plan.batches.push_back(std::move(current));

  rng::SplitMix64 gen(rng::mix(static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(epoch)));
  rng::shuffle(plan.batches, gen);
  return plan;
}

BatchPlan build_fixed_sampler(const std::vector<std::string>& ids, std::size_t batch_size,
                              std::int64_t seed, std::int64_t epoch, bool shuffle) {
  if (batch_size == 0) raise(ErrorKind::BadConfig, "batch_size must be >= 1");

  std::vector<std::string> order = ids;
  if (shuffle) {
    rng::SplitMix64 gen(
        rng::mix(static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(epoch)));
    rng::shuffle(order, gen);
  }

  BatchPlan plan;
  plan.seed = seed;
  plan.epoch = epoch;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    std::size_t end = std::min(order.size(), i + batch_size);
    plan.batches.emplace_back(order.begin() + i, order.begin() + end);
  }
  return plan;
}

}  // namespace ez::batching
