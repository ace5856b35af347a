#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ez/stats.hpp"

namespace ez::batching {

// An ordered partition of the dataset ids into batches. Plans are pure
// functions of their inputs plus (seed, epoch); membership is fixed across
// epochs and only batch order varies.
struct BatchPlan {
  std::vector<std::vector<std::string>> batches;
  std::int64_t seed = 0;
  std::int64_t epoch = 0;

  std::size_t total_items() const {
    std::size_t n = 0;
    for (const auto& b : batches) n += b.size();
    return n;
  }
};

// Total element count of one utterance: product of dims summed over fields.
std::uint64_t numel_of_record(const stats::ShapeRecord& record);

// Length-aware greedy packing ("numel" batching): ids sorted by element
// count descending (ties by id), packed until adding the next id would
// exceed batch_bins, then the batch order is shuffled by (seed, epoch).
// Oversized single items form singleton batches.
BatchPlan build_numel_sampler(const std::vector<stats::ShapeRecord>& shapes,
                              std::uint64_t batch_bins, std::int64_t seed, std::int64_t epoch);

// Fixed-size chunking, optionally shuffling the id order by (seed, epoch)
// before chunking; the last chunk may be smaller.
BatchPlan build_fixed_sampler(const std::vector<std::string>& ids, std::size_t batch_size,
                              std::int64_t seed, std::int64_t epoch, bool shuffle);

}  // namespace ez::batching
