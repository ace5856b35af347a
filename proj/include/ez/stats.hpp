#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ez/dataset.hpp"

namespace ez::stats {

// Per-utterance dimensions of every collected field. Numeric fields record
// their array shape; token-string fields record (token_count,).
struct ShapeRecord {
  std::string id;
  std::map<std::string, std::vector<std::size_t>> dims;

  friend bool operator==(const ShapeRecord&, const ShapeRecord&) = default;
};

// Mergeable sum / sum-of-squares accumulator over the frame axis of one
// field. Rank-1 arrays count as frames of dimension 1, rank-2 as
// frames x dim.
struct FeatureStats {
  std::string field_name;
  std::uint64_t count = 0;  // frames
  std::vector<double> sum;
  std::vector<double> sumsq;

  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

std::pair<std::vector<ShapeRecord>, std::map<std::string, FeatureStats>> collect_stats(
    const dataset::EZDataset& ds, const std::vector<std::string>& fields);

// Componentwise addition; exact, so sharded collection merges losslessly.
FeatureStats merge_stats(const FeatureStats& a, const FeatureStats& b);

struct Normalizer {
  std::vector<double> mean;
  std::vector<double> std;
};

// mean = sum/count, std = sqrt(max(sumsq/count - mean^2, eps)).
Normalizer finalize_normalizer(const FeatureStats& s, double eps = 1e-20);

using FieldShapes = std::vector<std::pair<std::string, std::vector<std::size_t>>>;

// Shape file: one `<id> <d1>,<d2>` line per record, sorted by id.
void write_shape_file(const FieldShapes& records, const std::filesystem::path& path);
FieldShapes read_shape_file(const std::filesystem::path& path);

// Projection of full shape records onto one field, for per-field shape files.
FieldShapes shapes_for_field(const std::vector<ShapeRecord>& records, const std::string& field);

// Stats file: JSON document with count/sum/sumsq per field; read(write(x)) == x.
void write_stats_file(const std::map<std::string, FeatureStats>& stats,
                      const std::filesystem::path& path);
std::map<std::string, FeatureStats> read_stats_file(const std::filesystem::path& path);

}  // namespace ez::stats
