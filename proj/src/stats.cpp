#include "ez/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ez::stats {

namespace {

std::size_t token_count(const std::string& s) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : s) {
    bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

}  // namespace

std::pair<std::vector<ShapeRecord>, std::map<std::string, FeatureStats>> collect_stats(
    const dataset::EZDataset& ds, const std::vector<std::string>& fields) {
  std::vector<ShapeRecord> records;
  std::map<std::string, FeatureStats> stats;
  records.reserve(ds.size());

  for (std::size_t i = 0; i < ds.size(); ++i) {
    dataset::Item item = ds.get_item(i);
    ShapeRecord rec;
    rec.id = ds.ids()[i];
    for (const auto& field : fields) {
      auto it = item.find(field);
      if (it == item.end())
        raise(ErrorKind::SchemaError, "field '" + field + "' not in dataset items");

      if (const auto* text = std::get_if<std::string>(&it->second)) {
        rec.dims[field] = {token_count(*text)};
        continue;
      }
      const auto& arr = std::get<NdArray>(it->second);
      if (arr.rank() < 1 || arr.rank() > 2)
        raise(ErrorKind::UnsupportedShape, "field '" + field + "' of item '" + rec.id +
                                               "' has rank " + std::to_string(arr.rank()) +
                                               "; only rank 1 or 2 supported");
      rec.dims[field] = arr.shape();

      std::size_t frames = arr.rows();
      std::size_t dim = arr.rank() == 1 ? 1 : arr.cols();
      auto& fs = stats[field];
      if (fs.sum.empty() && fs.count == 0) {
        fs.field_name = field;
        fs.sum.assign(dim, 0.0);
        fs.sumsq.assign(dim, 0.0);
      } else if (fs.sum.size() != dim) {
        raise(ErrorKind::SchemaError, "field '" + field + "' dim changed from " +
                                          std::to_string(fs.sum.size()) + " to " +
                                          std::to_string(dim));
      }
      const double* data = arr.data();
      for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t d = 0; d < dim; ++d) {
          double v = data[f * dim + d];
          fs.sum[d] += v;
          fs.sumsq[d] += v * v;
        }
      }
      fs.count += frames;
    }
    records.push_back(std::move(rec));
  }
  return {std::move(records), std::move(stats)};
}

FeatureStats merge_stats(const FeatureStats& a, const FeatureStats& b) {
  if (a.field_name != b.field_name)
    raise(ErrorKind::SchemaError,
          "cannot merge stats of '" + a.field_name + "' and '" + b.field_name + "'");
  if (a.count == 0 && a.sum.empty()) return b;
  if (b.count == 0 && b.sum.empty()) return a;
  if (a.sum.size() != b.sum.size())
    raise(ErrorKind::SchemaError, "dim mismatch merging '" + a.field_name + "': " +
                                      std::to_string(a.sum.size()) + " vs " +
                                      std::to_string(b.sum.size()));
  FeatureStats out = a;
  out.count += b.count;
  for (std::size_t d = 0; d < out.sum.size(); ++d) {
    out.sum[d] += b.sum[d];
    out.sumsq[d] += b.sumsq[d];
  }
  return out;
}

Normalizer finalize_normalizer(const FeatureStats& s, double eps) {
  if (s.count == 0) raise(ErrorKind::EmptyStats, "no frames collected for '" + s.field_name + "'");
  Normalizer out;
  out.mean.resize(s.sum.size());
  out.std.resize(s.sum.size());
  double n = static_cast<double>(s.count);
  for (std::size_t d = 0; d < s.sum.size(); ++d) {
    out.mean[d] = s.sum[d] / n;
    out.std[d] = std::sqrt(std::max(s.sumsq[d] / n - out.mean[d] * out.mean[d], eps));
  }
  return out;
}

void write_shape_file(const FieldShapes& records, const std::filesystem::path& path) {
  std::set<std::string> seen;
  for (const auto& [id, dims] : records)
    if (!seen.insert(id).second) raise(ErrorKind::DuplicateKey, "duplicate shape id '" + id + "'");

  FieldShapes sorted = records;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::IoError, "cannot open " + path.string());
  for (const auto& [id, dims] : sorted) {
    out << id << ' ';
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (i) out << ',';
      out << dims[i];
    }
    out << '\n';
  }
  out.flush();
  if (!out) raise(ErrorKind::IoError, "write failed for " + path.string());
}

FieldShapes read_shape_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::IoError, "cannot open " + path.string());
  FieldShapes records;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto at = [&](const std::string& msg) {
      return path.string() + ":" + std::to_string(line_no) + ": " + msg;
    };
    std::size_t sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size())
      raise(ErrorKind::MalformedLine, at("expected '<id> <dims>'"));
    std::string id = line.substr(0, sp);
    if (!seen.insert(id).second)
      raise(ErrorKind::DuplicateKey, at("duplicate shape id '" + id + "'"));
    std::vector<std::size_t> dims;
    std::stringstream ss(line.substr(sp + 1));
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
        raise(ErrorKind::MalformedLine, at("bad dimension '" + part + "'"));
      dims.push_back(static_cast<std::size_t>(std::stoull(part)));
    }
    if (dims.empty()) raise(ErrorKind::MalformedLine, at("no dimensions"));
    records.emplace_back(std::move(id), std::move(dims));
  }
  return records;
}

FieldShapes shapes_for_field(const std::vector<ShapeRecord>& records, const std::string& field) {
  FieldShapes out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    auto it = rec.dims.find(field);
    if (it == rec.dims.end())
      raise(ErrorKind::SchemaError, "record '" + rec.id + "' has no field '" + field + "'");
    out.emplace_back(rec.id, it->second);
  }
  return out;
}

void write_stats_file(const std::map<std::string, FeatureStats>& stats,
                      const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["fields"] = nlohmann::json::object();
  for (const auto& [name, fs] : stats) {
    doc["fields"][name] = {{"count", fs.count}, {"sum", fs.sum}, {"sumsq", fs.sumsq}};
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::IoError, "cannot open " + path.string());
  out << doc.dump(2) << '\n';
  out.flush();
  if (!out) raise(ErrorKind::IoError, "write failed for " + path.string());
}

std::map<std::string, FeatureStats> read_stats_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::IoError, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::MalformedLine, path.string() + ": " + e.what());
  }
  std::map<std::string, FeatureStats> stats;
  try {
    for (const auto& [name, obj] : doc.at("fields").items()) {
      FeatureStats fs;
      fs.field_name = name;
      fs.count = obj.at("count").get<std::uint64_t>();
      fs.sum = obj.at("sum").get<std::vector<double>>();
      fs.sumsq = obj.at("sumsq").get<std::vector<double>>();
      if (fs.sum.size() != fs.sumsq.size())
        raise(ErrorKind::MalformedLine, path.string() + ": sum/sumsq size mismatch");
      stats.emplace(name, std::move(fs));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::MalformedLine, path.string() + ": " + e.what());
  }
  return stats;
}

}  // namespace ez::stats
