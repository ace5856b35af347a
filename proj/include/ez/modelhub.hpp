#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace ez::modelhub {

struct ModelFile {
  std::string path;  // relative path inside the archive
  std::string role;  // "config" or "weights"

  friend bool operator==(const ModelFile&, const ModelFile&) = default;
};

struct ModelRef {
  std::string id;
  std::string url;
  std::string sha256;  // of the archive bytes
  std::vector<ModelFile> files;

  friend bool operator==(const ModelRef&, const ModelRef&) = default;
};

struct ModelBundle {
  std::filesystem::path config_path;
  std::filesystem::path weights_path;
  ModelRef resolved_ref;
};

// Byte transport, injectable so tests can count calls and serve fixtures.
// fetch appends the url's bytes from `offset` onward to sink, throwing
// DownloadError on failure (whatever reached the sink stays there, which is
// what makes partial downloads resumable).
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void fetch(const std::string& url, std::uint64_t offset, std::ostream& sink) = 0;
};

// HTTP(S) client transport; resumes with a Range header.
std::shared_ptr<Transport> http_transport();

using Registry = std::map<std::string, ModelRef>;

// Registry JSON: { "<id>": {"url": ..., "sha256": ..., "files": [{"path":
// ..., "role": ...}]} }. Exactly one config and one weights role per model.
Registry parse_registry(const std::string& json_text);
std::string serialize_registry(const Registry& registry);

// `registry` is a filesystem path or an http(s) URL to a registry document.
ModelRef resolve_model(const std::string& id, const std::string& registry,
                       Transport* transport = nullptr);

// EZ_HOME when set, otherwise ~/.cache/ez.
std::filesystem::path default_cache_root();

// Downloads (or reuses) the model archive, verifies its sha256, unpacks it
// atomically under <cache_root>/models/<id>/<sha256-prefix-12>/ and returns
// the bundle paths. A warm cache performs no transport calls. Concurrent
// calls for the same id serialize on an on-disk lock.
ModelBundle from_pretrained(const std::string& id, const std::filesystem::path& cache_root,
                            const std::string& registry, Transport* transport = nullptr);

}  // namespace ez::modelhub
