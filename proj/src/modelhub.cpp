#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "ez/modelhub.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ez/error.hpp"
#include "ez/sha256.hpp"
#include "ez/tarball.hpp"

namespace ez::modelhub {

namespace {

using nlohmann::json;

bool is_url(const std::string& s) {
  return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0;
}

class HttpTransport final : public Transport {
 public:
  void fetch(const std::string& url, std::uint64_t offset, std::ostream& sink) override {
    auto slash = url.find('/', url.find("://") + 3);
    std::string origin = slash == std::string::npos ? url : url.substr(0, slash);
    std::string path = slash == std::string::npos ? "/" : url.substr(slash);

    httplib::Client client(origin);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(60, 0);

    httplib::Headers headers;
    if (offset > 0)
      headers.emplace("Range", "bytes=" + std::to_string(offset) + "-");

    auto res = client.Get(path, headers, [&](const char* data, size_t len) {
      sink.write(data, static_cast<std::streamsize>(len));
      return static_cast<bool>(sink);
    });
    if (!res)
      raise(ErrorKind::DownloadError, url + ": " + httplib::to_string(res.error()));
    if (offset > 0 && res->status == 200)
      raise(ErrorKind::DownloadError, url + ": server ignored the Range request");
    if (res->status != 200 && res->status != 206)
      raise(ErrorKind::DownloadError, url + ": HTTP " + std::to_string(res->status));
    if (!sink) raise(ErrorKind::DownloadError, url + ": sink write failed");
  }
};

// Exclusive advisory lock held for the lifetime of the object.
class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) raise(ErrorKind::IoError, "cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      raise(ErrorKind::IoError, "cannot lock " + path.string());
    }
  }
  ~FileLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

ModelRef parse_ref(const std::string& id, const json& obj) {
  ModelRef ref;
  ref.id = id;
  try {
    ref.url = obj.at("url").get<std::string>();
    ref.sha256 = obj.at("sha256").get<std::string>();
    for (const auto& f : obj.at("files"))
      ref.files.push_back({f.at("path").get<std::string>(), f.at("role").get<std::string>()});
  } catch (const json::exception& e) {
    raise(ErrorKind::MalformedRegistry, "entry '" + id + "': " + e.what());
  }
  if (!hashing::is_sha256_hex(ref.sha256))
    raise(ErrorKind::MalformedRegistry, "entry '" + id + "': sha256 is not 64 lowercase hex digits");
  std::size_t n_config = 0, n_weights = 0;
  for (const auto& f : ref.files) {
    if (f.role == "config")
      ++n_config;
    else if (f.role == "weights")
      ++n_weights;
    else
      raise(ErrorKind::MalformedRegistry, "entry '" + id + "': unknown role '" + f.role + "'");
    if (f.path.empty() || std::filesystem::path(f.path).is_absolute() ||
        f.path.find("..") != std::string::npos)
      raise(ErrorKind::MalformedRegistry, "entry '" + id + "': unsafe file path '" + f.path + "'");
  }
  if (n_config != 1 || n_weights != 1)
    raise(ErrorKind::MalformedRegistry,
          "entry '" + id + "': needs exactly one config and one weights file");
  return ref;
}

std::string load_registry_text(const std::string& registry, Transport* transport) {
  if (is_url(registry)) {
    std::shared_ptr<Transport> fallback;
    if (!transport) {
      fallback = http_transport();
      transport = fallback.get();
    }
    std::ostringstream buf;
    transport->fetch(registry, 0, buf);
    return buf.str();
  }
  std::ifstream in(registry, std::ios::binary);
  if (!in) raise(ErrorKind::MalformedRegistry, "cannot open registry " + registry);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ModelBundle bundle_from_dir(const std::filesystem::path& dir, const ModelRef& ref) {
  ModelBundle bundle;
  bundle.resolved_ref = ref;
  for (const auto& f : ref.files) {
    auto path = dir / f.path;
    if (!std::filesystem::exists(path))
      raise(ErrorKind::CorruptArchive, "bundle file missing: " + path.string());
    if (f.role == "config")
      bundle.config_path = path;
    else
      bundle.weights_path = path;
  }
  return bundle;
}

}  // namespace

std::shared_ptr<Transport> http_transport() { return std::make_shared<HttpTransport>(); }

Registry parse_registry(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    raise(ErrorKind::MalformedRegistry, e.what());
  }
  if (!doc.is_object()) raise(ErrorKind::MalformedRegistry, "registry must be a JSON object");
  Registry registry;
  for (const auto& [id, obj] : doc.items()) registry.emplace(id, parse_ref(id, obj));
  return registry;
}

std::string serialize_registry(const Registry& registry) {
  json doc = json::object();
  for (const auto& [id, ref] : registry) {
    json files = json::array();
    for (const auto& f : ref.files) files.push_back({{"path", f.path}, {"role", f.role}});
    doc[id] = {{"url", ref.url}, {"sha256", ref.sha256}, {"files", files}};
  }
  return doc.dump(2);
}

ModelRef resolve_model(const std::string& id, const std::string& registry, Transport* transport) {
  Registry parsed = parse_registry(load_registry_text(registry, transport));
  auto it = parsed.find(id);
  if (it == parsed.end()) raise(ErrorKind::UnknownModel, "no model '" + id + "' in registry");
  return it->second;
}

std::filesystem::path default_cache_root() {
  if (const char* home = std::getenv("EZ_HOME"); home && *home) return home;
  if (const char* home = std::getenv("HOME"); home && *home)
    return std::filesystem::path(home) / ".cache" / "ez";
  return std::filesystem::temp_directory_path() / "ez-cache";
}

ModelBundle from_pretrained(const std::string& id, const std::filesystem::path& cache_root,
                            const std::string& registry, Transport* transport) {
  ModelRef ref = resolve_model(id, registry, transport);

  auto model_dir = cache_root / "models" / id;
  auto final_dir = model_dir / ref.sha256.substr(0, 12);

  // Warm path: the atomically-renamed directory is the completeness marker.
  if (std::filesystem::is_directory(final_dir)) return bundle_from_dir(final_dir, ref);

  std::error_code ec;
  std::filesystem::create_directories(model_dir, ec);
  if (ec) raise(ErrorKind::IoError, "cannot create " + model_dir.string() + ": " + ec.message());

  FileLock lock(model_dir / ".lock");
  if (std::filesystem::is_directory(final_dir)) return bundle_from_dir(final_dir, ref);

  std::shared_ptr<Transport> fallback;
  if (!transport) {
    fallback = http_transport();
    transport = fallback.get();
  }

  auto partial = model_dir / (ref.sha256.substr(0, 12) + ".part");
  std::uint64_t offset = 0;
  if (std::filesystem::exists(partial)) offset = std::filesystem::file_size(partial);
  {
    std::ofstream sink(partial, std::ios::binary | std::ios::app);
    if (!sink) raise(ErrorKind::IoError, "cannot open " + partial.string());
    transport->fetch(ref.url, offset, sink);  // DownloadError keeps the partial
  }

  if (hashing::sha256_hex_file(partial) != ref.sha256) {
    std::filesystem::remove(partial, ec);
    raise(ErrorKind::ChecksumMismatch, "archive for '" + id + "' does not match " + ref.sha256);
  }

  // Unpack into a temp dir, then a single rename makes the entry valid.
  auto tmp_dir = model_dir / (".tmp-" + ref.sha256.substr(0, 12) + "-" +
                              std::to_string(static_cast<long>(::getpid())));
  std::filesystem::remove_all(tmp_dir, ec);
  std::filesystem::create_directories(tmp_dir, ec);
  if (ec) raise(ErrorKind::IoError, "cannot create " + tmp_dir.string() + ": " + ec.message());

  try {
    std::ifstream in(partial, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    tarball::unpack(buf.str(), tmp_dir);
    bundle_from_dir(tmp_dir, ref);  // verify declared files arrived
  } catch (...) {
    std::filesystem::remove_all(tmp_dir, ec);
    std::filesystem::remove(partial, ec);
    throw;
  }

  std::filesystem::rename(tmp_dir, final_dir, ec);
  if (ec) {
    std::filesystem::remove_all(tmp_dir, ec);
    raise(ErrorKind::IoError, "cannot finalize " + final_dir.string());
  }
  std::filesystem::remove(partial, ec);
  return bundle_from_dir(final_dir, ref);
}

}  // namespace ez::modelhub
