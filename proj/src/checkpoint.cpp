#include "ez/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace ez::trainer {

namespace {

constexpr char kMagic[8] = {'E', 'Z', 'C', 'K', 'P', 'T', '0', '1'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) raise(ErrorKind::IoError, "cannot open " + path.string());
    path_ = path;
  }

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }

  void u64(std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    bytes(buf, 8);
  }

  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }

  void array(const NdArray& a) {
    u64(a.rank());
    for (std::size_t d : a.shape()) u64(d);
    for (std::size_t i = 0; i < a.numel(); ++i) f64(a.at(i));
  }

  void finish() {
    out_.flush();
    if (!out_) raise(ErrorKind::IoError, "write failed for " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) raise(ErrorKind::IoError, "cannot open " + path.string());
    path_ = path;
  }

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) corrupt("unexpected end of file");
  }

  std::uint64_t u64() {
    unsigned char buf[8];
    bytes(buf, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    std::uint64_t n = u64();
    if (n > (1ULL << 32)) corrupt("string length out of range");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  NdArray array() {
    std::uint64_t rank = u64();
    if (rank > 8) corrupt("array rank out of range");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) {
      d = static_cast<std::size_t>(u64());
      if (d > (1ULL << 32)) corrupt("array dimension out of range");
    }
    NdArray a(shape);
    if (a.numel() > (1ULL << 32)) corrupt("array size out of range");
    for (std::size_t i = 0; i < a.numel(); ++i) a.at(i) = f64();
    return a;
  }

  void expect_eof() {
    in_.peek();
    if (!in_.eof()) corrupt("trailing bytes");
  }

  [[noreturn]] void corrupt(const std::string& why) {
    raise(ErrorKind::CorruptCheckpoint, path_.string() + ": " + why);
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

void write_param_map(Writer& w, const std::map<std::string, NdArray>& m) {
  w.u64(m.size());
  for (const auto& [name, value] : m) {
    w.str(name);
    w.array(value);
  }
}

std::map<std::string, NdArray> read_param_map(Reader& r) {
  std::map<std::string, NdArray> m;
  std::uint64_t n = r.u64();
  if (n > (1ULL << 24)) r.corrupt("map size out of range");
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = r.str();
    NdArray value = r.array();
    if (!m.emplace(std::move(name), std::move(value)).second) r.corrupt("duplicate parameter");
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  // Write to a temp file then rename so an interrupted save never replaces a
  // good checkpoint with a truncated one.
  auto tmp = path;
  tmp += ".tmp";
  {
    Writer w(tmp);
    w.bytes(kMagic, sizeof(kMagic));
    w.str(ckpt.config_hash);
    w.i64(ckpt.epoch);
    w.i64(ckpt.global_step);
    w.u64(ckpt.rng_state);
    w.f64(ckpt.best_valid_metric);
    w.i64(ckpt.best_epoch);
    w.i64(ckpt.opt.step);
    write_param_map(w, ckpt.params);
    write_param_map(w, ckpt.opt.m);
    write_param_map(w, ckpt.opt.v);
    w.finish();
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) raise(ErrorKind::IoError, "cannot move checkpoint into place: " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  char magic[sizeof(kMagic)];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) r.corrupt("bad magic");

  Checkpoint ckpt;
  ckpt.config_hash = r.str();
  ckpt.epoch = r.i64();
  ckpt.global_step = r.i64();
  ckpt.rng_state = r.u64();
  ckpt.best_valid_metric = r.f64();
  ckpt.best_epoch = r.i64();
  ckpt.opt.step = r.i64();
  ckpt.params = read_param_map(r);
  ckpt.opt.m = read_param_map(r);
  ckpt.opt.v = read_param_map(r);
  r.expect_eof();

  auto same_keys = [&](const std::map<std::string, NdArray>& m) {
    if (m.size() != ckpt.params.size()) return false;
    for (const auto& [name, value] : m)
      if (!ckpt.params.count(name)) return false;
    return true;
  };
  if (!same_keys(ckpt.opt.m) || !same_keys(ckpt.opt.v))
    r.corrupt("optimizer state keys do not match parameters");
  return ckpt;
}

}  // namespace ez::trainer
