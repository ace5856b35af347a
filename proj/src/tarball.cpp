#include "ez/tarball.hpp"

#include <cstring>
#include <fstream>

#include "ez/error.hpp"

namespace ez::tarball {

namespace {

constexpr std::size_t kBlock = 512;

void write_octal(char* field, std::size_t width, std::uint64_t value) {
  // Width includes the trailing NUL.
  std::snprintf(field, width, "%0*llo", static_cast<int>(width - 1),
                static_cast<unsigned long long>(value));
}

std::uint64_t read_octal(const char* field, std::size_t width) {
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < width; ++i) {
    char c = field[i];
    if (c == '\0' || c == ' ') break;
    if (c < '0' || c > '7') raise(ErrorKind::CorruptArchive, "bad octal field in tar header");
    value = value * 8 + static_cast<std::uint64_t>(c - '0');
  }
  return value;
}

bool all_zero(const char* block) {
  for (std::size_t i = 0; i < kBlock; ++i)
    if (block[i] != '\0') return false;
  return true;
}

}  // namespace

std::string pack(const std::vector<Entry>& entries) {
  std::string out;
  for (const auto& entry : entries) {
    if (entry.path.empty() || entry.path.size() > 99)
      raise(ErrorKind::CorruptArchive, "tar entry path empty or longer than 99 bytes");

    char header[kBlock];
    std::memset(header, 0, kBlock);
    std::memcpy(header, entry.path.data(), entry.path.size());
    write_octal(header + 100, 8, 0644);                 // mode
    write_octal(header + 108, 8, 0);                    // uid
    write_octal(header + 116, 8, 0);                    // gid
    write_octal(header + 124, 12, entry.bytes.size());  // size
    write_octal(header + 136, 12, 0);                   // mtime
    header[156] = '0';                                  // regular file
    std::memcpy(header + 257, "ustar", 6);
    std::memcpy(header + 263, "00", 2);

    std::memset(header + 148, ' ', 8);
    std::uint64_t checksum = 0;
    for (std::size_t i = 0; i < kBlock; ++i)
      checksum += static_cast<unsigned char>(header[i]);
    std::snprintf(header + 148, 7, "%06llo", static_cast<unsigned long long>(checksum));
    header[154] = '\0';
    header[155] = ' ';

    out.append(header, kBlock);
    out.append(entry.bytes);
    if (entry.bytes.size() % kBlock)
      out.append(kBlock - entry.bytes.size() % kBlock, '\0');
  }
  out.append(2 * kBlock, '\0');
  return out;
}

std::vector<std::filesystem::path> unpack(const std::string& bytes,
                                          const std::filesystem::path& dest) {
  std::vector<std::filesystem::path> written;
  std::size_t off = 0;
  while (off + kBlock <= bytes.size()) {
    const char* header = bytes.data() + off;
    if (all_zero(header)) break;  // end-of-archive marker

    char name_buf[101];
    std::memcpy(name_buf, header, 100);
    name_buf[100] = '\0';
    std::string name(name_buf);
    std::uint64_t size = read_octal(header + 124, 12);
    char type = header[156];
    off += kBlock;

    if (off + size > bytes.size())
      raise(ErrorKind::CorruptArchive, "tar entry '" + name + "' is truncated");
    if (type != '0' && type != '\0')
      raise(ErrorKind::CorruptArchive, "unsupported tar entry type for '" + name + "'");

    std::filesystem::path rel(name);
    if (rel.is_absolute() || name.find("..") != std::string::npos)
      raise(ErrorKind::CorruptArchive, "unsafe tar path '" + name + "'");

    auto target = dest / rel;
    if (target.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(target.parent_path(), ec);
      if (ec) raise(ErrorKind::IoError, "cannot create " + target.parent_path().string());
    }
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::IoError, "cannot open " + target.string());
    out.write(bytes.data() + off, static_cast<std::streamsize>(size));
    out.flush();
    if (!out) raise(ErrorKind::IoError, "write failed for " + target.string());
    written.push_back(target);

    off += size;
    if (size % kBlock) off += kBlock - size % kBlock;
  }
  return written;
}

}  // namespace ez::tarball
