#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ez::tarball {

struct Entry {
  std::string path;   // relative, forward slashes
  std::string bytes;
};

// Uncompressed POSIX ustar archive with regular files only. pack is used by
// tests and fixture tooling; unpack is what from_pretrained runs on verified
// downloads.
std::string pack(const std::vector<Entry>& entries);

// Extracts into dest, creating parent directories. Rejects absolute paths,
// parent references, links, and truncated archives (CorruptArchive).
std::vector<std::filesystem::path> unpack(const std::string& bytes,
                                          const std::filesystem::path& dest);

}  // namespace ez::tarball
