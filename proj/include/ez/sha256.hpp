#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ez::hashing {

std::string sha256_hex(std::string_view bytes);
std::string sha256_hex_file(const std::filesystem::path& path);

bool is_sha256_hex(std::string_view s);

}  // namespace ez::hashing
