#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace resolvit {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file_hex(const std::filesystem::path &path);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text); // throws CorruptState on bad input

std::string read_file(const std::filesystem::path &path); // throws NotFound

// Write via temp file in the same directory, then rename over the target.
void atomic_write_file(const std::filesystem::path &path, std::string_view bytes);

} // namespace resolvit
