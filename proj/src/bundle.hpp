#pragma once

// Manifest + flat binary file pairs shared by the dataset, generator and
// cache formats.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace semcom::detail {

struct Bundle {
  nlohmann::json manifest;
  std::vector<unsigned char> bytes;
};

// Writes the binary next to the manifest (same stem, ".bin") and records
// data_file, byte_length and a crc32 checksum in the manifest.
void write_bundle(const std::filesystem::path& manifest_path,
                  nlohmann::json manifest,
                  const std::vector<unsigned char>& bytes);

// Validates the format tag, length and checksum. Throws FormatError.
Bundle read_bundle(const std::filesystem::path& manifest_path,
                   std::string_view expected_format);

std::string crc32_hex(const std::vector<unsigned char>& bytes);

void append_f32le(std::vector<unsigned char>& out, double value);
void append_f64le(std::vector<unsigned char>& out, double value);
double read_f32le(const std::vector<unsigned char>& in, std::size_t offset);
double read_f64le(const std::vector<unsigned char>& in, std::size_t offset);

// Typed manifest accessors; errors name the offending field.
std::uint64_t require_uint(const nlohmann::json& m, const std::string& key);
std::string require_string(const nlohmann::json& m, const std::string& key);

std::size_t dtype_width(const std::string& dtype);

}  // namespace semcom::detail
