#include "bundle.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "semcom/error.hpp"

namespace semcom::detail {

namespace fs = std::filesystem;

namespace {

template <typename U>
void append_le(std::vector<unsigned char>& out, U bits) {
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xFF));
  }
}

template <typename U>
U read_le(const std::vector<unsigned char>& in, std::size_t offset) {
  if (offset + sizeof(U) > in.size()) {
    throw FormatError("binary truncated: read at byte offset " +
                      std::to_string(offset) + " past length " +
                      std::to_string(in.size()));
  }
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    bits |= static_cast<U>(in[offset + b]) << (8 * b);
  }
  return bits;
}

}  // namespace

std::string crc32_hex(const std::vector<unsigned char>& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return std::string("crc32:") + buf;
}

void append_f32le(std::vector<unsigned char>& out, double value) {
  append_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
}

void append_f64le(std::vector<unsigned char>& out, double value) {
  append_le(out, std::bit_cast<std::uint64_t>(value));
}

double read_f32le(const std::vector<unsigned char>& in, std::size_t offset) {
  return std::bit_cast<float>(read_le<std::uint32_t>(in, offset));
}

double read_f64le(const std::vector<unsigned char>& in, std::size_t offset) {
  return std::bit_cast<double>(read_le<std::uint64_t>(in, offset));
}

std::size_t dtype_width(const std::string& dtype) {
  if (dtype == "f32le") return 4;
  if (dtype == "f64le") return 8;
  throw FormatError("field 'dtype': unsupported value '" + dtype + "'");
}

void write_bundle(const fs::path& manifest_path, nlohmann::json manifest,
                  const std::vector<unsigned char>& bytes) {
  fs::path data_path = manifest_path;
  data_path.replace_extension(".bin");
  if (manifest_path.has_parent_path()) {
    fs::create_directories(manifest_path.parent_path());
  }
  manifest["data_file"] = data_path.filename().string();
  manifest["byte_length"] = bytes.size();
  manifest["checksum"] = crc32_hex(bytes);

  std::ofstream bin(data_path, std::ios::binary | std::ios::trunc);
  bin.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!bin) throw Error("cannot write " + data_path.string());

  std::ofstream text(manifest_path, std::ios::trunc);
  text << manifest.dump(2) << '\n';
  if (!text) throw Error("cannot write " + manifest_path.string());
}

Bundle read_bundle(const fs::path& manifest_path,
                   std::string_view expected_format) {
  std::ifstream text(manifest_path);
  if (!text) throw FormatError("cannot open " + manifest_path.string());
  Bundle out;
  try {
    out.manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  if (!out.manifest.is_object()) {
    throw FormatError(manifest_path.string() + ": manifest is not an object");
  }
  const std::string format = require_string(out.manifest, "format");
  if (format != expected_format) {
    throw FormatError("field 'format': expected '" +
                      std::string(expected_format) + "', found '" + format +
                      "'");
  }

  const fs::path data_path =
      manifest_path.parent_path() / require_string(out.manifest, "data_file");
  std::ifstream bin(data_path, std::ios::binary);
  if (!bin) throw FormatError("cannot open " + data_path.string());
  out.bytes.assign(std::istreambuf_iterator<char>(bin),
                   std::istreambuf_iterator<char>());

  const std::uint64_t expected = require_uint(out.manifest, "byte_length");
  if (out.bytes.size() < expected) {
    throw FormatError("binary truncated at byte offset " +
                      std::to_string(out.bytes.size()) + ", manifest declares " +
                      std::to_string(expected) + " bytes");
  }
  if (out.bytes.size() > expected) {
    throw FormatError("field 'byte_length': binary has " +
                      std::to_string(out.bytes.size()) +
                      " bytes, manifest declares " + std::to_string(expected));
  }
  const std::string checksum = require_string(out.manifest, "checksum");
  if (checksum != crc32_hex(out.bytes)) {
    throw FormatError("field 'checksum': mismatch (manifest " + checksum +
                      ", data " + crc32_hex(out.bytes) + ")");
  }
  return out;
}

std::uint64_t require_uint(const nlohmann::json& m, const std::string& key) {
  if (!m.contains(key) || !m[key].is_number_unsigned()) {
    throw FormatError("field '" + key + "': missing or not an unsigned integer");
  }
  return m[key].get<std::uint64_t>();
}

std::string require_string(const nlohmann::json& m, const std::string& key) {
  if (!m.contains(key) || !m[key].is_string()) {
    throw FormatError("field '" + key + "': missing or not a string");
  }
  return m[key].get<std::string>();
}

}  // namespace semcom::detail
