#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dcmr::io {

/// Writes via a sibling temp file and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

/// Little-endian append/consume helpers for binary formats.
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f32(std::string& out, float v);

class Reader {
 public:
  Reader(const std::string& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  std::string take(std::size_t n);
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n);
  const std::string& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace dcmr::io
