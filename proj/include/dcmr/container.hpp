#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dcmr/image.hpp"

namespace dcmr::container {

// Slice file layout, all little-endian:
//   "CMRS" | u32 version | u32 dtype | u32 height | u32 width | payload
// Payload is row-major float32, or interleaved (re, im) float32 pairs.
inline constexpr char kMagic[4] = {'C', 'M', 'R', 'S'};
inline constexpr std::uint32_t kVersion = 1;

enum class DType : std::uint32_t { real32 = 1, complex64 = 2 };

std::string encode(const RealImage& img);
std::string encode(const ComplexGrid& grid);
RealImage decode_real(const std::string& bytes, const std::string& source = "<memory>");
ComplexGrid decode_complex(const std::string& bytes, const std::string& source = "<memory>");

void write(const std::filesystem::path& path, const RealImage& img);
void write(const std::filesystem::path& path, const ComplexGrid& grid);
RealImage read_real(const std::filesystem::path& path);
ComplexGrid read_complex(const std::filesystem::path& path);

}  // namespace dcmr::container
