#include "dcmr/container.hpp"

#include <cmath>
#include <cstring>

#include "dcmr/io.hpp"

namespace dcmr::container {

namespace {

std::string header(DType dt, int h, int w) {
  std::string out(kMagic, 4);
  io::put_u32(out, kVersion);
  io::put_u32(out, static_cast<std::uint32_t>(dt));
  io::put_u32(out, static_cast<std::uint32_t>(h));
  io::put_u32(out, static_cast<std::uint32_t>(w));
  return out;
}

struct Header {
  DType dtype;
  int height;
  int width;
};

Header parse_header(io::Reader& in, const std::string& source) {
  const std::string magic = in.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError(source + ": bad magic (not a CMRS slice file)");
  const auto version = in.u32();
  if (version != kVersion) throw FormatError(source + ": unsupported version " + std::to_string(version));
  const auto dt = in.u32();
  if (dt != 1 && dt != 2) throw FormatError(source + ": unknown dtype code " + std::to_string(dt));
  const auto h = in.u32(), w = in.u32();
  if (h == 0 || w == 0 || h > (1u << 16) || w > (1u << 16))
    throw FormatError(source + ": invalid dimensions " + std::to_string(h) + "x" + std::to_string(w));
  return {static_cast<DType>(dt), static_cast<int>(h), static_cast<int>(w)};
}

void check_payload(io::Reader& in, std::size_t expected, const std::string& source) {
  if (in.remaining() != expected)
    throw FormatError(source + ": payload is " + std::to_string(in.remaining()) + " bytes, expected " +
                      std::to_string(expected));
}

}  // namespace

std::string encode(const RealImage& img) {
  std::string out = header(DType::real32, img.height, img.width);
  out.append(reinterpret_cast<const char*>(img.data.data()), img.size() * sizeof(float));
  return out;
}

std::string encode(const ComplexGrid& grid) {
  std::string out = header(DType::complex64, grid.height, grid.width);
  out.append(reinterpret_cast<const char*>(grid.data.data()), grid.size() * sizeof(std::complex<float>));
  return out;
}

RealImage decode_real(const std::string& bytes, const std::string& source) {
  io::Reader in(bytes, source);
  const Header h = parse_header(in, source);
  if (h.dtype != DType::real32) throw FormatError(source + ": expected real32 payload");
  RealImage img(h.height, h.width);
  check_payload(in, img.size() * sizeof(float), source);
  std::memcpy(img.data.data(), bytes.data() + in.position(), img.size() * sizeof(float));
  return img;
}

ComplexGrid decode_complex(const std::string& bytes, const std::string& source) {
  io::Reader in(bytes, source);
  const Header h = parse_header(in, source);
  if (h.dtype != DType::complex64) throw FormatError(source + ": expected complex64 payload");
  ComplexGrid g(h.height, h.width);
  check_payload(in, g.size() * sizeof(std::complex<float>), source);
  std::memcpy(g.data.data(), bytes.data() + in.position(), g.size() * sizeof(std::complex<float>));
  return g;
}

void write(const std::filesystem::path& path, const RealImage& img) { io::write_file_atomic(path, encode(img)); }
void write(const std::filesystem::path& path, const ComplexGrid& grid) { io::write_file_atomic(path, encode(grid)); }
RealImage read_real(const std::filesystem::path& path) { return decode_real(io::read_file(path), path.string()); }
ComplexGrid read_complex(const std::filesystem::path& path) {
  return decode_complex(io::read_file(path), path.string());
}

}  // namespace dcmr::container
