// On-disk formats.
//
//   <stem>.hdr  "CPX1\n<ncoils> <height> <width>\n"
//   <stem>.cpx  little-endian float32, interleaved re/im, coil-major, row-major
//   <stem>.msk  "MSK1\n<height> <width> <accel> <center_lines>\n" + height*width bytes of 0/1
//
// Every writer goes through a temp file and a rename so readers never see a
// partially written artifact.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "londn/image.hpp"

namespace londn {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
 public:
  IoError(const fs::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what) {}
};

namespace detail {

inline void put_f32le(std::string& out, double v) {
  const auto f = static_cast<float>(v);
  std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  char buf[4];
  std::memcpy(buf, &bits, 4);
  out.append(buf, 4);
}

inline double get_f32le(const char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  return static_cast<double>(std::bit_cast<float>(bits));
}

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline fs::path with_suffix(const fs::path& stem, const char* ext) {
  return fs::path(stem.string() + ext);
}

}  // namespace detail

/// Writes `bytes` to `path` via `<path>.tmp` + rename.
inline void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp, "cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(tmp, "write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(path, "rename failed: " + ec.message());
}

inline std::string read_file(const fs::path& path) { return detail::slurp(path); }

inline void write_complex(const fs::path& stem, const CoilStack& planes) {
  std::string hdr = "CPX1\n" + std::to_string(planes.ncoils()) + " " +
                    std::to_string(planes.height()) + " " + std::to_string(planes.width()) + "\n";
  std::string data;
  data.reserve(planes.ncoils() * planes.height() * planes.width() * 8);
  for (const auto& p : planes)
    for (const auto& z : p.data()) {
      detail::put_f32le(data, z.real());
      detail::put_f32le(data, z.imag());
    }
  write_file_atomic(detail::with_suffix(stem, ".cpx"), data);
  write_file_atomic(detail::with_suffix(stem, ".hdr"), hdr);
}

inline void write_complex(const fs::path& stem, const ComplexImage& img) {
  write_complex(stem, CoilStack(std::vector<ComplexImage>{img}));
}

inline CoilStack read_complex(const fs::path& stem) {
  const fs::path hdr_path = detail::with_suffix(stem, ".hdr");
  const fs::path cpx_path = detail::with_suffix(stem, ".cpx");
  std::istringstream hdr(detail::slurp(hdr_path));
  std::string magic;
  long long nc = -1, h = -1, w = -1;
  if (!std::getline(hdr, magic) || magic != "CPX1") throw IoError(hdr_path, "bad magic, expected CPX1");
  if (!(hdr >> nc >> h >> w) || nc <= 0 || h <= 0 || w <= 0)
    throw IoError(hdr_path, "malformed dimension line");
  std::string rest;
  hdr >> std::ws;
  if (std::getline(hdr, rest) && !rest.empty()) throw IoError(hdr_path, "trailing header content");

  const std::string data = detail::slurp(cpx_path);
  const auto expect = static_cast<std::size_t>(nc * h * w * 8);
  if (data.size() != expect)
    throw IoError(cpx_path, "size mismatch: header declares " + std::to_string(expect) +
                                " bytes, file has " + std::to_string(data.size()));
  std::vector<ComplexImage> planes;
  planes.reserve(static_cast<std::size_t>(nc));
  const char* p = data.data();
  for (long long c = 0; c < nc; ++c) {
    ComplexImage img(static_cast<std::size_t>(h), static_cast<std::size_t>(w));
    for (auto& z : img.data()) {
      z = {detail::get_f32le(p), detail::get_f32le(p + 4)};
      p += 8;
    }
    if (!img.all_finite()) throw IoError(cpx_path, "non-finite value");
    planes.push_back(std::move(img));
  }
  return CoilStack(std::move(planes));
}

inline ComplexImage read_image(const fs::path& stem) {
  CoilStack s = read_complex(stem);
  if (s.ncoils() != 1) throw IoError(stem, "expected a single plane, found " + std::to_string(s.ncoils()));
  return s[0];
}

inline std::string format_number(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

/// `path` is the stem; `.msk` is appended.
inline void write_mask(const fs::path& stem, const SamplingMask& mask) {
  std::string out = "MSK1\n" + std::to_string(mask.height()) + " " + std::to_string(mask.width()) +
                    " " + format_number(mask.accel()) + " " + std::to_string(mask.center_lines()) +
                    "\n";
  for (auto b : mask.grid()) out.push_back(static_cast<char>(b));
  write_file_atomic(detail::with_suffix(stem, ".msk"), out);
}

inline SamplingMask read_mask(const fs::path& stem) {
  const fs::path path = detail::with_suffix(stem, ".msk");
  const std::string bytes = detail::slurp(path);
  std::size_t nl1 = bytes.find('\n');
  if (nl1 == std::string::npos || bytes.substr(0, nl1) != "MSK1") throw IoError(path, "bad magic, expected MSK1");
  std::size_t nl2 = bytes.find('\n', nl1 + 1);
  if (nl2 == std::string::npos) throw IoError(path, "missing dimension line");
  std::istringstream line(bytes.substr(nl1 + 1, nl2 - nl1 - 1));
  long long h = -1, w = -1, center = -1;
  double accel = 0.0;
  if (!(line >> h >> w >> accel >> center) || h <= 0 || w <= 0 || center < 0 || !(accel > 0.0))
    throw IoError(path, "malformed dimension line");
  const std::size_t n = static_cast<std::size_t>(h * w);
  if (bytes.size() - (nl2 + 1) != n)
    throw IoError(path, "size mismatch: expected " + std::to_string(n) + " mask bytes");
  std::vector<std::uint8_t> grid(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto b = static_cast<std::uint8_t>(bytes[nl2 + 1 + k]);
    if (b > 1) throw IoError(path, "non-binary byte " + std::to_string(b) + " at offset " + std::to_string(k));
    grid[k] = b;
  }
  try {
    return SamplingMask::from_grid(static_cast<std::size_t>(h), static_cast<std::size_t>(w),
                                   std::move(grid), accel, static_cast<std::size_t>(center));
  } catch (const std::invalid_argument& e) {
    throw IoError(path, e.what());
  }
}

inline CoilSensitivities read_smaps(const fs::path& stem) {
  // Renormalize to undo float32 quantization of the stored maps.
  return CoilSensitivities::normalized(read_complex(stem));
}

}  // namespace londn
