#pragma once

// Image files: binary PGM (P5, 8/16 bit), PFM grayscale ("Pf", 32-bit
// float) and a raw format for any rank:
//
//   "SNR1" | u8 rank | u8 dtype (0 = f64 LE) | u16 pad | rank x u32 extents (LE) | samples
//
// Samples are row-major with the first axis slowest everywhere. PFM stores
// rows bottom to top, so row 0 of the grid is the last row in the file.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stripefree/errors.hpp"
#include "stripefree/grid.hpp"

namespace stripefree::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

namespace detail {

inline std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_all(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

template <typename T>
T byteswap_value(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  std::memcpy(&v, b, sizeof(T));
  return v;
}

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
  return v;
}

template <typename T>
void append_le(std::string& s, T v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  s.append(b, sizeof(T));
}

// Netpbm-style header tokens separated by whitespace, '#' comments allowed.
class HeaderReader {
 public:
  HeaderReader(const std::string& bytes, std::size_t pos) : s_(bytes), pos_(pos) {}

  std::string token() {
    for (;;) {
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
        continue;
      }
      break;
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) throw IoError("truncated header");
    return s_.substr(start, pos_ - start);
  }

  // Consumes the single whitespace byte that ends the header.
  std::size_t data_start() {
    if (pos_ >= s_.size()) throw IoError("truncated header");
    return pos_ + 1;
  }

 private:
  const std::string& s_;
  std::size_t pos_;
};

inline std::size_t parse_size(const std::string& t, const char* what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(t, &used);
    if (used != t.size() || v <= 0) throw IoError(std::string("bad ") + what + ": " + t);
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw IoError(std::string("bad ") + what + ": " + t);
  }
}

}  // namespace detail

/// Reads P5. Samples are returned as raw integer values (0..maxval).
inline ImageGrid read_pgm(const std::filesystem::path& path) {
  const std::string bytes = detail::read_all(path);
  if (bytes.size() < 2 || bytes.compare(0, 2, "P5") != 0) throw IoError(path.string() + ": not a binary PGM");
  detail::HeaderReader h(bytes, 2);
  const std::size_t w = detail::parse_size(h.token(), "width");
  const std::size_t ht = detail::parse_size(h.token(), "height");
  const std::size_t maxval = detail::parse_size(h.token(), "maxval");
  if (maxval > 65535) throw IoError(path.string() + ": maxval above 65535");
  const std::size_t start = h.data_start();
  const std::size_t bps = maxval < 256 ? 1 : 2;
  if (bytes.size() < start + w * ht * bps) throw IoError(path.string() + ": truncated pixel data");
  ImageGrid u(Shape{ht, w});
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + start);
  for (std::size_t i = 0; i < w * ht; ++i)
    u[i] = bps == 1 ? p[i] : static_cast<double>((p[2 * i] << 8) | p[2 * i + 1]);
  return u;
}

/// Writes P5 with the given maxval (255 -> 8 bit, up to 65535 -> 16 bit big
/// endian). Values are rounded and clamped to [0, maxval].
inline void write_pgm(const std::filesystem::path& path, const ImageGrid& u, unsigned maxval = 255) {
  if (u.shape().rank() != 2) throw IoError("PGM holds 2D images only");
  if (maxval < 1 || maxval > 65535) throw IoError("PGM maxval must lie in [1, 65535]");
  const std::size_t h = u.shape().extent(0), w = u.shape().extent(1);
  std::string s = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
  for (double v : u.values()) {
    const double c = std::isfinite(v) ? std::clamp(std::round(v), 0.0, static_cast<double>(maxval)) : 0.0;
    const auto q = static_cast<unsigned>(c);
    if (maxval < 256) {
      s.push_back(static_cast<char>(q));
    } else {
      s.push_back(static_cast<char>(q >> 8));
      s.push_back(static_cast<char>(q & 0xff));
    }
  }
  detail::write_all(path, s);
}

/// Reads grayscale PFM; the sign of the scale line gives the byte order.
inline ImageGrid read_pfm(const std::filesystem::path& path) {
  const std::string bytes = detail::read_all(path);
  if (bytes.size() < 2 || bytes.compare(0, 2, "Pf") != 0) throw IoError(path.string() + ": not a grayscale PFM");
  detail::HeaderReader h(bytes, 2);
  const std::size_t w = detail::parse_size(h.token(), "width");
  const std::size_t ht = detail::parse_size(h.token(), "height");
  double scale = 0.0;
  try {
    scale = std::stod(h.token());
  } catch (const std::logic_error&) {
    throw IoError(path.string() + ": bad PFM scale");
  }
  if (scale == 0.0) throw IoError(path.string() + ": PFM scale is zero");
  const bool little = scale < 0.0;
  const std::size_t start = h.data_start();
  if (bytes.size() < start + 4 * w * ht) throw IoError(path.string() + ": truncated pixel data");
  ImageGrid u(Shape{ht, w});
  for (std::size_t r = 0; r < ht; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      float f;
      std::memcpy(&f, bytes.data() + start + 4 * (r * w + c), 4);
      if (little != (std::endian::native == std::endian::little)) f = detail::byteswap_value(f);
      u[(ht - 1 - r) * w + c] = f;
    }
  return u;
}

/// Writes little-endian grayscale PFM (scale line "-1.0").
inline void write_pfm(const std::filesystem::path& path, const ImageGrid& u) {
  if (u.shape().rank() != 2) throw IoError("PFM holds 2D images only");
  const std::size_t h = u.shape().extent(0), w = u.shape().extent(1);
  std::string s = "Pf\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1.0\n";
  for (std::size_t r = h; r-- > 0;)
    for (std::size_t c = 0; c < w; ++c) detail::append_le(s, static_cast<float>(u[r * w + c]));
  detail::write_all(path, s);
}

inline ImageGrid read_raw(const std::filesystem::path& path) {
  const std::string bytes = detail::read_all(path);
  if (bytes.size() < 8 || bytes.compare(0, 4, "SNR1") != 0) throw IoError(path.string() + ": not an SNR1 file");
  const auto d = static_cast<unsigned char>(bytes[4]);
  const auto dtype = static_cast<unsigned char>(bytes[5]);
  if (d < 1 || d > kMaxRank) throw IoError(path.string() + ": unsupported rank " + std::to_string(d));
  if (dtype != 0) throw IoError(path.string() + ": unsupported sample type " + std::to_string(dtype));
  const std::size_t header = 8 + 4 * d;
  if (bytes.size() < header) throw IoError(path.string() + ": truncated header");
  std::vector<std::size_t> ext;
  for (std::size_t k = 0; k < d; ++k) {
    const auto e = detail::load_le<std::uint32_t>(bytes.data() + 8 + 4 * k);
    if (e == 0) throw IoError(path.string() + ": zero extent");
    ext.push_back(e);
  }
  ImageGrid u{Shape(ext)};
  if (bytes.size() != header + 8 * u.size()) throw IoError(path.string() + ": sample count does not match extents");
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = detail::load_le<double>(bytes.data() + header + 8 * i);
  return u;
}

inline void write_raw(const std::filesystem::path& path, const ImageGrid& u) {
  std::string s = "SNR1";
  const std::size_t d = u.shape().rank();
  s.push_back(static_cast<char>(d));
  s.push_back(0);
  detail::append_le<std::uint16_t>(s, 0);
  for (std::size_t k = 0; k < d; ++k) detail::append_le(s, static_cast<std::uint32_t>(u.shape().extent(k)));
  for (double v : u.values()) detail::append_le(s, v);
  detail::write_all(path, s);
}

/// Dispatches on the file's magic bytes.
inline ImageGrid read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  if (magic[0] == 'P' && magic[1] == 'f') return read_pfm(path);
  if (std::memcmp(magic, "SNR1", 4) == 0) return read_raw(path);
  throw IoError(path.string() + ": unrecognized image format");
}

/// Dispatches on the extension: .pgm (16 bit), .pfm, anything else raw.
inline void write_image(const std::filesystem::path& path, const ImageGrid& u) {
  const std::string ext = path.extension().string();
  if (ext == ".pgm") return write_pgm(path, u, 65535);
  if (ext == ".pfm") return write_pfm(path, u);
  write_raw(path, u);
}

}  // namespace stripefree::io
