#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mgfa/errors.hpp"

namespace mgfa {

// Row-major images with values in [0, 1]. RGB is interleaved.
struct GrayImage {
  int width = 0, height = 0;
  std::vector<double> pixels;

  double at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

struct RgbImage {
  int width = 0, height = 0;
  std::vector<double> pixels;  // 3 values per pixel

  double at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  double& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

inline GrayImage make_gray(int width, int height, double fill = 0.0) {
  GrayImage img;
  img.width = width;
  img.height = height;
  img.pixels.assign(static_cast<std::size_t>(width) * height, fill);
  return img;
}

inline RgbImage make_rgb(int width, int height, double fill = 0.0) {
  RgbImage img;
  img.width = width;
  img.height = height;
  img.pixels.assign(static_cast<std::size_t>(width) * height * 3, fill);
  return img;
}

// Unweighted channel mean; mask sources are near-binary so luma weights
// would not change anything.
inline GrayImage to_gray(const RgbImage& rgb) {
  GrayImage g = make_gray(rgb.width, rgb.height);
  for (std::size_t i = 0; i < g.pixels.size(); ++i)
    g.pixels[i] = (rgb.pixels[3 * i] + rgb.pixels[3 * i + 1] + rgb.pixels[3 * i + 2]) / 3.0;
  return g;
}

namespace detail {

constexpr long kMaxImageDim = 1 << 20;

inline std::uint8_t quantize(double v) {
  const double scaled = std::round(v * 255.0);
  if (scaled <= 0.0) return 0;
  if (scaled >= 255.0) return 255;
  return static_cast<std::uint8_t>(scaled);
}

// Reads one whitespace-separated integer token, skipping '#' comments.
inline long read_pnm_int(std::istream& in, const std::string& path) {
  int ch = in.get();
  while (ch != EOF && (std::isspace(ch) || ch == '#')) {
    if (ch == '#')
      while (ch != EOF && ch != '\n') ch = in.get();
    ch = in.get();
  }
  if (ch == EOF) throw truncated_error(path + ": header ends prematurely");
  if (!std::isdigit(ch)) throw format_error(path + ": malformed header token");
  long value = 0;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    if (value > kMaxImageDim * 256L)
      throw format_error(path + ": header value overflows supported range");
    ch = in.get();
  }
  if (ch != EOF) in.unget();
  return value;
}

inline std::vector<std::uint8_t> read_pnm_body(std::istream& in, const std::string& magic,
                                               const std::string& path, int channels, int& width,
                                               int& height) {
  const long w = read_pnm_int(in, path);
  const long h = read_pnm_int(in, path);
  const long maxval = read_pnm_int(in, path);
  if (w <= 0 || h <= 0 || w > kMaxImageDim || h > kMaxImageDim || w * h > kMaxImageDim)
    throw format_error(path + ": dimensions " + std::to_string(w) + "x" + std::to_string(h) +
                       " overflow supported range");
  if (maxval != 255)
    throw format_error(path + ": unsupported maxval " + std::to_string(maxval) +
                       " (only 255 is supported)");
  in.get();  // single whitespace byte separating header from body
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
  std::vector<std::uint8_t> body(need);
  in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(need));
  if (static_cast<std::size_t>(in.gcount()) != need)
    throw truncated_error(path + ": " + magic + " body has " + std::to_string(in.gcount()) +
                          " bytes, expected " + std::to_string(need));
  width = static_cast<int>(w);
  height = static_cast<int>(h);
  return body;
}

inline std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  return in;
}

inline void check_magic(std::istream& in, const char* want, const std::string& path) {
  char m[2] = {0, 0};
  in.read(m, 2);
  if (in.gcount() != 2 || m[0] != want[0] || m[1] != want[1])
    throw bad_magic_error(path + ": not a " + want + " file");
}

}  // namespace detail

inline RgbImage read_ppm(const std::filesystem::path& path) {
  auto in = detail::open_binary(path);
  detail::check_magic(in, "P6", path.string());
  RgbImage img;
  const auto body = detail::read_pnm_body(in, "P6", path.string(), 3, img.width, img.height);
  img.pixels.resize(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) img.pixels[i] = body[i] / 255.0;
  return img;
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  auto in = detail::open_binary(path);
  detail::check_magic(in, "P5", path.string());
  GrayImage img;
  const auto body = detail::read_pnm_body(in, "P5", path.string(), 1, img.width, img.height);
  img.pixels.resize(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) img.pixels[i] = body[i] / 255.0;
  return img;
}

inline void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<std::uint8_t> body(img.pixels.size());
  for (std::size_t i = 0; i < body.size(); ++i) body[i] = detail::quantize(img.pixels[i]);
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw io_error("short write to " + path.string());
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<std::uint8_t> body(img.pixels.size());
  for (std::size_t i = 0; i < body.size(); ++i) body[i] = detail::quantize(img.pixels[i]);
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw io_error("short write to " + path.string());
}

}  // namespace mgfa
