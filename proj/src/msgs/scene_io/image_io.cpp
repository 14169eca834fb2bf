// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/scene_io/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "msgs/common/error.hpp"

namespace msgs {
namespace {

static_assert(std::endian::native == std::endian::little, "raw map I/O assumes a little-endian host");

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) fail(ErrorCode::Io, std::string("cannot open ") + path.string());
  return f;
}

/// Decoded PNG samples before any interpretation.
struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  *what = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

RawPng read_png_raw(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::Io, "libpng initialization failed");
  }
  RawPng out;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::Io, path.string() + ": " + error);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  out.bit_depth = depth;
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = buffer.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(n);
  if (depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t v;
      std::memcpy(&v, buffer.data() + 2 * i, 2);
      out.samples[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = buffer[i];
  }
  return out;
}

void write_png_raw(const std::filesystem::path& path, int width, int height, int channels, int depth,
                   const std::vector<std::uint16_t>& samples) {
  FilePtr f = open_file(path, "wb");
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::Io, "libpng initialization failed");
  }
  const int bytes = depth / 8;
  std::vector<png_byte> buffer(static_cast<std::size_t>(width) * height * channels * bytes);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (bytes == 2) {
      buffer[2 * i] = static_cast<png_byte>(samples[i] >> 8);  // PNG is big endian
      buffer[2 * i + 1] = static_cast<png_byte>(samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<png_byte>(samples[i]);
    }
  }
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * width * channels * bytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::Io, path.string() + ": " + error);
  }
  int color = PNG_COLOR_TYPE_GRAY;
  if (channels == 2) color = PNG_COLOR_TYPE_GRAY_ALPHA;
  if (channels == 3) color = PNG_COLOR_TYPE_RGB;
  if (channels == 4) color = PNG_COLOR_TYPE_RGB_ALPHA;
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

bool has_extension(const std::filesystem::path& path, std::string_view ext) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e == ext;
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  auto token = [&]() {
    std::string tok;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(c);
    }
    return tok;
  };
  if (token() != "P6") fail(ErrorCode::Parse, path.string() + ": only binary PPM (P6) is supported");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    fail(ErrorCode::Parse, path.string() + ": malformed PPM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) fail(ErrorCode::Parse, path.string() + ": unsupported PPM header");
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) fail(ErrorCode::Parse, path.string() + ": truncated PPM");
  Image img(w, h, 3);
  for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0;
  return img;
}

double normalized(const RawPng& raw, std::size_t i) {
  return raw.samples[i] / (raw.bit_depth == 16 ? 65535.0 : 255.0);
}

std::uint16_t quantize8(double v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  if (has_extension(path, ".ppm")) return read_ppm(path);
  const RawPng raw = read_png_raw(path);
  Image img(raw.width, raw.height, 3);
  const bool gray = raw.channels <= 2;
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) {
      img.data[p * 3 + c] = normalized(raw, p * raw.channels + (gray ? 0 : c));
    }
  }
  return img;
}

Image read_rgba(const std::filesystem::path& path) {
  const RawPng raw = read_png_raw(path);
  Image img(raw.width, raw.height, 4, 1.0);
  const bool gray = raw.channels <= 2;
  const bool alpha = raw.channels == 2 || raw.channels == 4;
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) img.data[p * 4 + c] = normalized(raw, p * raw.channels + (gray ? 0 : c));
    if (alpha) img.data[p * 4 + 3] = normalized(raw, p * raw.channels + raw.channels - 1);
  }
  return img;
}

Mask read_mask(const std::filesystem::path& path) {
  const RawPng raw = read_png_raw(path);
  if (raw.channels != 1) fail(ErrorCode::Parse, path.string() + ": masks must be single-channel PNG");
  Mask m(raw.width, raw.height, 1);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = raw.samples[i] != 0 ? 1 : 0;
  return m;
}

LabelMap read_label_map(const std::filesystem::path& path) {
  const RawPng raw = read_png_raw(path);
  if (raw.channels != 1) fail(ErrorCode::Parse, path.string() + ": entity maps must be single-channel PNG");
  LabelMap m(raw.width, raw.height, 1);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = raw.samples[i];
  return m;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels < 1 || image.channels > 4) fail(ErrorCode::InvalidArgument, "PNG output needs 1-4 channels");
  std::vector<std::uint16_t> samples(image.data.size());
  std::transform(image.data.begin(), image.data.end(), samples.begin(), quantize8);
  write_png_raw(path, image.width, image.height, image.channels, 8, samples);
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 3) fail(ErrorCode::InvalidArgument, "PPM output needs 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  for (double v : image.data) out.put(static_cast<char>(quantize8(v)));
}

void write_mask(const std::filesystem::path& path, const Mask& mask) {
  std::vector<std::uint16_t> samples(mask.data.size());
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = mask.data[i] ? 255 : 0;
  write_png_raw(path, mask.width, mask.height, 1, 8, samples);
}

void write_label_map(const std::filesystem::path& path, const LabelMap& labels) {
  std::vector<std::uint16_t> samples(labels.data.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto v = labels.data[i];
    if (v < 0 || v > 65535) fail(ErrorCode::InvalidArgument, "label id out of 16-bit range");
    samples[i] = static_cast<std::uint16_t>(v);
  }
  write_png_raw(path, labels.width, labels.height, 1, 16, samples);
}

void write_raw_map(const std::filesystem::path& path, const Image& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  const std::uint32_t w = static_cast<std::uint32_t>(map.width);
  const std::uint32_t h = static_cast<std::uint32_t>(map.height);
  out.write("MSGSMAP1", 8);
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  std::vector<float> payload(map.data.begin(), map.data.end());
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size() * 4));
}

Image read_raw_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  char magic[8];
  std::uint32_t w = 0, h = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in || std::memcmp(magic, "MSGSMAP1", 8) != 0) fail(ErrorCode::Parse, path.string() + ": not an MSGSMAP1 file");
  std::vector<char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t pixels = static_cast<std::size_t>(w) * h;
  if (pixels == 0 || payload.size() % (pixels * 4) != 0) fail(ErrorCode::Parse, path.string() + ": payload size mismatch");
  const int channels = static_cast<int>(payload.size() / (pixels * 4));
  Image map(static_cast<int>(w), static_cast<int>(h), channels);
  for (std::size_t i = 0; i < map.data.size(); ++i) {
    float v;
    std::memcpy(&v, payload.data() + 4 * i, 4);
    map.data[i] = v;
  }
  return map;
}

}  // namespace msgs
