// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pnp/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "pnp/error.hpp"

namespace pnp {

namespace {

struct Header {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t maxval = 0;
  std::size_t data_offset = 0;
};

std::string header_string(const char* magic, std::size_t w, std::size_t h, std::size_t maxval) {
  return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n" +
         std::to_string(maxval) + "\n";
}

Header parse_header(const Bytes& bytes, const char* magic, const std::string& origin) {
  auto fail = [&](const std::string& why) -> IoError {
    return IoError(origin + ": " + why);
  };
  if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1]) {
    throw fail(std::string("not a binary ") + magic + " file");
  }
  std::size_t pos = 2;
  auto read_number = [&]() -> std::size_t {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw fail("malformed header");
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000'000) throw fail("header value out of range");
      ++pos;
    }
    return v;
  };
  Header h;
  h.width = read_number();
  h.height = read_number();
  h.maxval = read_number();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("malformed header");
  h.data_offset = pos + 1;
  if (h.width == 0 || h.height == 0 || h.maxval == 0 || h.maxval > 65535) {
    throw fail("invalid dimensions or maxval");
  }
  return h;
}

}  // namespace

Bytes encode_pgm16(const Tensor& image, double scale) {
  if (image.rank() != 4 || image.batch() != 1 || image.channels() != 1) {
    throw ConfigError("graymap export expects a 1x1xHxW tensor, got " +
                      shape_to_string(image.shape()));
  }
  const std::string header = header_string("P5", image.width(), image.height(), 65535);
  Bytes out(header.begin(), header.end());
  out.reserve(out.size() + 2 * image.numel());
  for (double v : image.data()) {
    const double s = std::clamp(std::round(v * scale), 0.0, 65535.0);
    const auto q = static_cast<std::uint16_t>(s);
    out.push_back(static_cast<std::uint8_t>(q >> 8));
    out.push_back(static_cast<std::uint8_t>(q & 0xFF));
  }
  return out;
}

Tensor decode_pgm16(const Bytes& bytes, double scale, const std::string& origin) {
  const Header h = parse_header(bytes, "P5", origin);
  const std::size_t bpp = h.maxval > 255 ? 2 : 1;
  const std::size_t need = h.width * h.height * bpp;
  if (bytes.size() - h.data_offset < need) throw IoError(origin + ": truncated pixel data");
  Tensor out = Tensor::image(1, h.height, h.width);
  for (std::size_t i = 0; i < h.width * h.height; ++i) {
    const std::size_t p = h.data_offset + i * bpp;
    const unsigned v = bpp == 2 ? (unsigned(bytes[p]) << 8) | bytes[p + 1] : bytes[p];
    out[i] = static_cast<double>(v) / scale;
  }
  return out;
}

Bytes encode_ppm(const Tensor& rgb) {
  if (rgb.rank() != 4 || rgb.batch() != 1 || rgb.channels() != 3) {
    throw ConfigError("pixmap export expects a 1x3xHxW tensor, got " + shape_to_string(rgb.shape()));
  }
  const std::string header = header_string("P6", rgb.width(), rgb.height(), 255);
  Bytes out(header.begin(), header.end());
  for (std::size_t i = 0; i < rgb.height(); ++i)
    for (std::size_t j = 0; j < rgb.width(); ++j)
      for (std::size_t c = 0; c < 3; ++c) {
        const double s = std::clamp(std::round(rgb.at(0, c, i, j) * 255.0), 0.0, 255.0);
        out.push_back(static_cast<std::uint8_t>(s));
      }
  return out;
}

Tensor decode_ppm(const Bytes& bytes, const std::string& origin) {
  const Header h = parse_header(bytes, "P6", origin);
  if (h.maxval > 255) throw IoError(origin + ": 16-bit pixmaps are not supported");
  if (bytes.size() - h.data_offset < 3 * h.width * h.height) {
    throw IoError(origin + ": truncated pixel data");
  }
  Tensor out = Tensor::image(3, h.height, h.width);
  std::size_t p = h.data_offset;
  for (std::size_t i = 0; i < h.height; ++i)
    for (std::size_t j = 0; j < h.width; ++j)
      for (std::size_t c = 0; c < 3; ++c) {
        out.at(0, c, i, j) = static_cast<double>(bytes[p++]) / static_cast<double>(h.maxval);
      }
  return out;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string() + ": write failed");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, Bytes(text.begin(), text.end()));
}

}  // namespace pnp
