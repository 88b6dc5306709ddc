// Copyright 2026 The xylid Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xylid/imaging.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <random>
#include <string>

#include "xylid/error.hpp"

namespace xylid {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

RawImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::kFormat, "PNG decode failed: " + msg);
  }
  image.format = PNG_FORMAT_RGB;
  RawImage out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.rgb.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::kFormat, "PNG decode failed: " + msg);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Replaces the default emitter, which is also what counts warnings.
void jpeg_silence(j_common_ptr cinfo, int msg_level) {
  if (msg_level < 0) ++cinfo->err->num_warnings;
}

// The setjmp frame must not own objects with destructors; results go into
// caller-provided storage.
bool decode_jpeg_into(std::span<const std::uint8_t> bytes, RawImage& out, JpegErrorManager& jerr,
                      int& warnings) {
  jpeg_decompress_struct cinfo{};
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  jerr.pub.emit_message = jpeg_silence;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.rgb.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  // libjpeg pads truncated streams with a warning instead of failing.
  warnings = static_cast<int>(jerr.pub.num_warnings);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

RawImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  RawImage out;
  JpegErrorManager jerr{};
  int warnings = 0;
  if (!decode_jpeg_into(bytes, out, jerr, warnings)) {
    fail(ErrorCode::kFormat, std::string("JPEG decode failed: ") + jerr.message);
  }
  if (warnings > 0) fail(ErrorCode::kFormat, "JPEG decode failed: corrupt or truncated data");
  return out;
}

Bytes write_png(const std::uint8_t* data, int width, int height, png_uint_32 format) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, data, 0, nullptr)) {
    fail(ErrorCode::kInternal, std::string("PNG encode failed: ") + image.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, 0, nullptr)) {
    fail(ErrorCode::kInternal, std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Cell boundaries along one axis: full cells of `tile`, remainder merged
// into the last cell.
std::vector<int> tile_edges(int extent, int tile) {
  std::vector<int> edges;
  const int cells = std::max(1, extent / tile);
  for (int i = 0; i < cells; ++i) edges.push_back(i * tile);
  edges.push_back(extent);
  return edges;
}

void normalize_tile(GrayImage& img, int x0, int x1, int y0, int y1) {
  const double n = static_cast<double>(x1 - x0) * (y1 - y0);
  for (int iter = 0; iter < 64; ++iter) {
    double sum = 0.0;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) sum += img.at(x, y);
    const double mean = sum / n;
    double ss = 0.0;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const double d = img.at(x, y) - mean;
        ss += d * d;
      }
    const double sd = std::sqrt(ss / n);
    if (sd < 1e-6) {
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) img.at(x, y) = kNormalizedMean;
      return;
    }
    const double scale = kNormalizedStd / sd;
    double max_change = 0.0;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        double& v = img.at(x, y);
        const double nv = clamp01((v - mean) * scale + kNormalizedMean);
        max_change = std::max(max_change, std::abs(nv - v));
        v = nv;
      }
    if (max_change < 1e-9) return;
  }
}

}  // namespace

ImageFormat sniff_format(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && std::equal(std::begin(kPngSignature), std::end(kPngSignature), bytes.begin())) {
    return ImageFormat::kPng;
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return ImageFormat::kJpeg;
  }
  fail(ErrorCode::kFormat, "unsupported image format (expected PNG or JPEG)");
}

RawImage decode_image(std::span<const std::uint8_t> bytes, int min_side) {
  RawImage img = sniff_format(bytes) == ImageFormat::kPng ? decode_png(bytes) : decode_jpeg(bytes);
  if (img.width < min_side || img.height < min_side) {
    fail(ErrorCode::kInvalidArgument, "image " + std::to_string(img.width) + "x" +
                                          std::to_string(img.height) + " is smaller than " +
                                          std::to_string(min_side) + "x" + std::to_string(min_side));
  }
  return img;
}

Bytes encode_png(const RawImage& image) {
  return write_png(image.rgb.data(), image.width, image.height, PNG_FORMAT_RGB);
}

Bytes encode_png(const GrayImage& image) {
  std::vector<std::uint8_t> g(image.pixels.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = static_cast<std::uint8_t>(std::lround(clamp01(image.pixels[i]) * 255.0));
  }
  return write_png(g.data(), image.width, image.height, PNG_FORMAT_GRAY);
}

Bytes encode_jpeg(const RawImage& image, int quality) {
  jpeg_compress_struct cinfo{};
  jpeg_error_mgr jerr{};
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(image.width);
  cinfo.image_height = static_cast<JDIMENSION>(image.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPROW>(image.rgb.data() +
                                     static_cast<std::size_t>(cinfo.next_scanline) * image.width * 3);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  Bytes out(buffer, buffer + size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  return out;
}

RawImage gray_to_rgb(const GrayImage& image) {
  RawImage out;
  out.width = image.width;
  out.height = image.height;
  out.rgb.resize(image.pixels.size() * 3);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const auto v = static_cast<std::uint8_t>(std::lround(clamp01(image.pixels[i]) * 255.0));
    out.rgb[3 * i] = out.rgb[3 * i + 1] = out.rgb[3 * i + 2] = v;
  }
  return out;
}

GrayImage to_grayscale(const RawImage& image) {
  GrayImage out(image.width, image.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double r = image.rgb[3 * i];
    const double g = image.rgb[3 * i + 1];
    const double b = image.rgb[3 * i + 2];
    out.pixels[i] = clamp01((0.299 * r + 0.587 * g + 0.114 * b) / 255.0);
  }
  return out;
}

GrayImage normalize_illumination(const GrayImage& image, int tile) {
  if (tile < 16 || tile > std::min(image.width, image.height)) {
    fail(ErrorCode::kInvalidArgument,
         "illumination tile " + std::to_string(tile) + " outside [16, " +
             std::to_string(std::min(image.width, image.height)) + "]");
  }
  GrayImage out = image;
  const auto xs = tile_edges(image.width, tile);
  const auto ys = tile_edges(image.height, tile);
  for (std::size_t ty = 0; ty + 1 < ys.size(); ++ty)
    for (std::size_t tx = 0; tx + 1 < xs.size(); ++tx)
      normalize_tile(out, xs[tx], xs[tx + 1], ys[ty], ys[ty + 1]);
  return out;
}

std::size_t patch_count(int width, int height, int size, int stride) {
  if (size > width || size > height || size < 1 || stride < 1) return 0;
  return static_cast<std::size_t>((width - size) / stride + 1) *
         static_cast<std::size_t>((height - size) / stride + 1);
}

GrayImage crop(const GrayImage& image, int x0, int y0, int w, int h) {
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto* src = image.pixels.data() + static_cast<std::size_t>(y0 + y) * image.width + x0;
    std::copy(src, src + w, out.pixels.begin() + static_cast<std::ptrdiff_t>(y) * w);
  }
  return out;
}

std::vector<GrayImage> extract_patches(const GrayImage& image, int size, int stride) {
  if (stride < 1) fail(ErrorCode::kInvalidArgument, "patch stride must be >= 1");
  if (size < 1 || size > std::min(image.width, image.height)) {
    fail(ErrorCode::kInvalidArgument, "patch size " + std::to_string(size) + " larger than image " +
                                          std::to_string(image.width) + "x" +
                                          std::to_string(image.height));
  }
  std::vector<GrayImage> patches;
  patches.reserve(patch_count(image.width, image.height, size, stride));
  for (int y = 0; y + size <= image.height; y += stride)
    for (int x = 0; x + size <= image.width; x += stride) patches.push_back(crop(image, x, y, size, size));
  return patches;
}

GrayImage rotate_quarter(const GrayImage& image, int quarter_turns) {
  const int q = ((quarter_turns % 4) + 4) % 4;
  if (q == 0) return image;
  const int w = image.width;
  const int h = image.height;
  GrayImage out = (q == 2) ? GrayImage(w, h) : GrayImage(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = image.at(x, y);
      switch (q) {
        case 1: out.at(h - 1 - y, x) = v; break;
        case 2: out.at(w - 1 - x, h - 1 - y) = v; break;
        case 3: out.at(y, w - 1 - x) = v; break;
      }
    }
  return out;
}

GrayImage augment(const GrayImage& image, const AugmentSpec& spec, std::uint64_t seed) {
  if (spec.brightness_min < -0.3 || spec.brightness_max > 0.3 ||
      spec.brightness_min > spec.brightness_max) {
    fail(ErrorCode::kInvalidArgument, "brightness offset range must lie within [-0.3, 0.3]");
  }
  if (spec.contrast_min < 0.5 || spec.contrast_max > 1.5 || spec.contrast_min > spec.contrast_max) {
    fail(ErrorCode::kInvalidArgument, "contrast factor range must lie within [0.5, 1.5]");
  }
  if (spec.rotations.empty()) fail(ErrorCode::kInvalidArgument, "at least one rotation required");
  bool quarter = false;
  for (int r : spec.rotations) {
    if (r != 0 && r != 90 && r != 180 && r != 270) {
      fail(ErrorCode::kInvalidArgument, "rotation must be one of 0, 90, 180, 270");
    }
    quarter = quarter || r == 90 || r == 270;
  }
  if (quarter && image.width != image.height) {
    fail(ErrorCode::kInvalidArgument, "quarter-turn rotation requires a square image");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double offset = spec.brightness_min + (spec.brightness_max - spec.brightness_min) * unit(rng);
  const double contrast = spec.contrast_min + (spec.contrast_max - spec.contrast_min) * unit(rng);
  const int rotation = spec.rotations[static_cast<std::size_t>(rng() % spec.rotations.size())];

  GrayImage out = image;
  const double pivot = 0.5 * (1.0 - contrast);
  for (double& v : out.pixels) v = clamp01(contrast * v + pivot + offset);
  return rotate_quarter(out, rotation / 90);
}

}  // namespace xylid
