// Copyright 2026 The frih Authors
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

#include "frih/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

// jpeglib.h needs FILE and size_t declared first.
#include <jpeglib.h>

#include "frih/submask.hpp"

namespace frih {
namespace {

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode), &std::fclose);
  if (!f) throw IngestionError(path, std::string("cannot open: ") + std::strerror(errno));
  return f;
}

Image8 read_png(const std::string& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IngestionError(path, std::string("PNG decode failed: ") + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (png.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  png.format = color ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB) : PNG_FORMAT_GRAY;
  Image8 img;
  img.width = png.width;
  img.height = png.height;
  img.channels = PNG_IMAGE_PIXEL_CHANNELS(png.format);
  img.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw IngestionError(path, "PNG decode failed: " + msg);
  }
  return img;
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Kept free of non-trivial locals so longjmp cannot skip destructors.
bool decode_jpeg(std::FILE* file, Image8& img, JpegError& err) {
  jpeg_decompress_struct cinfo;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = on_jpeg_error;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  img.width = cinfo.output_width;
  img.height = cinfo.output_height;
  img.channels = static_cast<std::size_t>(cinfo.output_components);
  img.pixels.resize(img.width * img.height * img.channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.pixels.data() + std::size_t{cinfo.output_scanline} * img.width * img.channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

Image8 read_jpeg(const std::string& path) {
  auto file = open_file(path, "rb");
  Image8 img;
  JpegError err{};
  if (!decode_jpeg(file.get(), img, err)) throw IngestionError(path, std::string("JPEG decode failed: ") + err.message);
  return img;
}

}  // namespace

Image8 read_image(const std::string& path) {
  std::array<unsigned char, 8> sig{};
  {
    auto file = open_file(path, "rb");
    if (std::fread(sig.data(), 1, sig.size(), file.get()) < 3) throw IngestionError(path, "file too short to be an image");
  }
  if (png_sig_cmp(sig.data(), 0, sig.size()) == 0) return read_png(path);
  if (sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return read_jpeg(path);
  throw IngestionError(path, "unrecognized image format (expected PNG or JPEG)");
}

void write_png(const std::string& path, const Image8& image) {
  if (image.channels != 1 && image.channels != 3 && image.channels != 4) {
    throw InvalidArgument("write_png: unsupported channel count " + std::to_string(image.channels));
  }
  if (image.pixels.size() != image.width * image.height * image.channels || image.pixels.empty()) {
    throw InvalidArgument("write_png: pixel buffer does not match dimensions");
  }
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 1 ? PNG_FORMAT_GRAY : image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw IngestionError(path, std::string("PNG write failed: ") + png.message);
  }
}

Tensor32 image_to_tensor(const Image8& image) {
  if (image.width == 0 || image.height == 0 || image.channels == 0) throw InvalidArgument("image_to_tensor: empty image");
  const std::size_t c_out = image.channels == 4 ? 3 : image.channels == 2 ? 1 : image.channels;
  const std::size_t plane = image.width * image.height;
  Tensor32 t({c_out, image.height, image.width});
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < c_out; ++c) {
      t[c * plane + i] = static_cast<float>(image.pixels[i * image.channels + c]) / 255.0f;
    }
  }
  return t;
}

Image8 tensor_to_image(const Tensor32& tensor) {
  require_chw(tensor, "tensor_to_image");
  if (tensor.channels() != 1 && tensor.channels() != 3) {
    throw InvalidArgument("tensor_to_image: expected 1 or 3 channels, got " + shape_to_string(tensor.shape()));
  }
  Image8 img{tensor.width(), tensor.height(), tensor.channels(), {}};
  const std::size_t plane = img.width * img.height;
  img.pixels.resize(plane * img.channels);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < img.channels; ++c) img.pixels[i * img.channels + c] = to_byte(tensor[c * plane + i]);
  }
  return img;
}

Image8 labels_to_image(const Tensor<std::uint8_t>& labels) {
  require_chw(labels, "labels_to_image");
  if (labels.channels() != 1) throw InvalidArgument("labels_to_image: expected one channel");
  return Image8{labels.width(), labels.height(), 1, labels.storage()};
}

}  // namespace frih
