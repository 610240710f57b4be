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

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "frih/tensor.hpp"

namespace frih {

// Interleaved 8-bit raster as decoded from disk.
struct Image8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 (gray), 3 (RGB) or 4 (RGBA)
  std::vector<std::uint8_t> pixels;
};

// Decodes PNG or JPEG, chosen by the file signature. 16-bit PNGs are reduced
// to 8 bits and palette images expanded. Throws IngestionError.
Image8 read_image(const std::string& path);

// Writes an 8-bit PNG with 1, 3 or 4 channels. Throws IngestionError.
void write_png(const std::string& path, const Image8& image);

// C x H x W tensor in [0, 1] from the raster (alpha dropped).
Tensor32 image_to_tensor(const Image8& image);

// 1- or 3-channel C x H x W tensor to a raster, values rounded and clamped.
Image8 tensor_to_image(const Tensor32& tensor);

// Label map (values used as-is) to a gray raster.
Image8 labels_to_image(const Tensor<std::uint8_t>& labels);

inline void write_png(const std::string& path, const Tensor32& tensor) { write_png(path, tensor_to_image(tensor)); }

}  // namespace frih
