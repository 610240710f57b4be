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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "frih/parameters.hpp"

namespace frih {

// Little-endian layout:
//   "FRIH" | u32 version | u32 tensor count |
//   per tensor: u32 name length | name bytes | u32 rank | u64 extents[rank] | f32 values
// Tensors are written in name order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const ModelParameters& tensors);

// Throws CheckpointFormatError (with the byte offset of the problem) for a bad
// magic or version, truncation, malformed shapes, duplicate names or trailing
// bytes. Nothing is returned on failure.
ModelParameters decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const ModelParameters& tensors, const std::string& path);
ModelParameters load_checkpoint(const std::string& path);

}  // namespace frih
