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

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "frih/tensor.hpp"

namespace frih {

struct CompositeSample {
  Tensor32 composite;  // 3 x H x W in [0, 1]
  Tensor32 mask;       // 1 x H x W, values {0, 1}
  Tensor32 target;     // 3 x H x W in [0, 1]
  std::string tag;
  std::string id;

  double foreground_ratio() const;
  // Throws InvalidArgument on shape or range problems and
  // EmptyForegroundError for an all-zero mask.
  void validate() const;
};

// One manifest line: composite, mask, target, tag and an optional id, tab
// separated. Relative paths are resolved against the manifest's directory.
struct ManifestRecord {
  std::string composite;
  std::string mask;
  std::string target;
  std::string tag;
  std::string id;  // defaults to the composite file stem
};

// Records in file order. Blank lines and lines starting with '#' are skipped.
// Throws IngestionError for unreadable files, malformed lines or duplicate ids.
std::vector<ManifestRecord> read_manifest(const std::string& path);

// Paths are written as given.
void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records);

// Decodes the three files, resizes images bilinearly and the mask by nearest
// neighbour to resolution x resolution (0 keeps the native size) and
// binarizes the mask at 127. Throws IngestionError for missing, corrupt,
// non-RGB or size-mismatched files and EmptyForegroundError when the resized
// mask has no foreground.
CompositeSample load_sample(const ManifestRecord& record, std::size_t resolution);

// Loads every record; samples without foreground are skipped and reported
// through `skipped` (id, reason).
std::vector<CompositeSample> load_dataset(const std::vector<ManifestRecord>& records, std::size_t resolution,
                                          const std::function<void(const std::string&, const std::string&)>& skipped = {});

// Writes <dir>/<id>_composite.png, _mask.png and _target.png and returns the
// record with paths relative to dir.
ManifestRecord write_sample(const CompositeSample& sample, const std::string& dir);

// Mask values strictly above threshold / 255 become 1, the rest 0.
Tensor32 binarize_mask(const Tensor32& mask, std::uint8_t threshold = 127);

// Per-channel affine (a, b) after a shared gamma g.
struct Jitter {
  std::array<float, 3> a{1.0f, 1.0f, 1.0f};
  std::array<float, 3> b{0.0f, 0.0f, 0.0f};
  float gamma = 1.0f;

  void validate() const;  // a in [0.5, 1.5], b in [-0.2, 0.2], gamma in [0.5, 2]
};

Jitter random_jitter(std::uint64_t seed);

// Foreground channel c becomes clamp(target_c^gamma * a_c + b_c, 0, 1); the
// background and the returned target are the input target unchanged.
CompositeSample synthesize_composite(const Tensor32& target, const Tensor32& mask, const Jitter& jitter,
                                     std::string tag = "synthetic", std::string id = {});
CompositeSample synthesize_composite(const Tensor32& target, const Tensor32& mask, std::uint64_t seed,
                                     std::string tag = "synthetic", std::string id = {});

// Procedural source scene: a banded backdrop with flat-colored shapes,
// quantized to 8 bits.
Tensor32 procedural_image(std::size_t resolution, std::uint64_t seed);
// A nonempty blob mask covering roughly 2% to 45% of the image.
Tensor32 procedural_mask(std::size_t resolution, std::uint64_t seed);

// Sample `index` of a procedural set: scene, mask and jitter all drawn from
// derive_seed(seed, index), id "synth_<index, 5 digits>".
CompositeSample synthetic_sample(std::size_t resolution, std::uint64_t seed, std::size_t index);
std::string synthetic_id(std::size_t index);

// Records of the iHarmony4 layout: <root>/<subset>/<subset>_<split>.txt
// listing composite names, with composite_images/, masks/ and real_images/.
std::vector<ManifestRecord> iharmony4_records(const std::string& root, const std::string& split);

}  // namespace frih
