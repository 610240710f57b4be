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

#include "frih/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "frih/image_io.hpp"
#include "frih/kernels.hpp"
#include "frih/parameters.hpp"
#include "frih/submask.hpp"

namespace fs = std::filesystem;

namespace frih {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path.string() : (base / path).lexically_normal().string();
}

Tensor32 load_rgb(const std::string& path) {
  const auto img = read_image(path);
  if (img.channels < 3) {
    throw IngestionError(path, "expected an RGB image, got " + std::to_string(img.channels) + " channel(s)");
  }
  return image_to_tensor(img);
}

// Mask as raw 0..255 levels of its first channel.
Tensor32 load_mask_levels(const std::string& path) {
  const auto img = read_image(path);
  Tensor32 m({1, img.height, img.width});
  for (std::size_t i = 0; i < img.width * img.height; ++i) m[i] = img.pixels[i * img.channels];
  return m;
}

Tensor32 fit(const Tensor32& t, std::size_t resolution, bool nearest) {
  if (resolution == 0 || (t.height() == resolution && t.width() == resolution)) return t;
  return nearest ? kernels::resize_nearest(t, resolution, resolution)
                 : kernels::resize_bilinear(t, resolution, resolution);
}

}  // namespace

double CompositeSample::foreground_ratio() const {
  return static_cast<double>(mask_area(mask)) / static_cast<double>(mask.numel());
}

void CompositeSample::validate() const {
  require_chw(composite, "CompositeSample");
  require_chw(target, "CompositeSample");
  require_chw(mask, "CompositeSample");
  if (composite.channels() != 3 || target.shape() != composite.shape() || mask.channels() != 1 ||
      mask.height() != composite.height() || mask.width() != composite.width()) {
    throw InvalidArgument("sample '" + id + "': inconsistent shapes " + shape_to_string(composite.shape()) + ", " +
                          shape_to_string(mask.shape()) + ", " + shape_to_string(target.shape()));
  }
  for (float v : mask.data()) {
    if (v != 0.0f && v != 1.0f) throw InvalidArgument("sample '" + id + "': mask is not binary");
  }
  for (const auto* t : {&composite, &target}) {
    for (float v : t->data()) {
      if (!(v >= 0.0f && v <= 1.0f)) throw InvalidArgument("sample '" + id + "': pixel value outside [0, 1]");
    }
  }
  if (mask_area(mask) == 0) throw EmptyForegroundError("sample '" + id + "': mask has no foreground pixel");
}

std::vector<ManifestRecord> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError(path, "cannot open manifest");
  const fs::path base = fs::path(path).parent_path();
  std::vector<ManifestRecord> records;
  std::set<std::string> ids;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 4 && fields.size() != 5) {
      throw IngestionError(path, "line " + std::to_string(line_no) + ": expected 4 or 5 tab-separated fields, got " +
                                     std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      if (f.empty()) throw IngestionError(path, "line " + std::to_string(line_no) + ": empty field");
    }
    ManifestRecord r{resolve(base, fields[0]), resolve(base, fields[1]), resolve(base, fields[2]), fields[3],
                     fields.size() == 5 ? fields[4] : fs::path(fields[0]).stem().string()};
    if (!ids.insert(r.id).second) {
      throw IngestionError(path, "line " + std::to_string(line_no) + ": duplicate id '" + r.id + "'");
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IngestionError(path, "cannot write manifest");
  for (const auto& r : records) {
    out << r.composite << '\t' << r.mask << '\t' << r.target << '\t' << r.tag << '\t' << r.id << '\n';
  }
  if (!out) throw IngestionError(path, "write failed");
}

Tensor32 binarize_mask(const Tensor32& mask, std::uint8_t threshold) {
  Tensor32 out(mask.shape());
  const float cut = static_cast<float>(threshold) / 255.0f;
  for (std::size_t i = 0; i < mask.numel(); ++i) out[i] = mask[i] > cut ? 1.0f : 0.0f;
  return out;
}

CompositeSample load_sample(const ManifestRecord& record, std::size_t resolution) {
  CompositeSample s;
  s.tag = record.tag;
  s.id = record.id;
  s.composite = load_rgb(record.composite);
  s.target = load_rgb(record.target);
  Tensor32 levels = load_mask_levels(record.mask);
  if (s.target.shape() != s.composite.shape()) {
    throw IngestionError(record.target, "size " + shape_to_string(s.target.shape()) + " differs from composite " +
                                            shape_to_string(s.composite.shape()));
  }
  if (levels.height() != s.composite.height() || levels.width() != s.composite.width()) {
    throw IngestionError(record.mask, "size differs from composite");
  }
  s.composite = fit(s.composite, resolution, false);
  s.target = fit(s.target, resolution, false);
  levels = fit(levels, resolution, true);
  s.mask = Tensor32(levels.shape());
  for (std::size_t i = 0; i < levels.numel(); ++i) s.mask[i] = levels[i] > 127.0f ? 1.0f : 0.0f;
  for (auto* t : {&s.composite, &s.target}) {
    for (auto& v : t->data()) v = std::clamp(v, 0.0f, 1.0f);
  }
  if (mask_area(s.mask) == 0) throw EmptyForegroundError("sample '" + s.id + "': no foreground after resizing");
  return s;
}

std::vector<CompositeSample> load_dataset(const std::vector<ManifestRecord>& records, std::size_t resolution,
                                          const std::function<void(const std::string&, const std::string&)>& skipped) {
  std::vector<CompositeSample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    try {
      out.push_back(load_sample(r, resolution));
    } catch (const EmptyForegroundError& e) {
      if (skipped) skipped(r.id, e.what());
    }
  }
  return out;
}

ManifestRecord write_sample(const CompositeSample& sample, const std::string& dir) {
  if (sample.id.empty()) throw InvalidArgument("write_sample: sample has no id");
  ManifestRecord r{sample.id + "_composite.png", sample.id + "_mask.png", sample.id + "_target.png", sample.tag,
                   sample.id};
  const fs::path base(dir);
  write_png((base / r.composite).string(), sample.composite);
  write_png((base / r.mask).string(), sample.mask);
  write_png((base / r.target).string(), sample.target);
  return r;
}

void Jitter::validate() const {
  for (int c = 0; c < 3; ++c) {
    if (!(a[c] >= 0.5f && a[c] <= 1.5f)) throw InvalidArgument("jitter: a must lie in [0.5, 1.5]");
    if (!(b[c] >= -0.2f && b[c] <= 0.2f)) throw InvalidArgument("jitter: b must lie in [-0.2, 0.2]");
  }
  if (!(gamma >= 0.5f && gamma <= 2.0f)) throw InvalidArgument("jitter: gamma must lie in [0.5, 2]");
}

Jitter random_jitter(std::uint64_t seed) {
  InitRng rng(derive_seed(seed, 0x6a));
  Jitter j;
  for (int c = 0; c < 3; ++c) j.a[c] = static_cast<float>(rng.uniform(0.6, 1.4));
  for (int c = 0; c < 3; ++c) j.b[c] = static_cast<float>(rng.uniform(-0.15, 0.15));
  j.gamma = static_cast<float>(std::exp(rng.uniform(std::log(0.6), std::log(1.6))));
  return j;
}

CompositeSample synthesize_composite(const Tensor32& target, const Tensor32& mask, const Jitter& jitter,
                                     std::string tag, std::string id) {
  jitter.validate();
  CompositeSample s{target, mask, target, std::move(tag), std::move(id)};
  require_chw(target, "synthesize_composite");
  require_chw(mask, "synthesize_composite");
  if (target.channels() != 3 || mask.channels() != 1 || mask.height() != target.height() ||
      mask.width() != target.width()) {
    throw InvalidArgument("synthesize_composite: mask " + shape_to_string(mask.shape()) + " does not match target " +
                          shape_to_string(target.shape()));
  }
  if (mask_area(mask) == 0) throw InvalidArgument("synthesize_composite: mask has no foreground pixel");
  const std::size_t plane = mask.numel();
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (mask[i] == 0.0f) continue;
      const float v = std::pow(target[c * plane + i], jitter.gamma) * jitter.a[c] + jitter.b[c];
      s.composite[c * plane + i] = std::clamp(v, 0.0f, 1.0f);
    }
  }
  return s;
}

CompositeSample synthesize_composite(const Tensor32& target, const Tensor32& mask, std::uint64_t seed,
                                     std::string tag, std::string id) {
  return synthesize_composite(target, mask, random_jitter(seed), std::move(tag), std::move(id));
}

Tensor32 procedural_image(std::size_t resolution, std::uint64_t seed) {
  if (resolution == 0) throw InvalidArgument("procedural_image: resolution must be >= 1");
  InitRng rng(derive_seed(seed, 0x1a));
  const std::size_t n = resolution;
  const double r = static_cast<double>(n);
  auto random_color = [&] {
    std::array<float, 3> c{};
    for (auto& v : c) v = static_cast<float>(rng.uniform(0.05, 0.95));
    return c;
  };
  // Backdrop: 2 or 3 flat bands along one axis.
  const bool vertical = rng.coin();
  const std::size_t bands = rng.index(2, 3);
  std::vector<std::array<float, 3>> band_color;
  for (std::size_t i = 0; i < bands; ++i) band_color.push_back(random_color());
  Tensor32 img({3, n, n});
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const std::size_t band = std::min(bands - 1, (vertical ? x : y) * bands / n);
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = band_color[band][c];
    }
  }
  const std::size_t shapes = rng.index(2, 4);
  for (std::size_t s = 0; s < shapes; ++s) {
    const double cx = rng.uniform(0.1, 0.9) * r;
    const double cy = rng.uniform(0.1, 0.9) * r;
    const double hw = rng.uniform(0.06, 0.25) * r;
    const double hh = rng.uniform(0.06, 0.25) * r;
    const bool ellipse = rng.coin();
    const auto color = random_color();
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const double dx = (x + 0.5 - cx) / hw;
        const double dy = (y + 0.5 - cy) / hh;
        const bool inside = ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (!inside) continue;
        for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = color[c];
      }
    }
  }
  for (auto& v : img.data()) v = static_cast<float>(to_byte(v)) / 255.0f;
  return img;
}

Tensor32 procedural_mask(std::size_t resolution, std::uint64_t seed) {
  if (resolution == 0) throw InvalidArgument("procedural_mask: resolution must be >= 1");
  InitRng rng(derive_seed(seed, 0x2b));
  const std::size_t n = resolution;
  const double r = static_cast<double>(n);
  Tensor32 mask({1, n, n});
  const std::size_t blobs = rng.index(1, 2);
  for (std::size_t b = 0; b < blobs; ++b) {
    const double cx = rng.uniform(0.3, 0.7) * r;
    const double cy = rng.uniform(0.3, 0.7) * r;
    const double rx = rng.uniform(0.08, 0.38) * r;
    const double ry = rng.uniform(0.08, 0.38) * r;
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const double dx = (x + 0.5 - cx) / rx;
        const double dy = (y + 0.5 - cy) / ry;
        if (dx * dx + dy * dy <= 1.0) mask.at(0, y, x) = 1.0f;
      }
    }
  }
  if (mask_area(mask) == 0) mask.at(0, n / 2, n / 2) = 1.0f;
  return mask;
}

std::string synthetic_id(std::size_t index) {
  std::ostringstream id;
  id << "synth_" << std::setw(5) << std::setfill('0') << index;
  return id.str();
}

CompositeSample synthetic_sample(std::size_t resolution, std::uint64_t seed, std::size_t index) {
  const std::uint64_t s = derive_seed(seed, index);
  return synthesize_composite(procedural_image(resolution, s), procedural_mask(resolution, s), s, "synthetic",
                              synthetic_id(index));
}

std::vector<ManifestRecord> iharmony4_records(const std::string& root, const std::string& split) {
  if (!fs::is_directory(root)) throw IngestionError(root, "not a directory");
  std::vector<fs::path> subsets;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) subsets.push_back(entry.path());
  }
  std::sort(subsets.begin(), subsets.end());
  std::vector<ManifestRecord> records;
  for (const auto& dir : subsets) {
    const std::string name = dir.filename().string();
    const fs::path list = dir / (name + "_" + split + ".txt");
    if (!fs::exists(list)) continue;
    std::ifstream in(list);
    if (!in) throw IngestionError(list.string(), "cannot open split list");
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const fs::path file = fs::path(line).filename();
      const std::string stem = file.stem().string();
      // <real>_<mask>_<variant>: the mask drops the variant, the real image both.
      const auto last = stem.rfind('_');
      const auto second = last == std::string::npos || last == 0 ? std::string::npos : stem.rfind('_', last - 1);
      if (second == std::string::npos) {
        throw IngestionError(list.string(), "line " + std::to_string(line_no) + ": unexpected composite name '" +
                                                line + "'");
      }
      const std::string real = stem.substr(0, second);
      const std::string mask = stem.substr(0, last);
      ManifestRecord r;
      r.composite = (dir / "composite_images" / file).string();
      r.mask = (dir / "masks" / (mask + ".png")).string();
      r.target = (dir / "real_images" / (real + file.extension().string())).string();
      r.tag = name;
      r.id = name + "/" + stem;
      records.push_back(std::move(r));
    }
  }
  if (records.empty()) throw IngestionError(root, "no <subset>/<subset>_" + split + ".txt lists found");
  return records;
}

}  // namespace frih
