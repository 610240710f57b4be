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

#include "frih/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace frih {
namespace {

constexpr char kMagic[4] = {'F', 'R', 'I', 'H'};
constexpr std::uint32_t kMaxRank = 8;

template <typename U>
void put(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw CheckpointFormatError(std::string("truncated checkpoint while reading ") + what, pos_);
    }
  }

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelParameters& tensors) {
  if (tensors.size() > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("checkpoint: too many tensors");
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.empty()) throw InvalidArgument("checkpoint: empty tensor name");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) put<std::uint64_t>(out, e);
    for (float v : t.data()) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

ModelParameters decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  const auto magic = in.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw CheckpointFormatError("bad magic (expected \"FRIH\")", 0);
  const auto version_at = in.offset();
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointFormatError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  const auto count = in.get<std::uint32_t>("tensor count");
  ModelParameters tensors;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_at = in.offset();
    const auto len = in.get<std::uint32_t>("name length");
    if (len == 0) throw CheckpointFormatError("empty tensor name", name_at);
    const auto raw = in.take(len, "tensor name");
    std::string name(raw.begin(), raw.end());
    const auto rank_at = in.offset();
    const auto rank = in.get<std::uint32_t>("rank");
    if (rank == 0 || rank > kMaxRank) {
      throw CheckpointFormatError("tensor '" + name + "' has invalid rank " + std::to_string(rank), rank_at);
    }
    Shape shape;
    std::uint64_t numel = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const auto extent_at = in.offset();
      const auto e = in.get<std::uint64_t>("extent");
      if (e == 0 || numel > in.remaining() / e) {
        throw CheckpointFormatError("tensor '" + name + "' has an invalid or oversized extent", extent_at);
      }
      numel *= e;
      shape.push_back(static_cast<std::size_t>(e));
    }
    const auto raw_values = in.take(numel * 4, "tensor values");
    std::vector<float> data(numel);
    for (std::size_t i = 0; i < numel; ++i) {
      std::uint32_t u = 0;
      for (std::size_t b = 0; b < 4; ++b) u |= std::uint32_t{raw_values[4 * i + b]} << (8 * b);
      data[i] = std::bit_cast<float>(u);
    }
    if (!tensors.emplace(name, Tensor32(std::move(shape), std::move(data))).second) {
      throw CheckpointFormatError("duplicate tensor '" + name + "'", name_at);
    }
  }
  if (in.remaining() != 0) throw CheckpointFormatError("trailing bytes after the last tensor", in.offset());
  return tensors;
}

void save_checkpoint(const ModelParameters& tensors, const std::string& path) {
  const auto bytes = encode_checkpoint(tensors);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestionError(path, "cannot open checkpoint for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IngestionError(path, "checkpoint write failed");
}

ModelParameters load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path, "cannot open checkpoint");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace frih
