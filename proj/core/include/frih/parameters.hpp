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

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>

#include "frih/graph.hpp"
#include "frih/tensor.hpp"

namespace frih {

// Named parameter tensors, ordered by name.
template <typename T>
using ParamMap = std::map<std::string, Tensor<T>>;

using ModelParameters = ParamMap<float>;

// Parameters bound as leaves of one graph.
template <typename T>
using BoundParams = std::map<std::string, Var<T>>;

template <typename T>
BoundParams<T> bind_parameters(Graph<T>& graph, const ParamMap<T>& params, bool requires_grad) {
  BoundParams<T> bound;
  for (const auto& [name, tensor] : params) bound.emplace(name, graph.leaf(tensor, requires_grad));
  return bound;
}

template <typename T>
const Var<T>& param(const BoundParams<T>& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw InvalidArgument("missing parameter '" + name + "'");
  return it->second;
}

template <typename U, typename T>
ParamMap<U> cast_parameters(const ParamMap<T>& params) {
  ParamMap<U> out;
  for (const auto& [name, tensor] : params) out.emplace(name, tensor.template cast<U>());
  return out;
}

// Total scalar count of the tensors whose name starts with `prefix`.
template <typename T>
std::size_t count_parameters(const ParamMap<T>& params, std::string_view prefix = {}) {
  std::size_t n = 0;
  for (const auto& [name, tensor] : params) {
    if (std::string_view(name).starts_with(prefix)) n += tensor.numel();
  }
  return n;
}

// splitmix64 finalizer over (seed, stream): independent seeds for numbered
// sub-streams of one run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Seeded uniform source with a fixed bit recipe, so initializations do not
// depend on the standard library's distribution implementations.
class InitRng {
 public:
  explicit InitRng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  // Integer in [lo, hi], inclusive.
  std::size_t index(std::size_t lo, std::size_t hi) {
    const auto span = static_cast<double>(hi - lo + 1);
    return lo + std::min(hi - lo, static_cast<std::size_t>(uniform(0.0, 1.0) * span));
  }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  Tensor32 uniform_tensor(Shape shape, double bound) {
    Tensor32 t(std::move(shape));
    for (auto& v : t.data()) v = static_cast<float>(uniform(-bound, bound));
    return t;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace frih
