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

#include "frih/training.hpp"

namespace frih::cli {

// Every tunable of a run. Sources apply in order default < config file <
// command-line flag.
struct RunConfig {
  ModelConfig model;  // model.base.resolution is the working resolution
  TrainConfig train;  // train.seed, train.threads and train.d_c mirror the fields below
  double d_c = kDefaultCutoff;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  // Copies the shared fields into train and validates. Without a network
  // only the resolution and d_c are checked.
  void finalize(bool network = true);
};

// Thrown for malformed files, unknown keys and bad values; key() is the
// dotted path of the offending entry ("train.lr").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : "config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Applies a JSON document on top of `config`. Recognized keys:
//   resolution, seed, threads, d_c,
//   base.encoder_channels,
//   cascade.encoder_channels, cascade.fusion_channels, cascade.fusion,
//   train.{epochs, reference_epochs, max_steps, lr, decay_epochs, decay_factor,
//          batch_size, beta1, beta2, eps, a_min, augment, mode, cache_submasks}
void apply_config_text(RunConfig& config, const std::string& json_text);
void apply_config_file(RunConfig& config, const std::string& path);

std::string config_to_json(const RunConfig& config);

}  // namespace frih::cli
