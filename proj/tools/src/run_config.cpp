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

#include "frih_cli/run_config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace frih::cli {
namespace {

using nlohmann::json;

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

std::size_t as_count(const json& v, const std::string& key) {
  if (!v.is_number_unsigned()) throw ConfigError(key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
  return v.get<bool>();
}

std::vector<std::size_t> as_counts(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError(key, "expected an array of integers");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_count(v[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

void require_object(const json& v, const std::string& key) {
  if (!v.is_object()) throw ConfigError(key, "expected an object");
}

void apply_base(BaseNetConfig& base, const json& j, const std::string& prefix) {
  require_object(j, prefix);
  for (const auto& [k, v] : j.items()) {
    const auto key = join(prefix, k);
    if (k == "encoder_channels") {
      base.encoder_channels = as_counts(v, key);
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
}

void apply_cascade(CascadeConfig& cascade, const json& j, const std::string& prefix) {
  require_object(j, prefix);
  for (const auto& [k, v] : j.items()) {
    const auto key = join(prefix, k);
    if (k == "encoder_channels") {
      cascade.encoder_channels = as_counts(v, key);
    } else if (k == "fusion_channels") {
      cascade.fusion_channels = as_count(v, key);
    } else if (k == "fusion") {
      cascade.fusion = as_bool(v, key);
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
}

void apply_train(TrainConfig& t, const json& j, const std::string& prefix) {
  require_object(j, prefix);
  for (const auto& [k, v] : j.items()) {
    const auto key = join(prefix, k);
    if (k == "epochs") {
      t.epochs = as_count(v, key);
    } else if (k == "reference_epochs") {
      t.reference_epochs = as_count(v, key);
    } else if (k == "max_steps") {
      t.max_steps = as_count(v, key);
    } else if (k == "lr") {
      t.lr = as_number(v, key);
    } else if (k == "decay_epochs") {
      t.decay_epochs = as_counts(v, key);
    } else if (k == "decay_factor") {
      t.decay_factor = as_number(v, key);
    } else if (k == "batch_size") {
      t.batch_size = as_count(v, key);
    } else if (k == "beta1") {
      t.beta1 = as_number(v, key);
    } else if (k == "beta2") {
      t.beta2 = as_number(v, key);
    } else if (k == "eps") {
      t.eps = as_number(v, key);
    } else if (k == "a_min") {
      t.a_min = as_number(v, key);
    } else if (k == "augment") {
      t.augment = as_bool(v, key);
    } else if (k == "cache_submasks") {
      t.cache_submasks = as_bool(v, key);
    } else if (k == "mode") {
      if (!v.is_string()) throw ConfigError(key, "expected \"full\" or \"base_only\"");
      try {
        t.mode = parse_train_mode(v.get<std::string>());
      } catch (const InvalidArgument& e) {
        throw ConfigError(key, e.what());
      }
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
}

// Maps a validation failure to the key it concerns.
template <typename F>
void checked(const std::string& key, F&& f) {
  try {
    f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace

void RunConfig::finalize(bool network) {
  train.seed = seed;
  train.threads = threads;
  train.d_c = d_c;
  if (!(d_c > 0.0 && d_c <= 1.0)) throw ConfigError("d_c", "must lie in (0, 1]");
  if (threads == 0) throw ConfigError("threads", "must be >= 1");
  if (!network) {
    if (model.base.resolution == 0) throw ConfigError("resolution", "must be >= 1");
    return;
  }
  checked("base", [&] { model.base.validate(); });
  checked("cascade", [&] { model.cascade.validate(model.base); });
  checked("train", [&] { train.validate(); });
}

void apply_config_text(RunConfig& config, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  require_object(j, "");
  for (const auto& [k, v] : j.items()) {
    if (k == "resolution") {
      config.model.base.resolution = as_count(v, k);
    } else if (k == "seed") {
      config.seed = as_count(v, k);
    } else if (k == "threads") {
      config.threads = as_count(v, k);
    } else if (k == "d_c") {
      config.d_c = as_number(v, k);
    } else if (k == "base") {
      apply_base(config.model.base, v, k);
    } else if (k == "cascade") {
      apply_cascade(config.model.cascade, v, k);
    } else if (k == "train") {
      apply_train(config.train, v, k);
    } else {
      throw ConfigError(k, "unknown key");
    }
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_config_text(config, buf.str());
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["resolution"] = c.model.base.resolution;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["d_c"] = c.d_c;
  j["base"] = {{"encoder_channels", c.model.base.encoder_channels}};
  j["cascade"] = {{"encoder_channels", c.model.cascade.encoder_channels},
                  {"fusion_channels", c.model.cascade.fusion_channels},
                  {"fusion", c.model.cascade.fusion}};
  const auto& t = c.train;
  j["train"] = {{"epochs", t.epochs},         {"reference_epochs", t.reference_epochs},
                {"max_steps", t.max_steps},   {"lr", t.lr},
                {"decay_epochs", t.decay_epochs}, {"decay_factor", t.decay_factor},
                {"batch_size", t.batch_size}, {"beta1", t.beta1},
                {"beta2", t.beta2},           {"eps", t.eps},
                {"a_min", t.a_min},           {"augment", t.augment},
                {"mode", to_string(t.mode)},  {"cache_submasks", t.cache_submasks}};
  return j.dump(2) + "\n";
}

}  // namespace frih::cli
