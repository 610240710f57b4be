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

#include "frih_cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "frih/checkpoint.hpp"
#include "frih/image_io.hpp"
#include "frih/kernels.hpp"
#include "frih/metrics.hpp"
#include "frih_cli/run_config.hpp"

#ifndef FRIH_VERSION
#define FRIH_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace frih::cli {
namespace {

constexpr const char* kExitCodes =
    "Exit codes: 0 success, 1 usage or configuration error, 2 data error, 3 non-finite loss.";

// Raised for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> resolution;
  std::optional<double> d_c;
};

RunConfig resolve_config(const GlobalFlags& g, bool network = true) {
  RunConfig rc;
  if (!g.config.empty()) apply_config_file(rc, g.config);
  if (g.seed) rc.seed = *g.seed;
  if (g.threads) rc.threads = *g.threads;
  if (g.resolution) rc.model.base.resolution = *g.resolution;
  if (g.d_c) rc.d_c = *g.d_c;
  rc.finalize(network);
  return rc;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IngestionError(dir, "cannot create directory: " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError(path, "cannot open for writing");
  out << text;
  if (!out) throw IngestionError(path, "write failed");
}

Tensor32 load_binary_mask(const std::string& path) {
  const auto img = read_image(path);
  Tensor32 m({1, img.height, img.width});
  for (std::size_t i = 0; i < img.width * img.height; ++i) m[i] = img.pixels[i * img.channels] > 127 ? 1.0f : 0.0f;
  return m;
}

Tensor32 load_rgb(const std::string& path) {
  const auto img = read_image(path);
  if (img.channels < 3) throw IngestionError(path, "expected an RGB image");
  return image_to_tensor(img);
}

// Model parameters and the resolution they were trained at (0 if unknown).
struct LoadedModel {
  ModelParameters params;
  ModelConfig config;
};

LoadedModel load_model(const std::string& path, const RunConfig& rc, bool resolution_flag) {
  auto unpacked = unpack_training_state(load_checkpoint(path));
  std::size_t res = rc.model.base.resolution;
  if (unpacked.resolution != 0 && !resolution_flag) res = unpacked.resolution;
  LoadedModel m;
  try {
    m.config = infer_model_config(unpacked.state.params, res);
    const auto reference = build_model(m.config, 0);
    for (const auto& [name, t] : reference) {
      auto it = unpacked.state.params.find(name);
      if (it == unpacked.state.params.end()) throw InvalidArgument("missing parameter '" + name + "'");
      if (it->second.shape() != t.shape()) throw InvalidArgument("parameter '" + name + "' has an unexpected shape");
    }
  } catch (const InvalidArgument& e) {
    throw IngestionError(path, std::string("checkpoint does not describe a model: ") + e.what());
  }
  m.params = std::move(unpacked.state.params);
  return m;
}

// Resizes a loaded pair to the working resolution.
void fit_inputs(Tensor32& image, Tensor32& mask, std::size_t res) {
  if (image.height() != mask.height() || image.width() != mask.width()) {
    throw InvalidArgument("image " + shape_to_string(image.shape()) + " and mask " + shape_to_string(mask.shape()) +
                          " differ in size");
  }
  if (image.height() != res || image.width() != res) {
    image = kernels::resize_bilinear(image, res, res);
    for (auto& v : image.data()) v = std::clamp(v, 0.0f, 1.0f);
    mask = kernels::resize_nearest(mask, res, res);
  }
}

json rgb_json(Rgb c) { return json::array({c.r, c.g, c.b}); }

void write_submask_outputs(const SubmaskSet& set, const std::string& dir) {
  ensure_dir(dir);
  write_png((fs::path(dir) / "labels.png").string(), labels_to_image(set.label_map()));
  for (std::size_t k = 0; k < set.size(); ++k) {
    write_png((fs::path(dir) / ("submask_" + std::to_string(k + 1) + ".png")).string(), set.submasks[k]);
  }
  json diag;
  diag["K"] = set.size();
  diag["d_c"] = set.d_c;
  diag["quantized"] = set.quantized;
  diag["centers"] = json::array();
  for (auto c : set.centers) diag["centers"].push_back(rgb_json(c));
  diag["points"] = json::array();
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    const auto& p = set.points[i];
    diag["points"].push_back({{"rgb", rgb_json(p.rgb)},
                              {"count", p.count},
                              {"rho", p.rho},
                              {"delta", p.delta},
                              {"cluster", set.point_cluster[i] + 1}});
  }
  write_text((fs::path(dir) / "diagnostics.json").string(), diag.dump(2) + "\n");
}

// ---- subcommands ----

int cmd_extract(const GlobalFlags& g, const std::string& image, const std::string& mask_path, const std::string& out) {
  const auto rc = resolve_config(g, false);
  const auto composite = load_rgb(image);
  const auto mask = load_binary_mask(mask_path);
  if (mask.height() != composite.height() || mask.width() != composite.width()) {
    throw IngestionError(mask_path, "mask size differs from the image");
  }
  const auto set = extract_submasks(composite, mask, rc.d_c);
  write_submask_outputs(set, out);
  std::cerr << "extract-submasks: K = " << set.size() << " from " << set.points.size() << " colors\n";
  return kOk;
}

int cmd_synth(const GlobalFlags& g, const std::string& source_dir, std::size_t count, const std::string& out) {
  const auto rc = resolve_config(g, false);
  const std::size_t res = rc.model.base.resolution;
  if (count == 0) throw UsageError("--count must be >= 1");
  std::vector<std::string> sources;
  if (!source_dir.empty()) {
    if (!fs::is_directory(source_dir)) throw IngestionError(source_dir, "not a directory");
    for (const auto& e : fs::directory_iterator(source_dir)) {
      auto ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (e.is_regular_file() && (ext == ".png" || ext == ".jpg" || ext == ".jpeg")) sources.push_back(e.path().string());
    }
    std::sort(sources.begin(), sources.end());
    if (sources.empty()) throw IngestionError(source_dir, "no PNG or JPEG images found");
  }
  ensure_dir(out);
  std::vector<ManifestRecord> records;
  for (std::size_t i = 0; i < count; ++i) {
    if (sources.empty()) {
      records.push_back(write_sample(synthetic_sample(res, rc.seed, i), out));
      continue;
    }
    const std::uint64_t s = derive_seed(rc.seed, i);
    Tensor32 target = kernels::resize_bilinear(load_rgb(sources[i % sources.size()]), res, res);
    for (auto& v : target.data()) v = static_cast<float>(to_byte(v)) / 255.0f;
    const auto sample = synthesize_composite(target, procedural_mask(res, s), s, "synthetic", synthetic_id(i));
    records.push_back(write_sample(sample, out));
  }
  write_manifest((fs::path(out) / "manifest.tsv").string(), records);
  std::cerr << "synth-data: wrote " << count << " triplets and manifest.tsv to " << out << "\n";
  return kOk;
}

int cmd_make_manifest(const std::string& root, const std::string& split, const std::string& out) {
  const auto records = iharmony4_records(root, split);
  write_manifest(out, records);
  std::cerr << "make-manifest: " << records.size() << " records\n";
  return kOk;
}

std::vector<CompositeSample> load_manifest_samples(const std::string& manifest, std::size_t res) {
  const auto records = read_manifest(manifest);
  if (records.empty()) throw IngestionError(manifest, "manifest has no records");
  auto data = load_dataset(records, res, [](const std::string& id, const std::string& why) {
    std::cerr << "warning: skipping '" << id << "': " << why << "\n";
  });
  if (data.empty()) throw IngestionError(manifest, "no usable samples");
  return data;
}

struct TrainFlags {
  std::string manifest, out, resume, log;
  std::optional<std::size_t> steps, epochs, batch;
  std::optional<double> lr;
  std::optional<std::string> mode;
  bool no_augment = false;
};

int cmd_train(const GlobalFlags& g, const TrainFlags& f) {
  RunConfig rc;
  {
    GlobalFlags pre = g;
    rc = RunConfig{};
    if (!pre.config.empty()) apply_config_file(rc, pre.config);
    if (pre.seed) rc.seed = *pre.seed;
    if (pre.threads) rc.threads = *pre.threads;
    if (pre.resolution) rc.model.base.resolution = *pre.resolution;
    if (pre.d_c) rc.d_c = *pre.d_c;
    if (f.steps) rc.train.max_steps = *f.steps;
    if (f.epochs) rc.train.epochs = *f.epochs;
    if (f.batch) rc.train.batch_size = *f.batch;
    if (f.lr) rc.train.lr = *f.lr;
    if (f.mode) {
      try {
        rc.train.mode = parse_train_mode(*f.mode);
      } catch (const InvalidArgument& e) {
        throw ConfigError("train.mode", e.what());
      }
    }
    if (f.no_augment) rc.train.augment = false;
    rc.finalize();
  }
  const std::size_t res = rc.model.base.resolution;
  const auto data = load_manifest_samples(f.manifest, res);

  TrainState state;
  if (!f.resume.empty()) {
    auto unpacked = unpack_training_state(load_checkpoint(f.resume));
    const auto reference = build_model(rc.model, rc.seed);
    for (const auto& [name, t] : reference) {
      auto it = unpacked.state.params.find(name);
      if (it == unpacked.state.params.end() || it->second.shape() != t.shape()) {
        throw IngestionError(f.resume, "checkpoint does not match the configured architecture at '" + name + "'");
      }
    }
    state = std::move(unpacked.state);
  } else {
    state.params = build_model(rc.model, rc.seed);
  }

  const std::string log_path = f.log.empty() ? f.out + ".log.jsonl" : f.log;
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IngestionError(log_path, "cannot open training log");
  log << json{{"type", "config"}, {"config", json::parse(config_to_json(rc))}, {"samples", data.size()},
              {"parameters", count_parameters(state.params)},
              {"cascade_parameters", count_parameters(state.params) - count_parameters(state.params, "base.")}}
             .dump()
      << "\n";

  const auto t0 = std::chrono::steady_clock::now();
  TrainCallbacks cb;
  cb.on_step = [&](const StepRecord& r) {
    log << json{{"type", "step"},         {"epoch", r.epoch},
                {"step", r.step},         {"lr", r.lr},
                {"batch", r.batch},       {"mean_submasks", r.mean_submasks},
                {"l_coarse", r.loss.l_coarse}, {"l_refine", r.loss.l_refine},
                {"l_total", r.loss.l_total}}
               .dump()
        << "\n";
  };
  cb.on_epoch = [&](const EpochRecord& e) {
    log << json{{"type", "epoch"},     {"epoch", e.epoch},           {"steps", e.steps},
                {"lr", e.lr},          {"l_coarse", e.loss.l_coarse}, {"l_refine", e.loss.l_refine},
                {"l_total", e.loss.l_total}}
               .dump()
        << "\n";
    log.flush();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "epoch " << e.epoch << "  L_total " << e.loss.l_total << "  (" << std::fixed << std::setprecision(1)
              << secs << " s)\n"
              << std::defaultfloat << std::setprecision(6);
  };
  try {
    train(data, rc.model, state, rc.train, cb);
  } catch (const NumericError& e) {
    log << json{{"type", "abort"}, {"reason", e.what()}, {"completed_steps", state.adam.step}}.dump() << "\n";
    throw;
  }
  save_checkpoint(pack_training_state(state, res), f.out);
  std::cerr << "train: " << state.adam.step << " steps, checkpoint written to " << f.out << "\n";
  return kOk;
}

struct HarmonizeFlags {
  std::string image, mask, checkpoint, out, dump_submasks, dump_coarse;
};

int cmd_harmonize(const GlobalFlags& g, const HarmonizeFlags& f) {
  const auto rc = resolve_config(g);
  const auto model = load_model(f.checkpoint, rc, g.resolution.has_value());
  const std::size_t res = model.config.base.resolution;
  auto image = load_rgb(f.image);
  auto mask = load_binary_mask(f.mask);
  fit_inputs(image, mask, res);
  const auto result = harmonize(image, mask, model.params, model.config, rc.d_c);
  write_png(f.out, result.image);
  if (!f.dump_coarse.empty()) write_png(f.dump_coarse, result.coarse);
  if (!f.dump_submasks.empty()) write_submask_outputs(result.submasks, f.dump_submasks);
  std::cerr << "harmonize: K = " << result.submasks.size() << ", wrote " << f.out << "\n";
  return kOk;
}

struct EvaluateFlags {
  std::string manifest, checkpoint, out, csv, predictor = "full";
};

int cmd_evaluate(const GlobalFlags& g, const EvaluateFlags& f) {
  const auto rc = resolve_config(g, f.predictor != "identity");
  if (f.predictor != "identity" && f.checkpoint.empty()) {
    throw UsageError("--checkpoint is required unless --predictor identity");
  }
  std::optional<LoadedModel> model;
  if (f.predictor != "identity") model = load_model(f.checkpoint, rc, g.resolution.has_value());
  const std::size_t res = model ? model->config.base.resolution : rc.model.base.resolution;
  const auto data = load_manifest_samples(f.manifest, res);
  std::vector<MetricsRow> rows;
  for (const auto& s : data) {
    Tensor32 pred = s.composite;
    if (model) {
      const auto result = harmonize(s.composite, s.mask, model->params, model->config, rc.d_c);
      if (f.predictor == "full") {
        pred = result.image;
      } else {
        const std::size_t plane = s.mask.numel();
        for (std::size_t c = 0; c < 3; ++c) {
          for (std::size_t i = 0; i < plane; ++i) {
            if (s.mask[i] != 0.0f) pred[c * plane + i] = result.coarse[c * plane + i];
          }
        }
      }
    }
    rows.push_back(evaluate_pair(pred, s.target, s.mask, s.id, s.tag));
  }
  const auto report = aggregate_report(std::move(rows));
  for (const auto& r : report.rows) {
    if (!std::isfinite(r.mse) || !std::isfinite(r.fmse)) throw NumericError("non-finite metric for '" + r.id + "'");
  }
  write_text(f.out, report_to_json(report));
  if (!f.csv.empty()) write_text(f.csv, report_to_csv(report));
  const auto& all = report.by_dataset.back();
  std::cerr << "evaluate (" << f.predictor << "): " << all.count << " images, MSE " << all.mse << ", PSNR " << all.psnr
            << " dB, fMSE " << all.fmse << "\n";
  return kOk;
}

}  // namespace

std::string version_string() {
  std::string s = "frih " FRIH_VERSION;
#if defined(__clang__)
  s += " (clang " __clang_version__ ")";
#elif defined(__GNUC__)
  s += " (gcc " __VERSION__ ")";
#endif
  return s;
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Region-aware image harmonization toolkit.", "frih"};
  app.footer(kExitCodes);
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config, "JSON run configuration (flags override its values)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for initialization, shuffling, augmentation and synthesis");
  app.add_option("--threads", g.threads, "Worker threads for per-sample gradients")->check(CLI::PositiveNumber);
  app.add_option("--resolution", g.resolution, "Working resolution (power of two)");
  app.add_option("--dc", g.d_c, "Cutoff distance for submask extraction, in (0, 1]");

  std::function<int()> run;

  std::string ex_image, ex_mask, ex_out;
  auto* ex = app.add_subcommand("extract-submasks", "Cluster foreground colors into submasks.");
  ex->footer("Writes <out>/labels.png (0 background, k for submask k), submask_<k>.png and diagnostics.json.");
  ex->add_option("--image", ex_image, "Composite PNG/JPEG")->required();
  ex->add_option("--mask", ex_mask, "Foreground mask (values above 127 are foreground)")->required();
  ex->add_option("--out", ex_out, "Output directory")->required();
  ex->callback([&] { run = [&] { return cmd_extract(g, ex_image, ex_mask, ex_out); }; });

  std::string sy_source, sy_out;
  std::size_t sy_count = 0;
  auto* sy = app.add_subcommand("synth-data", "Generate composite/mask/target triplets with a manifest.");
  sy->footer("Without --source-dir, targets are procedural scenes. Foreground jitter is drawn from --seed.");
  sy->add_option("--source-dir", sy_source, "Directory of PNG/JPEG target images");
  sy->add_option("--count", sy_count, "Number of triplets")->required();
  sy->add_option("--out", sy_out, "Output directory (triplets and manifest.tsv)")->required();
  sy->callback([&] { run = [&] { return cmd_synth(g, sy_source, sy_count, sy_out); }; });

  std::string mm_root, mm_split = "test", mm_out;
  auto* mm = app.add_subcommand("make-manifest", "Build a manifest from an iHarmony4 directory tree.");
  mm->add_option("--iharmony4-root", mm_root, "Dataset root containing the subset directories")->required();
  mm->add_option("--split", mm_split, "train or test")->check(CLI::IsMember({"train", "test"}));
  mm->add_option("--out", mm_out, "Manifest path")->required();
  mm->callback([&] { run = [&] { return cmd_make_manifest(mm_root, mm_split, mm_out); }; });

  TrainFlags tf;
  auto* tr = app.add_subcommand("train", "Train both stages end to end and write a checkpoint.");
  tr->footer("The log holds one JSON record per line: config, step, epoch and, on failure, abort.");
  tr->add_option("--manifest", tf.manifest, "Training manifest (TSV)")->required();
  tr->add_option("--out", tf.out, "Checkpoint to write")->required();
  tr->add_option("--resume", tf.resume, "Checkpoint to continue from");
  tr->add_option("--log", tf.log, "Training log (default <out>.log.jsonl)");
  tr->add_option("--steps", tf.steps, "Stop after this many updates (train.max_steps)");
  tr->add_option("--epochs", tf.epochs, "Epoch budget (train.epochs)");
  tr->add_option("--batch-size", tf.batch, "Images per update (train.batch_size)");
  tr->add_option("--lr", tf.lr, "Initial learning rate (train.lr)");
  tr->add_option("--mode", tf.mode, "full or base_only (train.mode)");
  tr->add_flag("--no-augment", tf.no_augment, "Disable flip and crop augmentation");
  tr->callback([&] { run = [&] { return cmd_train(g, tf); }; });

  HarmonizeFlags hf;
  auto* hz = app.add_subcommand("harmonize", "Harmonize one composite with a trained checkpoint.");
  hz->footer("Inputs are resized to the checkpoint's resolution; the output is written at that resolution.");
  hz->add_option("--image", hf.image, "Composite PNG/JPEG")->required();
  hz->add_option("--mask", hf.mask, "Foreground mask")->required();
  hz->add_option("--checkpoint", hf.checkpoint, "Model checkpoint")->required();
  hz->add_option("--out", hf.out, "Output PNG")->required();
  hz->add_option("--dump-submasks", hf.dump_submasks, "Directory for the submasks used");
  hz->add_option("--dump-coarse", hf.dump_coarse, "PNG for the stage-one output");
  hz->callback([&] { run = [&] { return cmd_harmonize(g, hf); }; });

  EvaluateFlags ef;
  auto* ev = app.add_subcommand("evaluate", "Score a predictor on a manifest (MSE, PSNR, fMSE).");
  ev->footer("The report holds per-image rows and means per sub-dataset and per foreground-ratio bucket.");
  ev->add_option("--manifest", ef.manifest, "Evaluation manifest (TSV)")->required();
  ev->add_option("--checkpoint", ef.checkpoint, "Model checkpoint");
  ev->add_option("--out", ef.out, "JSON report")->required();
  ev->add_option("--csv", ef.csv, "Per-image CSV rows");
  ev->add_option("--predictor", ef.predictor, "full, coarse (stage one only) or identity (the composite)")
      ->check(CLI::IsMember({"full", "coarse", "identity"}));
  ev->callback([&] { run = [&] { return cmd_evaluate(g, ef); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    return run();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: invalid configuration: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const IngestionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const CheckpointFormatError& e) {
    std::cerr << "error: bad checkpoint: " << e.what() << "\n";
    return kData;
  } catch (const EmptyForegroundError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args);
}

}  // namespace frih::cli
