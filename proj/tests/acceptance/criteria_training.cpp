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

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "criteria.hpp"
#include "fixtures.hpp"
#include "frih/dataset.hpp"
#include "frih/metrics.hpp"
#include "frih/refinement.hpp"
#include "frih/training.hpp"

namespace frih::acceptance {
namespace {

// Desk widths cut to the depth of a smaller working resolution.
ModelConfig desk_at(const cli::RunConfig& desk, std::size_t resolution) {
  ModelConfig m = desk.model;
  std::size_t depth = 0;
  while ((resolution >> depth) > 1) ++depth;
  m.base.resolution = resolution;
  m.base.encoder_channels.resize(depth);
  m.cascade.encoder_channels.resize(depth);
  m.validate();
  return m;
}

std::vector<CompositeSample> synthetic_set(std::size_t resolution, std::size_t first, std::size_t count) {
  std::vector<CompositeSample> out;
  for (std::size_t i = first; i < first + count; ++i) out.push_back(synthetic_sample(resolution, 0, i));
  return out;
}

// Mean L_total over a fixed set, without augmentation.
double set_loss(const std::vector<CompositeSample>& data, const ModelParameters& params, const ModelConfig& model,
                const TrainConfig& tc) {
  double sum = 0.0;
  for (const auto& s : data) {
    const auto subs = extract_submasks(s.composite, s.mask, tc.d_c);
    Graph<float> g;
    sum += build_sample_graph(g, bind_parameters(g, params, false), model, s.composite, s.mask, s.target, subs,
                              tc.mode, tc.a_min)
               .loss.total.value()
               .item();
  }
  return sum / double(data.size());
}

// Harmonized image of the trained pipeline; base-only models paste their
// stage-one output into the foreground.
Tensor32 predict(const CompositeSample& s, const ModelParameters& params, const ModelConfig& model, TrainMode mode,
                 double d_c) {
  const auto r = harmonize(s.composite, s.mask, params, model, d_c);
  if (mode == TrainMode::full) return r.image;
  Tensor32 out = s.composite;
  const std::size_t plane = s.mask.numel();
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < plane; ++i)
      if (s.mask[i] != 0.0f) out[c * plane + i] = r.coarse[c * plane + i];
  return out;
}

TrainCallbacks progress(const Context& ctx, const std::string& tag) {
  TrainCallbacks cb;
  if (ctx.verbose) {
    cb.on_step = [tag](const StepRecord& r) {
      if (r.step % 25 == 0)
        std::fprintf(stderr, "  [%s] step %zu lr %.5f L %.4f\n", tag.c_str(), r.step, r.lr, r.loss.l_total);
    };
  }
  return cb;
}

}  // namespace

Outcome overfit_convergence(const Context& ctx) {
  const auto& model = ctx.desk.model;
  const std::size_t res = model.base.resolution;
  // Through the on-disk format, as the command line would see the pairs.
  testing::TempDir dir("accept5");
  std::vector<ManifestRecord> records;
  for (const auto& s : synthetic_set(res, 0, 8)) records.push_back(write_sample(s, dir.path().string()));
  write_manifest(dir.str("manifest.tsv"), records);
  std::vector<CompositeSample> data;
  for (const auto& r : read_manifest(dir.str("manifest.tsv"))) data.push_back(load_sample(r, res));

  TrainConfig tc = ctx.desk.train;
  tc.max_steps = 300;
  TrainState st{build_model(model, ctx.desk.seed), {}};
  const double initial = set_loss(data, st.params, model, tc);
  const auto steps = train(data, model, st, tc, progress(ctx, "overfit"));
  const double final_loss = set_loss(data, st.params, model, tc);

  std::size_t improved = 0;
  std::ostringstream pairs;
  for (const auto& s : data) {
    const double before = fmse(s.composite, s.target, s.mask);
    const double after = fmse(predict(s, st.params, model, TrainMode::full, tc.d_c), s.target, s.mask);
    improved += after < before;
    pairs << " " << std::lround(before) << "->" << std::lround(after);
  }
  const bool pass = steps.size() == 300 && final_loss < 0.1 * initial && improved == data.size();
  std::ostringstream d;
  d.precision(4);
  d << steps.size() << " steps at " << res << "; set-mean L_total " << initial << " -> " << final_loss << " ("
    << 100.0 * final_loss / initial << "%, need < 10%); batch L_total " << steps.front().loss.l_total << " -> "
    << steps.back().loss.l_total << "; fMSE below composite on " << improved << "/8:" << pairs.str();
  return {pass, d.str()};
}

Outcome ablation_ordering(const Context& ctx) {
  // Desk widths at 64 x 64 keep two 900-step runs within the suite budget.
  const std::size_t res = 64, budget = 900;
  const auto model = desk_at(ctx.desk, res);
  const auto data = synthetic_set(res, 0, 64);
  const auto heldout = synthetic_set(res, 1000, 16);

  struct Result {
    double train = 0.0, heldout = 0.0;
    std::size_t steps = 0;
  };
  std::map<TrainMode, Result> results;
  for (TrainMode mode : {TrainMode::full, TrainMode::base_only}) {
    TrainConfig tc = ctx.desk.train;
    tc.mode = mode;
    // Whole epochs only: 56 epochs of 16 updates.
    tc.max_steps = budget;
    tc.epochs = budget * tc.batch_size / data.size();
    TrainState st{build_model(model, ctx.desk.seed), {}};
    auto& r = results[mode];
    r.steps = train(data, model, st, tc, progress(ctx, to_string(mode))).size();
    for (const auto& s : data) r.train += fmse(predict(s, st.params, model, mode, tc.d_c), s.target, s.mask);
    for (const auto& s : heldout) r.heldout += fmse(predict(s, st.params, model, mode, tc.d_c), s.target, s.mask);
    r.train /= double(data.size());
    r.heldout /= double(heldout.size());
  }
  double composite = 0.0;
  for (const auto& s : data) composite += fmse(s.composite, s.target, s.mask);
  composite /= double(data.size());

  const auto& full = results[TrainMode::full];
  const auto& base = results[TrainMode::base_only];
  std::ostringstream d;
  d.precision(4);
  d << full.steps << " and " << base.steps << " steps at " << res << " on 64 pairs; fMSE full " << full.train << " vs base-only " << base.train
    << " (composite " << composite << "); 16 unseen pairs, not gated: full " << full.heldout << ", base-only "
    << base.heldout;
  return {full.steps == base.steps && full.train <= base.train, d.str()};
}

Outcome cutoff_sweep(const Context& ctx) {
  const std::size_t res = 64;
  const auto model = desk_at(ctx.desk, res);
  const auto histogram_set = synthetic_set(res, 0, 32);
  const auto train_set = synthetic_set(res, 100, 8);
  const auto probe_set = synthetic_set(res, 200, 4);
  std::ostringstream d;
  bool pass = true;
  for (double d_c : {0.01, 0.05, 0.1, 0.2, 0.3, 0.4}) {
    std::map<std::size_t, std::size_t> ks;
    for (const auto& s : histogram_set) ++ks[extract_submasks(s.composite, s.mask, d_c).size()];
    bool ok = ks.begin()->first >= 1 && ks.rbegin()->first <= kMaxClusters;

    // Short end-to-end run: train, then harmonize unseen pairs.
    TrainConfig tc = ctx.desk.train;
    tc.d_c = d_c;
    tc.max_steps = 4;
    TrainState st{build_model(model, ctx.desk.seed), {}};
    try {
      train(train_set, model, st, tc);
      for (const auto& s : probe_set) {
        const auto r = harmonize(s.composite, s.mask, st.params, model, d_c);
        ok = ok && r.submasks.size() >= 1 && r.submasks.size() <= kMaxClusters &&
             std::isfinite(fmse(r.image, s.target, s.mask));
      }
    } catch (const std::exception& e) {
      ok = false;
      d << "[d_c " << d_c << " threw: " << e.what() << "] ";
    }
    pass = pass && ok;
    d << "d_c " << d_c << " K{";
    for (auto it = ks.begin(); it != ks.end(); ++it) d << (it == ks.begin() ? "" : " ") << it->first << ":" << it->second;
    d << "}" << (ok ? "" : " FAILED") << "; ";
  }
  d << "32 samples per histogram, 4-step training and 4 harmonized pairs per value";
  return {pass, d.str()};
}

}  // namespace frih::acceptance
