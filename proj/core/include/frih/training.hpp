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
#include <functional>
#include <string>
#include <vector>

#include "frih/dataset.hpp"
#include "frih/refinement.hpp"

namespace frih {

enum class TrainMode {
  full,       // both stages, L_coarse + L_refine
  base_only,  // the base network alone on L_coarse; cascade and fusion frozen
};

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& text);

struct TrainConfig {
  std::size_t epochs = 180;
  // Budget the decay epochs refer to; breakpoints scale by epochs / reference.
  std::size_t reference_epochs = 180;
  std::size_t max_steps = 0;  // cap on the total update count, resumed steps included; 0: none
  double lr = 0.008;
  std::vector<std::size_t> decay_epochs{160, 175};
  double decay_factor = 10.0;
  std::size_t batch_size = 4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double a_min = 100.0;
  std::uint64_t seed = 0;
  bool augment = true;
  TrainMode mode = TrainMode::full;
  double d_c = kDefaultCutoff;
  bool cache_submasks = true;
  std::size_t threads = 1;

  void validate() const;
};

// Decay epochs scaled to the run's budget, rounding halves down:
// 160 and 175 of 180 become 16 and 17 of 18.
std::vector<std::size_t> decay_breakpoints(const TrainConfig& config);

// Piecewise-constant rate: lr divided by decay_factor at every breakpoint
// already reached.
double lr_at(std::size_t epoch, const TrainConfig& config);

struct LossBreakdown {
  double l_coarse = 0.0;
  double l_refine = 0.0;
  double l_total = 0.0;  // l_coarse + l_refine
  std::vector<double> refine_terms;
};

// sum over all pixels and channels of (pred - target)^2 / max(area(mask), a_min).
template <typename T>
Var<T> loss_coarse(const Var<T>& pred, const Tensor<T>& target, const Tensor<T>& mask, double a_min);

// One term per submask: sum of (preds[i] - target)^2 over Subm^i divided by
// max(area(Subm^i), a_min). Throws InvalidArgument when submasks overlap or
// are not binary.
template <typename T>
std::vector<Var<T>> loss_refine_terms(const std::vector<Var<T>>& preds, const Tensor<T>& target,
                                      const std::vector<Tensor<T>>& submasks, double a_min);

template <typename T>
Var<T> loss_refine(const std::vector<Var<T>>& preds, const Tensor<T>& target, const std::vector<Tensor<T>>& submasks,
                   double a_min);

// The same prediction scored against every submask.
template <typename T>
Var<T> loss_refine(const Var<T>& pred, const Tensor<T>& target, const std::vector<Tensor<T>>& submasks, double a_min);

template <typename T>
struct LossVars {
  Var<T> coarse;
  Var<T> refine;
  Var<T> total;
  std::vector<Var<T>> refine_terms;

  LossBreakdown breakdown() const;
};

// Forward graph and losses for one sample. In base_only mode only the base
// network runs and the refine loss is a constant zero.
template <typename T>
struct SampleGraph {
  CoarseResult<T> coarse;
  std::vector<Var<T>> refined;
  LossVars<T> loss;
};

template <typename T>
SampleGraph<T> build_sample_graph(Graph<T>& graph, const BoundParams<T>& params, const ModelConfig& model,
                                  const Tensor<T>& composite, const Tensor<T>& mask, const Tensor<T>& target,
                                  const SubmaskSet& submasks, TrainMode mode, double a_min);

struct AdamState {
  ModelParameters m;
  ModelParameters v;
  std::size_t step = 0;
};

// One bias-corrected Adam update of every parameter that has an entry in
// `grads`; others (frozen) are left untouched.
void adam_step(ModelParameters& params, const ModelParameters& grads, AdamState& state, double lr, double beta1,
               double beta2, double eps);

Tensor32 flip_horizontal(const Tensor32& t);

struct AugmentResult {
  CompositeSample sample;
  bool flipped = false;
  bool cropped = false;
};

// Horizontal flip with probability 0.5, then a random square crop with side
// in [50%, 100%] of the shorter edge, resized back to `resolution` (bilinear
// for images, nearest for the mask). A crop without foreground is redrawn up
// to 10 times before the unaugmented sample is returned.
AugmentResult augment(const CompositeSample& sample, std::size_t resolution, InitRng& rng);

// Which parameters a mode trains.
bool is_trainable(const std::string& name, TrainMode mode);

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;  // 0-based index of the update
  double lr = 0.0;
  std::size_t batch = 0;
  double mean_submasks = 0.0;
  LossBreakdown loss;  // batch means
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double lr = 0.0;
  LossBreakdown loss;  // means over the epoch's steps
};

struct TrainState {
  ModelParameters params;
  AdamState adam;
};

struct TrainCallbacks {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpochRecord&)> on_epoch;
};

// Mini-batch Adam on the mean per-image L_total. Sample order is reshuffled
// every epoch from the seed; results do not depend on `threads`. Resumes
// from state.adam.step. Throws NumericError on a non-finite loss or
// gradient with the step, sample ids and loss values in the message.
std::vector<StepRecord> train(const std::vector<CompositeSample>& data, const ModelConfig& model, TrainState& state,
                              const TrainConfig& config, const TrainCallbacks& callbacks = {});

// Checkpoint tensors of a training state: the parameters by name, Adam
// moments under adam.m.* / adam.v.*, the step and resolution under meta.*.
ModelParameters pack_training_state(const TrainState& state, std::size_t resolution);

struct UnpackedCheckpoint {
  TrainState state;
  std::size_t resolution = 0;  // 0 when not recorded
};

UnpackedCheckpoint unpack_training_state(const ModelParameters& tensors);

}  // namespace frih
