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

#include "frih/training.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "frih/kernels.hpp"
#include "frih/ops.hpp"

namespace frih {
namespace {

constexpr std::size_t kCropAttempts = 10;
constexpr const char* kAdamM = "adam.m.";
constexpr const char* kAdamV = "adam.v.";
constexpr const char* kMetaStep = "meta.step";
constexpr const char* kMetaResolution = "meta.resolution";

// Stream ids for derive_seed.
constexpr std::uint64_t kShuffleStream = 0x5348;
constexpr std::uint64_t kAugmentStream = 0x4147;

template <typename T>
double area_of(const Tensor<T>& mask) {
  double a = 0.0;
  for (T v : mask.data()) a += v != T(0) ? 1.0 : 0.0;
  return a;
}

Tensor32 crop(const Tensor32& t, std::size_t y0, std::size_t x0, std::size_t side) {
  Tensor32 out({t.channels(), side, side});
  for (std::size_t c = 0; c < t.channels(); ++c) {
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) out.at(c, y, x) = t.at(c, y0 + y, x0 + x);
    }
  }
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  InitRng rng(derive_seed(derive_seed(seed, kShuffleStream), epoch));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(0, i - 1)]);
  return order;
}

SubmaskSet flip_submasks(SubmaskSet set) {
  for (auto& m : set.submasks) m = flip_horizontal(m);
  return set;
}

void accumulate(LossBreakdown& acc, const LossBreakdown& x) {
  acc.l_coarse += x.l_coarse;
  acc.l_refine += x.l_refine;
  acc.l_total += x.l_total;
}

LossBreakdown scaled(LossBreakdown x, double s) {
  x.l_coarse *= s;
  x.l_refine *= s;
  x.l_total = x.l_coarse + x.l_refine;
  for (auto& t : x.refine_terms) t *= s;
  return x;
}

struct SampleWork {
  std::size_t index = 0;
  CompositeSample sample;
  std::optional<SubmaskSet> submasks;  // set when reused from the cache
  LossBreakdown loss;
  ModelParameters grads;
  std::size_t k = 0;
  std::exception_ptr error;
};

void run_sample(SampleWork& w, const ModelParameters& params, const ModelConfig& model, const TrainConfig& config) {
  try {
    if (!w.submasks) {
      w.submasks = config.mode == TrainMode::full ? extract_submasks(w.sample.composite, w.sample.mask, config.d_c)
                                                  : SubmaskSet{};
    }
    w.k = w.submasks->size();
    Graph<float> g;
    BoundParams<float> bound;
    for (const auto& [name, t] : params) bound.emplace(name, g.leaf(t, is_trainable(name, config.mode)));
    const auto sg = build_sample_graph(g, bound, model, w.sample.composite, w.sample.mask, w.sample.target,
                                       *w.submasks, config.mode, config.a_min);
    w.loss = sg.loss.breakdown();
    g.backward(sg.loss.total);
    for (const auto& [name, v] : bound) {
      if (v.requires_grad()) w.grads.emplace(name, g.grad(v));
    }
  } catch (...) {
    w.error = std::current_exception();
  }
}

std::string numeric_report(std::size_t step, std::size_t epoch, const std::vector<SampleWork>& work,
                           const std::string& what) {
  std::ostringstream out;
  out << "non-finite " << what << " at step " << step << " (epoch " << epoch << ")";
  for (const auto& w : work) {
    out << "; sample '" << w.sample.id << "': l_coarse=" << w.loss.l_coarse << " l_refine=" << w.loss.l_refine
        << " K=" << w.k;
  }
  return out.str();
}

}  // namespace

std::string to_string(TrainMode mode) { return mode == TrainMode::full ? "full" : "base_only"; }

TrainMode parse_train_mode(const std::string& text) {
  if (text == "full") return TrainMode::full;
  if (text == "base_only") return TrainMode::base_only;
  throw InvalidArgument("unknown training mode '" + text + "' (expected full or base_only)");
}

void TrainConfig::validate() const {
  if (epochs == 0) throw InvalidArgument("train.epochs must be >= 1");
  if (reference_epochs == 0) throw InvalidArgument("train.reference_epochs must be >= 1");
  for (auto d : decay_epochs) {
    if (d >= reference_epochs) throw InvalidArgument("train.decay_epochs must be below train.reference_epochs");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidArgument("train.lr must be positive");
  if (!(decay_factor > 0.0)) throw InvalidArgument("train.decay_factor must be positive");
  if (batch_size == 0) throw InvalidArgument("train.batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("train.beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("train.beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw InvalidArgument("train.eps must be positive");
  if (!(a_min >= 1.0)) throw InvalidArgument("train.a_min must be >= 1");
  if (!(d_c > 0.0 && d_c <= 1.0)) throw InvalidArgument("d_c must lie in (0, 1]");
  if (threads == 0) throw InvalidArgument("threads must be >= 1");
}

std::vector<std::size_t> decay_breakpoints(const TrainConfig& config) {
  std::vector<std::size_t> out;
  const std::uint64_t r = config.reference_epochs;
  for (auto d : config.decay_epochs) {
    // round(d * E / R) with halves going down: ceil((2 d E - R) / (2 R)).
    const std::uint64_t twice = 2 * std::uint64_t{d} * config.epochs;
    out.push_back(twice <= r ? 0 : static_cast<std::size_t>((twice - r + 2 * r - 1) / (2 * r)));
  }
  return out;
}

double lr_at(std::size_t epoch, const TrainConfig& config) {
  double lr = config.lr;
  for (auto b : decay_breakpoints(config)) {
    if (epoch >= b) lr /= config.decay_factor;
  }
  return lr;
}

template <typename T>
Var<T> loss_coarse(const Var<T>& pred, const Tensor<T>& target, const Tensor<T>& mask, double a_min) {
  require_chw(pred.value(), "loss_coarse");
  if (mask.numel() != pred.value().height() * pred.value().width()) {
    throw InvalidArgument("loss_coarse: mask " + shape_to_string(mask.shape()) + " does not match prediction " +
                          shape_to_string(pred.shape()));
  }
  const Tensor<T> ones({1, pred.value().height(), pred.value().width()}, T(1));
  return ops::weighted_squared_error(pred, target, ones, 1.0 / std::max(area_of(mask), a_min));
}

template <typename T>
std::vector<Var<T>> loss_refine_terms(const std::vector<Var<T>>& preds, const Tensor<T>& target,
                                      const std::vector<Tensor<T>>& submasks, double a_min) {
  if (preds.size() != submasks.size() || submasks.empty()) {
    throw InvalidArgument("loss_refine: " + std::to_string(preds.size()) + " predictions for " +
                          std::to_string(submasks.size()) + " submasks");
  }
  std::vector<unsigned char> covered(submasks.front().numel(), 0);
  for (const auto& m : submasks) {
    if (m.numel() != covered.size()) throw InvalidArgument("loss_refine: submask sizes differ");
    for (std::size_t i = 0; i < m.numel(); ++i) {
      if (m[i] != T(0) && m[i] != T(1)) throw InvalidArgument("loss_refine: submask is not binary");
      if (m[i] == T(0)) continue;
      if (covered[i]) throw InvalidArgument("loss_refine: submasks overlap at pixel " + std::to_string(i));
      covered[i] = 1;
    }
  }
  std::vector<Var<T>> terms;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    terms.push_back(ops::weighted_squared_error(preds[k], target, submasks[k],
                                                1.0 / std::max(area_of(submasks[k]), a_min)));
  }
  return terms;
}

template <typename T>
Var<T> loss_refine(const std::vector<Var<T>>& preds, const Tensor<T>& target, const std::vector<Tensor<T>>& submasks,
                   double a_min) {
  const auto terms = loss_refine_terms(preds, target, submasks, a_min);
  Var<T> total = terms.front();
  for (std::size_t k = 1; k < terms.size(); ++k) total = ops::add(total, terms[k]);
  return total;
}

template <typename T>
Var<T> loss_refine(const Var<T>& pred, const Tensor<T>& target, const std::vector<Tensor<T>>& submasks, double a_min) {
  return loss_refine(std::vector<Var<T>>(submasks.size(), pred), target, submasks, a_min);
}

template <typename T>
LossBreakdown LossVars<T>::breakdown() const {
  LossBreakdown b;
  b.l_coarse = static_cast<double>(coarse.value().item());
  b.l_refine = static_cast<double>(refine.value().item());
  b.l_total = b.l_coarse + b.l_refine;
  for (const auto& t : refine_terms) b.refine_terms.push_back(static_cast<double>(t.value().item()));
  return b;
}

template <typename T>
SampleGraph<T> build_sample_graph(Graph<T>& graph, const BoundParams<T>& params, const ModelConfig& model,
                                  const Tensor<T>& composite, const Tensor<T>& mask, const Tensor<T>& target,
                                  const SubmaskSet& submasks, TrainMode mode, double a_min) {
  SampleGraph<T> sg;
  const auto comp = graph.constant(composite);
  const auto m = graph.constant(mask);
  if (mode == TrainMode::base_only) {
    sg.coarse = forward_coarse(comp, m, params, model.base);
    sg.loss.coarse = loss_coarse(sg.coarse.image, target, mask, a_min);
    sg.loss.refine = graph.constant(Tensor<T>::scalar(T(0)));
  } else {
    auto pass = forward_two_stage(comp, m, submasks, params, model);
    sg.coarse = pass.coarse;
    sg.refined = pass.refined;
    std::vector<Tensor<T>> masks;
    for (const auto& s : submasks.submasks) masks.push_back(s.template cast<T>());
    sg.loss.coarse = loss_coarse(sg.coarse.image, target, mask, a_min);
    sg.loss.refine_terms = loss_refine_terms(sg.refined, target, masks, a_min);
    Var<T> r = sg.loss.refine_terms.front();
    for (std::size_t k = 1; k < sg.loss.refine_terms.size(); ++k) r = ops::add(r, sg.loss.refine_terms[k]);
    sg.loss.refine = r;
  }
  sg.loss.total = ops::add(sg.loss.coarse, sg.loss.refine);
  return sg;
}

void adam_step(ModelParameters& params, const ModelParameters& grads, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw InvalidArgument("adam_step: gradient for unknown parameter '" + name + "'");
    auto& p = it->second;
    if (g.shape() != p.shape()) throw InvalidArgument("adam_step: gradient shape mismatch for '" + name + "'");
    auto& m = state.m.try_emplace(name, p.shape()).first->second;
    auto& v = state.v.try_emplace(name, p.shape()).first->second;
    if (m.shape() != p.shape() || v.shape() != p.shape()) {
      throw InvalidArgument("adam_step: moment shape mismatch for '" + name + "'");
    }
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const double gi = g[i];
      const double mi = beta1 * m[i] + (1.0 - beta1) * gi;
      const double vi = beta2 * v[i] + (1.0 - beta2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      p[i] = static_cast<float>(p[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + eps));
    }
  }
}

Tensor32 flip_horizontal(const Tensor32& t) {
  require_chw(t, "flip_horizontal");
  Tensor32 out(t.shape());
  const std::size_t w = t.width();
  for (std::size_t c = 0; c < t.channels(); ++c) {
    for (std::size_t y = 0; y < t.height(); ++y) {
      for (std::size_t x = 0; x < w; ++x) out.at(c, y, x) = t.at(c, y, w - 1 - x);
    }
  }
  return out;
}

AugmentResult augment(const CompositeSample& sample, std::size_t resolution, InitRng& rng) {
  const bool flip = rng.coin(0.5);
  CompositeSample base = sample;
  if (flip) {
    base.composite = flip_horizontal(sample.composite);
    base.mask = flip_horizontal(sample.mask);
    base.target = flip_horizontal(sample.target);
  }
  const std::size_t h = sample.composite.height();
  const std::size_t w = sample.composite.width();
  const std::size_t n = std::min(h, w);
  const std::size_t lo = (n + 1) / 2;
  for (std::size_t attempt = 0; attempt < kCropAttempts; ++attempt) {
    const std::size_t side = rng.index(lo, n);
    const std::size_t y0 = rng.index(0, h - side);
    const std::size_t x0 = rng.index(0, w - side);
    Tensor32 mask = crop(base.mask, y0, x0, side);
    if (mask_area(mask) == 0) continue;
    mask = kernels::resize_nearest(mask, resolution, resolution);
    if (mask_area(mask) == 0) continue;
    CompositeSample out{kernels::resize_bilinear(crop(base.composite, y0, x0, side), resolution, resolution),
                        std::move(mask),
                        kernels::resize_bilinear(crop(base.target, y0, x0, side), resolution, resolution), sample.tag,
                        sample.id};
    return {std::move(out), flip, true};
  }
  return {sample, false, false};
}

bool is_trainable(const std::string& name, TrainMode mode) {
  return mode == TrainMode::full || name.starts_with("base.");
}

std::vector<StepRecord> train(const std::vector<CompositeSample>& data, const ModelConfig& model, TrainState& state,
                              const TrainConfig& config, const TrainCallbacks& callbacks) {
  config.validate();
  model.validate();
  if (data.empty()) throw InvalidArgument("train: empty dataset");
  const std::size_t res = model.base.resolution;
  for (const auto& s : data) {
    s.validate();
    if (s.composite.height() != res || s.composite.width() != res) {
      throw InvalidArgument("train: sample '" + s.id + "' is " + shape_to_string(s.composite.shape()) +
                            " but the model resolution is " + std::to_string(res));
    }
  }
  const std::size_t n = data.size();
  const std::size_t b = std::min(config.batch_size, n);
  const std::size_t per_epoch = (n + b - 1) / b;
  std::size_t total = config.epochs * per_epoch;
  if (config.max_steps > 0) total = std::min(total, config.max_steps);

  std::vector<std::optional<SubmaskSet>> cache(n);
  std::vector<StepRecord> history;
  EpochRecord epoch_acc;
  std::size_t order_epoch = static_cast<std::size_t>(-1);
  std::vector<std::size_t> order;

  for (std::size_t step = state.adam.step; step < total; ++step) {
    const std::size_t epoch = step / per_epoch;
    const std::size_t pos = step % per_epoch;
    if (epoch != order_epoch) {
      order = epoch_order(n, config.seed, epoch);
      order_epoch = epoch;
      epoch_acc = EpochRecord{epoch, 0, lr_at(epoch, config), {}};
    }
    const std::size_t first = pos * b;
    const std::size_t last = std::min(n, first + b);

    std::vector<SampleWork> work(last - first);
    for (std::size_t j = 0; j < work.size(); ++j) {
      auto& w = work[j];
      w.index = order[first + j];
      const auto& src = data[w.index];
      AugmentResult ar{src, false, false};
      if (config.augment) {
        InitRng rng(derive_seed(derive_seed(config.seed, kAugmentStream), step * b + j));
        ar = augment(src, res, rng);
      }
      w.sample = std::move(ar.sample);
      if (config.mode == TrainMode::full && !ar.cropped && config.cache_submasks) {
        if (!cache[w.index]) cache[w.index] = extract_submasks(src.composite, src.mask, config.d_c);
        w.submasks = ar.flipped ? flip_submasks(*cache[w.index]) : *cache[w.index];
      }
    }

    const std::size_t workers = std::min(config.threads, work.size());
    if (workers <= 1) {
      for (auto& w : work) run_sample(w, state.params, model, config);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
          for (std::size_t j = t; j < work.size(); j += workers) run_sample(work[j], state.params, model, config);
        });
      }
    }
    for (const auto& w : work) {
      if (w.error) std::rethrow_exception(w.error);
    }

    // Fixed reduction order keeps results independent of the thread count.
    const double inv = 1.0 / static_cast<double>(work.size());
    StepRecord rec{epoch, step, lr_at(epoch, config), work.size(), 0.0, {}};
    ModelParameters grads = std::move(work.front().grads);
    for (std::size_t j = 1; j < work.size(); ++j) {
      for (auto& [name, g] : grads) {
        const auto& other = work[j].grads.at(name);
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += other[i];
      }
    }
    for (auto& [name, g] : grads) {
      for (auto& v : g.data()) v = static_cast<float>(v * inv);
    }
    for (const auto& w : work) {
      accumulate(rec.loss, w.loss);
      rec.mean_submasks += static_cast<double>(w.k) * inv;
      if (!std::isfinite(w.loss.l_total)) throw NumericError(numeric_report(step, epoch, work, "loss"));
    }
    rec.loss = scaled(rec.loss, inv);
    for (const auto& [name, g] : grads) {
      if (!all_finite(g)) throw NumericError(numeric_report(step, epoch, work, "gradient of '" + name + "'"));
    }

    adam_step(state.params, grads, state.adam, rec.lr, config.beta1, config.beta2, config.eps);
    history.push_back(rec);
    if (callbacks.on_step) callbacks.on_step(rec);

    accumulate(epoch_acc.loss, rec.loss);
    ++epoch_acc.steps;
    if (pos + 1 == per_epoch || step + 1 == total) {
      epoch_acc.loss = scaled(epoch_acc.loss, 1.0 / static_cast<double>(epoch_acc.steps));
      if (callbacks.on_epoch) callbacks.on_epoch(epoch_acc);
    }
  }
  return history;
}

ModelParameters pack_training_state(const TrainState& state, std::size_t resolution) {
  ModelParameters out = state.params;
  for (const auto& [name, t] : state.adam.m) out.emplace(kAdamM + name, t);
  for (const auto& [name, t] : state.adam.v) out.emplace(kAdamV + name, t);
  if (state.adam.step >= (std::size_t{1} << 24)) throw InvalidArgument("checkpoint: step count too large to record");
  out.emplace(kMetaStep, Tensor32::scalar(static_cast<float>(state.adam.step)));
  out.emplace(kMetaResolution, Tensor32::scalar(static_cast<float>(resolution)));
  return out;
}

UnpackedCheckpoint unpack_training_state(const ModelParameters& tensors) {
  UnpackedCheckpoint u;
  for (const auto& [name, t] : tensors) {
    if (name.starts_with(kAdamM)) {
      u.state.adam.m.emplace(name.substr(std::string_view(kAdamM).size()), t);
    } else if (name.starts_with(kAdamV)) {
      u.state.adam.v.emplace(name.substr(std::string_view(kAdamV).size()), t);
    } else if (name == kMetaStep) {
      u.state.adam.step = static_cast<std::size_t>(t.item());
    } else if (name == kMetaResolution) {
      u.resolution = static_cast<std::size_t>(t.item());
    } else if (name.starts_with("meta.")) {
      continue;
    } else {
      u.state.params.emplace(name, t);
    }
  }
  return u;
}

#define FRIH_INSTANTIATE_TRAINING(T)                                                                          \
  template Var<T> loss_coarse(const Var<T>&, const Tensor<T>&, const Tensor<T>&, double);                    \
  template std::vector<Var<T>> loss_refine_terms(const std::vector<Var<T>>&, const Tensor<T>&,                \
                                                 const std::vector<Tensor<T>>&, double);                      \
  template Var<T> loss_refine(const std::vector<Var<T>>&, const Tensor<T>&, const std::vector<Tensor<T>>&,   \
                              double);                                                                        \
  template Var<T> loss_refine(const Var<T>&, const Tensor<T>&, const std::vector<Tensor<T>>&, double);       \
  template struct LossVars<T>;                                                                                \
  template SampleGraph<T> build_sample_graph(Graph<T>&, const BoundParams<T>&, const ModelConfig&,            \
                                             const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                                             const SubmaskSet&, TrainMode, double);

FRIH_INSTANTIATE_TRAINING(float)
FRIH_INSTANTIATE_TRAINING(double)

#undef FRIH_INSTANTIATE_TRAINING

}  // namespace frih
