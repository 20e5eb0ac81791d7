// Copyright 2026 The featproj-dp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Private training loops. One step of the general update is
//
//   g_pub  = mean over a public batch of grad l_pub(w, psi(x))
//   g_priv = (sum_i clip(grad l_priv(w, x_i), C) + N(0, sigma^2 C^2 I)) / EB
//   w     <- w - eta * (g_pub + V V^T g_priv)
//
// and the other variants are special cases of it:
//
//   SGD                 full loss, no clipping, no noise, no projection
//   DPSGD               full loss clipped and noised, no projection
//   PROJ_DPSGD          DPSGD followed by projection
//   FDP                 split loss, identity projection
//   FEATURE_PROJECTIVE  split loss with projection
//
// Private batches are Poisson samples with rate q and every variant divides
// by the expected batch size EB = q * n.

#ifndef FEATPROJ_DP_OPTIMIZER_H_
#define FEATPROJ_DP_OPTIMIZER_H_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "featproj/accountant.h"
#include "featproj/data.h"
#include "featproj/models.h"
#include "featproj/numerics.h"
#include "featproj/subspace.h"

namespace featproj {

enum class Variant { kSgd, kDpsgd, kProjDpsgd, kFdp, kFeatureProjective };

std::string_view VariantName(Variant v);
Variant ParseVariant(std::string_view name);
const std::vector<Variant>& AllVariants();

bool IsPrivate(Variant v);
bool UsesProjection(Variant v);
bool SplitsLoss(Variant v);

struct StepRecord {
  std::int64_t step = 0;
  std::int64_t batch_size = 0;
  double grad_norm_pre_clip = 0.0;  // mean over the private batch
  double clipped_fraction = 0.0;
  double signal_norm = 0.0;  // |sum of clipped grads| / EB
  double noise_norm = 0.0;   // |noise| / EB
  double projected_norm = 0.0;
  double projected_noise_norm = 0.0;
  double loss_private = 0.0;
  double loss_public = 0.0;
  double eigengap = 0.0;
};

// g itself if |g| <= C, else g * (C / |g|).
ParamVector ClipGradient(const ParamVector& g, double clip_norm);

// (sum_i g_i + N(0, sigma^2 C^2 I)) / denominator over the rows of
// `per_sample`, which must already be clipped to C. A zero denominator
// means B.
ParamVector NoisyAggregate(const DenseMatrix& per_sample, double clip_norm,
                           double sigma, RngStream& rng,
                           double denominator = 0.0);

// Noise N(0, std^2) on the trainable coordinates of `model`, zero elsewhere.
ParamVector TrainableNoise(const Model& model, double std, RngStream& rng);

// Private samples behind an access check. Raw images may only be read while
// the set is in the private phase; the public branch switches it to the
// public phase, where only psi(x) is reachable.
class TrainingSet {
 public:
  enum class Phase { kPrivate, kPublic };

  explicit TrainingSet(const Dataset& data);

  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  Index input_dim() const;

  Example Raw(std::int64_t i) const;
  Example Public(std::int64_t i) const;

  Phase phase() const { return phase_; }
  void set_phase(Phase p) { phase_ = p; }

  std::int64_t raw_reads() const { return raw_reads_; }
  std::int64_t public_reads() const { return public_reads_; }

 private:
  const Dataset& data_;
  Phase phase_ = Phase::kPrivate;
  mutable std::int64_t raw_reads_ = 0;
  mutable std::int64_t public_reads_ = 0;
};

std::vector<PublicExample> PublicExamples(const Dataset& pub);

// Indices of a Poisson sample of {0..n-1} with rate q.
std::vector<std::int64_t> PoissonSample(std::int64_t n, double q,
                                        RngStream& rng);

// `size` indices drawn uniformly with replacement from {0..n-1}.
std::vector<std::int64_t> UniformSample(std::int64_t n, std::int64_t size,
                                        RngStream& rng);

struct StepInputs {
  std::span<const std::int64_t> private_batch;
  std::span<const std::int64_t> public_batch;
  double denominator = 1.0;  // EB
  double clip_norm = 1.0;
  double sigma = 0.0;
  double eta = 0.1;
  std::int64_t step = 0;
  std::int64_t refresh_interval = 1;
};

struct StepResult {
  ParamVector w;
  StepRecord record;
};

StepResult FpDpStep(Variant variant, const Objective& objective,
                    const ParamVector& w, TrainingSet& set,
                    const ProjectionBasis& basis, const StepInputs& in,
                    RngStream& noise_rng);

struct Hyper {
  double eta = 0.1;
  std::int64_t steps = 300;
  double sampling_rate = 0.03;  // q
  Index k = 50;
  std::int64_t refresh_interval = 0;  // 0 means one pass, round(1/q) steps
  double warmup_fraction = 0.0;
  std::int64_t public_batch_size = 0;  // 0 means round(q * n)
};

struct TrainResult {
  ParamVector w;
  std::vector<StepRecord> history;
  std::int64_t steps_executed = 0;
  bool halted = false;  // accountant stopped the run before T steps
  double accounted_epsilon = 0.0;
};

// Learning rate at step t with linear warmup over warmup_fraction * T steps.
double LearningRate(const Hyper& hyper, std::int64_t step);

std::int64_t RefreshInterval(const Hyper& hyper);

// Runs T steps of `variant` from w0. `spec.sigma` must already be
// calibrated for private variants. If composing one more step would push the
// accounted epsilon past spec.epsilon, training stops and `halted` is set.
TrainResult Train(Variant variant, const Objective& objective,
                  const ParamVector& w0, const Dataset& private_data,
                  const Dataset& public_data, const PrivacySpec& spec,
                  const Hyper& hyper, const RngStream& rng);

}  // namespace featproj

#endif  // FEATPROJ_DP_OPTIMIZER_H_
