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

#include "featproj/dp_optimizer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "featproj/errors.h"

namespace featproj {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::span<double> AsSpan(ParamVector& v) {
  return {v.data(), static_cast<size_t>(v.size())};
}

}  // namespace

std::string_view VariantName(Variant v) {
  switch (v) {
    case Variant::kSgd:
      return "SGD";
    case Variant::kDpsgd:
      return "DPSGD";
    case Variant::kProjDpsgd:
      return "PROJ_DPSGD";
    case Variant::kFdp:
      return "FDP";
    case Variant::kFeatureProjective:
      return "FEATURE_PROJECTIVE";
  }
  return "UNKNOWN";
}

Variant ParseVariant(std::string_view name) {
  for (Variant v : AllVariants()) {
    if (VariantName(v) == name) return v;
  }
  throw Error("unknown variant '" + std::string(name) + "'");
}

const std::vector<Variant>& AllVariants() {
  static const std::vector<Variant> kAll = {
      Variant::kSgd, Variant::kDpsgd, Variant::kProjDpsgd, Variant::kFdp,
      Variant::kFeatureProjective};
  return kAll;
}

bool IsPrivate(Variant v) { return v != Variant::kSgd; }

bool UsesProjection(Variant v) {
  return v == Variant::kProjDpsgd || v == Variant::kFeatureProjective;
}

bool SplitsLoss(Variant v) {
  return v == Variant::kFdp || v == Variant::kFeatureProjective;
}

ParamVector ClipGradient(const ParamVector& g, double clip_norm) {
  FEATPROJ_CHECK(clip_norm > 0.0, "clip norm must be positive");
  FEATPROJ_CHECK(AllFinite(g), "gradient must be finite");
  const double norm = g.norm();
  if (norm <= clip_norm) return g;
  return g * (clip_norm / norm);
}

ParamVector NoisyAggregate(const DenseMatrix& per_sample, double clip_norm,
                           double sigma, RngStream& rng, double denominator) {
  FEATPROJ_CHECK(clip_norm > 0.0 && sigma >= 0.0,
                 "clip norm must be positive and sigma nonnegative");
  const Index b = per_sample.rows();
  const double denom = denominator > 0.0 ? denominator : static_cast<double>(b);
  FEATPROJ_CHECK(denom > 0.0, "empty batch needs an explicit denominator");
  ParamVector sum = ParamVector::Zero(per_sample.cols());
  for (Index i = 0; i < b; ++i) {
    FEATPROJ_CHECK(per_sample.row(i).norm() <= clip_norm * (1.0 + 1e-12),
                   "per-sample gradient " + std::to_string(i) +
                       " exceeds the clip norm");
    sum += per_sample.row(i).transpose();
  }
  const ParamVector noise =
      GaussianVector(rng, per_sample.cols(), 0.0, sigma * clip_norm);
  return (sum + noise) / denom;
}

ParamVector TrainableNoise(const Model& model, double std, RngStream& rng) {
  const ParamVector draw = GaussianVector(rng, model.num_trainable(), 0.0, std);
  if (model.all_trainable()) return draw;
  ParamVector out = ParamVector::Zero(model.num_params());
  Index cursor = 0;
  for (const IndexRange& r : model.trainable_ranges()) {
    out.segment(r.begin, r.end - r.begin) =
        draw.segment(cursor, r.end - r.begin);
    cursor += r.end - r.begin;
  }
  return out;
}

TrainingSet::TrainingSet(const Dataset& data) : data_(data) {}

Index TrainingSet::input_dim() const {
  return static_cast<Index>(data_.height) * data_.width;
}

Example TrainingSet::Raw(std::int64_t i) const {
  FEATPROJ_CHECK(phase_ == Phase::kPrivate,
                 "raw private data requested from the public branch");
  FEATPROJ_CHECK(i >= 0 && i < size(), "sample index out of range");
  ++raw_reads_;
  const KeypointSample& s = data_.samples[static_cast<size_t>(i)];
  return {s.image, s.joints};
}

Example TrainingSet::Public(std::int64_t i) const {
  FEATPROJ_CHECK(i >= 0 && i < size(), "sample index out of range");
  ++public_reads_;
  const KeypointSample& s = data_.samples[static_cast<size_t>(i)];
  return {s.public_image, s.joints};
}

std::vector<PublicExample> PublicExamples(const Dataset& pub) {
  std::vector<PublicExample> out;
  out.reserve(pub.size());
  for (const KeypointSample& s : pub.samples) {
    out.push_back({{s.image, s.joints}, {s.public_image, s.joints}});
  }
  return out;
}

std::vector<std::int64_t> PoissonSample(std::int64_t n, double q,
                                        RngStream& rng) {
  FEATPROJ_CHECK(q >= 0.0 && q <= 1.0, "sampling rate must lie in [0, 1]");
  std::mt19937_64 engine = rng.NextEngine();
  std::vector<std::int64_t> out;
  for (std::int64_t i = 0; i < n; ++i) {
    if (UniformUnit(engine) < q) out.push_back(i);
  }
  return out;
}

std::vector<std::int64_t> UniformSample(std::int64_t n, std::int64_t size,
                                        RngStream& rng) {
  FEATPROJ_CHECK(n >= 1 && size >= 0, "need a nonempty population");
  std::mt19937_64 engine = rng.NextEngine();
  std::vector<std::int64_t> out(static_cast<size_t>(size));
  for (std::int64_t& v : out) {
    v = static_cast<std::int64_t>(
        UniformBelow(engine, static_cast<std::uint64_t>(n)));
  }
  return out;
}

StepResult FpDpStep(Variant variant, const Objective& objective,
                    const ParamVector& w, TrainingSet& set,
                    const ProjectionBasis& basis, const StepInputs& in,
                    RngStream& noise_rng) {
  const Model& model = objective.model;
  const Index p = model.num_params();
  FEATPROJ_CHECK(w.size() == p, "parameter vector has wrong length");
  FEATPROJ_CHECK(in.denominator > 0.0, "denominator must be positive");
  FEATPROJ_CHECK(!IsPrivate(variant) || in.clip_norm > 0.0,
                 "clip norm must be positive");
  if (UsesProjection(variant) && !basis.identity) {
    FEATPROJ_CHECK(basis.refreshed_at_step ==
                       in.step - in.step % in.refresh_interval,
                   "projection basis is stale");
  }

  StepRecord rec;
  rec.step = in.step;
  rec.batch_size = static_cast<std::int64_t>(in.private_batch.size());

  // Private branch.
  set.set_phase(TrainingSet::Phase::kPrivate);
  ParamVector sum = ParamVector::Zero(p);
  ParamVector grad(p);
  ParamVector scratch(p);
  double norm_total = 0.0;
  double loss_total = 0.0;
  std::int64_t clipped = 0;
  for (std::int64_t idx : in.private_batch) {
    const Example raw = set.Raw(idx);
    double loss;
    if (SplitsLoss(variant)) {
      loss = objective.PrivateLossAndGrad(w, raw, AsSpan(grad));
    } else {
      loss = objective.FullLossAndGrad(w, raw, set.Public(idx), AsSpan(grad),
                                       AsSpan(scratch));
    }
    loss_total += loss;
    const double norm = grad.norm();
    norm_total += norm;
    if (IsPrivate(variant) && norm > in.clip_norm) {
      grad *= in.clip_norm / norm;
      ++clipped;
    }
    sum += grad;
  }
  if (rec.batch_size > 0) {
    const auto b = static_cast<double>(rec.batch_size);
    rec.grad_norm_pre_clip = norm_total / b;
    rec.clipped_fraction = static_cast<double>(clipped) / b;
    rec.loss_private = loss_total / b;
  }
  rec.signal_norm = sum.norm() / in.denominator;

  ParamVector g_priv;
  ParamVector noise;
  bool noised = false;
  if (IsPrivate(variant)) {
    noise = TrainableNoise(model, in.sigma * in.clip_norm, noise_rng);
    g_priv = (sum + noise) / in.denominator;
    rec.noise_norm = noise.norm() / in.denominator;
    noised = true;
  } else {
    g_priv = sum / in.denominator;
  }

  ParamVector g;
  if (UsesProjection(variant)) {
    FEATPROJ_CHECK(noised, "projection must follow noise addition");
    g = Project(basis, g_priv);
    rec.projected_noise_norm = Project(basis, noise).norm() / in.denominator;
  } else {
    g = std::move(g_priv);
    rec.projected_noise_norm = rec.noise_norm;
  }
  rec.projected_norm = g.norm();

  // Public branch: psi(x) only.
  if (SplitsLoss(variant) && objective.public_weight != 0.0 &&
      !in.public_batch.empty()) {
    set.set_phase(TrainingSet::Phase::kPublic);
    ParamVector g_pub = ParamVector::Zero(p);
    double pub_loss = 0.0;
    for (std::int64_t idx : in.public_batch) {
      pub_loss += objective.PublicLossAndGrad(w, set.Public(idx), AsSpan(grad));
      g_pub += grad;
    }
    set.set_phase(TrainingSet::Phase::kPrivate);
    const auto b = static_cast<double>(in.public_batch.size());
    g_pub /= b;
    rec.loss_public = pub_loss / b;
    g = g_pub + g;
  }

  StepResult out;
  out.w = w - in.eta * g;
  out.record = rec;
  return out;
}

double LearningRate(const Hyper& hyper, std::int64_t step) {
  if (hyper.warmup_fraction <= 0.0) return hyper.eta;
  const double warm = std::ceil(hyper.warmup_fraction *
                                static_cast<double>(hyper.steps));
  if (warm <= 0.0) return hyper.eta;
  return hyper.eta * std::min(1.0, static_cast<double>(step + 1) / warm);
}

std::int64_t RefreshInterval(const Hyper& hyper) {
  if (hyper.refresh_interval > 0) return hyper.refresh_interval;
  FEATPROJ_CHECK(hyper.sampling_rate > 0.0, "sampling rate must be positive");
  return std::max<std::int64_t>(1, std::llround(1.0 / hyper.sampling_rate));
}

TrainResult Train(Variant variant, const Objective& objective,
                  const ParamVector& w0, const Dataset& private_data,
                  const Dataset& public_data, const PrivacySpec& spec,
                  const Hyper& hyper, const RngStream& rng) {
  const auto n = static_cast<std::int64_t>(private_data.size());
  FEATPROJ_CHECK(n >= 1, "private set must be nonempty");
  FEATPROJ_CHECK(hyper.sampling_rate > 0.0 && hyper.sampling_rate <= 1.0,
                 "sampling rate must lie in (0, 1]");
  FEATPROJ_CHECK(hyper.steps >= 0, "step count must be nonnegative");
  const double q = hyper.sampling_rate;
  const double expected_batch = q * static_cast<double>(n);
  const std::int64_t interval = RefreshInterval(hyper);
  const std::int64_t pub_batch =
      hyper.public_batch_size > 0
          ? hyper.public_batch_size
          : std::max<std::int64_t>(1, std::llround(expected_batch));

  TrainingSet set(private_data);
  const std::vector<PublicExample> pub = PublicExamples(public_data);
  RngStream private_rng = rng.Derive("private_batch");
  RngStream public_rng = rng.Derive("public_batch");
  RngStream noise_rng = rng.Derive("noise");

  // Per-step RDP; an empty curve marks infinite loss (sigma == 0).
  RdpCurve curve;
  bool infinite_loss = false;
  if (IsPrivate(variant)) {
    if (spec.sigma > 0.0) {
      curve = ComputeRdp(q, spec.sigma, spec.orders);
    } else {
      infinite_loss = true;
    }
  }
  auto epsilon_after = [&](std::int64_t steps) {
    if (steps == 0) return 0.0;
    if (infinite_loss) return kInf;
    return ConvertWithOrder(curve, steps, spec.delta).epsilon;
  };

  TrainResult result;
  result.w = w0;
  result.history.reserve(static_cast<size_t>(hyper.steps));
  ProjectionBasis basis =
      ProjectionBasis::Identity(objective.model.num_params(), 0);
  for (std::int64_t t = 0; t < hyper.steps; ++t) {
    if (IsPrivate(variant) && epsilon_after(t + 1) > spec.epsilon) {
      result.halted = true;
      break;
    }
    if (UsesProjection(variant) && RefreshDue(t, interval)) {
      basis = EstimateBasis(objective, result.w, pub, hyper.k, t);
    }
    const std::vector<std::int64_t> batch = PoissonSample(n, q, private_rng);
    std::vector<std::int64_t> pub_idx;
    if (SplitsLoss(variant)) pub_idx = UniformSample(n, pub_batch, public_rng);

    StepInputs in;
    in.private_batch = batch;
    in.public_batch = pub_idx;
    in.denominator = expected_batch;
    in.clip_norm = spec.clip_norm;
    in.sigma = spec.sigma;
    in.eta = LearningRate(hyper, t);
    in.step = t;
    in.refresh_interval = interval;
    StepResult step =
        FpDpStep(variant, objective, result.w, set, basis, in, noise_rng);
    step.record.eigengap = basis.identity ? 0.0 : basis.eigengap;
    if (!AllFinite(step.w)) {
      throw Error("parameters diverged at step " + std::to_string(t));
    }
    result.w = std::move(step.w);
    result.history.push_back(step.record);
    ++result.steps_executed;
  }
  result.accounted_epsilon =
      IsPrivate(variant) ? epsilon_after(result.steps_executed) : kInf;
  return result;
}

}  // namespace featproj
