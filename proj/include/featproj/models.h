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

// Small differentiable predictors with exact per-sample gradients.
//
// Parameters live in one flat vector. For the two-layer models the layout is
// [W1 (hidden x input, row-major), b1, W2 (output x hidden, row-major), b2];
// the "head" is the W2/b2 block.

#ifndef FEATPROJ_MODELS_H_
#define FEATPROJ_MODELS_H_

#include <span>
#include <string_view>
#include <vector>

#include "featproj/numerics.h"

namespace featproj {

enum class ModelKind { kLinear, kLogistic, kMlp2, kKeypointCc };

std::string_view ModelKindName(ModelKind kind);
ModelKind ParseModelKind(std::string_view name);

// Half-open [begin, end) run of flat parameter indices.
struct IndexRange {
  Index begin = 0;
  Index end = 0;
  bool operator==(const IndexRange&) const = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct ModelSpec {
  ModelKind kind = ModelKind::kLinear;
  Index input_dim = 1;
  Index hidden_dim = 0;  // kMlp2, kKeypointCc
  Index output_dim = 1;  // kMlp2 regression outputs
  // kKeypointCc only.
  Index num_joints = 0;
  double frame_width = 0.0;
  double frame_height = 0.0;
  double kappa = 1.0;  // splitting factor, bins per pixel
  double smoothing_sigma_bins = 2.0;
  // Empty means every coordinate is trainable.
  std::vector<IndexRange> trainable;
};

struct Example {
  std::span<const double> input;
  std::span<const double> target;
};

// Coordinate-classification targets for one joint: a distribution over the
// x bins and one over the y bins.
struct SmoothedTarget {
  std::vector<double> x;
  std::vector<double> y;
};

// ceil(extent * kappa).
Index BinCount(double extent, double kappa);

// Gaussian-smoothed distribution over BinCount(extent, kappa) bins centred on
// floor(coord * kappa), with width `sigma_bins` measured in bins.
std::vector<double> EncodeAxis(double coord, double extent, double kappa,
                               double sigma_bins);

SmoothedTarget EncodeTargets(Point2 coord, double width, double height,
                             double kappa, double sigma_bins);

// Argmax bin (lowest index on ties) mapped back to (b + 0.5) / kappa. Works
// on probabilities or on logits.
double DecodeAxis(std::span<const double> scores, double kappa);
Point2 DecodeCoords(const SmoothedTarget& dist, double kappa);

class Model {
 public:
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  ModelKind kind() const { return spec_.kind; }
  Index num_params() const { return num_params_; }
  Index num_trainable() const { return num_trainable_; }
  Index output_dim() const { return output_dim_; }
  Index target_dim() const;
  Index bins_x() const { return bins_x_; }
  Index bins_y() const { return bins_y_; }

  // Sorted, merged trainable ranges.
  const std::vector<IndexRange>& trainable_ranges() const {
    return trainable_;
  }
  bool all_trainable() const { return num_trainable_ == num_params_; }
  // Output-layer parameters; empty for the single-layer models.
  std::vector<IndexRange> HeadRange() const;

  // Zeroes every frozen coordinate of `v` (length num_params()).
  void ZeroFrozen(std::span<double> v) const;

  ParamVector InitParams(RngStream& rng) const;

  double Loss(const ParamVector& w, const Example& ex) const;

  // Loss of one example; writes d loss / d w into `grad` (length
  // num_params()) with frozen coordinates set to zero. Throws featproj::Error
  // if the forward pass is not finite.
  double LossAndGradient(const ParamVector& w, const Example& ex,
                         std::span<double> grad) const;

  // Raw model outputs: prediction (regression), logit (logistic) or the
  // per-joint, per-axis bin logits (keypoint).
  Eigen::VectorXd Forward(const ParamVector& w,
                          std::span<const double> input) const;

  std::vector<Point2> PredictJoints(const ParamVector& w,
                                    std::span<const double> input) const;

 private:
  double TwoLayer(const ParamVector& w, const Example& ex,
                  std::span<double> grad) const;
  double OutputLoss(const Eigen::VectorXd& out, std::span<const double> target,
                    Eigen::VectorXd* d_out) const;

  ModelSpec spec_;
  Index num_params_ = 0;
  Index num_trainable_ = 0;
  Index output_dim_ = 1;
  Index bins_x_ = 0;
  Index bins_y_ = 0;
  std::vector<IndexRange> trainable_;
  bool first_layer_frozen_ = false;
};

struct PerSampleResult {
  Eigen::VectorXd losses;
  DenseMatrix grads;  // one row per example
};

// Per-example losses and gradients. Throws featproj::Error naming the batch
// index of the first example whose forward pass is not finite.
PerSampleResult LossAndPerSampleGrad(const Model& model, const ParamVector& w,
                                     std::span<const Example> batch);

// Loss split l(w, x) = l_priv(w, x) + l_pub(w, psi(x)). Both parts use the
// same model; the private part sees the raw input and the public part sees
// the public feature map of it. `public_weight` scales l_pub (0 disables it).
struct Objective {
  Model model;
  double public_weight = 1.0;

  double PrivateLossAndGrad(const ParamVector& w, const Example& raw,
                            std::span<double> grad) const;
  double PublicLossAndGrad(const ParamVector& w, const Example& features,
                           std::span<double> grad) const;
  // Gradient of the full loss; `scratch` must have num_params() entries.
  double FullLossAndGrad(const ParamVector& w, const Example& raw,
                         const Example& features, std::span<double> grad,
                         std::span<double> scratch) const;
};

}  // namespace featproj

#endif  // FEATPROJ_MODELS_H_
