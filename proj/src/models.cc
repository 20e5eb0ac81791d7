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

#include "featproj/models.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "featproj/errors.h"

namespace featproj {
namespace {

using RowMap = Eigen::Map<const DenseMatrix>;
using MutRowMap = Eigen::Map<DenseMatrix>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;
using MutVecMap = Eigen::Map<Eigen::VectorXd>;

// Softplus without overflow.
double Softplus(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

double Sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

std::vector<IndexRange> NormalizeRanges(std::vector<IndexRange> ranges,
                                        Index p) {
  if (ranges.empty()) return {{0, p}};
  for (const IndexRange& r : ranges) {
    FEATPROJ_CHECK(0 <= r.begin && r.begin <= r.end && r.end <= p,
                   "trainable range out of bounds");
  }
  std::sort(ranges.begin(), ranges.end(),
            [](const IndexRange& a, const IndexRange& b) {
              return a.begin < b.begin;
            });
  std::vector<IndexRange> merged;
  for (const IndexRange& r : ranges) {
    if (r.begin == r.end) continue;
    if (!merged.empty() && r.begin <= merged.back().end) {
      merged.back().end = std::max(merged.back().end, r.end);
    } else {
      merged.push_back(r);
    }
  }
  return merged;
}

// Cross-entropy of softmax(logits) against `target`, adding d/d logits into
// `d_logits` when given.
double SoftmaxCrossEntropy(const double* logits, const double* target, Index n,
                           double* d_logits) {
  double top = logits[0];
  for (Index i = 1; i < n; ++i) top = std::max(top, logits[i]);
  double z = 0.0;
  for (Index i = 0; i < n; ++i) z += std::exp(logits[i] - top);
  const double log_z = top + std::log(z);
  double loss = 0.0;
  double target_mass = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (target[i] != 0.0) loss -= target[i] * (logits[i] - log_z);
    target_mass += target[i];
  }
  if (d_logits != nullptr) {
    for (Index i = 0; i < n; ++i) {
      d_logits[i] = target_mass * std::exp(logits[i] - log_z) - target[i];
    }
  }
  return loss;
}

}  // namespace

std::string_view ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLinear:
      return "linear";
    case ModelKind::kLogistic:
      return "logistic";
    case ModelKind::kMlp2:
      return "mlp2";
    case ModelKind::kKeypointCc:
      return "keypoint_cc";
  }
  return "unknown";
}

ModelKind ParseModelKind(std::string_view name) {
  if (name == "linear") return ModelKind::kLinear;
  if (name == "logistic") return ModelKind::kLogistic;
  if (name == "mlp2") return ModelKind::kMlp2;
  if (name == "keypoint_cc") return ModelKind::kKeypointCc;
  throw Error("unknown model kind '" + std::string(name) + "'");
}

Index BinCount(double extent, double kappa) {
  FEATPROJ_CHECK(extent > 0.0 && kappa >= 1.0,
                 "extent must be positive and kappa >= 1");
  return static_cast<Index>(std::ceil(extent * kappa - 1e-12));
}

std::vector<double> EncodeAxis(double coord, double extent, double kappa,
                               double sigma_bins) {
  FEATPROJ_CHECK(sigma_bins > 0.0, "smoothing width must be positive");
  if (!(coord >= 0.0 && coord < extent)) {
    throw Error("coordinate " + std::to_string(coord) +
                " lies outside the frame [0, " + std::to_string(extent) + ")");
  }
  const Index bins = BinCount(extent, kappa);
  const Index center =
      std::min<Index>(bins - 1, static_cast<Index>(std::floor(coord * kappa)));
  std::vector<double> dist(static_cast<size_t>(bins));
  const double inv = 1.0 / (2.0 * sigma_bins * sigma_bins);
  double total = 0.0;
  for (Index b = 0; b < bins; ++b) {
    const double d = static_cast<double>(b - center);
    dist[static_cast<size_t>(b)] = std::exp(-d * d * inv);
    total += dist[static_cast<size_t>(b)];
  }
  for (double& v : dist) v /= total;
  return dist;
}

SmoothedTarget EncodeTargets(Point2 coord, double width, double height,
                             double kappa, double sigma_bins) {
  return {EncodeAxis(coord.x, width, kappa, sigma_bins),
          EncodeAxis(coord.y, height, kappa, sigma_bins)};
}

double DecodeAxis(std::span<const double> scores, double kappa) {
  FEATPROJ_CHECK(!scores.empty(), "cannot decode an empty distribution");
  size_t best = 0;
  for (size_t b = 1; b < scores.size(); ++b) {
    if (scores[b] > scores[best]) best = b;
  }
  return (static_cast<double>(best) + 0.5) / kappa;
}

Point2 DecodeCoords(const SmoothedTarget& dist, double kappa) {
  return {DecodeAxis(dist.x, kappa), DecodeAxis(dist.y, kappa)};
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  FEATPROJ_CHECK(spec_.input_dim >= 1, "input dimension must be positive");
  const Index d = spec_.input_dim;
  switch (spec_.kind) {
    case ModelKind::kLinear:
    case ModelKind::kLogistic:
      output_dim_ = 1;
      num_params_ = d + 1;
      break;
    case ModelKind::kMlp2:
      FEATPROJ_CHECK(spec_.hidden_dim >= 1 && spec_.output_dim >= 1,
                     "mlp2 needs hidden and output sizes");
      output_dim_ = spec_.output_dim;
      break;
    case ModelKind::kKeypointCc:
      FEATPROJ_CHECK(spec_.hidden_dim >= 1 && spec_.num_joints >= 1,
                     "keypoint model needs hidden size and joints");
      bins_x_ = BinCount(spec_.frame_width, spec_.kappa);
      bins_y_ = BinCount(spec_.frame_height, spec_.kappa);
      output_dim_ = spec_.num_joints * (bins_x_ + bins_y_);
      break;
  }
  if (spec_.kind == ModelKind::kMlp2 || spec_.kind == ModelKind::kKeypointCc) {
    const Index h = spec_.hidden_dim;
    num_params_ = h * d + h + output_dim_ * h + output_dim_;
  }
  trainable_ = NormalizeRanges(spec_.trainable, num_params_);
  num_trainable_ = 0;
  for (const IndexRange& r : trainable_) num_trainable_ += r.end - r.begin;
  if (spec_.kind == ModelKind::kMlp2 || spec_.kind == ModelKind::kKeypointCc) {
    const Index w1_end = spec_.hidden_dim * d;
    first_layer_frozen_ = true;
    for (const IndexRange& r : trainable_) {
      if (r.begin < w1_end) first_layer_frozen_ = false;
    }
  }
}

Index Model::target_dim() const {
  switch (spec_.kind) {
    case ModelKind::kLinear:
    case ModelKind::kLogistic:
      return 1;
    case ModelKind::kMlp2:
      return output_dim_;
    case ModelKind::kKeypointCc:
      return 2 * spec_.num_joints;
  }
  return 0;
}

std::vector<IndexRange> Model::HeadRange() const {
  if (spec_.kind == ModelKind::kMlp2 || spec_.kind == ModelKind::kKeypointCc) {
    const Index h = spec_.hidden_dim;
    return {{h * spec_.input_dim + h, num_params_}};
  }
  return {};
}

void Model::ZeroFrozen(std::span<double> v) const {
  FEATPROJ_CHECK(static_cast<Index>(v.size()) == num_params_,
                 "vector length must equal the parameter count");
  if (all_trainable()) return;
  Index cursor = 0;
  for (const IndexRange& r : trainable_) {
    std::fill(v.begin() + cursor, v.begin() + r.begin, 0.0);
    cursor = r.end;
  }
  std::fill(v.begin() + cursor, v.end(), 0.0);
}

ParamVector Model::InitParams(RngStream& rng) const {
  std::mt19937_64 engine = rng.NextEngine();
  std::normal_distribution<double> normal(0.0, 1.0);
  ParamVector w = ParamVector::Zero(num_params_);
  const Index d = spec_.input_dim;
  if (spec_.kind == ModelKind::kLinear || spec_.kind == ModelKind::kLogistic) {
    for (Index i = 0; i < d; ++i) w(i) = 0.01 * normal(engine);
    return w;
  }
  const Index h = spec_.hidden_dim;
  const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (Index i = 0; i < h * d; ++i) w(i) = s1 * normal(engine);
  const Index w2 = h * d + h;
  for (Index i = 0; i < output_dim_ * h; ++i) w(w2 + i) = s2 * normal(engine);
  return w;
}

double Model::OutputLoss(const Eigen::VectorXd& out,
                         std::span<const double> target,
                         Eigen::VectorXd* d_out) const {
  if (spec_.kind == ModelKind::kMlp2) {
    const Eigen::VectorXd diff = out - VecMap(target.data(), output_dim_);
    if (d_out != nullptr) *d_out = diff;
    return 0.5 * diff.squaredNorm();
  }
  // Keypoint head: per joint, softmax over the x bins and over the y bins.
  if (d_out != nullptr) d_out->resize(output_dim_);
  double loss = 0.0;
  const Index stride = bins_x_ + bins_y_;
  for (Index j = 0; j < spec_.num_joints; ++j) {
    const SmoothedTarget t = EncodeTargets(
        {target[static_cast<size_t>(2 * j)],
         target[static_cast<size_t>(2 * j + 1)]},
        spec_.frame_width, spec_.frame_height, spec_.kappa,
        spec_.smoothing_sigma_bins);
    const Index off = j * stride;
    double* dx = d_out != nullptr ? d_out->data() + off : nullptr;
    double* dy = d_out != nullptr ? d_out->data() + off + bins_x_ : nullptr;
    loss += SoftmaxCrossEntropy(out.data() + off, t.x.data(), bins_x_, dx);
    loss += SoftmaxCrossEntropy(out.data() + off + bins_x_, t.y.data(),
                                bins_y_, dy);
  }
  // Mean over the 2J per-axis terms.
  const double scale = 1.0 / (2.0 * static_cast<double>(spec_.num_joints));
  if (d_out != nullptr) *d_out *= scale;
  return loss * scale;
}

double Model::TwoLayer(const ParamVector& w, const Example& ex,
                       std::span<double> grad) const {
  const Index d = spec_.input_dim;
  const Index h = spec_.hidden_dim;
  const Index o = output_dim_;
  const RowMap w1(w.data(), h, d);
  const VecMap b1(w.data() + h * d, h);
  const RowMap w2(w.data() + h * d + h, o, h);
  const VecMap b2(w.data() + h * d + h + o * h, o);
  const VecMap x(ex.input.data(), d);

  Eigen::VectorXd a = w1 * x + b1;
  a = a.array().tanh();
  Eigen::VectorXd out = w2 * a + b2;
  if (grad.empty()) return OutputLoss(out, ex.target, nullptr);

  Eigen::VectorXd d_out;
  const double loss = OutputLoss(out, ex.target, &d_out);
  MutRowMap g_w2(grad.data() + h * d + h, o, h);
  MutVecMap g_b2(grad.data() + h * d + h + o * h, o);
  g_w2.noalias() = d_out * a.transpose();
  g_b2 = d_out;
  Eigen::VectorXd dz = w2.transpose() * d_out;
  dz.array() *= 1.0 - a.array().square();
  MutVecMap(grad.data() + h * d, h) = dz;
  MutRowMap g_w1(grad.data(), h, d);
  if (first_layer_frozen_) {
    g_w1.setZero();
  } else {
    g_w1.noalias() = dz * x.transpose();
  }
  return loss;
}

double Model::Loss(const ParamVector& w, const Example& ex) const {
  FEATPROJ_CHECK(w.size() == num_params_, "parameter vector has wrong length");
  FEATPROJ_CHECK(static_cast<Index>(ex.input.size()) == spec_.input_dim,
                 "input has wrong length");
  switch (spec_.kind) {
    case ModelKind::kLinear: {
      const double r = VecMap(ex.input.data(), spec_.input_dim)
                           .dot(w.head(spec_.input_dim)) +
                       w(spec_.input_dim) - ex.target[0];
      return 0.5 * r * r;
    }
    case ModelKind::kLogistic: {
      const double s = VecMap(ex.input.data(), spec_.input_dim)
                           .dot(w.head(spec_.input_dim)) +
                       w(spec_.input_dim);
      return Softplus(s) - ex.target[0] * s;
    }
    case ModelKind::kMlp2:
    case ModelKind::kKeypointCc:
      return TwoLayer(w, ex, {});
  }
  return 0.0;
}

double Model::LossAndGradient(const ParamVector& w, const Example& ex,
                              std::span<double> grad) const {
  FEATPROJ_CHECK(w.size() == num_params_, "parameter vector has wrong length");
  FEATPROJ_CHECK(static_cast<Index>(grad.size()) == num_params_,
                 "gradient buffer has wrong length");
  FEATPROJ_CHECK(static_cast<Index>(ex.input.size()) == spec_.input_dim,
                 "input has wrong length");
  FEATPROJ_CHECK(static_cast<Index>(ex.target.size()) == target_dim(),
                 "target has wrong length");
  const Index d = spec_.input_dim;
  double loss = 0.0;
  switch (spec_.kind) {
    case ModelKind::kLinear: {
      const VecMap x(ex.input.data(), d);
      const double r = x.dot(w.head(d)) + w(d) - ex.target[0];
      loss = 0.5 * r * r;
      MutVecMap(grad.data(), d) = r * x;
      grad[static_cast<size_t>(d)] = r;
      break;
    }
    case ModelKind::kLogistic: {
      const VecMap x(ex.input.data(), d);
      const double s = x.dot(w.head(d)) + w(d);
      loss = Softplus(s) - ex.target[0] * s;
      const double r = Sigmoid(s) - ex.target[0];
      MutVecMap(grad.data(), d) = r * x;
      grad[static_cast<size_t>(d)] = r;
      break;
    }
    case ModelKind::kMlp2:
    case ModelKind::kKeypointCc:
      loss = TwoLayer(w, ex, grad);
      break;
  }
  if (!std::isfinite(loss)) throw Error("forward pass produced a non-finite loss");
  ZeroFrozen(grad);
  return loss;
}

Eigen::VectorXd Model::Forward(const ParamVector& w,
                               std::span<const double> input) const {
  FEATPROJ_CHECK(w.size() == num_params_, "parameter vector has wrong length");
  FEATPROJ_CHECK(static_cast<Index>(input.size()) == spec_.input_dim,
                 "input has wrong length");
  const Index d = spec_.input_dim;
  const VecMap x(input.data(), d);
  if (spec_.kind == ModelKind::kLinear || spec_.kind == ModelKind::kLogistic) {
    Eigen::VectorXd out(1);
    out(0) = x.dot(w.head(d)) + w(d);
    return out;
  }
  const Index h = spec_.hidden_dim;
  const Index o = output_dim_;
  const RowMap w1(w.data(), h, d);
  const VecMap b1(w.data() + h * d, h);
  const RowMap w2(w.data() + h * d + h, o, h);
  const VecMap b2(w.data() + h * d + h + o * h, o);
  Eigen::VectorXd a = (w1 * x + b1).array().tanh();
  return w2 * a + b2;
}

std::vector<Point2> Model::PredictJoints(const ParamVector& w,
                                         std::span<const double> input) const {
  FEATPROJ_CHECK(spec_.kind == ModelKind::kKeypointCc,
                 "joint prediction needs the keypoint model");
  const Eigen::VectorXd logits = Forward(w, input);
  const Index stride = bins_x_ + bins_y_;
  std::vector<Point2> joints(static_cast<size_t>(spec_.num_joints));
  for (Index j = 0; j < spec_.num_joints; ++j) {
    const double* base = logits.data() + j * stride;
    joints[static_cast<size_t>(j)] = {
        DecodeAxis({base, static_cast<size_t>(bins_x_)}, spec_.kappa),
        DecodeAxis({base + bins_x_, static_cast<size_t>(bins_y_)},
                   spec_.kappa)};
  }
  return joints;
}

PerSampleResult LossAndPerSampleGrad(const Model& model, const ParamVector& w,
                                     std::span<const Example> batch) {
  FEATPROJ_CHECK(!batch.empty(), "batch must be nonempty");
  FEATPROJ_CHECK(AllFinite(w), "parameters must be finite");
  const Index b = static_cast<Index>(batch.size());
  PerSampleResult out;
  out.losses.resize(b);
  out.grads.resize(b, model.num_params());
  for (Index i = 0; i < b; ++i) {
    std::span<double> row(out.grads.row(i).data(),
                          static_cast<size_t>(model.num_params()));
    try {
      out.losses(i) = model.LossAndGradient(w, batch[static_cast<size_t>(i)], row);
    } catch (const Error& e) {
      throw Error("sample " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

double Objective::PrivateLossAndGrad(const ParamVector& w, const Example& raw,
                                     std::span<double> grad) const {
  return model.LossAndGradient(w, raw, grad);
}

double Objective::PublicLossAndGrad(const ParamVector& w,
                                    const Example& features,
                                    std::span<double> grad) const {
  if (public_weight == 0.0) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return 0.0;
  }
  const double loss = model.LossAndGradient(w, features, grad);
  if (public_weight != 1.0) {
    for (double& g : grad) g *= public_weight;
  }
  return public_weight * loss;
}

double Objective::FullLossAndGrad(const ParamVector& w, const Example& raw,
                                  const Example& features,
                                  std::span<double> grad,
                                  std::span<double> scratch) const {
  double loss = PrivateLossAndGrad(w, raw, grad);
  if (public_weight == 0.0) return loss;
  loss += PublicLossAndGrad(w, features, scratch);
  for (size_t i = 0; i < grad.size(); ++i) grad[i] += scratch[i];
  return loss;
}

}  // namespace featproj
