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

#include "featproj/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "featproj/errors.h"

namespace featproj {

PckResult Pck(const std::vector<std::vector<Point2>>& preds,
              const std::vector<std::vector<Point2>>& gts, double threshold,
              double normalizer) {
  FEATPROJ_CHECK(preds.size() == gts.size(), "sample counts differ");
  FEATPROJ_CHECK(!preds.empty(), "need at least one sample");
  FEATPROJ_CHECK(normalizer > 0.0, "normalizer must be positive");
  const size_t joints = gts.front().size();
  FEATPROJ_CHECK(joints > 0, "need at least one joint");
  PckResult out;
  out.threshold = threshold;
  out.normalizer = normalizer;
  out.per_joint.assign(joints, 0.0);
  const double radius = threshold * normalizer;
  for (size_t i = 0; i < preds.size(); ++i) {
    FEATPROJ_CHECK(preds[i].size() == joints && gts[i].size() == joints,
                   "joint counts differ");
    for (size_t j = 0; j < joints; ++j) {
      const double d = std::hypot(preds[i][j].x - gts[i][j].x,
                                  preds[i][j].y - gts[i][j].y);
      if (d <= radius) out.per_joint[j] += 1.0;
    }
  }
  double total = 0.0;
  for (double& r : out.per_joint) {
    r /= static_cast<double>(preds.size());
    total += r;
  }
  out.mean = total / static_cast<double>(joints);
  return out;
}

double FrameDiagonal(int height, int width) {
  return std::hypot(static_cast<double>(height), static_cast<double>(width));
}

double DefaultNormalizer(int height, int width) {
  return 0.1 * FrameDiagonal(height, width);
}

JointSets PredictAll(const Model& model, const ParamVector& w,
                     const Dataset& data) {
  JointSets out;
  out.preds.reserve(data.size());
  out.truth.reserve(data.size());
  for (const KeypointSample& s : data.samples) {
    out.preds.push_back(model.PredictJoints(w, s.image));
    std::vector<Point2> truth(static_cast<size_t>(data.num_joints));
    for (int j = 0; j < data.num_joints; ++j) truth[static_cast<size_t>(j)] = s.joint(j);
    out.truth.push_back(std::move(truth));
  }
  return out;
}

double MeanLoss(const Model& model, const ParamVector& w, const Dataset& data) {
  FEATPROJ_CHECK(data.size() > 0, "dataset must be nonempty");
  double total = 0.0;
  for (const KeypointSample& s : data.samples) {
    total += model.Loss(w, {s.image, s.joints});
  }
  return total / static_cast<double>(data.size());
}

std::vector<double> SnrDiagnostic(const std::vector<StepRecord>& history) {
  std::vector<double> out;
  out.reserve(history.size());
  for (const StepRecord& r : history) {
    out.push_back(r.noise_norm > 0.0
                      ? r.signal_norm / r.noise_norm
                      : std::numeric_limits<double>::infinity());
  }
  return out;
}

double Quantile(std::vector<double> values, double q) {
  FEATPROJ_CHECK(!values.empty(), "quantile of an empty set");
  FEATPROJ_CHECK(q >= 0.0 && q <= 1.0, "quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(values.size() - 1, lo + 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

double Median(std::vector<double> values) {
  return Quantile(std::move(values), 0.5);
}

}  // namespace featproj
