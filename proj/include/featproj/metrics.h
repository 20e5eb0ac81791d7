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

#ifndef FEATPROJ_METRICS_H_
#define FEATPROJ_METRICS_H_

#include <vector>

#include "featproj/data.h"
#include "featproj/dp_optimizer.h"
#include "featproj/models.h"

namespace featproj {

struct PckResult {
  std::vector<double> per_joint;
  double mean = 0.0;
  double threshold = 0.0;
  double normalizer = 0.0;  // pixels
};

// preds[i][j] and gts[i][j]: joint j of sample i. A joint is correct when it
// lies within threshold * normalizer of the truth (inclusive).
PckResult Pck(const std::vector<std::vector<Point2>>& preds,
              const std::vector<std::vector<Point2>>& gts, double threshold,
              double normalizer);

double FrameDiagonal(int height, int width);

// Default PCK normalizer: 0.1 of the frame diagonal.
double DefaultNormalizer(int height, int width);

// Predicted and true joints for every sample of `data`.
struct JointSets {
  std::vector<std::vector<Point2>> preds;
  std::vector<std::vector<Point2>> truth;
};
JointSets PredictAll(const Model& model, const ParamVector& w,
                     const Dataset& data);

// Mean loss of the raw inputs over `data`.
double MeanLoss(const Model& model, const ParamVector& w, const Dataset& data);

// signal_norm / noise_norm per step; +infinity where no noise was added.
std::vector<double> SnrDiagnostic(const std::vector<StepRecord>& history);

double Median(std::vector<double> values);

// Linear-interpolated quantile, q in [0, 1].
double Quantile(std::vector<double> values, double q);

}  // namespace featproj

#endif  // FEATPROJ_METRICS_H_
