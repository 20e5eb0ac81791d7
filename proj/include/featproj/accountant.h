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

// Renyi-DP accounting for the Poisson-subsampled Gaussian mechanism.
//
// A single step with sampling rate q and noise multiplier sigma has, at
// integer order alpha,
//
//   eps(alpha) = 1/(alpha-1) * log sum_{j=0..alpha} C(alpha,j) (1-q)^(alpha-j)
//                q^j exp(j(j-1) / (2 sigma^2)).
//
// T steps compose to T * eps(alpha), and the (eps, delta) guarantee is the
// minimum over the order grid of T * eps(alpha) + log(1/delta) / (alpha-1).

#ifndef FEATPROJ_ACCOUNTANT_H_
#define FEATPROJ_ACCOUNTANT_H_

#include <cstdint>
#include <vector>

namespace featproj {

// Integers 2..64 followed by 128 and 256.
std::vector<int> DefaultOrders();

struct PrivacySpec {
  double epsilon = 0.8;
  double delta = 4e-5;
  double clip_norm = 0.1;
  double sigma = 0.0;          // noise multiplier; noise std is sigma * C
  double sampling_rate = 0.0;  // q = E[B] / n
  std::int64_t steps = 1;
  std::vector<int> orders = DefaultOrders();
};

struct RdpCurve {
  std::vector<int> orders;
  std::vector<double> values;

  // Curve after `steps` identical compositions.
  RdpCurve Composed(std::int64_t steps) const;
};

// Per-step RDP of the subsampled Gaussian at one integer order >= 2.
// Throws InfinitePrivacyLossError when sigma == 0 and q > 0.
double RdpSubsampledGaussian(double q, double sigma, int alpha);

RdpCurve ComputeRdp(double q, double sigma, const std::vector<int>& orders);

struct Conversion {
  double epsilon = 0.0;
  int order = 0;  // order attaining the minimum
};

Conversion ConvertWithOrder(const RdpCurve& per_step, std::int64_t steps,
                            double delta);

// Epsilon after composing `per_step` over `steps` steps at the given delta.
double ComposeAndConvert(const RdpCurve& per_step, std::int64_t steps,
                         double delta);

// Convenience: ComposeAndConvert(ComputeRdp(q, sigma, orders), steps, delta).
double AccountedEpsilon(double q, double sigma, std::int64_t steps,
                        double delta,
                        const std::vector<int>& orders = DefaultOrders());

inline constexpr double kSigmaSearchLow = 0.3;
inline constexpr double kSigmaSearchHigh = 1e4;
inline constexpr double kCalibrationRelTol = 1e-4;

// Smallest sigma (up to the search tolerance) in [0.3, 1e4] whose accounted
// epsilon does not exceed the target. The returned sigma always satisfies the
// budget. Throws CalibrationInfeasibleError if even sigma = 1e4 is over.
double CalibrateSigma(double epsilon_target, double delta, double q,
                      std::int64_t steps,
                      const std::vector<int>& orders = DefaultOrders());

// True when delta < 1/n, the usual sanity condition. Callers log a warning
// when it fails; it is not an error.
bool DeltaIsBelowInverseN(double delta, std::int64_t n);

}  // namespace featproj

#endif  // FEATPROJ_ACCOUNTANT_H_
