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

#include "featproj/accountant.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "featproj/errors.h"

namespace featproj {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogBinomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
         std::lgamma(n - k + 1.0);
}

// log(exp(x) - 1) for x > 0.
double LogExpm1(double x) {
  if (x > 30.0) return x + std::log1p(-std::exp(-x));
  return std::log(std::expm1(x));
}

// log(1 + exp(x)).
double Log1pExp(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double LogSumExp(const std::vector<double>& terms) {
  double top = kNegInf;
  for (double t : terms) top = std::max(top, t);
  if (top == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - top);
  return top + std::log(acc);
}

}  // namespace

std::vector<int> DefaultOrders() {
  std::vector<int> orders;
  for (int a = 2; a <= 64; ++a) orders.push_back(a);
  orders.push_back(128);
  orders.push_back(256);
  return orders;
}

RdpCurve RdpCurve::Composed(std::int64_t steps) const {
  RdpCurve out = *this;
  for (double& v : out.values) v *= static_cast<double>(steps);
  return out;
}

double RdpSubsampledGaussian(double q, double sigma, int alpha) {
  FEATPROJ_CHECK(alpha >= 2, "order must be an integer >= 2");
  FEATPROJ_CHECK(q >= 0.0 && q <= 1.0, "sampling rate must lie in [0, 1]");
  FEATPROJ_CHECK(sigma >= 0.0 && !std::isnan(sigma),
                 "noise multiplier must be nonnegative");
  if (q == 0.0) return 0.0;
  if (sigma == 0.0) {
    throw InfinitePrivacyLossError(
        "zero noise with a nonzero sampling rate has unbounded privacy loss");
  }
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);

  // The binomial weights sum to one, so
  //   A - 1 = sum_{j>=2} C(alpha,j) (1-q)^(alpha-j) q^j (exp(j(j-1)/2s^2) - 1)
  // with every term positive. Working with A - 1 avoids cancelling against
  // the leading 1 when q is small.
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> terms;
  terms.reserve(static_cast<size_t>(alpha));
  for (int j = 2; j <= alpha; ++j) {
    const double exponent = j * (j - 1.0) * inv_two_var;
    terms.push_back(LogBinomial(alpha, j) + (alpha - j) * log_1mq + j * log_q +
                    LogExpm1(exponent));
  }
  const double log_a_minus_1 = LogSumExp(terms);
  return Log1pExp(log_a_minus_1) / (alpha - 1.0);
}

RdpCurve ComputeRdp(double q, double sigma, const std::vector<int>& orders) {
  RdpCurve curve;
  curve.orders = orders;
  curve.values.reserve(orders.size());
  for (int a : orders) curve.values.push_back(RdpSubsampledGaussian(q, sigma, a));
  return curve;
}

Conversion ConvertWithOrder(const RdpCurve& per_step, std::int64_t steps,
                            double delta) {
  FEATPROJ_CHECK(!per_step.orders.empty(), "order grid must be nonempty");
  FEATPROJ_CHECK(per_step.orders.size() == per_step.values.size(),
                 "one RDP value per order");
  FEATPROJ_CHECK(steps >= 1, "at least one step");
  FEATPROJ_CHECK(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  const double log_inv_delta = -std::log(delta);
  Conversion best{std::numeric_limits<double>::infinity(), 0};
  for (size_t i = 0; i < per_step.orders.size(); ++i) {
    const int a = per_step.orders[i];
    const double eps = static_cast<double>(steps) * per_step.values[i] +
                       log_inv_delta / (a - 1.0);
    if (eps < best.epsilon) best = {eps, a};
  }
  return best;
}

double ComposeAndConvert(const RdpCurve& per_step, std::int64_t steps,
                         double delta) {
  return ConvertWithOrder(per_step, steps, delta).epsilon;
}

double AccountedEpsilon(double q, double sigma, std::int64_t steps,
                        double delta, const std::vector<int>& orders) {
  return ComposeAndConvert(ComputeRdp(q, sigma, orders), steps, delta);
}

double CalibrateSigma(double epsilon_target, double delta, double q,
                      std::int64_t steps, const std::vector<int>& orders) {
  FEATPROJ_CHECK(epsilon_target > 0.0, "epsilon target must be positive");
  FEATPROJ_CHECK(steps >= 1, "at least one step");
  auto eps_at = [&](double sigma) {
    return AccountedEpsilon(q, sigma, steps, delta, orders);
  };
  double lo = kSigmaSearchLow;
  double hi = kSigmaSearchHigh;
  if (eps_at(lo) <= epsilon_target) return lo;
  const double floor = eps_at(hi);
  if (floor > epsilon_target) {
    throw CalibrationInfeasibleError(epsilon_target, floor);
  }
  // Invariant: eps(lo) > target >= eps(hi).
  for (int iter = 0; iter < 200; ++iter) {
    if (epsilon_target - eps_at(hi) <= kCalibrationRelTol * epsilon_target) {
      break;
    }
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (eps_at(mid) <= epsilon_target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

bool DeltaIsBelowInverseN(double delta, std::int64_t n) {
  return n > 0 && delta < 1.0 / static_cast<double>(n);
}

}  // namespace featproj
