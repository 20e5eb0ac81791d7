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

#include <cmath>
#include <numeric>

#include "featproj/errors.h"
#include "gtest/gtest.h"
#include "test_support.h"

namespace featproj {
namespace {

using fixtures::OwnedExample;
using fixtures::RandomExample;
using fixtures::RandomParams;
using fixtures::SmallSpec;

TEST(Encode, BinCountUsesCeiling) {
  EXPECT_EQ(BinCount(32, 1), 32);
  EXPECT_EQ(BinCount(32, 2), 64);
  EXPECT_EQ(BinCount(10, 1.5), 15);
  EXPECT_EQ(BinCount(7, 1.5), 11);
}

TEST(Encode, TinyWidthIsOneHot) {
  const std::vector<double> d = EncodeAxis(10.3, 32, 1, 1e-6);
  for (size_t b = 0; b < d.size(); ++b) EXPECT_EQ(d[b], b == 10 ? 1.0 : 0.0);
}

TEST(Encode, SymmetricAboutCenterBin) {
  // 31 bins, coordinate in the middle bin 15.
  const std::vector<double> d = EncodeAxis(15.5, 31, 1, 2.0);
  for (size_t i = 0; i < 15; ++i) EXPECT_NEAR(d[15 - i], d[15 + i], 1e-12);
}

TEST(Encode, MatchesExplicitSum) {
  const double x = 10.3, kappa = 2.0, s = 2.0;
  const std::vector<double> d = EncodeAxis(x, 32, kappa, s);
  ASSERT_EQ(d.size(), 64u);
  const int center = 20;  // floor(10.3 * 2)
  double z = 0.0;
  for (int b = 0; b < 64; ++b) z += std::exp(-(b - center) * (b - center) / (2 * s * s));
  double total = 0.0;
  for (int b = 0; b < 64; ++b) {
    const double ref = std::exp(-(b - center) * (b - center) / (2 * s * s)) / z;
    EXPECT_NEAR(d[static_cast<size_t>(b)], ref, 1e-15);
    total += d[static_cast<size_t>(b)];
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_EQ(std::max_element(d.begin(), d.end()) - d.begin(), center);
}

TEST(Encode, OutOfFrameIsError) {
  EXPECT_THROW(EncodeAxis(32.0, 32, 1, 2), Error);
  EXPECT_THROW(EncodeAxis(-0.1, 32, 1, 2), Error);
}

TEST(Decode, OneHotInvertsQuantization) {
  std::vector<double> d(20, 0.0);
  d[7] = 1.0;
  EXPECT_DOUBLE_EQ(DecodeAxis(d, 2.0), 3.75);
}

TEST(Decode, TieGoesToLowerBin) {
  std::vector<double> d(8, 0.0);
  d[3] = d[4] = 0.5;
  EXPECT_DOUBLE_EQ(DecodeAxis(d, 1.0), 3.5);
}

TEST(Decode, RoundTripWithinHalfBin) {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double kappa : {1.0, 1.5, 2.0}) {
    for (int i = 0; i < 1000; ++i) {
      const Point2 p{32.0 * u(eng), 24.0 * u(eng)};
      const Point2 back = DecodeCoords(EncodeTargets(p, 32, 24, kappa, 2.0), kappa);
      EXPECT_LE(std::abs(back.x - p.x), 0.5 / kappa + 1e-9);
      EXPECT_LE(std::abs(back.y - p.y), 0.5 / kappa + 1e-9);
    }
  }
}

TEST(Model, ParameterCounts) {
  EXPECT_EQ(Model(SmallSpec(ModelKind::kLinear)).num_params(), 6);
  EXPECT_EQ(Model(SmallSpec(ModelKind::kMlp2)).num_params(), 4 * 6 + 4 + 3 * 4 + 3);
  const Model kp(SmallSpec(ModelKind::kKeypointCc));
  EXPECT_EQ(kp.output_dim(), 2 * (16 + 16));
  EXPECT_EQ(kp.num_params(), 8 * 256 + 8 + 64 * 8 + 64);
}

TEST(Model, LinearGradientVanishesAtLeastSquaresOptimum) {
  const Model model(SmallSpec(ModelKind::kLinear));
  std::mt19937_64 eng(3);
  std::vector<OwnedExample> data;
  for (int i = 0; i < 40; ++i) data.push_back(RandomExample(model, eng));
  // Normal equations A^T A w = A^T y with A = [x, 1], solved by plain
  // Gauss-Jordan elimination with partial pivoting.
  const int p = 6;
  std::vector<std::vector<double>> aug(p, std::vector<double>(p + 1, 0.0));
  for (const OwnedExample& ex : data) {
    std::vector<double> row(ex.input);
    row.push_back(1.0);
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < p; ++c) aug[r][c] += row[r] * row[c];
      aug[r][p] += row[r] * ex.target[0];
    }
  }
  for (int c = 0; c < p; ++c) {
    int piv = c;
    for (int r = c + 1; r < p; ++r) {
      if (std::abs(aug[r][c]) > std::abs(aug[piv][c])) piv = r;
    }
    std::swap(aug[c], aug[piv]);
    for (int r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = aug[r][c] / aug[c][c];
      for (int k = c; k <= p; ++k) aug[r][k] -= f * aug[c][k];
    }
  }
  ParamVector w(p);
  for (int i = 0; i < p; ++i) w(i) = aug[i][p] / aug[i][i];

  std::vector<Example> batch;
  for (const OwnedExample& ex : data) batch.push_back(ex.view());
  const PerSampleResult r = LossAndPerSampleGrad(model, w, batch);
  EXPECT_LT(r.grads.colwise().mean().norm(), 1e-8);
}

TEST(Model, LogisticMatchesSymbolicDerivative) {
  ModelSpec s;
  s.kind = ModelKind::kLogistic;
  s.input_dim = 2;
  const Model model(s);
  ParamVector w(3);
  w << 0.5, -0.25, 0.1;
  const std::vector<double> x{1.0, 2.0}, y{1.0};
  // s = 0.5 - 0.5 + 0.1 = 0.1; loss = log(1 + e^s) - y s; dloss/ds = sigmoid(s) - y.
  const double z = 0.1;
  const double sig = 1.0 / (1.0 + std::exp(-z));
  std::vector<double> g(3);
  const double loss = model.LossAndGradient(w, {x, y}, g);
  EXPECT_NEAR(loss, std::log1p(std::exp(z)) - z, 1e-15);
  EXPECT_NEAR(g[0], (sig - 1.0) * 1.0, 1e-15);
  EXPECT_NEAR(g[1], (sig - 1.0) * 2.0, 1e-15);
  EXPECT_NEAR(g[2], sig - 1.0, 1e-15);
}

class FiniteDifference : public ::testing::TestWithParam<ModelKind> {};

TEST_P(FiniteDifference, EveryCoordinateOnTwentyDraws) {
  const Model model(SmallSpec(GetParam()));
  std::mt19937_64 eng(17);
  for (int draw = 0; draw < 20; ++draw) {
    const ParamVector w = RandomParams(model, eng, 0.3);
    const OwnedExample ex = RandomExample(model, eng);
    const fixtures::FdReport r = fixtures::FiniteDifferenceCheck(model, w, ex.view());
    EXPECT_LT(r.max_rel_error, 1e-5) << "draw " << draw;
    EXPECT_EQ(r.coords_checked, model.num_params());
  }
}

INSTANTIATE_TEST_SUITE_P(AllKinds, FiniteDifference,
                         ::testing::Values(ModelKind::kLinear, ModelKind::kLogistic,
                                           ModelKind::kMlp2, ModelKind::kKeypointCc),
                         [](const auto& info) {
                           return std::string(ModelKindName(info.param));
                         });

TEST(Model, FrozenCoordinatesGetExactZeros) {
  ModelSpec s = SmallSpec(ModelKind::kKeypointCc);
  const Model full(s);
  s.trainable = full.HeadRange();
  const Model head(s);
  EXPECT_LT(head.num_trainable(), head.num_params());
  std::mt19937_64 eng(2);
  const ParamVector w = RandomParams(head, eng, 0.3);
  const OwnedExample ex = RandomExample(head, eng);
  std::vector<double> g_head(static_cast<size_t>(head.num_params()));
  std::vector<double> g_full(g_head.size());
  head.LossAndGradient(w, ex.view(), g_head);
  full.LossAndGradient(w, ex.view(), g_full);
  const IndexRange r = head.trainable_ranges().front();
  for (Index i = 0; i < head.num_params(); ++i) {
    const size_t u = static_cast<size_t>(i);
    if (i >= r.begin && i < r.end) {
      EXPECT_EQ(g_head[u], g_full[u]);
    } else {
      EXPECT_EQ(g_head[u], 0.0);
    }
  }
}

TEST(Model, CrossEntropyBoundedByTargetEntropy) {
  const Model model(SmallSpec(ModelKind::kKeypointCc));
  std::mt19937_64 eng(8);
  const OwnedExample ex = RandomExample(model, eng);
  double entropy = 0.0;
  std::vector<SmoothedTarget> targets;
  for (int j = 0; j < 2; ++j) {
    targets.push_back(EncodeTargets({ex.target[2 * j], ex.target[2 * j + 1]}, 16, 16, 1, 2));
    for (const auto* axis : {&targets.back().x, &targets.back().y}) {
      for (double t : *axis) {
        if (t > 0) entropy -= t * std::log(t);
      }
    }
  }
  entropy /= 4.0;
  for (int draw = 0; draw < 20; ++draw) {
    EXPECT_GE(model.Loss(RandomParams(model, eng, 0.5), ex.view()), entropy - 1e-12);
  }
  // Zero hidden layer and output bias equal to the log target: equality.
  ParamVector w = ParamVector::Zero(model.num_params());
  const Index b2 = model.num_params() - model.output_dim();
  Index o = 0;
  for (const SmoothedTarget& t : targets) {
    for (double v : t.x) w(b2 + o++) = std::log(v);
    for (double v : t.y) w(b2 + o++) = std::log(v);
  }
  EXPECT_NEAR(model.Loss(w, ex.view()), entropy, 1e-12);
}

TEST(Model, PerSampleMeanMatchesBatchGradient) {
  const Model model(SmallSpec(ModelKind::kMlp2));
  std::mt19937_64 eng(4);
  const ParamVector w = RandomParams(model, eng, 0.5);
  std::vector<OwnedExample> owned;
  for (int i = 0; i < 16; ++i) owned.push_back(RandomExample(model, eng));
  std::vector<Example> batch;
  for (const OwnedExample& ex : owned) batch.push_back(ex.view());
  const PerSampleResult r = LossAndPerSampleGrad(model, w, batch);
  // Batch gradient of the mean loss, by central differences on the mean.
  ParamVector fd(model.num_params());
  ParamVector wp = w;
  const double h = 1e-6;
  for (Index i = 0; i < w.size(); ++i) {
    double up = 0, down = 0;
    wp(i) = w(i) + h;
    for (const Example& ex : batch) up += model.Loss(wp, ex);
    wp(i) = w(i) - h;
    for (const Example& ex : batch) down += model.Loss(wp, ex);
    wp(i) = w(i);
    fd(i) = (up - down) / (2 * h * 16.0);
  }
  ParamVector sum = ParamVector::Zero(model.num_params());
  for (const Example& ex : batch) {
    std::vector<double> g(static_cast<size_t>(model.num_params()));
    model.LossAndGradient(w, ex, g);
    sum += Eigen::Map<const ParamVector>(g.data(), model.num_params());
  }
  const ParamVector mean = r.grads.colwise().mean().transpose();
  EXPECT_LT((mean - sum / 16.0).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((mean - fd).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_NEAR(r.losses.mean(),
              std::accumulate(batch.begin(), batch.end(), 0.0,
                              [&](double acc, const Example& ex) {
                                return acc + model.Loss(w, ex);
                              }) / 16.0,
              1e-12);
}

TEST(Model, NonFiniteForwardNamesSample) {
  const Model model(SmallSpec(ModelKind::kLinear));
  ParamVector w = ParamVector::Constant(6, 1e200);
  const std::vector<double> ok_in(5, 0.0), bad_in(5, 1e200), y{0.0};
  const std::vector<Example> batch{{ok_in, y}, {bad_in, y}};
  w(5) = 0.0;
  try {
    LossAndPerSampleGrad(model, w, batch);
    FAIL() << "expected Error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("sample 1"), std::string::npos) << e.what();
  }
}

TEST(Objective, ZeroPublicWeightGivesExactZeros) {
  const Objective obj{Model(SmallSpec(ModelKind::kMlp2)), 0.0};
  std::mt19937_64 eng(1);
  const ParamVector w = RandomParams(obj.model, eng, 0.5);
  const OwnedExample raw = RandomExample(obj.model, eng);
  const OwnedExample pub = RandomExample(obj.model, eng);
  std::vector<double> g(static_cast<size_t>(obj.model.num_params()), 7.0);
  EXPECT_EQ(obj.PublicLossAndGrad(w, pub.view(), g), 0.0);
  for (double v : g) EXPECT_EQ(v, 0.0);
  std::vector<double> full(g.size()), scratch(g.size()), priv(g.size());
  const double lf = obj.FullLossAndGrad(w, raw.view(), pub.view(), full, scratch);
  const double lp = obj.PrivateLossAndGrad(w, raw.view(), priv);
  EXPECT_EQ(lf, lp);
  EXPECT_EQ(full, priv);
}

TEST(Objective, FullLossIsSumOfParts) {
  const Objective obj{Model(SmallSpec(ModelKind::kMlp2)), 0.5};
  std::mt19937_64 eng(6);
  const ParamVector w = RandomParams(obj.model, eng, 0.5);
  const OwnedExample raw = RandomExample(obj.model, eng);
  const OwnedExample pub = RandomExample(obj.model, eng);
  const size_t p = static_cast<size_t>(obj.model.num_params());
  std::vector<double> full(p), scratch(p), gp(p), gq(p);
  const double lf = obj.FullLossAndGrad(w, raw.view(), pub.view(), full, scratch);
  const double l1 = obj.PrivateLossAndGrad(w, raw.view(), gp);
  const double l2 = obj.PublicLossAndGrad(w, pub.view(), gq);
  EXPECT_NEAR(lf, l1 + l2, 1e-14);
  EXPECT_NEAR(l2, 0.5 * obj.model.Loss(w, pub.view()), 1e-14);
  for (size_t i = 0; i < p; ++i) EXPECT_NEAR(full[i], gp[i] + gq[i], 1e-14);
}

}  // namespace
}  // namespace featproj
