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

// Acceptance gate: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "featproj/accountant.h"
#include "featproj/dp_optimizer.h"
#include "featproj/experiments.h"
#include "featproj/metrics.h"
#include "featproj/numerics.h"
#include "featproj/subspace.h"
#include "oracles.h"
#include "test_support.h"

namespace featproj {
namespace {

namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

Verdict AccountantOracle() {
  std::mt19937_64 eng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<int> orders = DefaultOrders();
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double q = std::pow(10.0, -3.0 * u(eng));
    const double sigma = 0.5 + 19.5 * u(eng);
    const int alpha = orders[static_cast<size_t>(u(eng) * orders.size())];
    const auto steps = static_cast<std::int64_t>(1 + 999 * u(eng));
    const double delta = 1e-5;
    const double lib = ComposeAndConvert(ComputeRdp(q, sigma, {alpha}), steps, delta);
    const double ref = oracle::EpsilonBig(q, sigma, steps, delta, {alpha});
    worst = std::max(worst, std::abs(lib - ref) / std::abs(ref));
  }
  bool exact = true;
  for (int a : orders) {
    for (double sigma : {0.5, 0.8, 1.0, 1.7, 3.0, 12.5}) {
      exact &= RdpSubsampledGaussian(1.0, sigma, a) == a / (2.0 * sigma * sigma);
    }
  }
  return {worst <= 1e-9 && exact,
          "max rel err " + Fmt("%.3g", worst) + ", q=1 exact " + (exact ? "yes" : "no")};
}

Verdict CalibrationRoundTrip() {
  const ExperimentConfig c;
  const double q = c.sampling_rate();
  bool ok = true;
  std::string detail;
  for (double eps : c.epsilons) {
    const double sigma = CalibrateSigma(eps, c.delta, q, c.steps);
    const double at = AccountedEpsilon(q, sigma, c.steps, c.delta);
    const double below = AccountedEpsilon(q, 0.99 * sigma, c.steps, c.delta);
    ok &= at <= eps && below > eps;
    detail += Fmt("eps %.1f", eps) + Fmt(" sigma %.4f", sigma) + Fmt(" (%.5f", at) +
              Fmt(", 0.99x %.5f) ", below);
  }
  return {ok, detail};
}

Verdict GradientCheck() {
  double worst = 0.0;
  Index coords = 0;
  for (ModelKind kind : {ModelKind::kLinear, ModelKind::kLogistic, ModelKind::kMlp2,
                         ModelKind::kKeypointCc}) {
    const Model model(fixtures::SmallSpec(kind));
    std::mt19937_64 eng(300 + static_cast<int>(kind));
    for (int draw = 0; draw < 20; ++draw) {
      const ParamVector w = fixtures::RandomParams(model, eng, 0.3);
      const fixtures::OwnedExample ex = fixtures::RandomExample(model, eng);
      const fixtures::FdReport r = fixtures::FiniteDifferenceCheck(model, w, ex.view());
      worst = std::max(worst, r.max_rel_error);
      coords += r.coords_checked;
    }
  }
  return {worst < 1e-5, "max rel err " + Fmt("%.3g", worst) + " over " +
                            std::to_string(coords) + " coordinates"};
}

Verdict NoiseReduction() {
  RngStream rng(400, 0);
  const DenseMatrix g = Eigen::Map<const DenseMatrix>(
      GaussianVector(rng, 50 * 200, 0.0, 1.0).data(), 50, 200);
  ProjectionBasis basis;
  basis.v = GramTopK(g, 50).basis;
  basis.k = 50;
  double total = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const ParamVector xi = GaussianVector(rng, 200, 0.0, 1.0);
    total += Project(basis, xi).squaredNorm() / xi.squaredNorm();
  }
  const double mean = total / 1000.0;
  return {mean >= 0.225 && mean <= 0.275, "mean ratio " + Fmt("%.4f", mean)};
}

bool SameBits(const ParamVector& a, const ParamVector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

bool SameTrajectory(const TrainResult& a, const TrainResult& b) {
  if (a.history.size() != b.history.size()) return false;
  for (size_t i = 0; i < a.history.size(); ++i) {
    const double x = a.history[i].loss_private, y = b.history[i].loss_private;
    if (std::memcmp(&x, &y, sizeof(double)) != 0) return false;
    if (a.history[i].batch_size != b.history[i].batch_size) return false;
  }
  return SameBits(a.w, b.w);
}

Verdict ReductionChain() {
  const ExperimentConfig c;
  const DeskTask task = PrepareTask(c, Strategy::kFinetuneFull, 0);
  const Model model(task.model_spec);
  const Objective obj{model, 0.0};
  PrivacySpec spec;
  spec.epsilon = kInf;
  spec.sigma = 0.0;
  spec.clip_norm = 1e12;
  Hyper h;
  h.eta = c.eta;
  h.steps = 100;
  h.sampling_rate = c.sampling_rate();
  h.k = model.num_trainable();
  const RngStream rng(500, 0);
  const TrainResult sgd = Train(Variant::kSgd, obj, task.w0, task.priv, task.pub, spec, h, rng);
  const TrainResult dp = Train(Variant::kDpsgd, obj, task.w0, task.priv, task.pub, spec, h, rng);
  const TrainResult fp =
      Train(Variant::kFeatureProjective, obj, task.w0, task.priv, task.pub, spec, h, rng);
  double max_norm = 0.0;
  bool none_clipped = true;
  for (const StepRecord& r : dp.history) none_clipped &= r.clipped_fraction == 0.0;
  for (const StepRecord& r : sgd.history) max_norm = std::max(max_norm, r.grad_norm_pre_clip);
  const bool dp_ok = SameTrajectory(sgd, dp) && dp.steps_executed == 100;
  const bool fp_ok = SameTrajectory(sgd, fp) && fp.steps_executed == 100;
  return {dp_ok && fp_ok && none_clipped && !SameBits(sgd.w, task.w0),
          std::string("DPSGD ") + (dp_ok ? "bitwise" : "differs") + ", FEATURE_PROJECTIVE " +
              (fp_ok ? "bitwise" : "differs") + ", p=" + std::to_string(model.num_params()) +
              ", max grad norm " + std::to_string(max_norm)};
}

// pck_at_diag01 indexed by [variant][epsilon, C][seed].
using Table = std::map<std::string, std::map<std::pair<double, double>,
                                             std::map<std::uint64_t, double>>>;

Table BuildTable(const std::vector<ResultRow>& rows) {
  Table t;
  for (const ResultRow& r : rows) t[r.variant][{r.epsilon_target, r.C}][r.seed] = r.pck_at_diag01;
  return t;
}

std::vector<double> Values(const std::map<std::uint64_t, double>& m) {
  std::vector<double> v;
  for (const auto& [seed, x] : m) v.push_back(x);
  return v;
}

int PairedWins(const std::map<std::uint64_t, double>& a,
               const std::map<std::uint64_t, double>& b) {
  int wins = 0;
  for (const auto& [seed, x] : a) {
    auto it = b.find(seed);
    if (it != b.end() && x >= it->second) ++wins;
  }
  return wins;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string DropLastColumn(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

struct Run {
  const char* name;
  std::function<Verdict()> body;
};

}  // namespace
}  // namespace featproj

int main() {
  using namespace featproj;
  const fs::path out = fs::current_path() / "acceptance_out";
  fs::remove_all(out);

  // Criterion 6 sweep: every variant at (0.8, 0.1), 10 seeds.
  ExperimentConfig ordering;
  ordering.epsilons = {0.8};
  ordering.clip_norms = {0.1};
  ordering.output_dir = (out / "ordering").string();
  // Criteria 7 and 8: DP-SGD over the corners of the (epsilon, C) grid.
  ExperimentConfig corners;
  corners.variants = {Variant::kDpsgd};
  corners.epsilons = {0.2, 0.8};
  corners.clip_norms = {0.01, 1.0};
  corners.output_dir = (out / "corners").string();

  std::vector<ResultRow> ordering_rows, corner_rows;
  Table t;
  auto sweeps = [&]() {
    if (!ordering_rows.empty()) return;
    ordering_rows = RunSweep(ordering, {});
    corner_rows = RunSweep(corners, {});
    std::vector<ResultRow> all = ordering_rows;
    all.insert(all.end(), corner_rows.begin(), corner_rows.end());
    t = BuildTable(all);
  };
  auto median = [&](const std::string& v, double eps, double c) {
    return Median(Values(t[v][{eps, c}]));
  };

  const std::vector<Run> runs = {
      {"1 accountant oracle agreement", AccountantOracle},
      {"2 calibration round-trip", CalibrationRoundTrip},
      {"3 gradient correctness", GradientCheck},
      {"4 projection noise-reduction factor", NoiseReduction},
      {"5 reduction chain", ReductionChain},
      {"6 qualitative ordering",
       [&]() -> Verdict {
         sweeps();
         const auto& fp = t["FEATURE_PROJECTIVE"][{0.8, 0.1}];
         const auto& fdp = t["FDP"][{0.8, 0.1}];
         const auto& proj = t["PROJ_DPSGD"][{0.8, 0.1}];
         const auto& dp = t["DPSGD"][{0.8, 0.1}];
         const double m_fp = Median(Values(fp)), m_fdp = Median(Values(fdp)),
                      m_proj = Median(Values(proj)), m_dp = Median(Values(dp));
         const int w1 = PairedWins(fp, fdp), w2 = PairedWins(fdp, dp),
                   w3 = PairedWins(fp, proj), w4 = PairedWins(proj, dp);
         const bool ok = m_fp >= m_fdp && m_fdp >= m_dp && m_fp >= m_proj &&
                         m_proj >= m_dp && std::min({w1, w2, w3, w4}) >= 8 &&
                         fp.size() == 10 && dp.size() == 10;
         return {ok, "medians FP " + Fmt("%.4f", m_fp) + " FDP " + Fmt("%.4f", m_fdp) +
                         " PROJ " + Fmt("%.4f", m_proj) + " DPSGD " + Fmt("%.4f", m_dp) +
                         "; paired wins FP>=FDP " + std::to_string(w1) + "/10, FDP>=DPSGD " +
                         std::to_string(w2) + "/10, FP>=PROJ " + std::to_string(w3) +
                         "/10, PROJ>=DPSGD " + std::to_string(w4) + "/10"};
       }},
      {"7 monotonicity in epsilon",
       [&]() -> Verdict {
         sweeps();
         const double hi = median("DPSGD", 0.8, 0.01), lo = median("DPSGD", 0.2, 0.01);
         return {hi >= lo, "DPSGD C=0.01 median eps0.8 " + Fmt("%.4f", hi) + " vs eps0.2 " +
                               Fmt("%.4f", lo)};
       }},
      {"8 clipping-severity interaction",
       [&]() -> Verdict {
         sweeps();
         const double small = median("DPSGD", 0.2, 0.01), large = median("DPSGD", 0.2, 1.0);
         return {small > large, "DPSGD eps=0.2 median C=0.01 " + Fmt("%.4f", small) +
                                    " vs C=1.0 " + Fmt("%.4f", large)};
       }},
      {"9 non-private learnability floor",
       [&]() -> Verdict {
         sweeps();
         const std::vector<double> v = Values(t["SGD"][{0.8, 0.1}]);
         const double lo = v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
         return {v.size() == 10 && lo >= 0.9,
                 "SGD PCK@0.1*diag min over seeds " + Fmt("%.4f", lo) + ", median " +
                     Fmt("%.4f", Median(v))};
       }},
      {"10 determinism",
       [&]() -> Verdict {
         sweeps();
         ExperimentConfig again = ordering;
         again.output_dir = (out / "ordering_repeat").string();
         RunSweep(again, {});
         const std::string a = Slurp(fs::path(ordering.output_dir) / "results.csv");
         const std::string b = Slurp(fs::path(again.output_dir) / "results.csv");
         const bool ok = !a.empty() && DropLastColumn(a) == DropLastColumn(b);
         return {ok, std::string("results.csv ") +
                         (ok ? "identical apart from wall_time_s" : "differs")};
       }},
  };

  int failed = 0;
  for (const Run& r : runs) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = r.body();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !v.pass;
    std::printf("criterion %s: %s (%.1f s) %s\n", r.name, v.pass ? "PASS" : "FAIL", secs,
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(runs.size()) - failed, runs.size());
  return failed == 0 ? 0 : 1;
}
