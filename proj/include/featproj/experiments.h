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

// Sweep configuration, the sweep runner, and result/plot emission.

#ifndef FEATPROJ_EXPERIMENTS_H_
#define FEATPROJ_EXPERIMENTS_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "featproj/data.h"
#include "featproj/dp_optimizer.h"
#include "featproj/models.h"

namespace featproj {

enum class Strategy { kFinetuneFrozen, kFinetuneFull, kScratch };

std::string_view StrategyName(Strategy s);
Strategy ParseStrategy(std::string_view name);

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
  // Data.
  std::int64_t n = 2000;        // public + private
  std::int64_t public_size = 100;
  std::int64_t test_size = 500;
  std::int64_t pretrain_size = 1000;
  GeneratorConfig generator;

  // Model.
  Index hidden_dim = 32;
  double kappa = 1.0;
  double smoothing_sigma_bins = 2.0;
  double public_loss_weight = 1.0;

  // Grid.
  std::vector<Variant> variants = AllVariants();
  std::vector<double> epsilons = {0.2, 0.4, 0.6, 0.8};
  std::vector<double> clip_norms = {0.01, 0.1, 1.0};
  std::vector<Strategy> strategies = {Strategy::kFinetuneFull};
  double delta = 4e-5;

  // Optimizer. The sampling rate is expected_batch_size / |S_priv|.
  Index k = 50;
  std::int64_t refresh_interval = 0;  // 0 means one pass over S_priv
  double eta = 4.0;
  double warmup_fraction = 0.0;
  std::int64_t steps = 300;
  double expected_batch_size = 64.0;

  // Non-private warm start used by the finetune strategies.
  std::int64_t pretrain_steps = 20;
  double pretrain_eta = 4.0;

  std::uint64_t base_seed = 20260;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::string output_dir = "results";

  double sampling_rate() const;
};

std::string ConfigToJson(const ExperimentConfig& config);
// Missing keys take defaults; unknown keys and schema mismatches throw Error.
ExperimentConfig ConfigFromJson(const std::string& text);
ExperimentConfig LoadConfig(const std::string& path);

// Checks grid sizes and value ranges; throws Error naming the first problem.
void ValidateConfig(const ExperimentConfig& config);

struct ResultRow {
  std::string variant;
  double epsilon_target = 0.0;
  double epsilon_accounted = 0.0;
  double C = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::string strategy;
  double final_loss = 0.0;
  double pck_at_05 = 0.0;      // tau 0.5, normalizer 0.1 * diag
  double pck_at_01 = 0.0;      // tau 0.1, normalizer 0.1 * diag
  double pck_at_diag01 = 0.0;  // within 0.1 * diag
  std::int64_t steps_executed = 0;
  std::string status;  // ok, halted, infeasible, non_private
  double wall_time_s = 0.0;
};

const std::vector<std::string>& ResultColumns();

// Everything one (strategy, seed) pair needs: data, model and start point.
struct DeskTask {
  Dataset priv;
  Dataset pub;
  Dataset test;
  ModelSpec model_spec;
  ParamVector w0;
};

DeskTask PrepareTask(const ExperimentConfig& config, Strategy strategy,
                     std::uint64_t seed);

struct CellOutcome {
  TrainResult train;
  ResultRow row;
};

// Trains one cell and scores it on the task's test set.
CellOutcome RunCell(const ExperimentConfig& config, const DeskTask& task,
                    Strategy strategy, std::uint64_t seed, Variant variant,
                    double epsilon, double clip_norm, double sigma);

struct SweepOptions {
  std::vector<Variant> only_variants;  // empty means the config's list
  int jobs = 1;
  bool write_files = true;
  std::ostream* log = nullptr;
};

// One row per (variant, epsilon, C, strategy, seed), sorted canonically.
// With write_files, rows are appended to results.partial.csv as they finish
// and the sorted set is written to results.csv.
std::vector<ResultRow> RunSweep(const ExperimentConfig& config,
                                const SweepOptions& options);

void SortRows(std::vector<ResultRow>& rows);

std::string FormatRow(const ResultRow& row);
std::string ResultsHeader();
void WriteResultsCsv(const std::vector<ResultRow>& rows,
                     const std::string& path);
std::vector<ResultRow> ReadResultsCsv(const std::string& path);

struct SummaryPoint {
  std::string strategy;
  std::string variant;
  double C = 0.0;
  double epsilon = 0.0;
  std::int64_t count = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

// Median and quartiles of pck_at_diag01 per (strategy, variant, C, epsilon),
// skipping infeasible rows.
std::vector<SummaryPoint> Summarize(const std::vector<ResultRow>& rows);

// One SVG per (strategy, C) plus summary.csv. Returns the written paths.
std::vector<std::string> EmitPlots(const std::vector<ResultRow>& rows,
                                   const std::string& out_dir,
                                   std::ostream* log = nullptr);

}  // namespace featproj

#endif  // FEATPROJ_EXPERIMENTS_H_
