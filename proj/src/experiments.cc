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

#include "featproj/experiments.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "featproj/accountant.h"
#include "featproj/errors.h"
#include "featproj/metrics.h"
#include "json.hpp"

namespace featproj {
namespace {

using Json = nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string Short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

void RejectUnknownKeys(const Json& obj, std::string_view where,
                       std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) {
    throw Error("config section '" + std::string(where) + "' must be an object");
  }
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw Error("unknown config key '" + std::string(where) + "." +
                  item.key() + "'");
    }
  }
}

template <typename T>
void Read(const Json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

int VariantOrder(const std::string& name) {
  const Variant v = ParseVariant(name);
  const auto& all = AllVariants();
  return static_cast<int>(std::find(all.begin(), all.end(), v) - all.begin());
}

ResultRow BaseRow(Variant variant, double epsilon, double clip_norm,
                  std::uint64_t seed, Strategy strategy) {
  ResultRow row;
  row.variant = std::string(VariantName(variant));
  row.epsilon_target = epsilon;
  row.C = clip_norm;
  row.seed = seed;
  row.strategy = std::string(StrategyName(strategy));
  return row;
}

ResultRow UnscoredRow(ResultRow row, std::string status) {
  row.epsilon_accounted = kNaN;
  row.sigma = kNaN;
  row.final_loss = kNaN;
  row.pck_at_05 = kNaN;
  row.pck_at_01 = kNaN;
  row.pck_at_diag01 = kNaN;
  row.status = std::move(status);
  return row;
}

}  // namespace

std::string_view StrategyName(Strategy s) {
  switch (s) {
    case Strategy::kFinetuneFrozen:
      return "finetune-frozen";
    case Strategy::kFinetuneFull:
      return "finetune-full";
    case Strategy::kScratch:
      return "scratch";
  }
  return "unknown";
}

Strategy ParseStrategy(std::string_view name) {
  for (Strategy s : {Strategy::kFinetuneFrozen, Strategy::kFinetuneFull,
                     Strategy::kScratch}) {
    if (StrategyName(s) == name) return s;
  }
  throw Error("unknown strategy '" + std::string(name) + "'");
}

double ExperimentConfig::sampling_rate() const {
  const auto priv = static_cast<double>(n - public_size);
  return std::min(1.0, expected_batch_size / priv);
}

std::string ConfigToJson(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["data"] = {{"n", c.n},
               {"public_size", c.public_size},
               {"test_size", c.test_size},
               {"pretrain_size", c.pretrain_size},
               {"height", c.generator.height},
               {"width", c.generator.width},
               {"joints", c.generator.num_joints},
               {"noise_level", c.generator.noise_level},
               {"blob_sigma", c.generator.blob_sigma},
               {"amplitude_min", c.generator.amplitude_min},
               {"amplitude_max", c.generator.amplitude_max},
               {"margin", c.generator.margin},
               {"blur_kernel", c.generator.blur.kernel_size},
               {"blur_sigma", c.generator.blur.sigma}};
  j["model"] = {{"hidden_dim", c.hidden_dim},
                {"kappa", c.kappa},
                {"smoothing_sigma_bins", c.smoothing_sigma_bins},
                {"public_loss_weight", c.public_loss_weight}};
  std::vector<std::string> variants;
  for (Variant v : c.variants) variants.emplace_back(VariantName(v));
  std::vector<std::string> strategies;
  for (Strategy s : c.strategies) strategies.emplace_back(StrategyName(s));
  j["grid"] = {{"variants", variants},
               {"epsilons", c.epsilons},
               {"clip_norms", c.clip_norms},
               {"strategies", strategies},
               {"delta", c.delta}};
  j["optimizer"] = {{"k", c.k},
                    {"refresh_interval", c.refresh_interval},
                    {"eta", c.eta},
                    {"warmup_fraction", c.warmup_fraction},
                    {"steps", c.steps},
                    {"expected_batch_size", c.expected_batch_size}};
  j["pretrain"] = {{"steps", c.pretrain_steps}, {"eta", c.pretrain_eta}};
  j["base_seed"] = c.base_seed;
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig ConfigFromJson(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    RejectUnknownKeys(j, "",
                      {"schema_version", "data", "model", "grid", "optimizer",
                       "pretrain", "base_seed", "seeds", "output_dir"});
    const int version = j.value("schema_version", kConfigSchemaVersion);
    if (version != kConfigSchemaVersion) {
      throw Error("unsupported config schema_version " +
                  std::to_string(version));
    }
    if (j.contains("data")) {
      const Json& d = j["data"];
      RejectUnknownKeys(d, "data",
                        {"n", "public_size", "test_size", "pretrain_size",
                         "height", "width", "joints", "noise_level",
                         "blob_sigma", "amplitude_min", "amplitude_max",
                         "margin", "blur_kernel", "blur_sigma"});
      Read(d, "n", c.n);
      Read(d, "public_size", c.public_size);
      Read(d, "test_size", c.test_size);
      Read(d, "pretrain_size", c.pretrain_size);
      Read(d, "height", c.generator.height);
      Read(d, "width", c.generator.width);
      Read(d, "joints", c.generator.num_joints);
      Read(d, "noise_level", c.generator.noise_level);
      Read(d, "blob_sigma", c.generator.blob_sigma);
      Read(d, "amplitude_min", c.generator.amplitude_min);
      Read(d, "amplitude_max", c.generator.amplitude_max);
      Read(d, "margin", c.generator.margin);
      Read(d, "blur_kernel", c.generator.blur.kernel_size);
      Read(d, "blur_sigma", c.generator.blur.sigma);
    }
    if (j.contains("model")) {
      const Json& m = j["model"];
      RejectUnknownKeys(m, "model",
                        {"hidden_dim", "kappa", "smoothing_sigma_bins",
                         "public_loss_weight"});
      Read(m, "hidden_dim", c.hidden_dim);
      Read(m, "kappa", c.kappa);
      Read(m, "smoothing_sigma_bins", c.smoothing_sigma_bins);
      Read(m, "public_loss_weight", c.public_loss_weight);
    }
    if (j.contains("grid")) {
      const Json& g = j["grid"];
      RejectUnknownKeys(g, "grid",
                        {"variants", "epsilons", "clip_norms", "strategies",
                         "delta"});
      if (g.contains("variants")) {
        c.variants.clear();
        for (const auto& v : g["variants"]) {
          c.variants.push_back(ParseVariant(v.get<std::string>()));
        }
      }
      if (g.contains("strategies")) {
        c.strategies.clear();
        for (const auto& s : g["strategies"]) {
          c.strategies.push_back(ParseStrategy(s.get<std::string>()));
        }
      }
      Read(g, "epsilons", c.epsilons);
      Read(g, "clip_norms", c.clip_norms);
      Read(g, "delta", c.delta);
    }
    if (j.contains("optimizer")) {
      const Json& o = j["optimizer"];
      RejectUnknownKeys(o, "optimizer",
                        {"k", "refresh_interval", "eta", "warmup_fraction",
                         "steps", "expected_batch_size"});
      Read(o, "k", c.k);
      Read(o, "refresh_interval", c.refresh_interval);
      Read(o, "eta", c.eta);
      Read(o, "warmup_fraction", c.warmup_fraction);
      Read(o, "steps", c.steps);
      Read(o, "expected_batch_size", c.expected_batch_size);
    }
    if (j.contains("pretrain")) {
      const Json& p = j["pretrain"];
      RejectUnknownKeys(p, "pretrain", {"steps", "eta"});
      Read(p, "steps", c.pretrain_steps);
      Read(p, "eta", c.pretrain_eta);
    }
    Read(j, "base_seed", c.base_seed);
    Read(j, "seeds", c.seeds);
    Read(j, "output_dir", c.output_dir);
  } catch (const Json::exception& e) {
    throw Error(std::string("bad config value: ") + e.what());
  }
  ValidateConfig(c);
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ConfigFromJson(ss.str());
}

void ValidateConfig(const ExperimentConfig& c) {
  if (c.variants.empty()) throw Error("variant list is empty");
  if (c.epsilons.empty()) throw Error("epsilon grid is empty");
  if (c.clip_norms.empty()) throw Error("clip grid is empty");
  if (c.strategies.empty()) throw Error("strategy list is empty");
  if (c.seeds.empty()) throw Error("seed list is empty");
  for (double e : c.epsilons) {
    if (!(e > 0.0)) throw Error("epsilons must be positive");
  }
  for (double cn : c.clip_norms) {
    if (!(cn > 0.0)) throw Error("clip norms must be positive");
  }
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw Error("delta must lie in (0, 1)");
  if (c.public_size < 1 || c.public_size >= c.n) {
    throw Error("public_size must lie in [1, n)");
  }
  if (c.test_size < 1) throw Error("test_size must be positive");
  if (c.steps < 1) throw Error("steps must be positive");
  if (!(c.expected_batch_size > 0.0)) {
    throw Error("expected_batch_size must be positive");
  }
  if (!(c.eta > 0.0)) throw Error("eta must be positive");
  if (c.k < 1) throw Error("k must be positive");
  if (c.hidden_dim < 1) throw Error("hidden_dim must be positive");
}

const std::vector<std::string>& ResultColumns() {
  static const std::vector<std::string> kColumns = {
      "variant",     "epsilon_target", "epsilon_accounted", "C",
      "sigma",       "seed",           "strategy",          "final_loss",
      "pck_at_05",   "pck_at_01",      "pck_at_diag01",     "steps_executed",
      "status",      "wall_time_s"};
  return kColumns;
}

DeskTask PrepareTask(const ExperimentConfig& config, Strategy strategy,
                     std::uint64_t seed) {
  const RngStream root(config.base_seed, seed);
  DeskTask task;
  const Dataset all = Generate(root.Derive("data"), config.n, config.generator);
  SplitDataset split = Split(all, config.public_size, root.Derive("split"));
  task.priv = std::move(split.priv);
  task.pub = std::move(split.pub);
  task.test = Generate(root.Derive("test"), config.test_size, config.generator);

  ModelSpec spec;
  spec.kind = ModelKind::kKeypointCc;
  spec.input_dim =
      static_cast<Index>(config.generator.height) * config.generator.width;
  spec.hidden_dim = config.hidden_dim;
  spec.num_joints = config.generator.num_joints;
  spec.frame_width = config.generator.width;
  spec.frame_height = config.generator.height;
  spec.kappa = config.kappa;
  spec.smoothing_sigma_bins = config.smoothing_sigma_bins;
  const Model base(spec);
  RngStream init = root.Derive("init");
  task.w0 = base.InitParams(init);

  if (strategy != Strategy::kScratch && config.pretrain_steps > 0) {
    const Dataset pre =
        Generate(root.Derive("pretrain"), config.pretrain_size, config.generator);
    Hyper h;
    h.eta = config.pretrain_eta;
    h.steps = config.pretrain_steps;
    h.sampling_rate = std::min(
        1.0, config.expected_batch_size / static_cast<double>(pre.size()));
    const Objective objective{base, config.public_loss_weight};
    task.w0 = Train(Variant::kSgd, objective, task.w0, pre, task.pub,
                    PrivacySpec{}, h, root.Derive("pretrain_run"))
                  .w;
  }
  if (strategy == Strategy::kFinetuneFrozen) spec.trainable = base.HeadRange();
  task.model_spec = spec;
  return task;
}

CellOutcome RunCell(const ExperimentConfig& config, const DeskTask& task,
                    Strategy strategy, std::uint64_t seed, Variant variant,
                    double epsilon, double clip_norm, double sigma) {
  const Model model(task.model_spec);
  const Objective objective{model, config.public_loss_weight};
  Hyper h;
  h.eta = config.eta;
  h.steps = config.steps;
  h.sampling_rate = std::min(1.0, config.expected_batch_size /
                                      static_cast<double>(task.priv.size()));
  h.k = std::min<Index>(config.k, static_cast<Index>(task.pub.size()));
  h.refresh_interval = config.refresh_interval;
  h.warmup_fraction = config.warmup_fraction;

  PrivacySpec ps;
  ps.epsilon = IsPrivate(variant) ? epsilon : kInf;
  ps.delta = config.delta;
  ps.clip_norm = clip_norm;
  ps.sigma = IsPrivate(variant) ? sigma : 0.0;
  ps.sampling_rate = h.sampling_rate;
  ps.steps = h.steps;

  const auto start = std::chrono::steady_clock::now();
  CellOutcome out;
  out.train = Train(variant, objective, task.w0, task.priv, task.pub, ps, h,
                    RngStream(config.base_seed, seed).Derive("train"));
  const JointSets joints = PredictAll(model, out.train.w, task.test);
  const double norm = DefaultNormalizer(task.test.height, task.test.width);
  const double diag = FrameDiagonal(task.test.height, task.test.width);

  ResultRow row = BaseRow(variant, epsilon, clip_norm, seed, strategy);
  row.epsilon_accounted = out.train.accounted_epsilon;
  row.sigma = ps.sigma;
  row.final_loss = MeanLoss(model, out.train.w, task.test);
  row.pck_at_05 = Pck(joints.preds, joints.truth, 0.5, norm).mean;
  row.pck_at_01 = Pck(joints.preds, joints.truth, 0.1, norm).mean;
  row.pck_at_diag01 = Pck(joints.preds, joints.truth, 0.1, diag).mean;
  row.steps_executed = out.train.steps_executed;
  row.status = !IsPrivate(variant) ? "non_private"
               : out.train.halted  ? "halted"
                                   : "ok";
  row.wall_time_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  out.row = row;
  return out;
}

void SortRows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ResultRow& a, const ResultRow& b) {
                     return std::make_tuple(a.strategy,
                                            VariantOrder(a.variant),
                                            a.epsilon_target, a.C, a.seed) <
                            std::make_tuple(b.strategy,
                                            VariantOrder(b.variant),
                                            b.epsilon_target, b.C, b.seed);
                   });
}

std::string ResultsHeader() {
  std::string out;
  for (const std::string& c : ResultColumns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::string FormatRow(const ResultRow& r) {
  std::string out = r.variant;
  for (const std::string& field :
       {FormatDouble(r.epsilon_target), FormatDouble(r.epsilon_accounted),
        FormatDouble(r.C), FormatDouble(r.sigma), std::to_string(r.seed),
        r.strategy, FormatDouble(r.final_loss), FormatDouble(r.pck_at_05),
        FormatDouble(r.pck_at_01), FormatDouble(r.pck_at_diag01),
        std::to_string(r.steps_executed), r.status,
        FormatDouble(r.wall_time_s)}) {
    out += ',';
    out += field;
  }
  return out;
}

void WriteResultsCsv(const std::vector<ResultRow>& rows,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << ResultsHeader() << '\n';
  for (const ResultRow& r : rows) out << FormatRow(r) << '\n';
  if (!out) throw Error("failed writing " + path);
}

std::vector<ResultRow> ReadResultsCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != ResultsHeader()) {
    throw Error(path + " does not have the results header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != ResultColumns().size()) {
      throw Error("malformed results line: " + line);
    }
    auto num = [](const std::string& s) { return std::strtod(s.c_str(), nullptr); };
    ResultRow r;
    r.variant = f[0];
    r.epsilon_target = num(f[1]);
    r.epsilon_accounted = num(f[2]);
    r.C = num(f[3]);
    r.sigma = num(f[4]);
    r.seed = std::stoull(f[5]);
    r.strategy = f[6];
    r.final_loss = num(f[7]);
    r.pck_at_05 = num(f[8]);
    r.pck_at_01 = num(f[9]);
    r.pck_at_diag01 = num(f[10]);
    r.steps_executed = std::stoll(f[11]);
    r.status = f[12];
    r.wall_time_s = num(f[13]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> RunSweep(const ExperimentConfig& config,
                                const SweepOptions& options) {
  ValidateConfig(config);
  std::vector<Variant> variants = config.variants;
  if (!options.only_variants.empty()) {
    std::vector<Variant> kept;
    for (Variant v : variants) {
      if (std::find(options.only_variants.begin(), options.only_variants.end(),
                    v) != options.only_variants.end()) {
        kept.push_back(v);
      }
    }
    variants = std::move(kept);
  }
  std::ostream* log = options.log;
  const double q = config.sampling_rate();
  const std::int64_t n_priv = config.n - config.public_size;
  if (log != nullptr && !DeltaIsBelowInverseN(config.delta, n_priv)) {
    *log << "warning: delta " << config.delta << " is not below 1/n = "
         << 1.0 / static_cast<double>(n_priv) << "\n";
  }
  if (log != nullptr && config.k > config.public_size) {
    *log << "warning: k = " << config.k << " exceeds the public set size; "
         << "clamping to " << config.public_size << "\n";
  }

  // Calibrate every epsilon before any training starts.
  std::map<double, std::optional<double>> sigma_for;
  for (double eps : config.epsilons) {
    try {
      sigma_for[eps] = CalibrateSigma(eps, config.delta, q, config.steps);
    } catch (const CalibrationInfeasibleError& e) {
      sigma_for[eps] = std::nullopt;
      if (log != nullptr) *log << "infeasible: " << e.what() << "\n";
    }
  }

  std::vector<std::pair<Strategy, std::uint64_t>> groups;
  for (Strategy s : config.strategies) {
    for (std::uint64_t seed : config.seeds) groups.emplace_back(s, seed);
  }

  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  std::ofstream partial;
  if (options.write_files) {
    fs::create_directories(dir);
    partial.open(dir / "results.partial.csv", std::ios::binary);
    if (!partial) throw Error("cannot write to " + config.output_dir);
    partial << ResultsHeader() << '\n' << std::flush;
  }

  std::vector<ResultRow> rows;
  std::mutex mu;
  auto emit = [&](const ResultRow& row) {
    std::lock_guard<std::mutex> lock(mu);
    rows.push_back(row);
    if (partial.is_open()) partial << FormatRow(row) << '\n' << std::flush;
    if (log != nullptr) {
      *log << row.strategy << " seed=" << row.seed << " " << row.variant
           << " eps=" << row.epsilon_target << " C=" << row.C
           << " pck@0.1diag=" << Short(row.pck_at_diag01) << " [" << row.status
           << "]\n";
    }
  };

  auto run_group = [&](Strategy strategy, std::uint64_t seed) {
    const DeskTask task = PrepareTask(config, strategy, seed);
    for (Variant v : variants) {
      if (!IsPrivate(v)) {
        // Nothing depends on (epsilon, C): train once and repeat the row.
        ResultRow base;
        try {
          base = RunCell(config, task, strategy, seed, v, kInf,
                         config.clip_norms.front(), 0.0)
                     .row;
        } catch (const Error& e) {
          base = UnscoredRow(BaseRow(v, kInf, 0.0, seed, strategy), "failed");
          if (log != nullptr) *log << "failed: " << e.what() << "\n";
        }
        for (double eps : config.epsilons) {
          for (double cn : config.clip_norms) {
            ResultRow row = base;
            row.epsilon_target = eps;
            row.C = cn;
            emit(row);
          }
        }
        continue;
      }
      for (double eps : config.epsilons) {
        for (double cn : config.clip_norms) {
          const std::optional<double>& sigma = sigma_for.at(eps);
          if (!sigma.has_value()) {
            emit(UnscoredRow(BaseRow(v, eps, cn, seed, strategy), "infeasible"));
            continue;
          }
          try {
            emit(RunCell(config, task, strategy, seed, v, eps, cn, *sigma).row);
          } catch (const Error& e) {
            ResultRow row =
                UnscoredRow(BaseRow(v, eps, cn, seed, strategy), "failed");
            row.sigma = *sigma;
            emit(row);
            if (log != nullptr) *log << "failed: " << e.what() << "\n";
          }
        }
      }
    }
  };

  const int jobs = std::max(1, std::min<int>(options.jobs,
                                             static_cast<int>(groups.size())));
  if (jobs == 1) {
    for (const auto& [s, seed] : groups) run_group(s, seed);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    for (int t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        try {
          for (size_t i = next++; i < groups.size(); i = next++) {
            run_group(groups[i].first, groups[i].second);
          }
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  SortRows(rows);
  if (options.write_files) {
    partial.close();
    WriteResultsCsv(rows, (dir / "results.csv").string());
    fs::remove(dir / "results.partial.csv");
  }
  return rows;
}

std::vector<SummaryPoint> Summarize(const std::vector<ResultRow>& rows) {
  std::map<std::tuple<std::string, int, double, double>, std::vector<double>>
      groups;
  for (const ResultRow& r : rows) {
    if (std::isnan(r.pck_at_diag01)) continue;
    groups[{r.strategy, VariantOrder(r.variant), r.C, r.epsilon_target}]
        .push_back(r.pck_at_diag01);
  }
  std::vector<SummaryPoint> out;
  for (const auto& [key, values] : groups) {
    SummaryPoint p;
    p.strategy = std::get<0>(key);
    p.variant = std::string(VariantName(AllVariants()[static_cast<size_t>(
        std::get<1>(key))]));
    p.C = std::get<2>(key);
    p.epsilon = std::get<3>(key);
    p.count = static_cast<std::int64_t>(values.size());
    p.median = Median(values);
    p.q25 = Quantile(values, 0.25);
    p.q75 = Quantile(values, 0.75);
    out.push_back(p);
  }
  return out;
}

namespace {

const char* VariantColor(const std::string& variant) {
  if (variant == "SGD") return "#444444";
  if (variant == "DPSGD") return "#d62728";
  if (variant == "PROJ_DPSGD") return "#ff7f0e";
  if (variant == "FDP") return "#1f77b4";
  return "#2ca02c";
}

std::string RenderSvg(const std::string& title,
                      const std::vector<SummaryPoint>& points) {
  constexpr double kW = 640, kH = 420, kLeft = 64, kRight = 190, kTop = 40,
                   kBottom = 56;
  double lo = kInf, hi = -kInf;
  for (const SummaryPoint& p : points) {
    lo = std::min(lo, p.epsilon);
    hi = std::max(hi, p.epsilon);
  }
  if (hi - lo < 1e-12) {
    lo -= 0.1;
    hi += 0.1;
  }
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto sx = [&](double e) { return kLeft + (e - lo) / (hi - lo) * pw; };
  auto sy = [&](double u) { return kTop + (1.0 - u) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
    << "\" height=\"" << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << title
    << "</text>\n";
  s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
    << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double u = t / 5.0;
    s << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << sy(u) << "\" x2=\""
      << kLeft << "\" y2=\"" << sy(u) << "\" stroke=\"#888\"/>"
      << "<text x=\"" << kLeft - 8 << "\" y=\"" << sy(u) + 4
      << "\" text-anchor=\"end\">" << Short(u) << "</text>\n";
  }
  std::set<double> ticks;
  for (const SummaryPoint& p : points) ticks.insert(p.epsilon);
  for (double e : ticks) {
    s << "<line x1=\"" << sx(e) << "\" y1=\"" << kTop + ph << "\" x2=\""
      << sx(e) << "\" y2=\"" << kTop + ph + 4 << "\" stroke=\"#888\"/>"
      << "<text x=\"" << sx(e) << "\" y=\"" << kTop + ph + 18
      << "\" text-anchor=\"middle\">" << Short(e) << "</text>\n";
  }
  s << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 14
    << "\" text-anchor=\"middle\">epsilon</text>\n";
  s << "<text transform=\"translate(16," << kTop + ph / 2
    << ") rotate(-90)\" text-anchor=\"middle\">PCK@0.1*diag (median, IQR)"
    << "</text>\n";

  std::map<int, std::vector<SummaryPoint>> lines;
  for (const SummaryPoint& p : points) {
    lines[VariantOrder(p.variant)].push_back(p);
  }
  int legend = 0;
  for (auto& [order, pts] : lines) {
    std::sort(pts.begin(), pts.end(),
              [](const SummaryPoint& a, const SummaryPoint& b) {
                return a.epsilon < b.epsilon;
              });
    const char* color = VariantColor(pts.front().variant);
    s << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
    for (const SummaryPoint& p : pts) s << sx(p.epsilon) << ',' << sy(p.q75) << ' ';
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
      s << sx(it->epsilon) << ',' << sy(it->q25) << ' ';
    }
    s << "\"/>\n<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"2\" points=\"";
    for (const SummaryPoint& p : pts) s << sx(p.epsilon) << ',' << sy(p.median) << ' ';
    s << "\"/>\n";
    for (const SummaryPoint& p : pts) {
      s << "<circle cx=\"" << sx(p.epsilon) << "\" cy=\"" << sy(p.median)
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 10 + 20 * legend++;
    s << "<line x1=\"" << kW - kRight + 16 << "\" y1=\"" << ly << "\" x2=\""
      << kW - kRight + 40 << "\" y2=\"" << ly << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/><text x=\"" << kW - kRight + 46 << "\" y=\""
      << ly + 4 << "\">" << pts.front().variant << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace

std::vector<std::string> EmitPlots(const std::vector<ResultRow>& rows,
                                   const std::string& out_dir,
                                   std::ostream* log) {
  FEATPROJ_CHECK(!rows.empty(), "no rows to plot");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::vector<SummaryPoint> summary = Summarize(rows);
  std::vector<std::string> written;

  std::set<std::pair<std::string, double>> panels;
  for (const ResultRow& r : rows) panels.insert({r.strategy, r.C});
  for (const auto& [strategy, c] : panels) {
    std::vector<SummaryPoint> pts;
    for (const SummaryPoint& p : summary) {
      if (p.strategy == strategy && p.C == c) pts.push_back(p);
    }
    if (pts.empty()) {
      if (log != nullptr) {
        *log << "skipping " << strategy << " C=" << c << ": no scored rows\n";
      }
      continue;
    }
    char name[96];
    std::snprintf(name, sizeof(name), "utility_%s_C%g.svg", strategy.c_str(), c);
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << RenderSvg("utility vs epsilon, C=" + Short(c) + ", " + strategy, pts);
    written.push_back(path);
  }

  const std::string summary_path = (fs::path(out_dir) / "summary.csv").string();
  std::ofstream out(summary_path, std::ios::binary);
  if (!out) throw Error("cannot open " + summary_path + " for writing");
  out << "strategy,variant,C,epsilon,count,median,q25,q75\n";
  for (const SummaryPoint& p : summary) {
    out << p.strategy << ',' << p.variant << ',' << FormatDouble(p.C) << ','
        << FormatDouble(p.epsilon) << ',' << p.count << ','
        << FormatDouble(p.median) << ',' << FormatDouble(p.q25) << ','
        << FormatDouble(p.q75) << '\n';
  }
  written.push_back(summary_path);
  return written;
}

}  // namespace featproj
