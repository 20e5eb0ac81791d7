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

// featproj-dp: data generation, accounting, sweeps and plots.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "featproj/accountant.h"
#include "featproj/data.h"
#include "featproj/errors.h"
#include "featproj/experiments.h"

namespace {

using namespace featproj;

int DataGen(std::int64_t n, int height, int width, int joints,
            std::uint64_t seed, double noise, const std::string& out) {
  GeneratorConfig g;
  g.height = height;
  g.width = width;
  g.num_joints = joints;
  g.noise_level = noise;
  const Dataset data = Generate(RngStream(seed, 0).Derive("data"), n, g);
  WriteDataset(data, out);
  WriteJointsCsv(data, out + ".joints.csv");
  std::cout << "wrote " << n << " samples to " << out << " and " << out
            << ".joints.csv\n";
  return 0;
}

int Account(double epsilon, double delta, double q, std::int64_t steps,
            double sigma) {
  const std::vector<int> orders = DefaultOrders();
  if (sigma <= 0.0) sigma = CalibrateSigma(epsilon, delta, q, steps, orders);
  const RdpCurve curve = ComputeRdp(q, sigma, orders);
  const Conversion conv = ConvertWithOrder(curve, steps, delta);
  std::printf("%8s %16s %16s\n", "order", "rdp_per_step", "eps_at_order");
  for (size_t i = 0; i < orders.size(); ++i) {
    const double eps = static_cast<double>(steps) * curve.values[i] -
                       std::log(delta) / (orders[i] - 1.0);
    std::printf("%8d %16.8g %16.8g%s\n", orders[i], curve.values[i], eps,
                orders[i] == conv.order ? "  <- min" : "");
  }
  std::printf("sigma=%.10g epsilon=%.10g order=%d\n", sigma, conv.epsilon,
              conv.order);
  std::printf("csv:sigma,epsilon,order,q,steps,delta\n");
  std::printf("csv:%.17g,%.17g,%d,%.17g,%lld,%.17g\n", sigma, conv.epsilon,
              conv.order, q, static_cast<long long>(steps), delta);
  return 0;
}

int Run(const std::string& config_path, const std::string& filter, int jobs,
        const std::string& out_override) {
  ExperimentConfig config = LoadConfig(config_path);
  if (const char* env = std::getenv("FEATPROJ_DP_SEED")) {
    config.base_seed = std::stoull(env);
  }
  if (!out_override.empty()) config.output_dir = out_override;
  SweepOptions options;
  options.jobs = jobs;
  options.log = &std::cerr;
  if (!filter.empty()) {
    const std::string prefix = "variant=";
    if (filter.rfind(prefix, 0) != 0) {
      throw Error("filter must look like variant=NAME[,NAME...]");
    }
    std::stringstream ss(filter.substr(prefix.size()));
    std::string name;
    while (std::getline(ss, name, ',')) {
      options.only_variants.push_back(ParseVariant(name));
    }
  }
  const std::vector<ResultRow> rows = RunSweep(config, options);
  int failed = 0;
  for (const ResultRow& r : rows) failed += r.status == "failed";
  std::cout << "wrote " << rows.size() << " rows to " << config.output_dir
            << "/results.csv\n";
  if (failed > 0) {
    std::cerr << failed << " cells failed\n";
    return 2;
  }
  return 0;
}

int Plot(const std::string& in, const std::string& out) {
  const std::vector<ResultRow> rows = ReadResultsCsv(in);
  if (rows.empty()) throw Error(in + " has no rows");
  for (const std::string& path : EmitPlots(rows, out, &std::cerr)) {
    std::cout << path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private training sweeps on synthetic keypoints"};
  app.require_subcommand(1);

  CLI::App* data = app.add_subcommand("data", "Dataset utilities");
  data->require_subcommand(1);
  CLI::App* gen = data->add_subcommand("gen", "Generate a synthetic dataset");
  std::int64_t n = 2000;
  int height = 32, width = 32, joints = 4;
  std::uint64_t seed = 0;
  double noise = 0.1;
  std::string out;
  gen->add_option("--n", n, "Number of samples")->capture_default_str();
  gen->add_option("--height", height)->capture_default_str();
  gen->add_option("--width", width)->capture_default_str();
  gen->add_option("--joints", joints)->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--noise-level", noise)->capture_default_str();
  gen->add_option("--out", out, "Output container path")->required();

  CLI::App* account = app.add_subcommand("account", "Calibrate and account");
  double epsilon = 0.8, delta = 4e-5, q = 0.0, sigma = 0.0;
  std::int64_t steps = 1;
  account->add_option("--epsilon", epsilon)->capture_default_str();
  account->add_option("--delta", delta)->capture_default_str();
  account->add_option("--q", q, "Sampling rate")->required();
  account->add_option("--steps", steps)->required();
  account->add_option("--sigma", sigma, "Skip calibration and use this sigma");

  CLI::App* run = app.add_subcommand("run", "Run a sweep");
  std::string config_path, filter, run_out;
  int jobs = 1;
  run->add_option("--config", config_path)->required();
  run->add_option("--filter", filter, "variant=NAME[,NAME...]");
  run->add_option("--jobs", jobs)->capture_default_str();
  run->add_option("--out", run_out, "Override the output directory");

  CLI::App* plot = app.add_subcommand("plot", "Plot a results CSV");
  std::string plot_in, plot_out;
  plot->add_option("--in", plot_in)->required();
  plot->add_option("--out", plot_out)->required();

  CLI::App* config = app.add_subcommand("config", "Configuration helpers");
  config->require_subcommand(1);
  CLI::App* defaults =
      config->add_subcommand("print-defaults", "Print the default config");

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) {
      return DataGen(n, height, width, joints, seed, noise, out);
    }
    if (account->parsed()) return Account(epsilon, delta, q, steps, sigma);
    if (run->parsed()) return Run(config_path, filter, jobs, run_out);
    if (plot->parsed()) return Plot(plot_in, plot_out);
    if (defaults->parsed()) {
      std::cout << ConfigToJson(ExperimentConfig{});
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
