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

// Python bindings for the accountant, projection, data and sweep layers.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "featproj/accountant.h"
#include "featproj/data.h"
#include "featproj/dp_optimizer.h"
#include "featproj/errors.h"
#include "featproj/experiments.h"
#include "featproj/metrics.h"
#include "featproj/models.h"
#include "featproj/numerics.h"
#include "featproj/subspace.h"

namespace py = pybind11;
using namespace featproj;

namespace {

using RowMatrix = DenseMatrix;

py::dict SampleDict(const Dataset& d) {
  const auto n = static_cast<Index>(d.size());
  const Index pix = static_cast<Index>(d.height) * d.width;
  RowMatrix images(n, pix), public_images(n, pix), joints(n, 2 * d.num_joints);
  for (Index i = 0; i < n; ++i) {
    const KeypointSample& s = d.samples[static_cast<size_t>(i)];
    for (Index j = 0; j < pix; ++j) {
      images(i, j) = s.image[static_cast<size_t>(j)];
      public_images(i, j) = s.public_image[static_cast<size_t>(j)];
    }
    for (Index j = 0; j < joints.cols(); ++j) joints(i, j) = s.joints[static_cast<size_t>(j)];
  }
  py::dict out;
  out["height"] = d.height;
  out["width"] = d.width;
  out["num_joints"] = d.num_joints;
  out["images"] = images;
  out["public_images"] = public_images;
  out["joints"] = joints;
  return out;
}

py::dict RowDict(const ResultRow& r) {
  py::dict d;
  d["variant"] = r.variant;
  d["epsilon_target"] = r.epsilon_target;
  d["epsilon_accounted"] = r.epsilon_accounted;
  d["C"] = r.C;
  d["sigma"] = r.sigma;
  d["seed"] = r.seed;
  d["strategy"] = r.strategy;
  d["final_loss"] = r.final_loss;
  d["pck_at_05"] = r.pck_at_05;
  d["pck_at_01"] = r.pck_at_01;
  d["pck_at_diag01"] = r.pck_at_diag01;
  d["steps_executed"] = r.steps_executed;
  d["status"] = r.status;
  d["wall_time_s"] = r.wall_time_s;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Feature-projective differentially private SGD";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<Error>(m, "FeatprojError", PyExc_RuntimeError);

  m.def("default_orders", &DefaultOrders);
  m.def("rdp_subsampled_gaussian", &RdpSubsampledGaussian, py::arg("q"),
        py::arg("sigma"), py::arg("alpha"));
  m.def(
      "accounted_epsilon",
      [](double q, double sigma, std::int64_t steps, double delta,
         std::vector<int> orders) {
        return AccountedEpsilon(q, sigma, steps, delta,
                                orders.empty() ? DefaultOrders() : orders);
      },
      py::arg("q"), py::arg("sigma"), py::arg("steps"), py::arg("delta"),
      py::arg("orders") = std::vector<int>{});
  m.def(
      "calibrate_sigma",
      [](double epsilon, double delta, double q, std::int64_t steps) {
        return CalibrateSigma(epsilon, delta, q, steps);
      },
      py::arg("epsilon"), py::arg("delta"), py::arg("q"), py::arg("steps"));

  m.def(
      "gram_topk",
      [](const RowMatrix& g, Index k) {
        const GramBasis b = GramTopK(g, k);
        return py::make_tuple(b.basis, b.eigenvalues);
      },
      py::arg("grads"), py::arg("k"),
      "Top-k eigenbasis of G^T G / m for an m x p gradient matrix.");
  m.def(
      "project",
      [](const RowMatrix& basis, const Eigen::VectorXd& g) {
        ProjectionBasis b;
        b.v = basis;
        b.k = basis.cols();
        return Project(b, g);
      },
      py::arg("basis"), py::arg("g"));
  m.def("clip_gradient", &ClipGradient, py::arg("g"), py::arg("clip_norm"));
  m.def(
      "noisy_aggregate",
      [](const RowMatrix& per_sample, double clip_norm, double sigma,
         std::uint64_t seed, double denominator) {
        RngStream rng(seed, 0);
        return NoisyAggregate(per_sample, clip_norm, sigma, rng, denominator);
      },
      py::arg("per_sample"), py::arg("clip_norm"), py::arg("sigma"),
      py::arg("seed"), py::arg("denominator") = 0.0);

  m.def(
      "generate",
      [](std::int64_t n, std::uint64_t seed, int height, int width, int joints,
         double noise_level) {
        GeneratorConfig g;
        g.height = height;
        g.width = width;
        g.num_joints = joints;
        g.noise_level = noise_level;
        return SampleDict(Generate(RngStream(seed, 0).Derive("data"), n, g));
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("height") = 32,
      py::arg("width") = 32, py::arg("joints") = 4, py::arg("noise_level") = 0.1);
  m.def(
      "blur_psi",
      [](const RowMatrix& image, int kernel_size, double sigma) {
        std::vector<double> flat(image.data(), image.data() + image.size());
        const std::vector<double> out =
            BlurPsi(flat, static_cast<int>(image.rows()),
                    static_cast<int>(image.cols()), {kernel_size, sigma});
        return RowMatrix(Eigen::Map<const RowMatrix>(out.data(), image.rows(), image.cols()));
      },
      py::arg("image"), py::arg("kernel_size") = 9, py::arg("sigma") = 3.0);
  m.def("encode_axis", &EncodeAxis, py::arg("coord"), py::arg("extent"),
        py::arg("kappa"), py::arg("sigma_bins"));
  m.def(
      "decode_axis",
      [](const std::vector<double>& scores, double kappa) {
        return DecodeAxis(scores, kappa);
      },
      py::arg("scores"), py::arg("kappa"));
  m.def(
      "pck",
      [](const RowMatrix& preds, const RowMatrix& gts, double threshold,
         double normalizer) {
        FEATPROJ_CHECK(preds.cols() % 2 == 0, "columns must be x, y pairs");
        auto unpack = [](const RowMatrix& a) {
          std::vector<std::vector<Point2>> out(static_cast<size_t>(a.rows()));
          for (Index i = 0; i < a.rows(); ++i) {
            for (Index j = 0; j + 1 < a.cols(); j += 2) {
              out[static_cast<size_t>(i)].push_back({a(i, j), a(i, j + 1)});
            }
          }
          return out;
        };
        const PckResult r = Pck(unpack(preds), unpack(gts), threshold, normalizer);
        return py::make_tuple(r.mean, r.per_joint);
      },
      py::arg("preds"), py::arg("gts"), py::arg("threshold"), py::arg("normalizer"),
      "PCK for N x 2J arrays of (x, y) pairs; returns (mean, per_joint).");

  m.def("variants", []() {
    std::vector<std::string> out;
    for (Variant v : AllVariants()) out.emplace_back(VariantName(v));
    return out;
  });
  m.def("default_config", []() { return ConfigToJson(ExperimentConfig{}); });
  m.def(
      "run_sweep",
      [](const std::string& config_json, const std::string& output_dir, int jobs) {
        ExperimentConfig c = ConfigFromJson(config_json);
        if (!output_dir.empty()) c.output_dir = output_dir;
        SweepOptions o;
        o.jobs = jobs;
        o.write_files = !output_dir.empty();
        std::vector<ResultRow> rows;
        {
          py::gil_scoped_release release;
          rows = RunSweep(c, o);
        }
        py::list out;
        for (const ResultRow& r : rows) out.append(RowDict(r));
        return out;
      },
      py::arg("config_json"), py::arg("output_dir") = "", py::arg("jobs") = 1,
      "Runs a sweep from a JSON config and returns one dict per result row.");
}
