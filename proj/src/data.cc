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

#include "featproj/data.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "featproj/errors.h"

namespace featproj {
namespace {

constexpr char kMagic[8] = {'F', 'P', 'D', 'P', 'D', 'A', 'T', 'A'};

template <typename T>
void Put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T Get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error("dataset file is truncated");
  return value;
}

void PutDoubles(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> GetDoubles(std::ifstream& in, size_t count) {
  std::vector<double> v(count);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw Error("dataset file is truncated");
  return v;
}

int GridSide(int joints) {
  int side = 1;
  while (side * side < joints) ++side;
  return side;
}

}  // namespace

Dataset Generate(const RngStream& rng, std::int64_t n,
                 const GeneratorConfig& config) {
  if (config.height < 16 || config.width < 16) {
    throw Error("frames must be at least 16x16");
  }
  if (config.num_joints < 1) throw Error("need at least one joint");
  if (n < 0) throw Error("sample count must be nonnegative");
  if (config.noise_level < 0.0) throw Error("noise level must be >= 0");
  if (config.amplitude_min < 3.0 * config.noise_level ||
      config.amplitude_max < config.amplitude_min) {
    throw Error("blob amplitude must be at least three noise std");
  }
  const int side = GridSide(config.num_joints);
  const double cell_w = static_cast<double>(config.width) / side;
  const double cell_h = static_cast<double>(config.height) / side;
  if (cell_w <= 2.0 * config.margin || cell_h <= 2.0 * config.margin) {
    throw Error("cannot place " + std::to_string(config.num_joints) +
                " joints in a " + std::to_string(config.height) + "x" +
                std::to_string(config.width) + " frame with margin " +
                std::to_string(config.margin));
  }

  Dataset data;
  data.height = config.height;
  data.width = config.width;
  data.num_joints = config.num_joints;
  data.samples.resize(static_cast<size_t>(n));
  const int h = config.height;
  const int w = config.width;
  const double inv_two_var = 1.0 / (2.0 * config.blob_sigma * config.blob_sigma);
  for (std::int64_t i = 0; i < n; ++i) {
    RngStream sample_rng = rng.Derive(static_cast<std::uint64_t>(i));
    std::mt19937_64 engine = sample_rng.NextEngine();
    KeypointSample& s = data.samples[static_cast<size_t>(i)];
    s.joints.resize(static_cast<size_t>(2 * config.num_joints));
    s.image.assign(static_cast<size_t>(h * w), 0.0);
    for (int j = 0; j < config.num_joints; ++j) {
      const double x0 = (j % side) * cell_w + config.margin;
      const double y0 = (j / side) * cell_h + config.margin;
      const double x = x0 + UniformUnit(engine) * (cell_w - 2.0 * config.margin);
      const double y = y0 + UniformUnit(engine) * (cell_h - 2.0 * config.margin);
      const double amp =
          config.amplitude_min +
          UniformUnit(engine) * (config.amplitude_max - config.amplitude_min);
      s.joints[static_cast<size_t>(2 * j)] = x;
      s.joints[static_cast<size_t>(2 * j + 1)] = y;
      for (int r = 0; r < h; ++r) {
        const double dy = r + 0.5 - y;
        for (int c = 0; c < w; ++c) {
          const double dx = c + 0.5 - x;
          s.image[static_cast<size_t>(r * w + c)] +=
              amp * std::exp(-(dx * dx + dy * dy) * inv_two_var);
        }
      }
    }
    if (config.noise_level > 0.0) {
      std::normal_distribution<double> normal(0.0, config.noise_level);
      for (double& v : s.image) v += normal(engine);
    }
    for (double& v : s.image) v = std::clamp(v, 0.0, 1.0);
    s.public_image = BlurPsi(s.image, h, w, config.blur);
  }
  return data;
}

std::vector<double> GaussianKernel1D(int kernel_size, double sigma) {
  FEATPROJ_CHECK(kernel_size >= 1 && kernel_size % 2 == 1,
                 "kernel size must be odd");
  FEATPROJ_CHECK(sigma > 0.0, "blur sigma must be positive");
  const int half = kernel_size / 2;
  std::vector<double> taps(static_cast<size_t>(kernel_size));
  double total = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    taps[static_cast<size_t>(i + half)] = v;
    total += v;
  }
  for (double& v : taps) v /= total;
  return taps;
}

std::vector<double> BlurPsi(const std::vector<double>& image, int height,
                            int width, const BlurParams& params) {
  FEATPROJ_CHECK(static_cast<int>(image.size()) == height * width,
                 "image size must equal height * width");
  const std::vector<double> taps =
      GaussianKernel1D(params.kernel_size, params.sigma);
  const int half = params.kernel_size / 2;
  auto at = [](int i, int n) { return std::clamp(i, 0, n - 1); };

  std::vector<double> rows(image.size());
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int t = -half; t <= half; ++t) {
        acc += taps[static_cast<size_t>(t + half)] *
               image[static_cast<size_t>(r * width + at(c + t, width))];
      }
      rows[static_cast<size_t>(r * width + c)] = acc;
    }
  }
  std::vector<double> out(image.size());
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int t = -half; t <= half; ++t) {
        acc += taps[static_cast<size_t>(t + half)] *
               rows[static_cast<size_t>(at(r + t, height) * width + c)];
      }
      out[static_cast<size_t>(r * width + c)] = std::clamp(acc, 0.0, 1.0);
    }
  }
  return out;
}

SplitDataset Split(const Dataset& data, std::int64_t m, const RngStream& rng) {
  const auto n = static_cast<std::int64_t>(data.size());
  if (m < 0 || m >= n) {
    throw Error("public size " + std::to_string(m) +
                " must be below the dataset size " + std::to_string(n));
  }
  std::vector<std::int64_t> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  RngStream split_rng = rng;
  std::mt19937_64 engine = split_rng.NextEngine();
  for (std::int64_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::int64_t>(
        UniformBelow(engine, static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
  }
  SplitDataset out;
  out.pub_indices.assign(perm.begin(), perm.begin() + m);
  out.priv_indices.assign(perm.begin() + m, perm.end());
  std::sort(out.pub_indices.begin(), out.pub_indices.end());
  std::sort(out.priv_indices.begin(), out.priv_indices.end());
  for (Dataset* d : {&out.pub, &out.priv}) {
    d->height = data.height;
    d->width = data.width;
    d->num_joints = data.num_joints;
  }
  for (std::int64_t i : out.pub_indices) {
    out.pub.samples.push_back(data.samples[static_cast<size_t>(i)]);
  }
  for (std::int64_t i : out.priv_indices) {
    out.priv.samples.push_back(data.samples[static_cast<size_t>(i)]);
  }
  return out;
}

void WriteDataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  Put<std::uint32_t>(out, kDatasetVersion);
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(data.height));
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(data.width));
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(data.num_joints));
  Put<std::uint64_t>(out, data.size());
  for (const KeypointSample& s : data.samples) {
    PutDoubles(out, s.image);
    PutDoubles(out, s.public_image);
    PutDoubles(out, s.joints);
  }
  if (!out) throw Error("failed writing " + path);
}

Dataset ReadDataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(path + " is not a dataset container");
  }
  const auto version = Get<std::uint32_t>(in);
  if (version != kDatasetVersion) {
    throw Error("unsupported dataset version " + std::to_string(version));
  }
  Dataset data;
  data.height = static_cast<int>(Get<std::uint32_t>(in));
  data.width = static_cast<int>(Get<std::uint32_t>(in));
  data.num_joints = static_cast<int>(Get<std::uint32_t>(in));
  const auto n = Get<std::uint64_t>(in);
  const auto pixels = static_cast<size_t>(data.height * data.width);
  data.samples.resize(n);
  for (KeypointSample& s : data.samples) {
    s.image = GetDoubles(in, pixels);
    s.public_image = GetDoubles(in, pixels);
    s.joints = GetDoubles(in, static_cast<size_t>(2 * data.num_joints));
  }
  return data;
}

void WriteJointsCsv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.precision(17);
  out << "sample,joint,x,y\n";
  for (size_t i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.num_joints; ++j) {
      const Point2 p = data.samples[i].joint(j);
      out << i << ',' << j << ',' << p.x << ',' << p.y << '\n';
    }
  }
}

double MeanAbsLaplacian(const std::vector<double>& image, int height,
                        int width) {
  FEATPROJ_CHECK(height >= 3 && width >= 3, "image too small");
  double acc = 0.0;
  for (int r = 1; r + 1 < height; ++r) {
    for (int c = 1; c + 1 < width; ++c) {
      auto px = [&](int rr, int cc) {
        return image[static_cast<size_t>(rr * width + cc)];
      };
      acc += std::abs(px(r - 1, c) + px(r + 1, c) + px(r, c - 1) +
                      px(r, c + 1) - 4.0 * px(r, c));
    }
  }
  return acc / ((height - 2.0) * (width - 2.0));
}

}  // namespace featproj
