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
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "featproj/errors.h"
#include "gtest/gtest.h"

namespace featproj {
namespace {

// Direct 2D convolution with an explicitly built separable Gaussian and
// clamped (edge-replicated) indexing.
std::vector<double> NaiveBlur(const std::vector<double>& img, int h, int w,
                              int ks, double sigma) {
  const int r = ks / 2;
  std::vector<double> k1(static_cast<size_t>(ks));
  double z = 0.0;
  for (int i = 0; i < ks; ++i) {
    k1[static_cast<size_t>(i)] = std::exp(-(i - r) * (i - r) / (2 * sigma * sigma));
    z += k1[static_cast<size_t>(i)];
  }
  std::vector<double> out(img.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          const int xx = std::clamp(x + dx, 0, w - 1);
          acc += k1[static_cast<size_t>(dy + r)] * k1[static_cast<size_t>(dx + r)] /
                 (z * z) * img[static_cast<size_t>(yy * w + xx)];
        }
      }
      out[static_cast<size_t>(y * w + x)] = std::clamp(acc, 0.0, 1.0);
    }
  }
  return out;
}

// Solves a small dense system by Gaussian elimination with partial pivoting.
std::vector<double> Solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const size_t n = b.size();
  for (size_t c = 0; c < n; ++c) {
    size_t piv = c;
    for (size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (size_t i = n; i-- > 0;) {
    double s = b[i];
    for (size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

bool BitwiseEqual(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

TEST(Generate, Deterministic) {
  const RngStream rng(77, 0);
  const Dataset a = Generate(rng, 1, GeneratorConfig{});
  const Dataset b = Generate(rng, 1, GeneratorConfig{});
  EXPECT_TRUE(BitwiseEqual(a.samples[0].image, b.samples[0].image));
  EXPECT_TRUE(BitwiseEqual(a.samples[0].public_image, b.samples[0].public_image));
  EXPECT_TRUE(BitwiseEqual(a.samples[0].joints, b.samples[0].joints));
}

TEST(Generate, CleanRenderIsSumOfBlobs) {
  GeneratorConfig cfg;
  cfg.noise_level = 0.0;
  const Dataset d = Generate(RngStream(5, 0), 3, cfg);
  const double inv = 1.0 / (2.0 * cfg.blob_sigma * cfg.blob_sigma);
  for (const KeypointSample& s : d.samples) {
    const int j_count = cfg.num_joints;
    auto blob = [&](int j, int r, int c) {
      const Point2 p = s.joint(j);
      const double dx = c + 0.5 - p.x, dy = r + 0.5 - p.y;
      return std::exp(-(dx * dx + dy * dy) * inv);
    };
    // Recover amplitudes from the pixel under each joint, then check every
    // pixel against the rendered sum.
    std::vector<std::vector<double>> a(j_count, std::vector<double>(j_count));
    std::vector<double> b(j_count);
    for (int i = 0; i < j_count; ++i) {
      const int r = static_cast<int>(s.joint(i).y), c = static_cast<int>(s.joint(i).x);
      for (int j = 0; j < j_count; ++j) a[i][j] = blob(j, r, c);
      b[i] = s.image[static_cast<size_t>(r * cfg.width + c)];
    }
    const std::vector<double> amp = Solve(a, b);
    for (double v : amp) {
      EXPECT_GE(v, cfg.amplitude_min - 1e-9);
      EXPECT_LE(v, cfg.amplitude_max + 1e-9);
    }
    for (int r = 0; r < cfg.height; ++r) {
      for (int c = 0; c < cfg.width; ++c) {
        double ref = 0.0;
        for (int j = 0; j < j_count; ++j) ref += amp[static_cast<size_t>(j)] * blob(j, r, c);
        EXPECT_NEAR(s.image[static_cast<size_t>(r * cfg.width + c)], ref, 1e-12);
      }
    }
  }
}

TEST(Generate, JointsInsideFrameAndPsiDerived) {
  const GeneratorConfig cfg;
  const Dataset d = Generate(RngStream(1, 0), 50, cfg);
  for (const KeypointSample& s : d.samples) {
    for (int j = 0; j < cfg.num_joints; ++j) {
      EXPECT_GT(s.joint(j).x, 0.0);
      EXPECT_LT(s.joint(j).x, cfg.width);
      EXPECT_GT(s.joint(j).y, 0.0);
      EXPECT_LT(s.joint(j).y, cfg.height);
    }
    EXPECT_TRUE(BitwiseEqual(s.public_image, BlurPsi(s.image, cfg.height, cfg.width, cfg.blur)));
    for (double v : s.image) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Generate, BlurLowersHighFrequencyEnergy) {
  const GeneratorConfig cfg;
  const Dataset d = Generate(RngStream(2, 0), 200, cfg);
  for (const KeypointSample& s : d.samples) {
    EXPECT_LT(MeanAbsLaplacian(s.public_image, cfg.height, cfg.width),
              MeanAbsLaplacian(s.image, cfg.height, cfg.width));
  }
}

TEST(Generate, InfeasibleGeometryIsError) {
  GeneratorConfig cfg;
  cfg.num_joints = 100;
  EXPECT_THROW(Generate(RngStream(1, 0), 1, cfg), Error);
  cfg = GeneratorConfig{};
  cfg.height = 8;
  EXPECT_THROW(Generate(RngStream(1, 0), 1, cfg), Error);
  cfg = GeneratorConfig{};
  cfg.noise_level = 0.5;
  EXPECT_THROW(Generate(RngStream(1, 0), 1, cfg), Error);
}

TEST(Blur, ConstantImageUnchanged) {
  const std::vector<double> img(32 * 32, 0.37);
  for (double v : BlurPsi(img, 32, 32, BlurParams{})) EXPECT_NEAR(v, 0.37, 1e-12);
}

TEST(Blur, ImpulseGivesKernel) {
  std::vector<double> img(32 * 32, 0.0);
  img[16 * 32 + 16] = 1.0;
  const std::vector<double> out = BlurPsi(img, 32, 32, BlurParams{});
  const std::vector<double> k = GaussianKernel1D(9, 3.0);
  for (int dy = -4; dy <= 4; ++dy) {
    for (int dx = -4; dx <= 4; ++dx) {
      EXPECT_NEAR(out[static_cast<size_t>((16 + dy) * 32 + 16 + dx)],
                  k[static_cast<size_t>(dy + 4)] * k[static_cast<size_t>(dx + 4)], 1e-15);
    }
  }
  double total = 0.0;
  for (double v : out) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Blur, MatchesBruteForceConvolution) {
  std::mt19937_64 eng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> img(32 * 32);
  for (double& v : img) v = u(eng);
  for (const BlurParams p : {BlurParams{9, 3.0}, BlurParams{5, 1.0}, BlurParams{25, 10.0}}) {
    const std::vector<double> ref = NaiveBlur(img, 32, 32, p.kernel_size, p.sigma);
    const std::vector<double> out = BlurPsi(img, 32, 32, p);
    for (size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out[i], ref[i], 1e-10);
  }
}

TEST(Blur, EvenKernelIsContractViolation) {
  const std::vector<double> img(16 * 16, 0.0);
  EXPECT_THROW(BlurPsi(img, 16, 16, BlurParams{8, 3.0}), ContractViolation);
}

TEST(Split, SizesAndDisjointness) {
  const Dataset d = Generate(RngStream(3, 0), 10, GeneratorConfig{});
  const SplitDataset s = Split(d, 3, RngStream(4, 0));
  EXPECT_EQ(s.pub.size(), 3u);
  EXPECT_EQ(s.priv.size(), 7u);
  std::set<std::int64_t> all(s.pub_indices.begin(), s.pub_indices.end());
  for (std::int64_t i : s.priv_indices) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 10u);
  for (size_t i = 0; i < s.pub.size(); ++i) {
    EXPECT_TRUE(BitwiseEqual(s.pub.samples[i].image,
                             d.samples[static_cast<size_t>(s.pub_indices[i])].image));
  }
}

TEST(Split, DeterministicPerSeed) {
  const Dataset d = Generate(RngStream(3, 0), 2000, GeneratorConfig{});
  const SplitDataset a = Split(d, 100, RngStream(9, 0));
  const SplitDataset b = Split(d, 100, RngStream(9, 0));
  EXPECT_EQ(a.pub_indices, b.pub_indices);
  EXPECT_EQ(a.pub.size(), 100u);
  EXPECT_EQ(a.priv.size(), 1900u);
  const SplitDataset c = Split(d, 100, RngStream(10, 0));
  EXPECT_NE(a.pub_indices, c.pub_indices);
}

TEST(Split, PublicSetMustBeSmaller) {
  const Dataset d = Generate(RngStream(3, 0), 5, GeneratorConfig{});
  EXPECT_THROW(Split(d, 5, RngStream(1, 0)), Error);
}

TEST(Container, RoundTripAndSidecar) {
  const Dataset d = Generate(RngStream(8, 0), 4, GeneratorConfig{});
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "featproj_data_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "set.bin").string();
  WriteDataset(d, path);
  const Dataset back = ReadDataset(path);
  ASSERT_EQ(back.size(), d.size());
  EXPECT_EQ(back.height, d.height);
  EXPECT_EQ(back.num_joints, d.num_joints);
  for (size_t i = 0; i < d.size(); ++i) {
    EXPECT_TRUE(BitwiseEqual(back.samples[i].image, d.samples[i].image));
    EXPECT_TRUE(BitwiseEqual(back.samples[i].public_image, d.samples[i].public_image));
    EXPECT_TRUE(BitwiseEqual(back.samples[i].joints, d.samples[i].joints));
  }
  std::ifstream in(path, std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  EXPECT_EQ(std::string(magic, 8), "FPDPDATA");

  WriteJointsCsv(d, path + ".csv");
  std::ifstream csv(path + ".csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "sample,joint,x,y");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 4 * 4);
  std::filesystem::remove_all(dir);
}

TEST(Container, CorruptMagicIsError) {
  const std::filesystem::path p = std::filesystem::temp_directory_path() / "featproj_bad.bin";
  std::ofstream(p, std::ios::binary) << "NOTADATASET0000000000000000";
  EXPECT_THROW(ReadDataset(p.string()), Error);
  std::filesystem::remove(p);
}

}  // namespace
}  // namespace featproj
