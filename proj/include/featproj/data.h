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

// Synthetic keypoint images, the blur feature map psi, and splitting.

#ifndef FEATPROJ_DATA_H_
#define FEATPROJ_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "featproj/models.h"
#include "featproj/numerics.h"

namespace featproj {

struct BlurParams {
  int kernel_size = 9;
  double sigma = 3.0;
};

struct GeneratorConfig {
  int height = 32;
  int width = 32;
  int num_joints = 4;
  double noise_level = 0.1;  // background noise std
  double blob_sigma = 1.5;   // pixels
  double amplitude_min = 0.6;
  double amplitude_max = 0.9;
  double margin = 2.0;  // min distance from a joint to its cell border
  BlurParams blur;
};

// One image with its joints. Images are row-major H x W in [0, 1];
// `joints` is (x0, y0, x1, y1, ...) in pixel units with pixel (r, c)
// covering [c, c+1) x [r, r+1).
struct KeypointSample {
  std::vector<double> image;
  std::vector<double> public_image;
  std::vector<double> joints;

  Point2 joint(int j) const {
    return {joints[static_cast<size_t>(2 * j)],
            joints[static_cast<size_t>(2 * j + 1)]};
  }
};

struct Dataset {
  int height = 0;
  int width = 0;
  int num_joints = 0;
  std::vector<KeypointSample> samples;

  size_t size() const { return samples.size(); }
};

// Renders n samples. Joint j is placed uniformly inside cell j of a
// ceil(sqrt(J)) x ceil(sqrt(J)) grid, keeping `margin` from the cell border,
// and drawn as a Gaussian blob. Sample i uses rng.Derive(i), so any sample
// can be regenerated alone. Throws Error if the cells are too small for the
// margin or the amplitude is below three noise standard deviations.
Dataset Generate(const RngStream& rng, std::int64_t n,
                 const GeneratorConfig& config);

// Normalized 1D Gaussian taps, length kernel_size.
std::vector<double> GaussianKernel1D(int kernel_size, double sigma);

// Separable Gaussian blur with edge replication, clamped to [0, 1].
std::vector<double> BlurPsi(const std::vector<double>& image, int height,
                            int width, const BlurParams& params);

struct SplitDataset {
  Dataset pub;
  Dataset priv;
  std::vector<std::int64_t> pub_indices;   // positions in the source set
  std::vector<std::int64_t> priv_indices;
};

// Uniformly random disjoint split with |pub| = m. Throws Error if m >= n.
SplitDataset Split(const Dataset& data, std::int64_t m, const RngStream& rng);

// Binary container: "FPDPDATA", u32 version, u32 H, W, J, u64 n, then per
// sample the image, the public image and the joints as little-endian f64.
inline constexpr std::uint32_t kDatasetVersion = 1;

void WriteDataset(const Dataset& data, const std::string& path);
Dataset ReadDataset(const std::string& path);

// Sidecar CSV with header sample,joint,x,y.
void WriteJointsCsv(const Dataset& data, const std::string& path);

// Mean absolute 5-point Laplacian over interior pixels.
double MeanAbsLaplacian(const std::vector<double>& image, int height,
                        int width);

}  // namespace featproj

#endif  // FEATPROJ_DATA_H_
