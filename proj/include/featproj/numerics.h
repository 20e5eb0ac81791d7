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

// Dense linear algebra and seeded sampling shared by every other module.
// All arithmetic is double precision; nothing here is multithreaded unless a
// thread count is passed explicitly.

#ifndef FEATPROJ_NUMERICS_H_
#define FEATPROJ_NUMERICS_H_

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string_view>

namespace featproj {

using Index = Eigen::Index;

// Flat vector of every model parameter.
using ParamVector = Eigen::VectorXd;

// Row-major so that a row (one per-sample gradient, one image) is contiguous.
using DenseMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Derived>
bool AllFinite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

// A reproducible random stream. Every call that consumes randomness advances
// the draw index by one, and the values produced by a call depend only on
// (seed, stream_id, draw_index). Streams are cheap values: derive one per
// thread or per purpose instead of sharing.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t draw_index() const { return draw_index_; }

  // Independent child stream; the parent is not advanced.
  RngStream Derive(std::uint64_t label) const;
  RngStream Derive(std::string_view label) const;

  // Engine for the next draw.
  std::mt19937_64 NextEngine();

  // Engine for sub-block `chunk` of draw `draw`. Used to split one logical
  // draw over threads without changing its values.
  std::mt19937_64 EngineFor(std::uint64_t draw, std::uint64_t chunk) const;

  // Reserves one draw index and returns it.
  std::uint64_t ReserveDraw() { return draw_index_++; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t draw_index_ = 0;
};

// Uniform double in [0, 1) from the top 53 bits of one engine output.
double UniformUnit(std::mt19937_64& engine);

// Uniform integer in [0, n) by rejection; n >= 1.
std::uint64_t UniformBelow(std::mt19937_64& engine, std::uint64_t n);

// Number of entries filled from one engine by GaussianVector.
inline constexpr Index kGaussianChunk = 4096;

// i.i.d. N(mean, std^2) entries. The result is identical for any `threads`.
ParamVector GaussianVector(RngStream& rng, Index p, double mean, double std,
                           int threads = 1);

struct EigenPairs {
  Eigen::VectorXd values;  // descending
  DenseMatrix vectors;     // one eigenvector per column
};

// Top-k eigenpairs of a symmetric matrix. Eigenvalues come back in
// descending order; within a run of equal eigenvalues the vectors are ordered
// by the index of their largest-magnitude entry, and every vector is signed
// so that entry is positive (ties go to the lowest index).
EigenPairs SymEigTopK(const DenseMatrix& m, Index k);

// Puts a set of eigenvectors into the canonical sign/order described above.
void CanonicalizeEigenvectors(Eigen::VectorXd& values, DenseMatrix& vectors);

struct GramBasis {
  DenseMatrix basis;              // p x k, orthonormal columns
  Eigen::VectorXd eigenvalues;    // all nonzero-candidate eigenvalues of M
  Index numerical_rank = 0;
};

// Top-k eigenvectors of M = (1/m) G^T G for G with m rows, computed through
// the m x m Gram matrix (1/m) G G^T so that M is never formed. Eigenvalues
// below 1e-12 * lambda_1 count as zero; asking for more directions than the
// numerical rank throws RankDeficientError.
GramBasis GramTopK(const DenseMatrix& g, Index k);

// Relative threshold below which Gram eigenvalues count as rank loss.
inline constexpr double kRankTolerance = 1e-12;

// Cosines of the principal angles between the column spans of two matrices
// with orthonormal columns, ascending.
Eigen::VectorXd PrincipalAngleCosines(const DenseMatrix& a,
                                      const DenseMatrix& b);

// Largest principal angle (radians) between two orthonormal column spans.
double MaxPrincipalAngle(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace featproj

#endif  // FEATPROJ_NUMERICS_H_
