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

#include "featproj/numerics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "featproj/errors.h"

namespace featproj {
namespace internal {

void ThrowContractViolation(const char* file, int line, const char* condition,
                            const std::string& message) {
  throw ContractViolation(std::string(file) + ":" + std::to_string(line) +
                          ": contract violated (" + condition + "): " +
                          message);
}

}  // namespace internal

namespace {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t Mix(std::uint64_t a, std::uint64_t b) {
  return SplitMix64(a ^ SplitMix64(b + 0x632be59bd9b4e019ULL));
}

// FNV-1a, only used to turn string labels into stream ids.
std::uint64_t HashLabel(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Index of the largest-magnitude entry; near-ties go to the lowest index.
Index DominantIndex(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Index best = 0;
  double best_abs = v.size() > 0 ? std::abs(v(0)) : 0.0;
  for (Index i = 1; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best_abs * (1.0 + 1e-9) && a > best_abs) {
      best = i;
      best_abs = a;
    }
  }
  return best;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {}

RngStream RngStream::Derive(std::uint64_t label) const {
  return RngStream(seed_, Mix(stream_id_, label));
}

RngStream RngStream::Derive(std::string_view label) const {
  return Derive(HashLabel(label));
}

std::mt19937_64 RngStream::NextEngine() {
  return EngineFor(ReserveDraw(), 0);
}

std::mt19937_64 RngStream::EngineFor(std::uint64_t draw,
                                     std::uint64_t chunk) const {
  const std::uint64_t words[4] = {seed_, stream_id_, draw, chunk};
  std::vector<std::uint32_t> material;
  material.reserve(8);
  for (std::uint64_t w : words) {
    material.push_back(static_cast<std::uint32_t>(w & 0xffffffffULL));
    material.push_back(static_cast<std::uint32_t>(w >> 32));
  }
  std::seed_seq seq(material.begin(), material.end());
  return std::mt19937_64(seq);
}

double UniformUnit(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

std::uint64_t UniformBelow(std::mt19937_64& engine, std::uint64_t n) {
  FEATPROJ_CHECK(n >= 1, "range must be nonempty");
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
  std::uint64_t x = engine();
  while (x >= limit) x = engine();
  return x % n;
}

ParamVector GaussianVector(RngStream& rng, Index p, double mean, double std,
                           int threads) {
  FEATPROJ_CHECK(std >= 0.0, "standard deviation must be nonnegative");
  FEATPROJ_CHECK(p >= 0, "dimension must be nonnegative");
  FEATPROJ_CHECK(std::isfinite(mean) && std::isfinite(std),
                 "mean and std must be finite");
  const std::uint64_t draw = rng.ReserveDraw();
  ParamVector out(p);
  if (std == 0.0) {
    out.setConstant(mean);
    return out;
  }
  const Index num_chunks = (p + kGaussianChunk - 1) / kGaussianChunk;
  auto fill = [&](Index first_chunk, Index last_chunk) {
    for (Index c = first_chunk; c < last_chunk; ++c) {
      std::mt19937_64 engine = rng.EngineFor(draw, static_cast<std::uint64_t>(c));
      std::normal_distribution<double> normal(mean, std);
      const Index begin = c * kGaussianChunk;
      const Index end = std::min(p, begin + kGaussianChunk);
      for (Index i = begin; i < end; ++i) out(i) = normal(engine);
    }
  };
  const int workers =
      static_cast<int>(std::clamp<Index>(threads, 1, std::max<Index>(num_chunks, 1)));
  if (workers == 1) {
    fill(0, num_chunks);
    return out;
  }
  std::vector<std::thread> pool;
  const Index per = (num_chunks + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    const Index a = t * per;
    const Index b = std::min(num_chunks, a + per);
    if (a < b) pool.emplace_back(fill, a, b);
  }
  for (auto& th : pool) th.join();
  return out;
}

void CanonicalizeEigenvectors(Eigen::VectorXd& values, DenseMatrix& vectors) {
  const Index n = values.size();
  FEATPROJ_CHECK(vectors.cols() == n, "one eigenvector per eigenvalue");
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values(a) > values(b); });

  const double scale = n > 0 ? std::max(1.0, values.cwiseAbs().maxCoeff()) : 1.0;
  const double tie_tol = 1e-10 * scale;
  std::vector<Index> dominant(static_cast<size_t>(n));
  for (Index j = 0; j < n; ++j) {
    dominant[static_cast<size_t>(j)] = DominantIndex(vectors.col(j));
  }
  // Within each run of (numerically) equal eigenvalues order by dominant
  // index so degenerate spectra come back in a fixed order.
  size_t start = 0;
  while (start < order.size()) {
    size_t end = start + 1;
    while (end < order.size() &&
           values(order[start]) - values(order[end]) <= tie_tol) {
      ++end;
    }
    std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](Index a, Index b) {
                       return dominant[static_cast<size_t>(a)] <
                              dominant[static_cast<size_t>(b)];
                     });
    start = end;
  }

  Eigen::VectorXd sorted_values(n);
  DenseMatrix sorted_vectors(vectors.rows(), n);
  for (Index j = 0; j < n; ++j) {
    const Index src = order[static_cast<size_t>(j)];
    sorted_values(j) = values(src);
    sorted_vectors.col(j) = vectors.col(src);
    if (sorted_vectors(dominant[static_cast<size_t>(src)], j) < 0.0) {
      sorted_vectors.col(j) *= -1.0;
    }
  }
  values = std::move(sorted_values);
  vectors = std::move(sorted_vectors);
}

EigenPairs SymEigTopK(const DenseMatrix& m, Index k) {
  FEATPROJ_CHECK(m.rows() == m.cols(), "matrix must be square");
  FEATPROJ_CHECK(k >= 1 && k <= m.rows(), "k must be in [1, d]");
  FEATPROJ_CHECK(AllFinite(m), "matrix must be finite");
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  FEATPROJ_CHECK(asym <= 1e-10 * scale, "matrix must be symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      Eigen::MatrixXd(m), Eigen::ComputeEigenvectors);
  FEATPROJ_CHECK(solver.info() == Eigen::Success,
                 "eigensolver failed to converge");
  Eigen::VectorXd values = solver.eigenvalues();
  DenseMatrix vectors = solver.eigenvectors();
  CanonicalizeEigenvectors(values, vectors);

  EigenPairs out;
  out.values = values.head(k);
  out.vectors = vectors.leftCols(k);
  return out;
}

GramBasis GramTopK(const DenseMatrix& g, Index k) {
  const Index m = g.rows();
  const Index p = g.cols();
  FEATPROJ_CHECK(m >= 1 && p >= 1, "gradient matrix must be nonempty");
  FEATPROJ_CHECK(k >= 1 && k <= std::min(m, p), "k must be in [1, min(m, p)]");
  FEATPROJ_CHECK(AllFinite(g), "gradients must be finite");

  DenseMatrix gram(m, m);
  gram.noalias() = g * g.transpose();
  gram /= static_cast<double>(m);
  // Symmetrize away rounding so the eigensolver sees an exactly symmetric
  // matrix.
  gram = 0.5 * (gram + gram.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      Eigen::MatrixXd(gram), Eigen::ComputeEigenvectors);
  FEATPROJ_CHECK(solver.info() == Eigen::Success,
                 "eigensolver failed to converge");
  Eigen::VectorXd mu = solver.eigenvalues();
  DenseMatrix u = solver.eigenvectors();
  CanonicalizeEigenvectors(mu, u);

  GramBasis out;
  out.eigenvalues = mu.cwiseMax(0.0);
  const double top = mu(0);
  Index rank = 0;
  if (top > 0.0) {
    while (rank < m && mu(rank) > kRankTolerance * top) ++rank;
  }
  out.numerical_rank = rank;
  if (k > rank) throw RankDeficientError(k, rank);

  // Column-major so the Gram-Schmidt sweeps below touch contiguous columns.
  Eigen::MatrixXd v = g.transpose() * u.leftCols(k);
  for (Index i = 0; i < k; ++i) {
    v.col(i) /= std::sqrt(static_cast<double>(m) * mu(i));
  }
  // Two passes of modified Gram-Schmidt; the columns are already orthonormal
  // up to rounding, so this only tightens them.
  for (int pass = 0; pass < 2; ++pass) {
    for (Index i = 0; i < k; ++i) {
      for (Index j = 0; j < i; ++j) {
        v.col(i) -= v.col(j).dot(v.col(i)) * v.col(j);
      }
      v.col(i).normalize();
    }
  }
  Eigen::VectorXd top_values = mu.head(k);
  DenseMatrix basis = v;
  CanonicalizeEigenvectors(top_values, basis);
  out.basis = std::move(basis);
  return out;
}

Eigen::VectorXd PrincipalAngleCosines(const DenseMatrix& a,
                                      const DenseMatrix& b) {
  FEATPROJ_CHECK(a.rows() == b.rows(), "bases must share ambient dimension");
  Eigen::MatrixXd cross = a.transpose() * b;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross);
  Eigen::VectorXd s = svd.singularValues();
  std::sort(s.data(), s.data() + s.size());
  return s;
}

double MaxPrincipalAngle(const DenseMatrix& a, const DenseMatrix& b) {
  FEATPROJ_CHECK(a.rows() == b.rows() && a.cols() == b.cols(),
                 "bases must have the same shape");
  // sin of the largest angle is the spectral norm of (I - A A^T) B; this
  // stays accurate for tiny angles where acos(cos) does not.
  Eigen::MatrixXd residual = b - a * (a.transpose() * b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  const double s = svd.singularValues().size() > 0
                       ? svd.singularValues()(0)
                       : 0.0;
  return std::asin(std::min(1.0, s));
}

}  // namespace featproj
