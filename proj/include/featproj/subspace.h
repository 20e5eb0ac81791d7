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

// Gradient-subspace estimation from public samples and the projector
// g -> V V^T g.

#ifndef FEATPROJ_SUBSPACE_H_
#define FEATPROJ_SUBSPACE_H_

#include <cstdint>
#include <span>

#include "featproj/models.h"
#include "featproj/numerics.h"

namespace featproj {

struct ProjectionBasis {
  DenseMatrix v;  // p x k, orthonormal columns; empty when identity
  Index k = 0;
  std::int64_t refreshed_at_step = 0;
  Eigen::VectorXd eigenvalues;  // leading eigenvalues of M
  double eigengap = 0.0;        // lambda_k - lambda_{k+1}
  // Projects onto the trainable coordinates only, i.e. the whole space the
  // optimizer can move in.
  bool identity = false;

  // Full-dimensional basis usable with Project for any p.
  static ProjectionBasis Identity(Index p, std::int64_t step);
};

// One public sample: its raw input and its feature-mapped input, both with
// the same target.
struct PublicExample {
  Example raw;
  Example features;
};

struct PublicGradientSet {
  DenseMatrix grads;  // m x p
  std::int64_t source_step = 0;
};

PublicGradientSet PublicGradients(const Objective& objective,
                                  const ParamVector& w,
                                  std::span<const PublicExample> public_set,
                                  std::int64_t step);

// Top-k eigenspace of M(w) = (1/m) sum grad l grad l^T over the public set,
// using the full loss. Throws Error when m < k and RankDeficientError when
// the gradients span fewer than k directions. Returns the identity basis when
// k covers every trainable coordinate.
ProjectionBasis EstimateBasis(const Objective& objective, const ParamVector& w,
                              std::span<const PublicExample> public_set,
                              Index k, std::int64_t step);

// V (V^T g); the identity basis returns g.
ParamVector Project(const ProjectionBasis& basis, const ParamVector& g);

// True iff step % interval == 0.
bool RefreshDue(std::int64_t step, std::int64_t interval);

}  // namespace featproj

#endif  // FEATPROJ_SUBSPACE_H_
