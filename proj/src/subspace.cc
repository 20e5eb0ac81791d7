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

#include "featproj/subspace.h"

#include <string>
#include <vector>

#include "featproj/errors.h"

namespace featproj {

ProjectionBasis ProjectionBasis::Identity(Index p, std::int64_t step) {
  ProjectionBasis b;
  b.k = p;
  b.refreshed_at_step = step;
  b.identity = true;
  return b;
}

PublicGradientSet PublicGradients(const Objective& objective,
                                  const ParamVector& w,
                                  std::span<const PublicExample> public_set,
                                  std::int64_t step) {
  const Index p = objective.model.num_params();
  const auto m = static_cast<Index>(public_set.size());
  PublicGradientSet out;
  out.source_step = step;
  out.grads.resize(m, p);
  std::vector<double> scratch(static_cast<size_t>(p));
  for (Index i = 0; i < m; ++i) {
    const PublicExample& z = public_set[static_cast<size_t>(i)];
    objective.FullLossAndGrad(
        w, z.raw, z.features,
        std::span<double>(out.grads.row(i).data(), static_cast<size_t>(p)),
        scratch);
  }
  return out;
}

ProjectionBasis EstimateBasis(const Objective& objective, const ParamVector& w,
                              std::span<const PublicExample> public_set,
                              Index k, std::int64_t step) {
  FEATPROJ_CHECK(k >= 1, "k must be positive");
  if (k >= objective.model.num_trainable()) {
    return ProjectionBasis::Identity(objective.model.num_params(), step);
  }
  const auto m = static_cast<Index>(public_set.size());
  if (m < k) {
    throw Error("public set has " + std::to_string(m) +
                " samples, fewer than k = " + std::to_string(k));
  }
  const PublicGradientSet set = PublicGradients(objective, w, public_set, step);
  GramBasis gram = GramTopK(set.grads, k);

  ProjectionBasis b;
  b.v = std::move(gram.basis);
  b.k = k;
  b.refreshed_at_step = step;
  b.eigenvalues = gram.eigenvalues.head(k);
  const double next = k < gram.eigenvalues.size() ? gram.eigenvalues(k) : 0.0;
  b.eigengap = gram.eigenvalues(k - 1) - next;
  return b;
}

ParamVector Project(const ProjectionBasis& basis, const ParamVector& g) {
  if (basis.identity) {
    FEATPROJ_CHECK(g.size() == basis.k, "gradient length must match basis");
    return g;
  }
  FEATPROJ_CHECK(g.size() == basis.v.rows(), "gradient length must match basis");
  const Eigen::VectorXd coeff = basis.v.transpose() * g;
  return basis.v * coeff;
}

bool RefreshDue(std::int64_t step, std::int64_t interval) {
  FEATPROJ_CHECK(interval >= 1, "refresh interval must be positive");
  return step % interval == 0;
}

}  // namespace featproj
