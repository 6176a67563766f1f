// include/prosody/gmm.h

// Copyright 2026  The prosody-mdn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROSODY_GMM_H_
#define PROSODY_GMM_H_

#include <cstddef>
#include <span>
#include <vector>

#include "prosody/matrix.h"
#include "prosody/rng.h"

namespace prosody {

/// Phone-level prosody embedding.
using Embedding = std::vector<double>;

/// Unconstrained network outputs for one phone position: mixture logits
/// `alpha` [M], pre-activation means `m` [M x D] and log-variances `v` [M x D].
struct RawGmmParams {
  Vector alpha;
  Matrix m;
  Matrix v;

  RawGmmParams() = default;
  RawGmmParams(std::size_t num_components, std::size_t dim)
      : alpha(num_components, 0.0),
        m(num_components, dim),
        v(num_components, dim) {}

  std::size_t NumComponents() const { return alpha.size(); }
  std::size_t Dim() const { return m.cols(); }
  bool operator==(const RawGmmParams &) const = default;
};

/// Activated diagonal-covariance mixture.
struct DiagGmm {
  Vector weights;
  Matrix means;
  Matrix variances;

  std::size_t NumComponents() const { return weights.size(); }
  std::size_t Dim() const { return means.cols(); }
  bool operator==(const DiagGmm &) const = default;
};

/// Clamp applied to log-variances inside activation. Keeps exp() in range
/// while the predictor is far from a good solution.
struct LogVarClamp {
  double min = -10.0;
  double max = 10.0;
  bool operator==(const LogVarClamp &) const = default;
};

/// Throws ShapeError or InvalidParameterError if the mixture violates its
/// invariants (simplex weights within 1e-12, positive variances, shapes).
void ValidateGmm(const DiagGmm &gmm);

/// weights = softmax(alpha), means = m, variances = exp(clamp(v)).
DiagGmm Activate(const RawGmmParams &raw, const LogVarClamp &clamp = {});

/// log N(e; mu_i, diag(var_i)) + log w_i for every component i.
Vector ComponentLogJoint(const DiagGmm &gmm, std::span<const double> e);

/// log sum_i w_i N(e; mu_i, var_i), evaluated with log-sum-exp.
double LogDensity(const DiagGmm &gmm, std::span<const double> e);

struct GmmSample {
  Embedding value;
  std::size_t component = 0;
};

/// Draws a component from the weights, then a point from that component.
GmmSample Sample(const DiagGmm &gmm, RandomSource &rng);

/// Component responsibilities P(j | e), normalized in log space.
Vector Posterior(const DiagGmm &gmm, std::span<const double> e);

/// Most probable generating component; ties go to the lowest index.
std::size_t MapComponent(const DiagGmm &gmm, std::span<const double> e);

struct NllResult {
  double loss = 0.0;
  RawGmmParams grad;
};

/// Negative log-likelihood of `e` under Activate(raw) and its gradient with
/// respect to the raw outputs. With responsibilities g_i = P(i | e) and
/// variances s_id = exp(v_id):
///
///   dL/dalpha_i = w_i - g_i
///   dL/dm_id    = g_i (m_id - e_d) / s_id
///   dL/dv_id    = g_i (1 - (e_d - m_id)^2 / s_id) / 2
///
/// The v gradient is zero where the clamp is active.
NllResult NllAndGrad(const RawGmmParams &raw, std::span<const double> e,
                     const LogVarClamp &clamp = {});

/// Numerically stable log(sum(exp(x))). Returns -inf for an all -inf input.
double LogSumExp(std::span<const double> x);

}  // namespace prosody

#endif  // PROSODY_GMM_H_
