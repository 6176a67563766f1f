// src/gmm.cc

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

#include "prosody/gmm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "prosody/error.h"

namespace prosody {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

void CheckFinite(const Vector &x, const char *what) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]))
      throw InvalidParameterError(std::string(what) + "[" + std::to_string(i) +
                                  "] is not finite");
}

void CheckFinite(const Matrix &x, const char *what) {
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (!std::isfinite(x(r, c)))
        throw InvalidParameterError(std::string(what) + "[" + std::to_string(r) +
                                    "][" + std::to_string(c) + "] is not finite");
}

void CheckRawShape(const RawGmmParams &raw) {
  const std::size_t m = raw.alpha.size();
  if (m == 0) throw ShapeError("raw GMM has no components");
  if (raw.m.rows() != m || raw.v.rows() != m)
    throw ShapeError("raw GMM: alpha/m/v component counts disagree");
  if (raw.m.cols() == 0 || raw.v.cols() != raw.m.cols())
    throw ShapeError("raw GMM: m/v dimensions disagree");
}

void CheckEmbedding(std::size_t dim, std::span<const double> e) {
  if (e.size() != dim)
    throw ShapeError("embedding has dimension " + std::to_string(e.size()) +
                     ", mixture has " + std::to_string(dim));
}

// log N(e; mean, diag(var)) for one component.
double GaussianLogDensity(std::span<const double> mean,
                          std::span<const double> var,
                          std::span<const double> e) {
  double acc = 0.0;
  for (std::size_t d = 0; d < e.size(); ++d) {
    const double diff = e[d] - mean[d];
    acc += kLog2Pi + std::log(var[d]) + diff * diff / var[d];
  }
  return -0.5 * acc;
}

}  // namespace

double LogSumExp(std::span<const double> x) {
  double max = -std::numeric_limits<double>::infinity();
  for (double v : x) max = std::max(max, v);
  if (max == -std::numeric_limits<double>::infinity()) return max;
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - max);
  return max + std::log(sum);
}

void ValidateGmm(const DiagGmm &gmm) {
  const std::size_t m = gmm.weights.size();
  if (m == 0) throw ShapeError("GMM has no components");
  if (gmm.means.rows() != m || gmm.variances.rows() != m ||
      gmm.means.cols() == 0 || gmm.variances.cols() != gmm.means.cols())
    throw ShapeError("GMM: weight/mean/variance shapes disagree");
  double total = 0.0;
  for (double w : gmm.weights) {
    if (!(w >= 0.0 && w <= 1.0))
      throw InvalidParameterError("GMM weight outside [0, 1]");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InvalidParameterError("GMM weights do not sum to 1");
  CheckFinite(gmm.means, "means");
  for (double v : gmm.variances.data())
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidParameterError("GMM variance must be positive and finite");
}

DiagGmm Activate(const RawGmmParams &raw, const LogVarClamp &clamp) {
  CheckRawShape(raw);
  CheckFinite(raw.alpha, "alpha");
  CheckFinite(raw.m, "m");
  CheckFinite(raw.v, "v");

  DiagGmm gmm;
  const std::size_t num = raw.alpha.size();
  gmm.weights.resize(num);
  const double top = *std::max_element(raw.alpha.begin(), raw.alpha.end());
  double total = 0.0;
  for (std::size_t i = 0; i < num; ++i) {
    gmm.weights[i] = std::exp(raw.alpha[i] - top);
    total += gmm.weights[i];
  }
  for (auto &w : gmm.weights) w /= total;

  gmm.means = raw.m;
  gmm.variances = Matrix(raw.v.rows(), raw.v.cols());
  for (std::size_t i = 0; i < raw.v.data().size(); ++i)
    gmm.variances.data()[i] =
        std::exp(std::clamp(raw.v.data()[i], clamp.min, clamp.max));
  return gmm;
}

Vector ComponentLogJoint(const DiagGmm &gmm, std::span<const double> e) {
  ValidateGmm(gmm);
  CheckEmbedding(gmm.Dim(), e);
  Vector out(gmm.NumComponents());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = gmm.weights[i] > 0.0
                 ? std::log(gmm.weights[i]) +
                       GaussianLogDensity(gmm.means.row(i), gmm.variances.row(i), e)
                 : -std::numeric_limits<double>::infinity();
  }
  return out;
}

double LogDensity(const DiagGmm &gmm, std::span<const double> e) {
  return LogSumExp(ComponentLogJoint(gmm, e));
}

GmmSample Sample(const DiagGmm &gmm, RandomSource &rng) {
  ValidateGmm(gmm);
  GmmSample out;
  out.component = rng.Categorical(gmm.weights);
  out.value.resize(gmm.Dim());
  for (std::size_t d = 0; d < gmm.Dim(); ++d)
    out.value[d] = gmm.means(out.component, d) +
                   std::sqrt(gmm.variances(out.component, d)) * rng.Gaussian();
  return out;
}

Vector Posterior(const DiagGmm &gmm, std::span<const double> e) {
  Vector joint = ComponentLogJoint(gmm, e);
  const double norm = LogSumExp(joint);
  if (!std::isfinite(norm)) {
    // Every component underflowed in log space as well; only possible when
    // e is infinitely far away. Fall back to the prior.
    return gmm.weights;
  }
  for (auto &x : joint) x = std::exp(x - norm);
  return joint;
}

std::size_t MapComponent(const DiagGmm &gmm, std::span<const double> e) {
  const Vector joint = ComponentLogJoint(gmm, e);
  std::size_t best = 0;
  for (std::size_t i = 1; i < joint.size(); ++i)
    if (joint[i] > joint[best]) best = i;
  return best;
}

NllResult NllAndGrad(const RawGmmParams &raw, std::span<const double> e,
                     const LogVarClamp &clamp) {
  CheckRawShape(raw);
  const std::size_t num = raw.NumComponents();
  const std::size_t dim = raw.Dim();
  CheckEmbedding(dim, e);

  // log-softmax of the logits
  const double alpha_lse = LogSumExp(raw.alpha);
  Vector log_joint(num);
  Matrix var(num, dim);
  for (std::size_t i = 0; i < num; ++i) {
    for (std::size_t d = 0; d < dim; ++d)
      var(i, d) = std::exp(std::clamp(raw.v(i, d), clamp.min, clamp.max));
    log_joint[i] = raw.alpha[i] - alpha_lse +
                   GaussianLogDensity(raw.m.row(i), var.row(i), e);
  }
  const double log_p = LogSumExp(log_joint);

  NllResult out;
  out.loss = -log_p;
  if (!std::isfinite(out.loss)) {
    for (std::size_t i = 0; i < num; ++i)
      if (!std::isfinite(log_joint[i]))
        throw NumericalError("NLL: non-finite log-likelihood at component " +
                             std::to_string(i));
    throw NumericalError("NLL: non-finite log-likelihood");
  }

  out.grad = RawGmmParams(num, dim);
  for (std::size_t i = 0; i < num; ++i) {
    const double gamma = std::exp(log_joint[i] - log_p);
    const double weight = std::exp(raw.alpha[i] - alpha_lse);
    out.grad.alpha[i] = weight - gamma;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = raw.m(i, d) - e[d];
      out.grad.m(i, d) = gamma * diff / var(i, d);
      const bool clamped = raw.v(i, d) < clamp.min || raw.v(i, d) > clamp.max;
      out.grad.v(i, d) =
          clamped ? 0.0 : 0.5 * gamma * (1.0 - diff * diff / var(i, d));
      if (!std::isfinite(out.grad.m(i, d)) || !std::isfinite(out.grad.v(i, d)))
        throw NumericalError("NLL gradient: non-finite value at component " +
                             std::to_string(i) + ", dim " + std::to_string(d));
    }
  }
  return out;
}

}  // namespace prosody
