// src/predictor.cc

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

#include "prosody/predictor.h"

#include <cmath>
#include <string>

#include "prosody/error.h"

namespace prosody {

namespace {

// y = W x + b, W is [rows x cols].
Vector Affine(const ParamArray &w, const ParamArray &b,
              std::span<const double> x) {
  const std::size_t rows = w.rows(), cols = w.cols();
  Vector y(b.values);
  for (std::size_t r = 0; r < rows; ++r) {
    const double *wr = w.values.data() + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] += acc;
  }
  return y;
}

// gW += d x^T, gb += d, and returns W^T d.
Vector AffineBackward(const ParamArray &w, std::span<const double> x,
                      std::span<const double> d, ParamArray &gw,
                      ParamArray &gb) {
  const std::size_t rows = w.rows(), cols = w.cols();
  Vector dx(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double dr = d[r];
    if (dr == 0.0) continue;
    gb.values[r] += dr;
    double *gwr = gw.values.data() + r * cols;
    const double *wr = w.values.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      gwr[c] += dr * x[c];
      dx[c] += wr[c] * dr;
    }
  }
  return dx;
}

void CheckPhones(std::span<const std::size_t> phones,
                 const PredictorConfig &config) {
  if (phones.empty()) throw ShapeError("empty phone sequence");
  for (std::size_t k = 0; k < phones.size(); ++k)
    if (phones[k] >= config.vocab)
      throw IndexError("phone id " + std::to_string(phones[k]) + " at position " +
                       std::to_string(k) + " exceeds inventory size " +
                       std::to_string(config.vocab));
}

void CheckSpeaker(SpeakerRef speaker, const PredictorConfig &config) {
  if (!config.MultiSpeaker()) {
    if (speaker) throw ConfigError("single-speaker model given a speaker id");
    return;
  }
  if (!speaker) throw ConfigError("multi-speaker model requires a speaker id");
  if (*speaker >= config.speakers)
    throw IndexError("speaker id " + std::to_string(*speaker) +
                     " exceeds speaker count " + std::to_string(config.speakers));
}

void CheckEmbeddings(std::span<const Embedding> embeddings, std::size_t k,
                     std::size_t dim) {
  if (embeddings.size() != k)
    throw ShapeError("expected " + std::to_string(k) + " embeddings, got " +
                     std::to_string(embeddings.size()));
  for (const auto &e : embeddings)
    if (e.size() != dim)
      throw ShapeError("embedding dimension " + std::to_string(e.size()) +
                       " != model dimension " + std::to_string(dim));
}

// Everything the backward pass needs from one forward step.
struct StepTrace {
  Vector z;     // cell input [h; e_prev; r_prev]
  Vector r;     // cell output
  RawGmmParams si_raw;
  // multi-speaker only
  Vector sd_out;  // [alpha | A | b | C | d]
  Matrix u;       // tanh(A m + b)
  Matrix q;       // tanh(C v + d)
  RawGmmParams sd_raw;
};

StepTrace ForwardStep(std::span<const double> h_si,
                      std::optional<std::span<const double>> h_sd,
                      std::span<const double> e_prev,
                      std::span<const double> r_prev,
                      const PredictorParams &params) {
  const PredictorConfig &cfg = params.config();
  const auto &s = params.slots();
  const ParamSet &p = params.arrays();
  const std::size_t M = cfg.num_components, D = cfg.dim, H = cfg.hidden;
  const bool multi = cfg.MultiSpeaker();
  if (h_si.size() != H || (h_sd && h_sd->size() != H))
    throw ShapeError("context vector size does not match hidden size");
  if (e_prev.size() != D) throw ShapeError("previous embedding has wrong size");
  if (r_prev.size() != cfg.recurrent) throw ShapeError("recurrent state has wrong size");
  if (multi != h_sd.has_value())
    throw ConfigError(multi ? "multi-speaker step needs a speaker context"
                            : "single-speaker step given a speaker context");

  StepTrace t;
  const std::span<const double> h_cell = multi ? *h_sd : h_si;
  t.z.reserve(H + D + cfg.recurrent);
  t.z.insert(t.z.end(), h_cell.begin(), h_cell.end());
  t.z.insert(t.z.end(), e_prev.begin(), e_prev.end());
  t.z.insert(t.z.end(), r_prev.begin(), r_prev.end());
  t.r = Affine(p[s.recur_w], p[s.recur_b], t.z);
  for (auto &x : t.r) x = std::tanh(x);

  t.si_raw = RawGmmParams(M, D);
  if (!multi) {
    const Vector out = Affine(p[s.si_head_w], p[s.si_head_b], t.r);
    for (std::size_t i = 0; i < M; ++i) t.si_raw.alpha[i] = out[i];
    for (std::size_t j = 0; j < M * D; ++j) {
      t.si_raw.m.data()[j] = out[M + j];
      t.si_raw.v.data()[j] = out[M + M * D + j];
    }
    return t;
  }

  const Vector si = Affine(p[s.si_head_w], p[s.si_head_b], h_si);
  for (std::size_t j = 0; j < M * D; ++j) {
    t.si_raw.m.data()[j] = si[j];
    t.si_raw.v.data()[j] = si[M * D + j];
  }
  t.sd_out = Affine(p[s.sd_head_w], p[s.sd_head_b], t.r);
  const double *scale_m = t.sd_out.data() + M;
  const double *shift_m = scale_m + D;
  const double *scale_v = shift_m + D;
  const double *shift_v = scale_v + D;

  t.u = Matrix(M, D);
  t.q = Matrix(M, D);
  t.sd_raw = RawGmmParams(M, D);
  for (std::size_t i = 0; i < M; ++i) {
    t.sd_raw.alpha[i] = t.sd_out[i];
    for (std::size_t d = 0; d < D; ++d) {
      t.u(i, d) = std::tanh(scale_m[d] * t.si_raw.m(i, d) + shift_m[d]);
      t.q(i, d) = std::tanh(scale_v[d] * t.si_raw.v(i, d) + shift_v[d]);
    }
    const Vector ms = Affine(p[s.linear_m_w], p[s.linear_m_b], t.u.row(i));
    const Vector vs = Affine(p[s.linear_v_w], p[s.linear_v_b], t.q.row(i));
    for (std::size_t d = 0; d < D; ++d) {
      t.sd_raw.m(i, d) = ms[d];
      t.sd_raw.v(i, d) = vs[d];
    }
  }
  return t;
}

// Backward through the heads and transforms of one position. Returns
// dL/dr contributed by this position's output. Adds the phone-context
// gradient of the speaker-independent head into dh_si.
Vector HeadBackward(const StepTrace &t, const RawGmmParams &g,
                    std::span<const double> h_si, const PredictorParams &params,
                    ParamSet &grads, Vector &dh_si) {
  const PredictorConfig &cfg = params.config();
  const auto &s = params.slots();
  const ParamSet &p = params.arrays();
  const std::size_t M = cfg.num_components, D = cfg.dim;

  if (!cfg.MultiSpeaker()) {
    Vector d_out(M + 2 * M * D);
    for (std::size_t i = 0; i < M; ++i) d_out[i] = g.alpha[i];
    for (std::size_t j = 0; j < M * D; ++j) {
      d_out[M + j] = g.m.data()[j];
      d_out[M + M * D + j] = g.v.data()[j];
    }
    return AffineBackward(p[s.si_head_w], t.r, d_out, grads[s.si_head_w],
                          grads[s.si_head_b]);
  }

  const double *scale_m = t.sd_out.data() + M;
  const double *scale_v = scale_m + 2 * D;
  Vector d_sd(M + 4 * D, 0.0);
  double *d_scale_m = d_sd.data() + M;
  double *d_shift_m = d_scale_m + D;
  double *d_scale_v = d_shift_m + D;
  double *d_shift_v = d_scale_v + D;
  Vector d_si(2 * M * D, 0.0);

  for (std::size_t i = 0; i < M; ++i) {
    d_sd[i] = g.alpha[i];
    const Vector du = AffineBackward(p[s.linear_m_w], t.u.row(i), g.m.row(i),
                                     grads[s.linear_m_w], grads[s.linear_m_b]);
    const Vector dq = AffineBackward(p[s.linear_v_w], t.q.row(i), g.v.row(i),
                                     grads[s.linear_v_w], grads[s.linear_v_b]);
    for (std::size_t d = 0; d < D; ++d) {
      const double pre_u = du[d] * (1.0 - t.u(i, d) * t.u(i, d));
      d_scale_m[d] += pre_u * t.si_raw.m(i, d);
      d_shift_m[d] += pre_u;
      d_si[i * D + d] = pre_u * scale_m[d];

      const double pre_q = dq[d] * (1.0 - t.q(i, d) * t.q(i, d));
      d_scale_v[d] += pre_q * t.si_raw.v(i, d);
      d_shift_v[d] += pre_q;
      d_si[M * D + i * D + d] = pre_q * scale_v[d];
    }
  }
  const Vector dh = AffineBackward(p[s.si_head_w], h_si, d_si,
                                   grads[s.si_head_w], grads[s.si_head_b]);
  for (std::size_t j = 0; j < dh.size(); ++j) dh_si[j] += dh[j];
  return AffineBackward(p[s.sd_head_w], t.r, d_sd, grads[s.sd_head_w],
                        grads[s.sd_head_b]);
}

EncodedPhones EncodeForModel(std::span<const std::size_t> phones,
                             SpeakerRef speaker, const PredictorParams &params) {
  CheckSpeaker(speaker, params.config());
  return Encode(phones, speaker, params);
}

const RawGmmParams &ActiveRaw(const StepTrace &t, bool multi) {
  return multi ? t.sd_raw : t.si_raw;
}

}  // namespace

std::string CellTypeName(CellType cell) {
  switch (cell) {
    case CellType::kElman:
      return "elman";
  }
  return "unknown";
}

CellType ParseCellType(const std::string &name) {
  if (name == "elman") return CellType::kElman;
  throw ConfigError("unsupported recurrent cell type '" + name + "'");
}

void PredictorConfig::Validate() const {
  if (num_components == 0) throw ConfigError("num_components must be >= 1");
  if (dim == 0) throw ConfigError("dim must be >= 1");
  if (hidden == 0) throw ConfigError("hidden size must be >= 1");
  if (recurrent == 0) throw ConfigError("recurrent size must be >= 1");
  if (vocab == 0) throw ConfigError("vocab size must be >= 1");
  if (!(clamp.min < clamp.max) || !std::isfinite(clamp.min) ||
      !std::isfinite(clamp.max))
    throw ConfigError("log-variance clamp must satisfy min < max");
  if (!norm.empty()) {
    if (norm.shift.size() != dim || norm.scale.size() != dim)
      throw ConfigError("embedding normalization must have one entry per dimension");
    for (std::size_t d = 0; d < dim; ++d)
      if (!std::isfinite(norm.shift[d]) || !(norm.scale[d] > 0.0) ||
          !std::isfinite(norm.scale[d]))
        throw ConfigError("embedding normalization needs finite shifts and positive scales");
  } else if (!norm.scale.empty()) {
    throw ConfigError("embedding normalization has scales but no shifts");
  }
}

Embedding NormalizeEmbedding(const EmbeddingNorm &norm, std::span<const double> e) {
  Embedding z(e.begin(), e.end());
  if (norm.empty()) return z;
  for (std::size_t d = 0; d < z.size(); ++d) z[d] = (z[d] - norm.shift[d]) / norm.scale[d];
  return z;
}

DiagGmm DenormalizeGmm(const EmbeddingNorm &norm, DiagGmm gmm) {
  if (norm.empty()) return gmm;
  for (std::size_t j = 0; j < gmm.NumComponents(); ++j) {
    for (std::size_t d = 0; d < gmm.Dim(); ++d) {
      gmm.means(j, d) = norm.scale[d] * gmm.means(j, d) + norm.shift[d];
      gmm.variances(j, d) *= norm.scale[d] * norm.scale[d];
    }
  }
  return gmm;
}

double NormLogJacobian(const EmbeddingNorm &norm) {
  double total = 0.0;
  for (double s : norm.scale) total += std::log(s);
  return total;
}

PredictorParams::PredictorParams(const PredictorConfig &config) : config_(config) {
  config_.Validate();
  const std::size_t M = config.num_components, D = config.dim,
                    H = config.hidden, R = config.recurrent;
  slots_.phone_table = arrays_.Add("phone_table", {config.vocab, H});
  if (config.MultiSpeaker())
    slots_.speaker_table = arrays_.Add("speaker_table", {config.speakers, H});
  slots_.start_embedding = arrays_.Add("start_embedding", {D});
  slots_.recur_w = arrays_.Add("recur_w", {R, H + D + R});
  slots_.recur_b = arrays_.Add("recur_b", {R});
  if (!config.MultiSpeaker()) {
    slots_.si_head_w = arrays_.Add("si_head_w", {M + 2 * M * D, R});
    slots_.si_head_b = arrays_.Add("si_head_b", {M + 2 * M * D});
    return;
  }
  slots_.si_head_w = arrays_.Add("si_head_w", {2 * M * D, H});
  slots_.si_head_b = arrays_.Add("si_head_b", {2 * M * D});
  slots_.sd_head_w = arrays_.Add("sd_head_w", {M + 4 * D, R});
  slots_.sd_head_b = arrays_.Add("sd_head_b", {M + 4 * D});
  slots_.linear_m_w = arrays_.Add("global_linear_m_w", {D, D});
  slots_.linear_m_b = arrays_.Add("global_linear_m_b", {D});
  slots_.linear_v_w = arrays_.Add("global_linear_v_w", {D, D});
  slots_.linear_v_b = arrays_.Add("global_linear_v_b", {D});
}

PredictorParams PredictorParams::Initialize(const PredictorConfig &config,
                                            std::uint64_t seed) {
  PredictorParams params(config);
  RandomSource rng(seed);
  for (auto &a : params.arrays_)
    for (auto &v : a.values) v = rng.Uniform(-0.1, 0.1);
  // Log-variance outputs of the speaker-independent head start at exp(0) = 1.
  const std::size_t M = config.num_components, D = config.dim;
  auto &bias = params.arrays_[params.slots_.si_head_b].values;
  const std::size_t v_offset = config.MultiSpeaker() ? M * D : M + M * D;
  for (std::size_t j = 0; j < M * D; ++j) bias[v_offset + j] = 0.0;
  if (!config.MultiSpeaker()) return params;
  // Speaker transforms start near pass-through: A = C = 1 plus noise and
  // Lm = Lv = I. Increasing maps give all speakers one component order.
  auto &sd_bias = params.arrays_[params.slots_.sd_head_b].values;
  for (std::size_t d = 0; d < D; ++d) {
    sd_bias[M + d] = 1.0;
    sd_bias[M + 2 * D + d] = 1.0;
  }
  for (std::size_t slot : {params.slots_.linear_m_w, params.slots_.linear_v_w}) {
    auto &w = params.arrays_[slot];
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t j = 0; j < D; ++j) w.at(i, j) = i == j ? 1.0 : 0.0;
  }
  // Distinct starting means; otherwise components start on top of each
  // other and some never receive responsibility.
  for (std::size_t j = 0; j < M * D; ++j) bias[j] = rng.Uniform(-1.0, 1.0);
  return params;
}

void PredictorParams::SetArrays(ParamSet arrays) {
  if (!arrays_.SameLayout(arrays))
    throw ShapeError("parameter arrays do not match the model layout");
  arrays_ = std::move(arrays);
}

EncodedPhones Encode(std::span<const std::size_t> phones, SpeakerRef speaker,
                     const PredictorParams &params) {
  const PredictorConfig &cfg = params.config();
  CheckPhones(phones, cfg);
  if (speaker && !cfg.MultiSpeaker())
    throw ConfigError("single-speaker model given a speaker id");
  if (speaker && *speaker >= cfg.speakers)
    throw IndexError("speaker id " + std::to_string(*speaker) +
                     " exceeds speaker count " + std::to_string(cfg.speakers));

  const auto &s = params.slots();
  const ParamArray &table = params.arrays()[s.phone_table];
  EncodedPhones out;
  out.h_si.reserve(phones.size());
  for (std::size_t id : phones) {
    const auto begin = table.values.begin() + id * cfg.hidden;
    out.h_si.emplace_back(begin, begin + cfg.hidden);
  }
  if (speaker) {
    const ParamArray &spk = params.arrays()[s.speaker_table];
    out.h_sd = out.h_si;
    for (auto &h : *out.h_sd)
      for (std::size_t j = 0; j < cfg.hidden; ++j)
        h[j] += spk.values[*speaker * cfg.hidden + j];
  }
  return out;
}

RecurrentState InitialState(const PredictorParams &params) {
  return RecurrentState{Vector(params.config().recurrent, 0.0)};
}

Embedding StartEmbedding(const PredictorParams &params) {
  return params.arrays()[params.slots().start_embedding].values;
}

StepOutput Step(std::span<const double> h_si,
                std::optional<std::span<const double>> h_sd,
                std::span<const double> e_prev, const RecurrentState &state,
                const PredictorParams &params) {
  StepTrace t = ForwardStep(h_si, h_sd, e_prev, state.r, params);
  StepOutput out;
  out.si_raw = std::move(t.si_raw);
  if (params.config().MultiSpeaker()) out.sd_raw = std::move(t.sd_raw);
  out.state.r = std::move(t.r);
  return out;
}

SequenceLossResult SequenceNll(std::span<const std::size_t> phones,
                               SpeakerRef speaker,
                               std::span<const Embedding> embeddings,
                               const PredictorParams &params) {
  const PredictorConfig &cfg = params.config();
  CheckSpeaker(speaker, cfg);
  const EncodedPhones enc = Encode(phones, speaker, params);
  const std::size_t K = phones.size();
  CheckEmbeddings(embeddings, K, cfg.dim);
  const bool multi = cfg.MultiSpeaker();
  const auto &s = params.slots();

  std::vector<Embedding> z;
  z.reserve(K);
  for (const Embedding &e : embeddings) z.push_back(NormalizeEmbedding(cfg.norm, e));

  std::vector<StepTrace> traces;
  std::vector<RawGmmParams> output_grads;
  traces.reserve(K);
  output_grads.reserve(K);
  SequenceLossResult result;
  Vector r(cfg.recurrent, 0.0);
  const Embedding start = StartEmbedding(params);
  for (std::size_t k = 0; k < K; ++k) {
    const std::span<const double> e_prev = k == 0 ? start : z[k - 1];
    std::optional<std::span<const double>> h_sd;
    if (multi) h_sd = (*enc.h_sd)[k];
    traces.push_back(ForwardStep(enc.h_si[k], h_sd, e_prev, r, params));
    r = traces.back().r;
    NllResult nll = NllAndGrad(ActiveRaw(traces.back(), multi), z[k], cfg.clamp);
    result.loss += nll.loss;
    output_grads.push_back(std::move(nll.grad));
  }

  result.loss += static_cast<double>(K) * NormLogJacobian(cfg.norm);
  result.grads = params.arrays().ZerosLike();
  ParamSet &g = result.grads;
  const ParamArray &recur_w = params.arrays()[s.recur_w];
  const std::size_t H = cfg.hidden, D = cfg.dim, R = cfg.recurrent;
  Vector dr_next(R, 0.0);
  for (std::size_t k = K; k-- > 0;) {
    const StepTrace &t = traces[k];
    Vector dh_si(H, 0.0);
    Vector dr = HeadBackward(t, output_grads[k], enc.h_si[k], params, g, dh_si);
    for (std::size_t j = 0; j < R; ++j)
      dr[j] = (dr[j] + dr_next[j]) * (1.0 - t.r[j] * t.r[j]);
    const Vector dz = AffineBackward(recur_w, t.z, dr, g[s.recur_w], g[s.recur_b]);

    double *phone_row = g[s.phone_table].values.data() + phones[k] * H;
    for (std::size_t j = 0; j < H; ++j) phone_row[j] += dz[j] + dh_si[j];
    if (multi) {
      double *spk_row = g[s.speaker_table].values.data() + *speaker * H;
      for (std::size_t j = 0; j < H; ++j) spk_row[j] += dz[j];
    }
    // The history embeddings are data; only the learned start vector
    // receives a gradient.
    if (k == 0)
      for (std::size_t d = 0; d < D; ++d)
        g[s.start_embedding].values[d] += dz[H + d];
    for (std::size_t j = 0; j < R; ++j) dr_next[j] = dz[H + D + j];
  }
  return result;
}

double SequenceLoss(std::span<const std::size_t> phones, SpeakerRef speaker,
                    std::span<const Embedding> embeddings,
                    const PredictorParams &params) {
  const std::vector<DiagGmm> gmms =
      PredictGmmSequence(phones, speaker, embeddings, params);
  double loss = 0.0;
  for (std::size_t k = 0; k < gmms.size(); ++k) {
    const double lp = LogDensity(gmms[k], embeddings[k]);
    if (!std::isfinite(lp))
      throw NumericalError("non-finite log-density at position " + std::to_string(k));
    loss -= lp;
  }
  return loss;
}

std::vector<DiagGmm> PredictGmmSequence(std::span<const std::size_t> phones,
                                        SpeakerRef speaker,
                                        std::span<const Embedding> given,
                                        const PredictorParams &params) {
  CheckSpeaker(speaker, params.config());
  CheckPhones(phones, params.config());
  CheckEmbeddings(given, phones.size(), params.config().dim);
  Rollout rollout(params, phones, speaker);
  std::vector<DiagGmm> out;
  out.reserve(phones.size());
  for (std::size_t k = 0; k < phones.size(); ++k) {
    out.push_back(rollout.CurrentGmm());
    rollout.Advance(given[k]);
  }
  return out;
}

SampledSequence SampleSequence(std::span<const std::size_t> phones,
                               SpeakerRef speaker,
                               const PredictorParams &params, RandomSource &rng) {
  Rollout rollout(params, phones, speaker);
  SampledSequence out;
  while (!rollout.done()) {
    GmmSample s = Sample(rollout.CurrentGmm(), rng);
    rollout.Advance(s.value);
    out.embeddings.push_back(std::move(s.value));
    out.components.push_back(s.component);
  }
  return out;
}

Rollout::Rollout(const PredictorParams &params,
                 std::span<const std::size_t> phones, SpeakerRef speaker)
    : params_(params),
      encoded_(EncodeForModel(phones, speaker, params)),
      e_prev_(StartEmbedding(params)),
      state_(InitialState(params)) {}

const StepOutput &Rollout::Current() {
  if (done()) throw ShapeError("rollout has no positions left");
  if (!current_) {
    std::optional<std::span<const double>> h_sd;
    if (encoded_.h_sd) h_sd = (*encoded_.h_sd)[position_];
    current_ = Step(encoded_.h_si[position_], h_sd, e_prev_, state_, params_);
  }
  return *current_;
}

DiagGmm Rollout::CurrentGmm() {
  const StepOutput &out = Current();
  return DenormalizeGmm(params_.config().norm,
                        Activate(out.sd_raw ? *out.sd_raw : out.si_raw, params_.config().clamp));
}

void Rollout::Advance(std::span<const double> e) {
  if (e.size() != params_.config().dim)
    throw ShapeError("fed embedding has wrong dimension");
  Current();
  state_ = current_->state;
  e_prev_ = NormalizeEmbedding(params_.config().norm, e);
  current_.reset();
  ++position_;
}

}  // namespace prosody
