// src/metrics.cc

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

#include "prosody/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "prosody/cloning.h"
#include "prosody/error.h"
#include "prosody/parallel.h"
#include "prosody/rng.h"

namespace prosody {
namespace {

constexpr std::uint64_t kDiversityStream = 4;
constexpr std::uint64_t kRandomIndexStream = 5;
constexpr std::uint64_t kSampledStream = 6;

SpeakerRef AsModelSpeaker(const PredictorConfig &config, std::size_t s) {
  return config.MultiSpeaker() ? SpeakerRef(s) : std::nullopt;
}

// Running mean of per-(utterance, dimension) correlations.
struct CorrelationMean {
  double sum = 0.0;
  std::size_t n = 0;

  void Add(const std::vector<Embedding> &a, const std::vector<Embedding> &b) {
    const std::size_t dim = a.empty() ? 0 : a.front().size();
    std::vector<double> x(a.size()), y(a.size());
    for (std::size_t d = 0; d < dim; ++d) {
      for (std::size_t k = 0; k < a.size(); ++k) {
        x[k] = a[k][d];
        y[k] = b[k][d];
      }
      const double r = Pearson(x, y);
      if (std::isnan(r)) continue;
      sum += r;
      ++n;
    }
  }
  double Value() const { return n ? sum / static_cast<double>(n) : 0.0; }
};

double AffinitySum(const Oracle &oracle, const PhoneSeq &phones,
                   const std::vector<Embedding> &e, std::size_t src, std::size_t tgt) {
  double total = 0.0;
  for (std::size_t k = 0; k < phones.size(); ++k)
    total += LogDensity(oracle.SpeakerGmm(phones[k], tgt), e[k]) -
             LogDensity(oracle.SpeakerGmm(phones[k], src), e[k]);
  return total;
}

}  // namespace

LlCurves ComputeLlCurves(std::vector<LlRun> runs) {
  if (runs.empty()) throw ConfigError("ll_curves: no runs");
  for (const LlRun &r : runs) {
    if (r.history.empty()) throw ConfigError("ll_curves: run without history");
    if (r.corpus_fingerprint != runs.front().corpus_fingerprint)
      throw ConfigError("ll_curves: runs were trained on different corpora (" +
                        runs.front().corpus_fingerprint + " vs " + r.corpus_fingerprint + ")");
  }
  std::stable_sort(runs.begin(), runs.end(), [](const LlRun &a, const LlRun &b) {
    return a.num_components < b.num_components;
  });
  LlCurves out;
  out.csv = "num_components,epoch,train_ll,test_ll\n";
  for (const LlRun &r : runs) {
    const EpochRecord &last = r.history.back();
    out.rows.push_back({r.num_components, -last.train_nll, -last.test_nll,
                        std::abs(last.train_nll - last.test_nll)});
    for (const EpochRecord &e : r.history)
      out.csv += std::to_string(r.num_components) + "," + std::to_string(e.epoch) + "," +
                 FormatDouble(-e.train_nll) + "," + FormatDouble(-e.test_nll) + "\n";
  }
  out.test_ll_increases = out.rows.size() > 1;
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    out.test_ll_increases = out.test_ll_increases && out.rows[i].test_ll > out.rows[i - 1].test_ll;
  const auto single = std::find_if(out.rows.begin(), out.rows.end(),
                                   [](const LlCurveRow &r) { return r.num_components == 1; });
  if (single != out.rows.end() && out.rows.size() > 1) {
    out.gap_shrinks = true;
    for (const LlCurveRow &r : out.rows)
      if (r.num_components > 1) out.gap_shrinks = out.gap_shrinks && r.gap < single->gap;
  }
  return out;
}

std::vector<double> ActiveComponentsFromWeights(std::span<const Vector> weights,
                                                std::span<const double> thresholds) {
  std::vector<double> out(thresholds.size(), 0.0);
  if (weights.empty()) return out;
  for (const Vector &w : weights)
    for (std::size_t t = 0; t < thresholds.size(); ++t)
      out[t] += static_cast<double>(
          std::count_if(w.begin(), w.end(), [&](double x) { return x > thresholds[t]; }));
  for (double &x : out) x /= static_cast<double>(weights.size());
  return out;
}

std::vector<double> ActiveComponents(const PredictorParams &params, const Corpus &corpus,
                                     std::span<const double> thresholds) {
  std::vector<Vector> weights;
  for (const Utterance &u : corpus) {
    for (const DiagGmm &g : PredictGmmSequence(u.phones, ModelSpeaker(params.config(), u),
                                               u.embeddings, params))
      weights.push_back(g.weights);
  }
  return ActiveComponentsFromWeights(weights, thresholds);
}

double Diversity(const PredictorParams &params, std::span<const std::size_t> phones,
                 SpeakerRef speaker, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 2) throw ConfigError("diversity: need at least 2 samples");
  if (phones.empty()) throw ShapeError("diversity: empty phone sequence");
  RandomSource rng(seed);
  std::vector<std::vector<Embedding>> samples;
  for (std::size_t s = 0; s < n_samples; ++s)
    samples.push_back(SampleSequence(phones, speaker, params, rng).embeddings);
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < n_samples; ++a) {
    for (std::size_t b = a + 1; b < n_samples; ++b) {
      double per_phone = 0.0;
      for (std::size_t k = 0; k < phones.size(); ++k) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < samples[a][k].size(); ++d) {
          const double diff = samples[a][k][d] - samples[b][k][d];
          d2 += diff * diff;
        }
        per_phone += std::sqrt(d2);
      }
      total += per_phone / static_cast<double>(phones.size());
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

double CorpusDiversity(const PredictorParams &params, const Corpus &corpus,
                       std::size_t n_samples, std::uint64_t seed, std::size_t threads) {
  if (corpus.empty()) throw ConfigError("diversity: empty corpus");
  std::vector<double> values(corpus.size());
  ParallelFor(corpus.size(), threads, [&](std::size_t i) {
    const std::uint64_t s =
        RandomSource::Derive(seed, kDiversityStream, i).engine()();
    values[i] = Diversity(params, corpus[i].phones, ModelSpeaker(params.config(), corpus[i]),
                          n_samples, s);
  });
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double Pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw ShapeError("pearson: lengths differ");
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

CloningReport ComputeCloningReport(const Oracle &oracle, const Corpus &align,
                                   const Corpus &eval, const PredictorParams &params,
                                   std::size_t src_speaker, std::size_t tgt_speaker,
                                   std::uint64_t seed) {
  const PredictorConfig &config = params.config();
  const std::size_t m = config.num_components, truth = oracle.spec.components;
  if (src_speaker >= oracle.spec.speakers || tgt_speaker >= oracle.spec.speakers)
    throw IndexError("cloning report: speaker out of range for the oracle");
  if (config.vocab != oracle.spec.vocab || config.dim != oracle.spec.dim)
    throw ShapeError("cloning report: model and oracle disagree on vocab or dim");
  auto require_labels = [](const Utterance &u, const char *split) {
    if (u.latent_components.size() != u.phones.size())
      throw EvalError(std::string("cloning report: ") + split +
                      " utterance lacks latent component labels");
  };

  // counts[phone][model component][latent label]
  std::vector<std::vector<std::vector<std::size_t>>> counts(
      config.vocab, std::vector<std::vector<std::size_t>>(m, std::vector<std::size_t>(truth, 0)));
  for (const Utterance &u : align) {
    require_labels(u, "alignment");
    const ComponentIndexSeq idx =
        Identify(u.phones, ModelSpeaker(config, u), u.embeddings, params);
    for (std::size_t k = 0; k < idx.size(); ++k)
      ++counts[u.phones[k]][idx[k]][u.latent_components[k]];
  }
  std::vector<std::vector<std::size_t>> label(config.vocab, std::vector<std::size_t>(m, 0));
  std::vector<std::size_t> majority(config.vocab, 0);
  for (std::size_t p = 0; p < config.vocab; ++p) {
    std::vector<std::size_t> totals(truth, 0);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t l = 0; l < truth; ++l) totals[l] += counts[p][j][l];
    majority[p] = static_cast<std::size_t>(std::max_element(totals.begin(), totals.end()) -
                                           totals.begin());
  }
  for (std::size_t p = 0; p < config.vocab; ++p) {
    for (std::size_t j = 0; j < m; ++j) {
      const auto &c = counts[p][j];
      const auto best = std::max_element(c.begin(), c.end());
      label[p][j] = *best > 0 ? static_cast<std::size_t>(best - c.begin())
                              : std::min(j, truth - 1);
    }
  }

  const SpeakerRef src = AsModelSpeaker(config, src_speaker);
  const SpeakerRef tgt = AsModelSpeaker(config, tgt_speaker);
  CloningReport r;
  std::size_t correct = 0, random_correct = 0, majority_correct = 0;
  double affinity = 0.0, sampled_affinity = 0.0;
  CorrelationMean cloned_corr, random_corr, sampled_corr;
  std::size_t index = 0;
  for (const Utterance &u : eval) {
    if (u.speaker != src_speaker) continue;
    require_labels(u, "evaluation");
    const std::size_t utt = index++;
    const CloneResult cloned = ClonePipeline(u.phones, src, u.embeddings, tgt, params);
    std::vector<Embedding> target_means;
    for (std::size_t k = 0; k < u.phones.size(); ++k)
      target_means.push_back(oracle.SpeakerMean(u.phones[k], tgt_speaker, u.latent_components[k]));

    RandomSource rng = RandomSource::Derive(seed, kRandomIndexStream, utt);
    ComponentIndexSeq random(u.phones.size());
    for (std::size_t k = 0; k < u.phones.size(); ++k) {
      random[k] = rng.UniformIndex(m);
      correct += label[u.phones[k]][cloned.indices[k]] == u.latent_components[k];
      random_correct += label[u.phones[k]][random[k]] == u.latent_components[k];
      majority_correct += majority[u.phones[k]] == u.latent_components[k];
    }
    const std::vector<Embedding> random_clone = Clone(u.phones, tgt, random, params);
    RandomSource sample_rng = RandomSource::Derive(seed, kSampledStream, utt);
    const std::vector<Embedding> sampled =
        SampleSequence(u.phones, tgt, params, sample_rng).embeddings;

    cloned_corr.Add(cloned.embeddings, target_means);
    random_corr.Add(random_clone, target_means);
    sampled_corr.Add(sampled, target_means);
    affinity += AffinitySum(oracle, u.phones, cloned.embeddings, src_speaker, tgt_speaker);
    sampled_affinity += AffinitySum(oracle, u.phones, sampled, src_speaker, tgt_speaker);
    ++r.utterances;
    r.phones += u.phones.size();
  }
  if (r.phones == 0)
    throw EvalError("cloning report: no evaluation utterances from speaker " +
                    std::to_string(src_speaker));
  const double n = static_cast<double>(r.phones);
  r.component_accuracy = static_cast<double>(correct) / n;
  r.random_accuracy = static_cast<double>(random_correct) / n;
  r.majority_accuracy = static_cast<double>(majority_correct) / n;
  r.mean_correlation = cloned_corr.Value();
  r.random_correlation = random_corr.Value();
  r.sampled_correlation = sampled_corr.Value();
  r.affinity_margin = affinity / n;
  r.sampled_affinity_margin = sampled_affinity / n;
  return r;
}

Json CloningReportToJson(const CloningReport &r) {
  return Json{{"utterances", r.utterances},
              {"phones", r.phones},
              {"component_accuracy", r.component_accuracy},
              {"random_accuracy", r.random_accuracy},
              {"majority_accuracy", r.majority_accuracy},
              {"mean_correlation", r.mean_correlation},
              {"random_correlation", r.random_correlation},
              {"sampled_correlation", r.sampled_correlation},
              {"affinity_margin", r.affinity_margin},
              {"sampled_affinity_margin", r.sampled_affinity_margin}};
}

}  // namespace prosody
