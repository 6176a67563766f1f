// src/synthdata.cc

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

#include "prosody/synthdata.h"

#include <cmath>
#include <sstream>

#include "prosody/error.h"
#include "prosody/parallel.h"
#include "prosody/rng.h"

namespace prosody {
namespace {

// Stream ids for RandomSource::Derive.
constexpr std::uint64_t kOracleStream = 0;
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kTestStream = 2;

constexpr int kPlacementRestarts = 200;
constexpr int kPlacementTries = 20000;

Matrix PlaceMeans(const OracleSpec &spec, RandomSource &rng) {
  const std::size_t m = spec.components, d = spec.dim;
  const double w = spec.BoxHalfWidth();
  const double sep2 = spec.separation * spec.separation;
  for (int restart = 0; restart < kPlacementRestarts; ++restart) {
    Matrix means(m, d);
    std::size_t placed = 0;
    for (int tries = 0; placed < m && tries < kPlacementTries; ++tries) {
      for (std::size_t c = 0; c < d; ++c) means(placed, c) = rng.Uniform(-w, w);
      bool ok = true;
      for (std::size_t j = 0; j < placed && ok; ++j) {
        double dist2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = means(placed, c) - means(j, c);
          dist2 += diff * diff;
        }
        ok = dist2 >= sep2;
      }
      if (ok) ++placed;
    }
    if (placed < m) continue;
    for (std::size_t c = 0; c < d; ++c) {
      double centroid = 0.0;
      for (std::size_t j = 0; j < m; ++j) centroid += means(j, c);
      centroid /= static_cast<double>(m);
      for (std::size_t j = 0; j < m; ++j) means(j, c) -= centroid;
    }
    return means;
  }
  throw ConfigError("cannot place " + std::to_string(m) + " means with separation " +
                    std::to_string(spec.separation) + " in a " + std::to_string(d) +
                    "-dimensional box of half-width " + std::to_string(w));
}

Utterance GenUtterance(const Oracle &oracle, RandomSource rng) {
  const OracleSpec &spec = oracle.spec;
  Utterance u;
  u.speaker = rng.UniformIndex(spec.speakers);
  const std::size_t len =
      spec.min_length + rng.UniformIndex(spec.max_length - spec.min_length + 1);
  const SpeakerMap &map = oracle.speaker_maps[u.speaker];
  for (std::size_t k = 0; k < len; ++k) {
    const std::size_t p = rng.UniformIndex(spec.vocab);
    const std::size_t j = rng.Categorical(oracle.weights[p]);
    Embedding e(spec.dim);
    for (std::size_t c = 0; c < spec.dim; ++c)
      e[c] = map.scale[c] * (oracle.means[p](j, c) + rng.Gaussian()) + map.shift[c];
    u.phones.push_back(p);
    u.embeddings.push_back(std::move(e));
    u.latent_components.push_back(j);
  }
  return u;
}

Corpus GenSplit(const Oracle &oracle, std::uint64_t stream, std::size_t n,
                std::size_t threads) {
  Corpus out(n);
  ParallelFor(n, threads, [&](std::size_t i) {
    out[i] = GenUtterance(oracle, RandomSource::Derive(oracle.spec.seed, stream, i));
  });
  return out;
}

Json MatrixToJson(const Matrix &m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r)
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

Matrix MatrixFromJson(const Json &j, std::size_t rows, std::size_t cols,
                      const std::string &what) {
  if (!j.is_array() || j.size() != rows)
    throw ShapeError(what + ": expected " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = j[r].get<std::vector<double>>();
    if (row.size() != cols)
      throw ShapeError(what + ": expected " + std::to_string(cols) + " columns");
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

Json SpeakerMapToJson(const SpeakerMap &map) {
  return Json{{"scale", map.scale}, {"shift", map.shift}};
}

SpeakerMap SpeakerMapFromJson(const Json &j) {
  RejectUnknownKeys(j, {"scale", "shift"}, "speaker_map");
  SpeakerMap map;
  ReadField(j, "scale", map.scale, "speaker_map");
  ReadField(j, "shift", map.shift, "speaker_map");
  return map;
}

}  // namespace

void OracleSpec::Validate() const {
  if (vocab == 0) throw ConfigError("oracle: vocab must be >= 1");
  if (speakers == 0) throw ConfigError("oracle: speakers must be >= 1");
  if (components == 0) throw ConfigError("oracle: components must be >= 1");
  if (dim == 0) throw ConfigError("oracle: dim must be >= 1");
  if (!(separation >= 0.0) || !std::isfinite(separation))
    throw ConfigError("oracle: separation must be finite and >= 0");
  if (min_length == 0 || max_length < min_length)
    throw ConfigError("oracle: need 1 <= min_length <= max_length");
  if (!(phone_center_spread >= 0.0) || !std::isfinite(phone_center_spread))
    throw ConfigError("oracle: phone_center_spread must be finite and >= 0");
  if (box_half_width && (!(*box_half_width >= 0.0) || !std::isfinite(*box_half_width)))
    throw ConfigError("oracle: box_half_width must be finite and >= 0");
  if (components > 1 &&
      separation > 2.0 * BoxHalfWidth() * std::sqrt(static_cast<double>(dim)))
    throw ConfigError("oracle: separation exceeds the diagonal of the placement box");
  if (speaker_maps) {
    if (speaker_maps->size() != speakers)
      throw ConfigError("oracle: need one speaker map per speaker");
    for (const SpeakerMap &map : *speaker_maps) {
      if (map.scale.size() != dim || map.shift.size() != dim)
        throw ConfigError("oracle: speaker map dimension differs from dim");
      for (double s : map.scale)
        if (!(s > 0.0) || !std::isfinite(s))
          throw ConfigError("oracle: speaker map scales must be positive");
      for (double s : map.shift)
        if (!std::isfinite(s)) throw ConfigError("oracle: speaker map shift not finite");
    }
  }
}

double OracleSpec::BoxHalfWidth() const {
  if (box_half_width) return *box_half_width;
  const double per_axis =
      std::ceil(std::pow(static_cast<double>(components), 1.0 / static_cast<double>(dim)) - 1e-9);
  return separation * (0.5 * per_axis + 1.0);
}

DiagGmm Oracle::SpeakerGmm(std::size_t phone, std::size_t speaker) const {
  if (phone >= means.size()) throw IndexError("oracle: phone out of range");
  if (speaker >= speaker_maps.size()) throw IndexError("oracle: speaker out of range");
  const SpeakerMap &map = speaker_maps[speaker];
  DiagGmm g;
  g.weights = weights[phone];
  g.means = Matrix(spec.components, spec.dim);
  g.variances = Matrix(spec.components, spec.dim);
  for (std::size_t j = 0; j < spec.components; ++j) {
    for (std::size_t c = 0; c < spec.dim; ++c) {
      g.means(j, c) = map.scale[c] * means[phone](j, c) + map.shift[c];
      g.variances(j, c) = map.scale[c] * map.scale[c];
    }
  }
  return g;
}

Embedding Oracle::SpeakerMean(std::size_t phone, std::size_t speaker,
                              std::size_t j) const {
  if (j >= spec.components) throw IndexError("oracle: component out of range");
  const DiagGmm g = SpeakerGmm(phone, speaker);
  return Embedding(g.means.row(j).begin(), g.means.row(j).end());
}

Oracle BuildOracle(const OracleSpec &spec) {
  spec.Validate();
  RandomSource rng = RandomSource::Derive(spec.seed, kOracleStream);
  Oracle o;
  o.spec = spec;
  for (std::size_t p = 0; p < spec.vocab; ++p) {
    Matrix means = PlaceMeans(spec, rng);
    for (std::size_t c = 0; c < spec.dim; ++c) {
      const double center =
          spec.phone_center_spread > 0.0
              ? rng.Uniform(-spec.phone_center_spread, spec.phone_center_spread)
              : 0.0;
      for (std::size_t j = 0; j < spec.components; ++j) means(j, c) += center;
    }
    o.means.push_back(std::move(means));
    o.weights.push_back(rng.FlatDirichlet(spec.components));
  }
  if (spec.speaker_maps) {
    o.speaker_maps = *spec.speaker_maps;
  } else {
    o.speaker_maps.push_back({Vector(spec.dim, 1.0), Vector(spec.dim, 0.0)});
    for (std::size_t s = 1; s < spec.speakers; ++s) {
      SpeakerMap map{Vector(spec.dim), Vector(spec.dim)};
      for (std::size_t c = 0; c < spec.dim; ++c) {
        map.scale[c] = rng.Uniform(0.7, 1.4);
        const double sign = rng.UniformIndex(2) == 0 ? -1.0 : 1.0;
        map.shift[c] = sign * rng.Uniform(0.5, 1.0) * spec.separation;
      }
      o.speaker_maps.push_back(std::move(map));
    }
  }
  return o;
}

OracleCorpus GenCorpus(const OracleSpec &spec, std::size_t threads) {
  OracleCorpus out;
  out.oracle = BuildOracle(spec);
  out.train = GenSplit(out.oracle, kTrainStream, spec.num_train, threads);
  out.test = GenSplit(out.oracle, kTestStream, spec.num_test, threads);
  return out;
}

double OracleLoglik(const Oracle &oracle, const Utterance &utt) {
  if (utt.embeddings.size() != utt.phones.size())
    throw ShapeError("utterance: embeddings and phones differ in length");
  double total = 0.0;
  for (std::size_t k = 0; k < utt.phones.size(); ++k)
    total += LogDensity(oracle.SpeakerGmm(utt.phones[k], utt.speaker), utt.embeddings[k]);
  return total;
}

double OracleMeanLoglikPerPhone(const Oracle &oracle, const Corpus &corpus) {
  double total = 0.0;
  for (const Utterance &u : corpus) total += OracleLoglik(oracle, u);
  return total / static_cast<double>(std::max<std::size_t>(1, CountPhones(corpus)));
}

std::size_t CountPhones(const Corpus &corpus) {
  std::size_t n = 0;
  for (const Utterance &u : corpus) n += u.phones.size();
  return n;
}

std::string CorpusFingerprint(const Corpus &corpus) {
  Fingerprint fp;
  fp.AddValue(static_cast<std::uint64_t>(corpus.size()));
  for (const Utterance &u : corpus) {
    fp.AddValue(static_cast<std::uint64_t>(u.speaker));
    fp.AddValue(static_cast<std::uint64_t>(u.phones.size()));
    for (std::size_t p : u.phones) fp.AddValue(static_cast<std::uint64_t>(p));
    for (const Embedding &e : u.embeddings)
      for (double x : e) fp.AddValue(x);
  }
  return fp.Hex();
}

void CheckCorpusForModel(const Corpus &corpus, const PredictorConfig &config) {
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Utterance &u = corpus[i];
    const std::string where = "utterance " + std::to_string(i);
    if (u.phones.empty()) throw ShapeError(where + ": no phones");
    if (u.embeddings.size() != u.phones.size())
      throw ShapeError(where + ": embeddings and phones differ in length");
    for (std::size_t p : u.phones)
      if (p >= config.vocab)
        throw IndexError(where + ": phone id " + std::to_string(p) + " >= vocab " +
                         std::to_string(config.vocab));
    for (const Embedding &e : u.embeddings)
      if (e.size() != config.dim)
        throw ShapeError(where + ": embedding dimension " + std::to_string(e.size()) +
                         " != " + std::to_string(config.dim));
    if (config.MultiSpeaker() && u.speaker >= config.speakers)
      throw IndexError(where + ": speaker " + std::to_string(u.speaker) +
                       " >= model speakers " + std::to_string(config.speakers));
  }
}

OracleSpec OracleSpecFromJson(const Json &j) {
  const std::string ctx = "oracle spec";
  RejectUnknownKeys(j, {"vocab", "speakers", "components", "dim", "separation",
                        "min_length", "max_length", "num_train", "num_test", "seed",
                        "box_half_width", "phone_center_spread", "speaker_maps"},
                    ctx);
  OracleSpec s;
  ReadField(j, "vocab", s.vocab, ctx);
  ReadField(j, "speakers", s.speakers, ctx);
  ReadField(j, "components", s.components, ctx);
  ReadField(j, "dim", s.dim, ctx);
  ReadField(j, "separation", s.separation, ctx);
  ReadField(j, "min_length", s.min_length, ctx);
  ReadField(j, "max_length", s.max_length, ctx);
  ReadField(j, "num_train", s.num_train, ctx);
  ReadField(j, "num_test", s.num_test, ctx);
  ReadField(j, "seed", s.seed, ctx);
  ReadField(j, "phone_center_spread", s.phone_center_spread, ctx);
  if (j.contains("box_half_width") && !j["box_half_width"].is_null()) {
    double w = 0.0;
    ReadField(j, "box_half_width", w, ctx);
    s.box_half_width = w;
  }
  if (j.contains("speaker_maps") && !j["speaker_maps"].is_null()) {
    if (!j["speaker_maps"].is_array()) throw ConfigError(ctx + ".speaker_maps: expected array");
    std::vector<SpeakerMap> maps;
    for (const Json &m : j["speaker_maps"]) maps.push_back(SpeakerMapFromJson(m));
    s.speaker_maps = std::move(maps);
  }
  s.Validate();
  return s;
}

Json OracleSpecToJson(const OracleSpec &s) {
  Json j{{"vocab", s.vocab},           {"speakers", s.speakers},
         {"components", s.components}, {"dim", s.dim},
         {"separation", s.separation}, {"min_length", s.min_length},
         {"max_length", s.max_length}, {"num_train", s.num_train},
         {"num_test", s.num_test},     {"seed", s.seed},
         {"phone_center_spread", s.phone_center_spread}};
  if (s.box_half_width) j["box_half_width"] = *s.box_half_width;
  if (s.speaker_maps) {
    Json maps = Json::array();
    for (const SpeakerMap &m : *s.speaker_maps) maps.push_back(SpeakerMapToJson(m));
    j["speaker_maps"] = maps;
  }
  return j;
}

Json OracleToJson(const Oracle &o) {
  Json means = Json::array();
  for (const Matrix &m : o.means) means.push_back(MatrixToJson(m));
  Json maps = Json::array();
  for (const SpeakerMap &m : o.speaker_maps) maps.push_back(SpeakerMapToJson(m));
  return Json{{"spec", OracleSpecToJson(o.spec)},
              {"means", means},
              {"weights", o.weights},
              {"speaker_maps", maps}};
}

Oracle OracleFromJson(const Json &j) {
  RejectUnknownKeys(j, {"spec", "means", "weights", "speaker_maps"}, "oracle");
  Oracle o;
  try {
    o.spec = OracleSpecFromJson(j.at("spec"));
    const OracleSpec &s = o.spec;
    if (!j.at("means").is_array() || j.at("means").size() != s.vocab)
      throw ShapeError("oracle: need one mean matrix per phone");
    for (const Json &m : j.at("means"))
      o.means.push_back(MatrixFromJson(m, s.components, s.dim, "oracle means"));
    o.weights = j.at("weights").get<std::vector<Vector>>();
    if (o.weights.size() != s.vocab) throw ShapeError("oracle: need weights per phone");
    for (const Vector &w : o.weights)
      if (w.size() != s.components) throw ShapeError("oracle: weight length != components");
    for (const Json &m : j.at("speaker_maps")) o.speaker_maps.push_back(SpeakerMapFromJson(m));
    if (o.speaker_maps.size() != s.speakers)
      throw ShapeError("oracle: need one speaker map per speaker");
    for (const SpeakerMap &m : o.speaker_maps)
      if (m.scale.size() != s.dim || m.shift.size() != s.dim)
        throw ShapeError("oracle: speaker map dimension != dim");
  } catch (const Json::exception &e) {
    throw IoError(std::string("oracle: malformed document: ") + e.what());
  }
  return o;
}

std::string CorpusToJsonl(const Corpus &corpus) {
  std::string out;
  for (const Utterance &u : corpus) {
    Json j{{"speaker", u.speaker}, {"phones", u.phones}, {"embeddings", u.embeddings}};
    if (!u.latent_components.empty())
      j["eval_only"] = Json{{"latent_components", u.latent_components}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

Corpus CorpusFromJsonl(const std::string &text, const std::string &what) {
  Corpus corpus;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string ctx = what + ":" + std::to_string(lineno);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error &e) {
      throw IoError(ctx + ": " + e.what());
    }
    RejectUnknownKeys(j, {"speaker", "phones", "embeddings", "eval_only"}, ctx);
    Utterance u;
    try {
      u.speaker = j.at("speaker").get<std::size_t>();
      u.phones = j.at("phones").get<PhoneSeq>();
      u.embeddings = j.at("embeddings").get<std::vector<Embedding>>();
      if (j.contains("eval_only")) {
        RejectUnknownKeys(j["eval_only"], {"latent_components"}, ctx + ".eval_only");
        u.latent_components =
            j["eval_only"].at("latent_components").get<std::vector<std::size_t>>();
      }
    } catch (const Json::exception &e) {
      throw IoError(ctx + ": " + e.what());
    }
    if (u.embeddings.size() != u.phones.size())
      throw ShapeError(ctx + ": embeddings and phones differ in length");
    if (!u.latent_components.empty() && u.latent_components.size() != u.phones.size())
      throw ShapeError(ctx + ": latent_components and phones differ in length");
    corpus.push_back(std::move(u));
  }
  return corpus;
}

void SaveOracleCorpus(const std::filesystem::path &dir, const OracleCorpus &corpus) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  WriteFileAtomic(dir / "oracle.json", OracleToJson(corpus.oracle).dump(1) + "\n");
  WriteFileAtomic(dir / "train.jsonl", CorpusToJsonl(corpus.train));
  WriteFileAtomic(dir / "test.jsonl", CorpusToJsonl(corpus.test));
}

OracleCorpus LoadOracleCorpus(const std::filesystem::path &dir) {
  OracleCorpus out;
  const std::string oracle_text = ReadFile(dir / "oracle.json");
  Json j;
  try {
    j = Json::parse(oracle_text);
  } catch (const Json::parse_error &e) {
    throw IoError((dir / "oracle.json").string() + ": " + e.what());
  }
  out.oracle = OracleFromJson(j);
  out.train = CorpusFromJsonl(ReadFile(dir / "train.jsonl"), (dir / "train.jsonl").string());
  out.test = CorpusFromJsonl(ReadFile(dir / "test.jsonl"), (dir / "test.jsonl").string());
  return out;
}

}  // namespace prosody
