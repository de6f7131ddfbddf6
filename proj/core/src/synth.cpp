#include "onn/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "onn/deepnet.hpp"
#include "onn/errors.hpp"

namespace onn {

namespace {

FeatureSchema synth_schema(const SynthConfig& c) {
  std::vector<FieldVocab> fields;
  for (std::size_t i = 0; i < c.fields; ++i) {
    FieldVocab v;
    v.name = "F" + std::to_string(i + 1);
    v.column = i + 1;
    v.kind = ColumnKind::Categorical;
    v.values.emplace_back(kUnknownToken);
    for (std::size_t a = 0; a < c.cardinality; ++a) v.values.push_back("v" + std::to_string(a));
    for (std::uint32_t k = 0; k < v.values.size(); ++k) v.index.emplace(v.values[k], k);
    fields.push_back(std::move(v));
  }
  return FeatureSchema(std::move(fields), 0, c.fields + 1);
}

}  // namespace

SynthGenerator::SynthGenerator(SynthConfig config) : config_(config), rng_(config.seed) {
  if (config_.fields < 2) throw ConfigError("synth needs at least 2 fields");
  if (config_.cardinality < 1) throw ConfigError("synth needs at least 1 value per field");
  if (!std::isfinite(config_.strength) || config_.strength < 0.0) throw ConfigError("synth strength must be >= 0");
  schema_ = synth_schema(config_);
  const std::size_t pairs = config_.fields * (config_.fields - 1) / 2;
  scale_ = config_.strength / std::sqrt(static_cast<double>(pairs));
  SeededRng weight_rng = rng_.fork();
  weights_.resize(pairs);
  for (auto& table : weights_) {
    table.resize(config_.cardinality * config_.cardinality);
    for (double& w : table) w = weight_rng.normal();
  }
}

double SynthGenerator::logit(const std::vector<std::uint32_t>& v) const {
  if (v.size() != config_.fields) throw ConfigError("synth: wrong number of fields");
  const std::size_t c = config_.cardinality;
  double z = 0.0;
  std::size_t p = 0;
  for (std::size_t i = 0; i < config_.fields; ++i) {
    for (std::size_t j = i + 1; j < config_.fields; ++j, ++p) {
      if (v[i] == 0 || v[j] == 0 || v[i] > c || v[j] > c) throw ConfigError("synth: value outside the vocabulary");
      z += weights_[p][(v[i] - 1) * c + (v[j] - 1)];
    }
  }
  return scale_ * z;
}

Dataset SynthGenerator::sample(std::size_t n, std::vector<double>* logits) {
  Dataset d;
  d.schema = schema_;
  d.samples.reserve(n);
  if (logits) logits->clear();
  for (std::size_t k = 0; k < n; ++k) {
    Sample s;
    s.field_values.resize(config_.fields);
    for (auto& v : s.field_values) v = static_cast<std::uint32_t>(1 + rng_.uniform_index(config_.cardinality));
    const double z = logit(s.field_values);
    s.label = rng_.bernoulli(sigmoid(z)) ? 1 : 0;
    if (logits) logits->push_back(z);
    d.samples.push_back(std::move(s));
  }
  return d;
}

void write_logits(const std::vector<double>& logits, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  char buf[40];
  for (double z : logits) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", z);
    out << buf;
  }
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace onn
