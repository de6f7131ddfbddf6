#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "onn/datapipe.hpp"

namespace onn {

struct SynthConfig {
  std::size_t fields = 6;
  std::size_t cardinality = 10;
  double strength = 2.0;
  std::uint64_t seed = 1;
};

/// Ground truth: one N(0, 1) weight per (field i value a, field j value b),
/// drawn once. logit = strength · Σ_{i<j} W_ij[a_i][b_j] / sqrt(#pairs), so the
/// logit has unit variance per unit strength.
class SynthGenerator {
 public:
  explicit SynthGenerator(SynthConfig config);

  const SynthConfig& config() const { return config_; }
  // Vocabulary v0..v{c-1} per field, behind the reserved unknown slot.
  const FeatureSchema& schema() const { return schema_; }

  // Value indices are schema indices (1-based; 0 is the unknown slot).
  double logit(const std::vector<std::uint32_t>& field_values) const;

  // Draws n samples from the generator's own stream; successive calls continue it.
  Dataset sample(std::size_t n, std::vector<double>* logits = nullptr);

 private:
  SynthConfig config_;
  FeatureSchema schema_;
  // Per pair, a cardinality x cardinality table, row-major.
  std::vector<std::vector<double>> weights_;
  double scale_ = 0.0;
  SeededRng rng_;
};

// One value per line with 17 significant digits.
void write_logits(const std::vector<double>& logits, const std::string& path);

}  // namespace onn
