#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "onn/datapipe.hpp"
#include "onn/numerics.hpp"

namespace onn::testing {

inline std::vector<Sample> random_samples(const std::vector<std::size_t>& cards, std::size_t n, SeededRng& rng) {
  std::vector<Sample> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k].field_values.resize(cards.size());
    for (std::size_t i = 0; i < cards.size(); ++i) {
      out[k].field_values[i] = static_cast<std::uint32_t>(rng.uniform_index(cards[i]));
    }
    out[k].label = static_cast<std::uint8_t>(rng.uniform_index(2));
  }
  return out;
}

inline Batch batch_of(const std::vector<Sample>& samples) {
  Batch b;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    b.samples.push_back(&samples[k]);
    b.positions.push_back(k);
  }
  return b;
}

inline std::vector<std::size_t> random_cards(std::size_t m, std::size_t max_card, SeededRng& rng) {
  std::vector<std::size_t> cards(m);
  for (auto& c : cards) c = 2 + rng.uniform_index(max_card - 1);
  return cards;
}

// Fresh path under the build tree's temp dir, removed by the caller if needed.
std::string temp_path(const std::string& name);

}  // namespace onn::testing
