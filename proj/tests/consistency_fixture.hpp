#pragma once

// Prediction sets derived from a hidden timeline, so they are order-consistent
// by construction.

#include <random>
#include <string>
#include <vector>

#include "sgt/analysis.hpp"

namespace sgt::test {

inline std::vector<RelationPrediction> timeline_predictions(std::size_t events, std::mt19937_64& rng,
                                                            const LabelScheme& scheme) {
  std::vector<int> time(events);
  for (auto& t : time) t = static_cast<int>(rng() % (events / 2 + 1));
  const auto before = scheme.index_of("Before"), after = scheme.index_of("After");
  const auto simultaneous = scheme.index_of("Simultaneous");
  std::vector<RelationPrediction> out;
  for (std::size_t i = 0; i < events; ++i)
    for (std::size_t j = i + 1; j < events; ++j) {
      if (rng() % 4 == 0) continue;
      const bool flip = rng() % 2;
      const auto a = flip ? j : i, b = flip ? i : j;
      const auto label = time[a] < time[b] ? before : time[a] > time[b] ? after : simultaneous;
      out.push_back({"e" + std::to_string(a), "e" + std::to_string(b), label});
      if (rng() % 5 == 0) out.push_back({"e" + std::to_string(b), "e" + std::to_string(a), scheme.converse(label)});
    }
  return out;
}

}  // namespace sgt::test
