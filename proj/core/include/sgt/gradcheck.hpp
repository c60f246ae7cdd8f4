#pragma once

// Central finite-difference check of every parameter's gradient of
// L_eve + L_rel on a small random two-sentence fixture.

#include <cstdint>
#include <string>
#include <vector>

#include "sgt/corpus.hpp"

namespace sgt {

struct GradcheckConfig {
  std::size_t tokens = 6;  // split over two sentences; at least 2
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t width = 4;
  std::size_t relation_width = 3;
  std::size_t token_width = 3;
  double init_scale = 0.5;
  double step = 1e-5;
  /// Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  std::uint64_t seed = 1;
};

struct GradcheckGroup {
  std::string name;
  std::size_t entries = 0;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckGroup> groups;
  double max_relative_error = 0.0;
  double loss = 0.0;

  bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

/// One document of two sentences with random trees, random tags, one event
/// per sentence and one labeled pair between them.
std::vector<Document> gradcheck_fixture(std::size_t tokens, const LabelScheme& scheme, std::uint64_t seed);

GradcheckReport run_gradcheck(const GradcheckConfig& config);

}  // namespace sgt
