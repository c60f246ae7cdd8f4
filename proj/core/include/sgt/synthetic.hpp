#pragma once

// Templated synthetic corpus. Each document is one window holding one gold
// pair between its two verbs; the label is a function of the cue word and the
// template only:
//
//   forward  N1 V1 N2 CUE N3 V2 N4 .      CUE = mark of V2, V2 = advcl of V1
//   fronted  CUE N3 V2 N4 , N1 V1 N2 .    same tree, source is V2
//   cross    N1 V1 N2 . | CUE N3 V2 N4 .  CUE = advmod of V2
//
// Nouns are padded with det/amod modifiers up to a sampled sentence length.
// Word forms are pseudo-words n<i>, v<i>, a<i>.

#include <cstdint>
#include <string>
#include <vector>

#include "sgt/corpus.hpp"

namespace sgt {

enum class SynthTemplate { kForward, kFronted, kCross };

struct SynthConfig {
  std::size_t windows = 500;
  std::size_t vocab_size = 50;  // pseudo-words per open class
  std::size_t min_length = 8;
  std::size_t max_length = 14;
  std::string scheme = "matres";
  /// Relative label frequencies aligned with the scheme's labels; empty = uniform.
  std::vector<double> label_mixture;
  double fronted_fraction = 0.3;
  double cross_fraction = 0.3;
};

struct SynthCorpus {
  std::vector<Document> docs;
  std::vector<SynthTemplate> templates;  // one per document
};

/// Cue word producing `label` under `templ`.
const std::string& synth_cue(SynthTemplate templ, const std::string& label);

/// Exact per-label counts for `windows` draws (largest-remainder rounding).
std::vector<std::size_t> synth_quotas(const std::vector<double>& mixture, std::size_t windows);

SynthCorpus generate_synthetic(const SynthConfig& config, std::uint64_t seed);

}  // namespace sgt
