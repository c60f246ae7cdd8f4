#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgt/corpus.hpp"
#include "sgt/dep_graph.hpp"
#include "sgt/metrics.hpp"

namespace sgt {

// ---------------------------------------------------------------------------
// Consistency of predicted relations within one document.

struct RelationPrediction {
  std::string source;
  std::string target;
  std::size_t label = 0;
};

struct ConsistencyReport {
  /// Unordered pairs predicted in both directions with non-converse labels.
  std::size_t symmetry = 0;
  /// Event triples {a, b, c} with a Before b, b Before c but a->c predicted
  /// (directly or through its reverse) as anything other than Before.
  /// Each event triple is counted once.
  std::size_t transitivity = 0;
  /// Informational: triples with a Simultaneous link whose implied Before
  /// ordering is contradicted (a=b, b<c but not a<c; a<b, b=c but not a<c).
  std::size_t simultaneous_chains = 0;
  std::size_t checked_pairs = 0;
  std::size_t checked_triples = 0;
};

ConsistencyReport consistency_report(std::span<const RelationPrediction> predictions, const LabelScheme& scheme);

// ---------------------------------------------------------------------------
// Context width: tokens strictly between the two event head tokens in the
// window's surface order, bucketed < 10, 10-20, > 20.

struct WidthItem {
  std::size_t width = 0;
  std::size_t gold = 0;
  std::optional<std::size_t> predicted;  // empty = no prediction
};

struct WidthBucket {
  std::string name;
  std::size_t count = 0;
  std::optional<Prf> score;  // absent for an empty bucket
};

std::size_t width_bucket(std::size_t width);
const std::vector<std::string>& width_bucket_names();
std::vector<WidthBucket> context_width_report(std::span<const WidthItem> items, const LabelScheme& scheme);

// ---------------------------------------------------------------------------
// Temporal cue candidates from the last layer's syntax-guided attention.

enum class CueProvenance { kPath, kNeighbor, kBoth };
std::string cue_provenance_name(CueProvenance provenance);

/// Path triples incident to the source or target are "both"; remaining path
/// triples are "path"; off-path triples of Phi are "neighbor".
CueProvenance cue_provenance(const SyntaxContext& context, std::size_t edge, const SentenceGraph& graph);

struct CueCandidate {
  std::size_t edge = 0;
  Triple triple;
  double weight = 0.0;  // mean over heads
  CueProvenance provenance = CueProvenance::kNeighbor;
};

struct CueInput {
  const SentenceGraph* graph = nullptr;
  const SyntaxContext* context = nullptr;
  std::vector<std::size_t> phi_edges;                 // key order of head_weights
  std::vector<std::vector<double>> head_weights;      // [head][k], last layer
};

struct CueResult {
  std::vector<CueCandidate> top;
  bool truncated = false;  // k exceeded |Phi|; every triple returned
  double total_weight = 0.0;
};

std::vector<CueResult> cue_report(std::span<const CueInput> inputs, std::size_t k);

}  // namespace sgt
