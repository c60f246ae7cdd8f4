#pragma once

// Two-phase training, prediction and grid search.
//
// Phase 1 (warmup epochs) minimizes the event loss over sentence batches.
// Phase 2 minimizes event loss (over the sentences touched by the batch) plus
// relation loss over batches of gold pairs. The embedding and event head are
// updated by one Adam instance across both phases; the graph transformer and
// relation head by a second one that starts in phase 2.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgt/analysis.hpp"
#include "sgt/checkpoint.hpp"
#include "sgt/corpus.hpp"
#include "sgt/dep_graph.hpp"
#include "sgt/metrics.hpp"
#include "sgt/model.hpp"

namespace sgt {

struct SentenceInstance {
  std::size_t doc = 0;
  std::size_t sentence = 0;
  std::vector<std::size_t> labels;  // per token: 1 = event head token
};

struct PairInstance {
  std::size_t doc = 0;
  std::vector<std::size_t> window;
  std::size_t source_event = 0;  // index into Document::events
  std::size_t target_event = 0;
  std::size_t label = 0;
  PairKey key;
  SentenceGraph graph;
  SyntaxContext context;
  TokenKey source_token, target_token;

  /// Tokens strictly between the two event head tokens.
  std::size_t width() const;
};

struct Dataset {
  const std::vector<Document>* docs = nullptr;
  std::vector<SentenceInstance> sentences;
  std::vector<PairInstance> pairs;
};

PairInstance make_pair_instance(const std::vector<Document>& docs, std::size_t doc, std::size_t source_event,
                                std::size_t target_event, std::size_t label, const Vocabularies& vocabs);

/// One sentence instance per sentence and one pair instance per gold pair.
Dataset build_dataset(const std::vector<Document>& docs, const Vocabularies& vocabs);

/// Inverse token-label frequency, normalized to sum 1.
std::array<double, 2> default_event_weights(const Dataset& data);
/// Inverse label frequency, normalized to mean 1; absent labels get the largest weight.
std::vector<double> default_label_weights(const Dataset& data, const LabelScheme& scheme);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t warmup_epochs = 5;
  double learning_rate = 1e-2;
  std::size_t batch_size = 16;
  bool schedule = false;
  double warmup_fraction = 0.1;
  double max_grad_norm = 0.0;
  std::uint64_t seed = 1;
  std::optional<std::array<double, 2>> event_weights;
  std::vector<double> label_weights;  // empty = default_label_weights

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  std::string phase;      // "event" or "joint"
  double event_loss = 0.0;
  double relation_loss = 0.0;
  double event_grad_norm = 0.0;     // mean per step
  double relation_grad_norm = 0.0;  // mean per step
  double learning_rate = 0.0;       // at the last step of the epoch
  Prf dev_events;
  Prf dev_relations;  // gold setting
  bool has_dev = false;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  Checkpoint best;
};

/// Trains `model` in place and finishes with the best-dev parameters loaded
/// (ranked by dev relation F, then event F; ties keep the earlier epoch).
/// Without a dev set the last epoch is kept.
TrainResult train(SgtModel& model, const Dataset& train_data, const Dataset* dev_data, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// ---------------------------------------------------------------------------
// Prediction

struct PairOutput {
  PairKey key;
  std::size_t label = 0;
  std::vector<double> probabilities;
  bool detected = true;
  ForwardTrace trace;  // filled when requested
};

std::vector<TokenKey> predict_events(const SgtModel& model, const Dataset& data);
std::vector<PairOutput> predict_pairs(const SgtModel& model, const Dataset& data, bool keep_traces = false);

/// Events and relations under the chosen setting.
EvalReport evaluate(const SgtModel& model, const Dataset& data, EvalSetting setting);

/// Ordered pairs of detected events in the same or adjacent sentences, the
/// source preceding the target in surface order.
std::vector<std::pair<TokenKey, TokenKey>> joint_candidates(std::vector<TokenKey> detected);

/// Relation predictions for every candidate pair of gold events in each
/// document, for the consistency analyzer.
std::vector<std::vector<RelationPrediction>> predict_document_relations(const SgtModel& model,
                                                                        const std::vector<Document>& docs);

// ---------------------------------------------------------------------------
// Grid search

struct GridConfig {
  std::vector<double> learning_rates;
  std::vector<std::size_t> batch_sizes;
  std::vector<std::size_t> layers;
  std::vector<std::size_t> heads;
};

struct GridCell {
  std::size_t index = 0;
  double learning_rate = 0.0;
  std::size_t batch_size = 0;
  std::size_t layers = 0;
  std::size_t heads = 0;
};

struct GridRow {
  GridCell cell;
  double dev_relation_f = 0.0;
  double dev_event_f = 0.0;
};

struct GridResult {
  std::vector<GridRow> rows;
  std::size_t best = 0;
};

/// Each candidate list sorted ascending and deduplicated, then the Cartesian
/// product in (learning rate, batch size, layers, heads) order.
std::vector<GridCell> grid_cells(const GridConfig& config);

using CellEvaluator = std::function<GridRow(const GridCell&)>;

/// Runs every cell (up to `jobs` at once) and picks the highest dev relation
/// F; ties go to the earlier cell.
GridResult grid_search(const GridConfig& config, const CellEvaluator& evaluate, std::size_t jobs = 1);

}  // namespace sgt
