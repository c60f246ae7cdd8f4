#pragma once

// Micro precision/recall/F for event detection and temporal relations.
//
// Relation protocol: gold pairs labeled Vague are removed before scoring. A
// prediction counts toward the precision denominator only if it is
// non-Vague (and, in the joint setting, only if both events were detected).
// Recall is correct / remaining gold pairs.

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgt/corpus.hpp"

namespace sgt {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t correct = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

/// P = correct/predicted, R = correct/gold, F = 2PR/(P+R); zero denominators give 0.
Prf make_prf(std::size_t correct, std::size_t predicted, std::size_t gold);

enum class EvalSetting { kGold, kJoint };
EvalSetting parse_eval_setting(const std::string& name);
std::string eval_setting_name(EvalSetting setting);

struct PairKey {
  std::string doc;
  std::string source;
  std::string target;

  auto operator<=>(const PairKey&) const = default;
};

struct GoldPair {
  PairKey key;
  std::size_t label = 0;
};

struct PairPrediction {
  PairKey key;
  std::size_t label = 0;
  bool detected = true;  // both events found by the event head (joint setting)
};

struct EvalReport {
  EvalSetting setting = EvalSetting::kGold;
  Prf events;
  Prf relations;
  /// rows: gold label; columns: predicted label, plus a final "not predicted"
  /// column for pairs without a usable prediction. Gold-Vague rows stay zero.
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t evaluated_pairs = 0;
  std::size_t skipped_vague = 0;
  std::size_t undetected_pairs = 0;
  std::size_t candidate_pairs = 0;  // joint setting: generated from detected events
};

EvalReport evaluate_relations(std::span<const PairPrediction> predictions, std::span<const GoldPair> gold,
                              const LabelScheme& scheme, EvalSetting setting);

/// Recomputes P/R/F from an emitted confusion matrix.
Prf relation_prf_from_confusion(const std::vector<std::vector<std::size_t>>& confusion, const LabelScheme& scheme);

struct TokenKey {
  std::string doc;
  std::size_t sentence = 0;
  int token = 0;

  auto operator<=>(const TokenKey&) const = default;
};

/// Predicted event tokens vs. gold event head tokens (see span_head).
Prf evaluate_events(std::span<const TokenKey> predicted, std::span<const TokenKey> gold);

/// Head tokens of every annotated event mention.
std::vector<TokenKey> gold_event_tokens(const std::vector<Document>& docs);
std::vector<GoldPair> gold_pairs(const std::vector<Document>& docs);

}  // namespace sgt
