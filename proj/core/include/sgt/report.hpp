#pragma once

// Human-readable tables and line-delimited JSON records for training logs,
// evaluation reports and analyses.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sgt/analysis.hpp"
#include "sgt/corpus.hpp"
#include "sgt/metrics.hpp"
#include "sgt/train.hpp"

namespace sgt {

/// 64-bit FNV-1a of `text`, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

std::string epoch_json(const EpochLog& log);
std::string epoch_table(std::span<const EpochLog> logs);

std::string eval_json(const EvalReport& report, const LabelScheme& scheme);
std::string eval_table(const EvalReport& report, const LabelScheme& scheme);

std::string label_stats_json(const LabelStats& stats);

std::string grid_json(const GridResult& result);
std::string grid_table(const GridResult& result);

std::string consistency_json(const ConsistencyReport& report);
std::string consistency_table(const ConsistencyReport& report);

std::string width_json(std::span<const WidthBucket> buckets);
std::string width_table(std::span<const WidthBucket> buckets);

struct CueRecord {
  PairKey key;
  CueResult result;
  std::vector<std::string> node_forms;  // window token forms by node id
};

std::string cue_json(std::span<const CueRecord> records, const Vocabularies& vocabs);
std::string cue_table(std::span<const CueRecord> records, const Vocabularies& vocabs);

}  // namespace sgt
