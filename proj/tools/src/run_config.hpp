#pragma once

// Run configuration file: one "section.key = value" per line, '#' comments.
// Relative paths resolve against the config file's directory.
//
//   data.train_conllu, data.train_annotations      required
//   data.dev_conllu, data.dev_annotations           optional pair
//   data.test_conllu, data.test_annotations         optional pair
//   data.vectors                                    precomputed token vectors
//   data.scheme                                     matres | tbdense
//   encoder.backend, encoder.token_width, encoder.init_scale
//   model.width, model.layers, model.heads, model.relation_width,
//   model.init_scale
//   train.epochs, train.warmup_epochs, train.learning_rate, train.batch_size,
//   train.schedule, train.warmup_fraction, train.max_grad_norm,
//   train.event_weights (2 values), train.label_weights (one per label)
//   grid.learning_rates, grid.batch_sizes, grid.layers, grid.heads
//   eval.split                                      train | dev | test
//   analyze.top_k
//   seed
//   output.dir                                      required; created if absent
//
// Lists are comma-separated.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "sgt/corpus.hpp"
#include "sgt/encoder.hpp"
#include "sgt/model.hpp"
#include "sgt/train.hpp"

namespace sgt::cli {

struct SplitPaths {
  std::filesystem::path conllu;
  std::filesystem::path annotations;

  bool present() const { return !conllu.empty(); }
};

struct RunConfig {
  std::map<std::string, std::string> entries;  // as written, after path resolution
  SplitPaths train, dev, test;
  std::filesystem::path vectors;
  std::string scheme = "matres";
  EncoderConfig encoder;
  ModelConfig model;
  TrainConfig training;
  GridConfig grid;
  std::string eval_split;  // empty = dev if present, else train
  std::size_t top_k = 1;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir;

  /// FNV-1a over the sorted entries, seed excluded.
  std::string hash() const;
  /// "<prefix>_<hash>_s<seed>"
  std::string stem(const std::string& prefix) const;
  const SplitPaths& split(const std::string& name) const;
  std::string resolved_eval_split() const;
};

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir, const std::string& source_name);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace sgt::cli
