#pragma once

// Per-token context vectors c_i = [token vector | one-hot UPOS].
//
// The token vector comes either from a trainable embedding table or from a
// precomputed-vector file. Precomputed files hold one vector per token, so
// any subword pooling (e.g. taking the first subtoken of a pretrained
// encoder) happens when the file is exported.
//
// Precomputed file format:
//   <width> <count>
//   <doc-id> <sentence> <token> v1 ... v_width     (count lines)

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "sgt/checkpoint.hpp"
#include "sgt/corpus.hpp"
#include "sgt/tensor.hpp"

namespace sgt {

enum class EncoderBackend { kTrainableEmbedding, kPrecomputed };

EncoderBackend parse_encoder_backend(const std::string& name);
std::string encoder_backend_name(EncoderBackend backend);

struct EncoderConfig {
  EncoderBackend backend = EncoderBackend::kTrainableEmbedding;
  std::size_t token_width = 16;
  std::size_t pos_width = 0;  // set from the UPOS vocabulary
  /// Trainable embeddings start Uniform(-init_scale, init_scale), on the same
  /// scale as the one-hot POS block.
  double init_scale = 1.0;

  std::size_t context_width() const { return token_width + pos_width; }
};

class PrecomputedVectors {
 public:
  using Key = std::tuple<std::string, std::size_t, int>;  // doc, sentence, token

  explicit PrecomputedVectors(std::size_t width = 0) : width_(width) {}

  std::size_t width() const { return width_; }
  std::size_t size() const { return vectors_.size(); }
  void set(const std::string& doc, std::size_t sentence, int token, std::vector<double> values);
  const std::vector<double>* find(const std::string& doc, std::size_t sentence, int token) const;

  void save(const std::string& path) const;
  /// Loads and checks the file width against `expected_width` (0 = any).
  static PrecomputedVectors load(const std::string& path, std::size_t expected_width = 0);

 private:
  std::size_t width_;
  std::map<Key, std::vector<double>> vectors_;
};

class Encoder {
 public:
  Encoder(EncoderConfig config, const Vocabularies& vocabs, std::uint64_t seed);

  const EncoderConfig& config() const { return config_; }
  void set_precomputed(std::shared_ptr<const PrecomputedVectors> vectors);
  const Vocabularies& vocabs() const { return vocabs_; }

  /// Context rows for the tokens of `window` (adjacent sentence indices), in
  /// surface order. Only the token block of trainable rows carries gradient.
  Tensor encode_window(const Document& doc, std::span<const std::size_t> window) const;

  const Tensor& embedding() const { return embedding_; }
  std::vector<NamedTensor> named_parameters() const;

 private:
  EncoderConfig config_;
  Vocabularies vocabs_;
  std::shared_ptr<const PrecomputedVectors> precomputed_;
  Tensor embedding_;  // [token vocabulary x token_width], trainable backend only
};

}  // namespace sgt
