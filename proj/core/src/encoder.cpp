#include "sgt/encoder.hpp"

#include <fmt/format.h>

#include <fstream>
#include <random>
#include <sstream>

#include "sgt/error.hpp"

namespace sgt {
namespace {
constexpr const char* kModule = "encoder";
}

EncoderBackend parse_encoder_backend(const std::string& name) {
  if (name == "embedding" || name == "trainable-embedding") return EncoderBackend::kTrainableEmbedding;
  if (name == "precomputed" || name == "precomputed-file") return EncoderBackend::kPrecomputed;
  throw Error(kModule, fmt::format("unknown backend '{}' (expected embedding or precomputed)", name), Error::Kind::kUsage);
}

std::string encoder_backend_name(EncoderBackend backend) {
  return backend == EncoderBackend::kTrainableEmbedding ? "embedding" : "precomputed";
}

void PrecomputedVectors::set(const std::string& doc, std::size_t sentence, int token, std::vector<double> values) {
  if (values.size() != width_) {
    throw Error(kModule, fmt::format("vector for {}/{}/{} has width {}, expected {}", doc, sentence, token, values.size(), width_));
  }
  vectors_[Key{doc, sentence, token}] = std::move(values);
}

const std::vector<double>* PrecomputedVectors::find(const std::string& doc, std::size_t sentence, int token) const {
  const auto it = vectors_.find(Key{doc, sentence, token});
  return it == vectors_.end() ? nullptr : &it->second;
}

void PrecomputedVectors::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, fmt::format("cannot write '{}'", path));
  out << width_ << ' ' << vectors_.size() << '\n';
  for (const auto& [key, values] : vectors_) {
    std::string line = fmt::format("{} {} {}", std::get<0>(key), std::get<1>(key), std::get<2>(key));
    for (double v : values) line += fmt::format(" {:.17g}", v);
    out << line << '\n';
  }
}

PrecomputedVectors PrecomputedVectors::load(const std::string& path, std::size_t expected_width) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, fmt::format("cannot open precomputed vectors '{}'", path));
  std::size_t width = 0, count = 0;
  if (!(in >> width >> count) || width == 0) throw Error(kModule, fmt::format("{}: bad header", path));
  if (expected_width != 0 && width != expected_width) {
    throw Error(kModule, fmt::format("{}: vector width {} does not match configured token width {}", path, width, expected_width));
  }
  PrecomputedVectors vecs(width);
  for (std::size_t i = 0; i < count; ++i) {
    std::string doc;
    std::size_t sentence = 0;
    int token = 0;
    if (!(in >> doc >> sentence >> token)) throw Error(kModule, fmt::format("{}: record {} truncated", path, i));
    std::vector<double> values(width);
    for (auto& v : values)
      if (!(in >> v)) throw Error(kModule, fmt::format("{}: record {} has fewer than {} values", path, i, width));
    vecs.set(doc, sentence, token, std::move(values));
  }
  return vecs;
}

Encoder::Encoder(EncoderConfig config, const Vocabularies& vocabs, std::uint64_t seed)
    : config_(config), vocabs_(vocabs) {
  config_.pos_width = vocabs.upos_count();
  if (config_.pos_width == 0) throw Error(kModule, "UPOS vocabulary is empty", Error::Kind::kUsage);
  if (config_.token_width == 0) throw Error(kModule, "token width must be positive", Error::Kind::kUsage);
  if (config_.backend == EncoderBackend::kTrainableEmbedding) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-config_.init_scale, config_.init_scale);
    std::vector<double> values(vocabs.token_count() * config_.token_width);
    for (auto& v : values) v = dist(rng);
    embedding_ = Tensor::from({vocabs.token_count(), config_.token_width}, std::move(values), true);
  }
}

void Encoder::set_precomputed(std::shared_ptr<const PrecomputedVectors> vectors) {
  if (vectors && vectors->width() != config_.token_width) {
    throw Error(kModule, fmt::format("precomputed width {} does not match token width {}", vectors->width(), config_.token_width));
  }
  precomputed_ = std::move(vectors);
}

Tensor Encoder::encode_window(const Document& doc, std::span<const std::size_t> window) const {
  std::size_t n = 0;
  for (auto s : window) n += doc.sentences.at(s).size();
  if (n == 0) throw Error(kModule, "empty window", Error::Kind::kUsage);

  std::vector<double> pos(n * config_.pos_width, 0.0);
  std::size_t row = 0;
  for (auto s : window)
    for (const auto& t : doc.sentences[s]) pos[row++ * config_.pos_width + vocabs_.upos_id(t.upos)] = 1.0;
  auto pos_block = Tensor::from({n, config_.pos_width}, std::move(pos));

  Tensor tokens;
  if (config_.backend == EncoderBackend::kTrainableEmbedding) {
    std::vector<std::size_t> ids;
    ids.reserve(n);
    for (auto s : window)
      for (const auto& t : doc.sentences[s]) ids.push_back(vocabs_.token_id(t.form));
    tokens = gather_rows(embedding_, ids);
  } else {
    if (!precomputed_) throw Error(kModule, "precomputed backend selected but no vectors were loaded", Error::Kind::kUsage);
    std::vector<double> values;
    values.reserve(n * config_.token_width);
    for (auto s : window)
      for (const auto& t : doc.sentences[s]) {
        const auto* v = precomputed_->find(doc.id, s, t.index);
        if (!v) {
          throw Error(kModule, fmt::format("no precomputed vector for document '{}' sentence {} token {} ('{}')", doc.id, s, t.index, t.form));
        }
        values.insert(values.end(), v->begin(), v->end());
      }
    tokens = Tensor::from({n, config_.token_width}, std::move(values));
  }
  return concat_cols({tokens, pos_block});
}

std::vector<NamedTensor> Encoder::named_parameters() const {
  if (!embedding_.defined()) return {};
  return {{"encoder/embedding", embedding_}};
}

}  // namespace sgt
