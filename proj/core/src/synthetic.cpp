#include "sgt/synthetic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <utility>

#include "sgt/error.hpp"

namespace sgt {
namespace {

constexpr const char* kModule = "corpus_io";

using CueTable = std::map<std::string, std::string>;

const CueTable& cue_table(SynthTemplate templ) {
  static const CueTable forward = {{"Before", "before"}, {"After", "after"},       {"Simultaneous", "while"},
                                   {"Includes", "around"}, {"Is_Included", "during"}, {"Vague", "if"}};
  static const CueTable fronted = {{"Before", "after"},      {"After", "before"},   {"Simultaneous", "while"},
                                   {"Includes", "during"},   {"Is_Included", "around"}, {"Vague", "if"}};
  static const CueTable cross = {{"Before", "then"},         {"After", "earlier"},  {"Simultaneous", "meanwhile"},
                                 {"Includes", "throughout"}, {"Is_Included", "briefly"}, {"Vague", "perhaps"}};
  switch (templ) {
    case SynthTemplate::kForward:
      return forward;
    case SynthTemplate::kFronted:
      return fronted;
    case SynthTemplate::kCross:
      break;
  }
  return cross;
}

std::size_t draw(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[draw(rng, i)]);
}

// A clause under construction: tokens with heads as positions in `tokens`
// (-1 = root), later renumbered to 1-based CoNLL-U ids.
struct Piece {
  std::string form, upos, deprel;
  int head = -1;
};

class Builder {
 public:
  Builder(const SynthConfig& config, std::mt19937_64& rng) : config_(config), rng_(rng) {}

  int add(std::string form, std::string upos, std::string deprel, int head) {
    pieces_.push_back({std::move(form), std::move(upos), std::move(deprel), head});
    return static_cast<int>(pieces_.size()) - 1;
  }
  int noun(int head, const std::string& deprel) {
    nouns_.push_back(add(word('n'), "NOUN", deprel, head));
    return nouns_.back();
  }
  std::string word(char cls) { return fmt::format("{}{}", cls, draw(rng_, config_.vocab_size)); }

  // Surface order is the insertion order, except that padding modifiers are
  // placed immediately before their noun.
  Sentence finish(std::size_t length, std::vector<int>& order_out) {
    std::vector<std::vector<int>> before(pieces_.size());
    const std::size_t base = pieces_.size();
    for (std::size_t extra = length > base ? length - base : 0; extra > 0; --extra) {
      const int n = nouns_[draw(rng_, nouns_.size())];
      const bool first = before[n].empty();
      const int m = first ? add(draw(rng_, 2) ? "the" : "a", "DET", "det", n) : add(word('a'), "ADJ", "amod", n);
      before.resize(pieces_.size());
      // det stays leftmost; adjectives go between det and noun.
      before[n].push_back(m);
    }
    std::vector<int> order;
    for (std::size_t i = 0; i < base; ++i) {
      for (int m : before[i]) order.push_back(m);
      order.push_back(static_cast<int>(i));
    }
    std::vector<int> id(pieces_.size());
    for (std::size_t k = 0; k < order.size(); ++k) id[order[k]] = static_cast<int>(k) + 1;
    Sentence s;
    for (int p : order) {
      const auto& piece = pieces_[p];
      s.push_back(Token{id[p], piece.form, piece.upos, piece.head < 0 ? 0 : id[piece.head], piece.deprel});
    }
    order_out = std::move(id);
    return s;
  }

 private:
  const SynthConfig& config_;
  std::mt19937_64& rng_;
  std::vector<Piece> pieces_;
  std::vector<int> nouns_;
};

std::size_t sample_length(const SynthConfig& c, std::mt19937_64& rng) {
  return c.min_length + draw(rng, c.max_length - c.min_length + 1);
}

}  // namespace

const std::string& synth_cue(SynthTemplate templ, const std::string& label) {
  const auto& table = cue_table(templ);
  const auto it = table.find(label);
  if (it == table.end()) throw Error(kModule, fmt::format("no synthetic cue for label '{}'", label));
  return it->second;
}

std::vector<std::size_t> synth_quotas(const std::vector<double>& mixture, std::size_t windows) {
  const double total = std::accumulate(mixture.begin(), mixture.end(), 0.0);
  if (mixture.empty() || !(total > 0.0)) throw Error(kModule, "label mixture must have positive total");
  std::vector<std::size_t> counts(mixture.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < mixture.size(); ++i) {
    if (mixture[i] < 0.0) throw Error(kModule, "label mixture entries must be non-negative");
    const double exact = mixture[i] / total * static_cast<double>(windows);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(-(exact - std::floor(exact)), i);
  }
  std::stable_sort(remainders.begin(), remainders.end());
  for (std::size_t k = 0; assigned < windows; ++k, ++assigned) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

SynthCorpus generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  const auto scheme = LabelScheme::by_name(config.scheme);
  if (config.windows == 0) throw Error(kModule, "synthetic corpus size must be positive", Error::Kind::kUsage);
  if (config.vocab_size == 0) throw Error(kModule, "synthetic vocabulary size must be positive", Error::Kind::kUsage);
  if (config.min_length > config.max_length) {
    throw Error(kModule, "synthetic min_length exceeds max_length", Error::Kind::kUsage);
  }
  if (config.fronted_fraction < 0.0 || config.cross_fraction < 0.0 ||
      config.fronted_fraction + config.cross_fraction > 1.0) {
    throw Error(kModule, "template fractions must be non-negative and sum to at most 1", Error::Kind::kUsage);
  }
  auto mixture = config.label_mixture;
  if (mixture.empty()) mixture.assign(scheme.size(), 1.0);
  if (mixture.size() != scheme.size()) {
    throw Error(kModule, fmt::format("label mixture has {} entries, scheme {} has {}", mixture.size(), scheme.name(),
                                     scheme.size()),
                Error::Kind::kUsage);
  }

  std::mt19937_64 rng(seed);
  const auto quotas = synth_quotas(mixture, config.windows);
  std::vector<std::size_t> labels;
  for (std::size_t l = 0; l < quotas.size(); ++l) labels.insert(labels.end(), quotas[l], l);
  shuffle(labels, rng);

  SynthCorpus corpus;
  for (std::size_t w = 0; w < labels.size(); ++w) {
    const double u = unit(rng);
    const auto templ = u < config.cross_fraction                               ? SynthTemplate::kCross
                       : u < config.cross_fraction + config.fronted_fraction ? SynthTemplate::kFronted
                                                                             : SynthTemplate::kForward;
    const auto& cue = synth_cue(templ, scheme.label(labels[w]));

    Document doc;
    doc.id = fmt::format("syn{:05}", w);
    std::vector<int> ids;
    int v1 = 0, v2 = 0;
    if (templ == SynthTemplate::kCross) {
      Builder s1(config, rng);
      s1.noun(1, "nsubj");
      const int p_v1 = s1.add(s1.word('v'), "VERB", "root", -1);
      s1.noun(p_v1, "obj");
      s1.add(".", "PUNCT", "punct", p_v1);
      doc.sentences.push_back(s1.finish(sample_length(config, rng), ids));
      v1 = ids[p_v1];

      Builder s2(config, rng);
      s2.add(cue, "ADV", "advmod", 2);
      s2.noun(2, "nsubj");
      const int p_v2 = s2.add(s2.word('v'), "VERB", "root", -1);
      s2.noun(p_v2, "obj");
      s2.add(".", "PUNCT", "punct", p_v2);
      doc.sentences.push_back(s2.finish(sample_length(config, rng), ids));
      v2 = ids[p_v2];
      doc.events.push_back({"e1", 0, v1, v1});
      doc.events.push_back({"e2", 1, v2, v2});
      doc.pairs.push_back({"e1", "e2", labels[w]});
    } else if (templ == SynthTemplate::kForward) {
      Builder s(config, rng);
      s.noun(1, "nsubj");
      const int p_v1 = s.add(s.word('v'), "VERB", "root", -1);
      s.noun(p_v1, "obj");
      s.add(cue, "SCONJ", "mark", 5);
      s.noun(5, "nsubj");
      const int p_v2 = s.add(s.word('v'), "VERB", "advcl", p_v1);
      s.noun(p_v2, "obj");
      s.add(".", "PUNCT", "punct", p_v1);
      doc.sentences.push_back(s.finish(sample_length(config, rng), ids));
      doc.events.push_back({"e1", 0, ids[p_v1], ids[p_v1]});
      doc.events.push_back({"e2", 0, ids[p_v2], ids[p_v2]});
      doc.pairs.push_back({"e1", "e2", labels[w]});
    } else {
      Builder s(config, rng);
      s.add(cue, "SCONJ", "mark", 2);
      s.noun(2, "nsubj");
      const int p_v2 = s.add(s.word('v'), "VERB", "advcl", 6);
      s.noun(p_v2, "obj");
      s.add(",", "PUNCT", "punct", 6);
      s.noun(6, "nsubj");
      const int p_v1 = s.add(s.word('v'), "VERB", "root", -1);
      s.noun(p_v1, "obj");
      s.add(".", "PUNCT", "punct", p_v1);
      doc.sentences.push_back(s.finish(sample_length(config, rng), ids));
      // Source is the surface-first verb (the fronted clause's).
      doc.events.push_back({"e1", 0, ids[p_v2], ids[p_v2]});
      doc.events.push_back({"e2", 0, ids[p_v1], ids[p_v1]});
      doc.pairs.push_back({"e1", "e2", labels[w]});
    }
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) validate_sentence(doc.sentences[i], doc.id);
    corpus.docs.push_back(std::move(doc));
    corpus.templates.push_back(templ);
  }
  return corpus;
}

}  // namespace sgt
