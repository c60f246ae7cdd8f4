#include "sgt/metrics.hpp"

#include <fmt/format.h>

#include <map>
#include <set>

#include "sgt/dep_graph.hpp"
#include "sgt/error.hpp"

namespace sgt {

Prf make_prf(std::size_t correct, std::size_t predicted, std::size_t gold) {
  Prf r;
  r.correct = correct;
  r.predicted = predicted;
  r.gold = gold;
  r.precision = predicted ? static_cast<double>(correct) / static_cast<double>(predicted) : 0.0;
  r.recall = gold ? static_cast<double>(correct) / static_cast<double>(gold) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

EvalSetting parse_eval_setting(const std::string& name) {
  if (name == "gold") return EvalSetting::kGold;
  if (name == "joint") return EvalSetting::kJoint;
  throw Error("train_eval", fmt::format("unknown setting '{}' (expected joint or gold)", name), Error::Kind::kUsage);
}

std::string eval_setting_name(EvalSetting setting) { return setting == EvalSetting::kGold ? "gold" : "joint"; }

Prf relation_prf_from_confusion(const std::vector<std::vector<std::size_t>>& confusion, const LabelScheme& scheme) {
  const auto k = scheme.size(), vague = scheme.vague();
  std::size_t correct = 0, predicted = 0, gold = 0;
  for (std::size_t g = 0; g < k; ++g) {
    if (g == vague) continue;
    for (std::size_t p = 0; p <= k; ++p) {
      const auto c = confusion.at(g).at(p);
      gold += c;
      if (p < k && p != vague) predicted += c;
      if (p == g) correct += c;
    }
  }
  return make_prf(correct, predicted, gold);
}

EvalReport evaluate_relations(std::span<const PairPrediction> predictions, std::span<const GoldPair> gold,
                              const LabelScheme& scheme, EvalSetting setting) {
  const auto k = scheme.size();
  std::map<PairKey, std::size_t> gold_index;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].label >= k) throw Error("train_eval", fmt::format("gold label {} out of range", gold[i].label));
    gold_index.emplace(gold[i].key, i);
  }
  std::map<PairKey, const PairPrediction*> by_key;
  for (const auto& p : predictions) {
    if (!gold_index.contains(p.key)) {
      throw Error("train_eval", fmt::format("prediction for unknown pair {}:{}->{}", p.key.doc, p.key.source, p.key.target));
    }
    if (p.label >= k) throw Error("train_eval", fmt::format("predicted label {} out of range", p.label));
    by_key[p.key] = &p;
  }

  EvalReport report;
  report.setting = setting;
  report.confusion.assign(k, std::vector<std::size_t>(k + 1, 0));
  for (const auto& g : gold) {
    if (g.label == scheme.vague()) {
      ++report.skipped_vague;
      continue;
    }
    ++report.evaluated_pairs;
    const auto it = by_key.find(g.key);
    const bool usable = it != by_key.end() && (setting == EvalSetting::kGold || it->second->detected);
    if (it != by_key.end() && !usable) ++report.undetected_pairs;
    ++report.confusion[g.label][usable ? it->second->label : k];
  }
  report.relations = relation_prf_from_confusion(report.confusion, scheme);
  return report;
}

Prf evaluate_events(std::span<const TokenKey> predicted, std::span<const TokenKey> gold) {
  const std::set<TokenKey> pred(predicted.begin(), predicted.end());
  const std::set<TokenKey> ref(gold.begin(), gold.end());
  std::size_t correct = 0;
  for (const auto& t : pred) correct += ref.count(t);
  return make_prf(correct, pred.size(), ref.size());
}

std::vector<TokenKey> gold_event_tokens(const std::vector<Document>& docs) {
  std::vector<TokenKey> out;
  for (const auto& d : docs)
    for (const auto& e : d.events) out.push_back(TokenKey{d.id, e.sentence, span_head(d.sentences.at(e.sentence), e.first, e.last)});
  return out;
}

std::vector<GoldPair> gold_pairs(const std::vector<Document>& docs) {
  std::vector<GoldPair> out;
  for (const auto& d : docs)
    for (const auto& p : d.pairs) out.push_back(GoldPair{PairKey{d.id, p.source, p.target}, p.label});
  return out;
}

}  // namespace sgt
