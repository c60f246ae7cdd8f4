#include "sgt/analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <optional>
#include <set>

#include "sgt/error.hpp"

namespace sgt {
namespace {

constexpr const char* kModule = "train_eval";

class RelationLookup {
 public:
  RelationLookup(std::span<const RelationPrediction> predictions, const LabelScheme& scheme) : scheme_(scheme) {
    for (const auto& p : predictions) {
      direct_[{p.source, p.target}] = p.label;
      events_.insert(p.source);
      events_.insert(p.target);
    }
  }

  std::optional<std::size_t> direct(const std::string& a, const std::string& b) const {
    const auto it = direct_.find({a, b});
    if (it == direct_.end()) return std::nullopt;
    return it->second;
  }

  /// a->b label, falling back to the converse of b->a.
  std::optional<std::size_t> effective(const std::string& a, const std::string& b) const {
    if (auto d = direct(a, b)) return d;
    if (auto r = direct(b, a)) return scheme_.converse(*r);
    return std::nullopt;
  }

  const std::set<std::string>& events() const { return events_; }
  const std::map<std::pair<std::string, std::string>, std::size_t>& all() const { return direct_; }

 private:
  const LabelScheme& scheme_;
  std::map<std::pair<std::string, std::string>, std::size_t> direct_;
  std::set<std::string> events_;
};

}  // namespace

ConsistencyReport consistency_report(std::span<const RelationPrediction> predictions, const LabelScheme& scheme) {
  const auto before = scheme.index_of("Before");
  const auto simultaneous = scheme.index_of("Simultaneous");
  RelationLookup lookup(predictions, scheme);
  ConsistencyReport report;

  for (const auto& [pair, label] : lookup.all()) {
    const auto& [a, b] = pair;
    if (!(a < b)) continue;
    if (auto rev = lookup.direct(b, a)) {
      ++report.checked_pairs;
      if (*rev != scheme.converse(label)) ++report.symmetry;
    }
  }

  const std::vector<std::string> events(lookup.events().begin(), lookup.events().end());
  const auto n = events.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        const std::string* tri[3] = {&events[i], &events[j], &events[k]};
        bool before_violation = false, simultaneous_violation = false, checked = false;
        // Every ordering (a, b, c) of the three events.
        int perm[3] = {0, 1, 2};
        do {
          const auto& a = *tri[perm[0]];
          const auto& b = *tri[perm[1]];
          const auto& c = *tri[perm[2]];
          const auto ab = lookup.effective(a, b);
          const auto bc = lookup.effective(b, c);
          const auto ac = lookup.effective(a, c);
          if (!ab || !bc || !ac) continue;
          checked = true;
          if (*ab == before && *bc == before && *ac != before) before_violation = true;
          const bool sim_chain = (*ab == simultaneous && *bc == before) || (*ab == before && *bc == simultaneous);
          if (sim_chain && *ac != before) simultaneous_violation = true;
        } while (std::next_permutation(perm, perm + 3));
        report.checked_triples += checked;
        report.transitivity += before_violation;
        report.simultaneous_chains += simultaneous_violation;
      }
  return report;
}

const std::vector<std::string>& width_bucket_names() {
  static const std::vector<std::string> names = {"<10", "10-20", ">20"};
  return names;
}

std::size_t width_bucket(std::size_t width) {
  if (width < 10) return 0;
  if (width <= 20) return 1;
  return 2;
}

std::vector<WidthBucket> context_width_report(std::span<const WidthItem> items, const LabelScheme& scheme) {
  const auto& names = width_bucket_names();
  std::vector<WidthBucket> buckets(names.size());
  std::vector<std::size_t> correct(names.size()), predicted(names.size()), gold(names.size());
  for (std::size_t b = 0; b < names.size(); ++b) buckets[b].name = names[b];
  for (const auto& it : items) {
    const auto b = width_bucket(it.width);
    ++buckets[b].count;
    if (it.gold == scheme.vague()) continue;
    ++gold[b];
    if (it.predicted && *it.predicted != scheme.vague()) {
      ++predicted[b];
      if (*it.predicted == it.gold) ++correct[b];
    }
  }
  for (std::size_t b = 0; b < names.size(); ++b)
    if (buckets[b].count > 0) buckets[b].score = make_prf(correct[b], predicted[b], gold[b]);
  return buckets;
}

std::string cue_provenance_name(CueProvenance provenance) {
  switch (provenance) {
    case CueProvenance::kPath:
      return "path";
    case CueProvenance::kNeighbor:
      return "neighbor";
    case CueProvenance::kBoth:
      return "both";
  }
  return "unknown";
}

CueProvenance cue_provenance(const SyntaxContext& context, std::size_t edge, const SentenceGraph& graph) {
  const bool on_path = std::find(context.path_edges.begin(), context.path_edges.end(), edge) != context.path_edges.end();
  if (!on_path) return CueProvenance::kNeighbor;
  const auto& t = graph.edges().at(edge);
  const bool touches_event = t.head == context.source || t.dependent == context.source || t.head == context.target ||
                             t.dependent == context.target;
  return touches_event ? CueProvenance::kBoth : CueProvenance::kPath;
}

std::vector<CueResult> cue_report(std::span<const CueInput> inputs, std::size_t k) {
  if (k == 0) throw Error(kModule, "cue_report: k must be positive", Error::Kind::kUsage);
  std::vector<CueResult> out;
  for (const auto& in : inputs) {
    if (!in.graph || !in.context) throw Error(kModule, "cue_report: input lacks graph or context", Error::Kind::kUsage);
    const auto n = in.phi_edges.size();
    if (in.head_weights.empty()) throw Error(kModule, "cue_report: no attention heads", Error::Kind::kUsage);
    std::vector<double> mean(n, 0.0);
    for (const auto& head : in.head_weights) {
      if (head.size() != n) throw Error(kModule, "cue_report: head weights do not align with phi edges", Error::Kind::kUsage);
      for (std::size_t i = 0; i < n; ++i) mean[i] += head[i] / static_cast<double>(in.head_weights.size());
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mean[a] > mean[b]; });

    CueResult r;
    r.truncated = k > n;
    for (double w : mean) r.total_weight += w;
    for (std::size_t i = 0; i < std::min(k, n); ++i) {
      const auto edge = in.phi_edges[order[i]];
      r.top.push_back(CueCandidate{edge, in.graph->edges().at(edge), mean[order[i]], cue_provenance(*in.context, edge, *in.graph)});
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sgt
