#include "sgt/report.hpp"

#include <fmt/format.h>

#include <json.hpp>

namespace sgt {
namespace {

using nlohmann::json;

json prf_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
          {"correct", p.correct},     {"predicted", p.predicted}, {"gold", p.gold}};
}

std::string pct(double v) { return fmt::format("{:.1f}", 100.0 * v); }

std::string triple_text(const Triple& t, const std::vector<std::string>& forms, const Vocabularies& vocabs) {
  auto form = [&](std::size_t n) { return n < forms.size() ? forms[n] : std::to_string(n); };
  return fmt::format("({}, {}, {})", form(t.head), vocabs.deprel(t.relation), form(t.dependent));
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string epoch_json(const EpochLog& log) {
  json j = {{"epoch", log.epoch},
            {"phase", log.phase},
            {"event_loss", log.event_loss},
            {"relation_loss", log.relation_loss},
            {"event_grad_norm", log.event_grad_norm},
            {"relation_grad_norm", log.relation_grad_norm},
            {"learning_rate", log.learning_rate}};
  if (log.has_dev) {
    j["dev_events"] = prf_json(log.dev_events);
    j["dev_relations"] = prf_json(log.dev_relations);
  }
  return j.dump();
}

std::string epoch_table(std::span<const EpochLog> logs) {
  std::string out = fmt::format("{:>5} {:>6} {:>11} {:>11} {:>10} {:>10} {:>7} {:>7}\n", "epoch", "phase",
                                "event_loss", "rel_loss", "ev_gnorm", "rel_gnorm", "dev_ev", "dev_rel");
  for (const auto& l : logs) {
    out += fmt::format("{:>5} {:>6} {:>11.6f} {:>11.6f} {:>10.4g} {:>10.4g} {:>7} {:>7}\n", l.epoch, l.phase,
                       l.event_loss, l.relation_loss, l.event_grad_norm, l.relation_grad_norm,
                       l.has_dev ? pct(l.dev_events.f1) : "-", l.has_dev ? pct(l.dev_relations.f1) : "-");
  }
  return out;
}

std::string eval_json(const EvalReport& report, const LabelScheme& scheme) {
  json j = {{"setting", eval_setting_name(report.setting)},
            {"scheme", scheme.name()},
            {"events", prf_json(report.events)},
            {"relations", prf_json(report.relations)},
            {"labels", scheme.labels()},
            {"confusion", report.confusion},
            {"evaluated_pairs", report.evaluated_pairs},
            {"skipped_vague", report.skipped_vague},
            {"undetected_pairs", report.undetected_pairs},
            {"candidate_pairs", report.candidate_pairs}};
  return j.dump();
}

std::string eval_table(const EvalReport& report, const LabelScheme& scheme) {
  std::string out = fmt::format("setting: {}\n", eval_setting_name(report.setting));
  out += fmt::format("{:<10} {:>6} {:>6} {:>6}\n", "", "P", "R", "F");
  out += fmt::format("{:<10} {:>6} {:>6} {:>6}\n", "events", pct(report.events.precision), pct(report.events.recall),
                     pct(report.events.f1));
  out += fmt::format("{:<10} {:>6} {:>6} {:>6}\n", "relations", pct(report.relations.precision),
                     pct(report.relations.recall), pct(report.relations.f1));
  out += fmt::format("evaluated pairs: {}  skipped vague: {}  undetected: {}\n", report.evaluated_pairs,
                     report.skipped_vague, report.undetected_pairs);
  out += "\nconfusion (rows gold, columns predicted)\n";
  out += fmt::format("{:<13}", "");
  for (const auto& l : scheme.labels()) out += fmt::format(" {:>12}", l);
  out += fmt::format(" {:>12}\n", "none");
  for (std::size_t g = 0; g < report.confusion.size(); ++g) {
    out += fmt::format("{:<13}", scheme.label(g));
    for (auto c : report.confusion[g]) out += fmt::format(" {:>12}", c);
    out += "\n";
  }
  return out;
}

std::string label_stats_json(const LabelStats& stats) {
  json rows = json::array();
  for (const auto& r : stats.rows) rows.push_back({{"label", r.label}, {"count", r.count}, {"percent", r.percent}});
  return json{{"total", stats.total}, {"rows", rows}}.dump();
}

std::string grid_json(const GridResult& result) {
  std::string out;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& r = result.rows[i];
    out += json{{"cell", r.cell.index},
                {"learning_rate", r.cell.learning_rate},
                {"batch_size", r.cell.batch_size},
                {"layers", r.cell.layers},
                {"heads", r.cell.heads},
                {"dev_relation_f", r.dev_relation_f},
                {"dev_event_f", r.dev_event_f},
                {"best", i == result.best}}
               .dump();
    out += "\n";
  }
  return out;
}

std::string grid_table(const GridResult& result) {
  std::string out = fmt::format("{:>4} {:>10} {:>6} {:>6} {:>5} {:>8} {:>8}\n", "cell", "lr", "batch", "layers",
                                "heads", "dev_rel", "dev_ev");
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& r = result.rows[i];
    out += fmt::format("{:>4} {:>10.3g} {:>6} {:>6} {:>5} {:>8} {:>8}{}\n", r.cell.index, r.cell.learning_rate,
                       r.cell.batch_size, r.cell.layers, r.cell.heads, pct(r.dev_relation_f), pct(r.dev_event_f),
                       i == result.best ? "  *" : "");
  }
  return out;
}

std::string consistency_json(const ConsistencyReport& r) {
  return json{{"symmetry", r.symmetry},
              {"transitivity", r.transitivity},
              {"simultaneous_chains", r.simultaneous_chains},
              {"checked_pairs", r.checked_pairs},
              {"checked_triples", r.checked_triples}}
      .dump();
}

std::string consistency_table(const ConsistencyReport& r) {
  return fmt::format(
      "symmetry violations:      {}\ntransitivity violations:  {}\nsimultaneous chains (info): {}\n"
      "pairs checked: {}  triples checked: {}\n",
      r.symmetry, r.transitivity, r.simultaneous_chains, r.checked_pairs, r.checked_triples);
}

std::string width_json(std::span<const WidthBucket> buckets) {
  std::string out;
  for (const auto& b : buckets) {
    json j = {{"bucket", b.name}, {"count", b.count}};
    j["score"] = b.score ? prf_json(*b.score) : json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

std::string width_table(std::span<const WidthBucket> buckets) {
  std::string out = fmt::format("{:<7} {:>6} {:>6}\n", "width", "count", "F");
  for (const auto& b : buckets) out += fmt::format("{:<7} {:>6} {:>6}\n", b.name, b.count, b.score ? pct(b.score->f1) : "-");
  return out;
}

std::string cue_json(std::span<const CueRecord> records, const Vocabularies& vocabs) {
  std::string out;
  for (const auto& rec : records) {
    json top = json::array();
    for (const auto& c : rec.result.top) {
      top.push_back({{"edge", c.edge},
                     {"triple", triple_text(c.triple, rec.node_forms, vocabs)},
                     {"weight", c.weight},
                     {"provenance", cue_provenance_name(c.provenance)}});
    }
    out += json{{"doc", rec.key.doc},
                {"source", rec.key.source},
                {"target", rec.key.target},
                {"truncated", rec.result.truncated},
                {"top", top}}
               .dump();
    out += "\n";
  }
  return out;
}

std::string cue_table(std::span<const CueRecord> records, const Vocabularies& vocabs) {
  std::string out;
  for (const auto& rec : records) {
    out += fmt::format("{} {}->{}{}\n", rec.key.doc, rec.key.source, rec.key.target,
                       rec.result.truncated ? " (all triples)" : "");
    for (const auto& c : rec.result.top) {
      out += fmt::format("  {:.4f} {:<9} {}\n", c.weight, cue_provenance_name(c.provenance),
                         triple_text(c.triple, rec.node_forms, vocabs));
    }
  }
  return out;
}

}  // namespace sgt
