#include "sgt/corpus.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "sgt/error.hpp"

namespace sgt {
namespace {

constexpr const char* kModule = "corpus_io";

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    cols.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cols;
}

int parse_int(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw Error(kModule, fmt::format("{}: expected an integer, got '{}'", where, text));
  return value;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const EventMention* Document::find_event(const std::string& event_id) const {
  for (const auto& e : events)
    if (e.id == event_id) return &e;
  return nullptr;
}

// ---------------------------------------------------------------------------
// LabelScheme

LabelScheme::LabelScheme(std::string name, std::vector<std::string> labels)
    : name_(std::move(name)), labels_(std::move(labels)) {
  vague_ = index_of("Vague");
}

LabelScheme LabelScheme::tb_dense() {
  return LabelScheme("tbdense", {"Before", "After", "Includes", "Is_Included", "Simultaneous", "Vague"});
}

LabelScheme LabelScheme::matres() { return LabelScheme("matres", {"Before", "After", "Simultaneous", "Vague"}); }

LabelScheme LabelScheme::by_name(const std::string& name) {
  const auto n = upper(name);
  if (n == "MATRES") return matres();
  if (n == "TBDENSE" || n == "TB-DENSE" || n == "TB_DENSE") return tb_dense();
  throw Error(kModule, fmt::format("unknown label scheme '{}' (expected matres or tbdense)", name), Error::Kind::kUsage);
}

std::optional<std::size_t> LabelScheme::find(const std::string& label) const {
  const auto u = upper(label);
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (upper(labels_[i]) == u) return i;
  return std::nullopt;
}

std::size_t LabelScheme::index_of(const std::string& label) const {
  if (auto idx = find(label)) return *idx;
  throw Error(kModule, fmt::format("unknown label '{}' for scheme {} (valid: {})", label, name_, fmt::join(labels_, ", ")));
}

std::size_t LabelScheme::converse(std::size_t index) const {
  static const std::map<std::string, std::string> kConverse = {
      {"Before", "After"}, {"After", "Before"}, {"Includes", "Is_Included"}, {"Is_Included", "Includes"}};
  const auto& name = labels_.at(index);
  if (auto it = kConverse.find(name); it != kConverse.end()) return index_of(it->second);
  return index;
}

// ---------------------------------------------------------------------------
// Vocabularies

Vocabularies::Vocabularies() {
  add_form(kUnknownForm);
  add_deprel(kCrossSentenceLabel);
}

void Vocabularies::add_form(const std::string& form) {
  if (form_ids_.emplace(form, forms_.size()).second) forms_.push_back(form);
}
void Vocabularies::add_upos(const std::string& upos) {
  if (upos_ids_.emplace(upos, upos_.size()).second) upos_.push_back(upos);
}
void Vocabularies::add_deprel(const std::string& deprel) {
  if (deprel_ids_.emplace(deprel, deprels_.size()).second) deprels_.push_back(deprel);
}

std::size_t Vocabularies::token_id(const std::string& form) const {
  const auto it = form_ids_.find(form);
  return it == form_ids_.end() ? kUnknownToken : it->second;
}

std::size_t Vocabularies::upos_id(const std::string& upos) const {
  const auto it = upos_ids_.find(upos);
  if (it == upos_ids_.end()) {
    throw Error(kModule, fmt::format("UPOS tag '{}' is not in the vocabulary (known: {})", upos, fmt::join(upos_, ", ")));
  }
  return it->second;
}

std::size_t Vocabularies::deprel_id(const std::string& deprel) const {
  const auto it = deprel_ids_.find(deprel);
  if (it == deprel_ids_.end()) {
    throw Error(kModule, fmt::format("dependency relation '{}' is not in the vocabulary", deprel));
  }
  return it->second;
}

void Vocabularies::write(std::ostream& out) const {
  auto section = [&out](const char* name, const std::vector<std::string>& items) {
    out << name << ' ' << items.size() << '\n';
    for (const auto& s : items) out << s << '\n';
  };
  out << "sgt-vocab 1\n";
  section("forms", forms_);
  section("upos", upos_);
  section("deprel", deprels_);
}

Vocabularies Vocabularies::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "sgt-vocab 1") throw Error(kModule, "vocabulary file: bad header");
  auto read_section = [&in](const char* expected) {
    std::string header;
    if (!std::getline(in, header)) throw Error(kModule, fmt::format("vocabulary file: missing section {}", expected));
    std::istringstream hs(header);
    std::string name;
    std::size_t n = 0;
    if (!(hs >> name >> n) || name != expected) {
      throw Error(kModule, fmt::format("vocabulary file: expected section {}, got '{}'", expected, header));
    }
    std::vector<std::string> items(n);
    for (auto& item : items)
      if (!std::getline(in, item)) throw Error(kModule, fmt::format("vocabulary file: section {} truncated", expected));
    return items;
  };
  Vocabularies v;
  v.forms_.clear();
  v.form_ids_.clear();
  v.deprels_.clear();
  v.deprel_ids_.clear();
  for (const auto& s : read_section("forms")) v.add_form(s);
  for (const auto& s : read_section("upos")) v.add_upos(s);
  for (const auto& s : read_section("deprel")) v.add_deprel(s);
  if (v.forms_.empty() || v.forms_[kUnknownToken] != kUnknownForm || v.deprels_.empty() ||
      v.deprels_[kCrossSentence] != kCrossSentenceLabel) {
    throw Error(kModule, "vocabulary file: reserved entries missing");
  }
  return v;
}

void Vocabularies::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, fmt::format("cannot write vocabulary '{}'", path));
  write(out);
}

Vocabularies Vocabularies::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, fmt::format("cannot open vocabulary '{}'", path));
  return read(in);
}

bool Vocabularies::operator==(const Vocabularies& other) const {
  return forms_ == other.forms_ && upos_ == other.upos_ && deprels_ == other.deprels_;
}

Vocabularies build_vocabs(const std::vector<Document>& docs) {
  Vocabularies v;
  std::set<std::string> upos, deprels;
  for (const auto& d : docs)
    for (const auto& s : d.sentences)
      for (const auto& t : s) {
        v.add_form(t.form);
        upos.insert(t.upos);
        deprels.insert(t.deprel);
      }
  // Sorted so ids do not depend on corpus order.
  for (const auto& u : upos) v.add_upos(u);
  for (const auto& r : deprels) v.add_deprel(r);
  return v;
}

// ---------------------------------------------------------------------------
// CoNLL-U

void validate_sentence(const Sentence& sentence, const std::string& where) {
  if (sentence.empty()) throw Error(kModule, fmt::format("{}: empty sentence", where));
  const int n = static_cast<int>(sentence.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const auto& t = sentence[i];
    if (t.index != i + 1) throw Error(kModule, fmt::format("{}: token ids must run 1..{}, found {} at position {}", where, n, t.index, i + 1));
    if (t.head < 0 || t.head > n) throw Error(kModule, fmt::format("{}: token {} has head {} outside [0, {}]", where, t.index, t.head, n));
    if (t.head == 0) ++roots;
  }
  if (roots != 1) throw Error(kModule, fmt::format("{}: expected exactly one root, found {}", where, roots));
  for (int i = 0; i < n; ++i) {
    int cur = i + 1;
    for (int steps = 0; cur != 0; ++steps) {
      if (steps > n) throw Error(kModule, fmt::format("{}: head links form a cycle through token {}", where, i + 1));
      cur = sentence[cur - 1].head;
    }
  }
}

std::vector<Document> read_conllu(std::istream& in, const std::string& source_name) {
  std::vector<Document> docs;
  Sentence current;
  std::size_t line_no = 0, sentence_start = 0;

  auto ensure_doc = [&docs]() -> Document& {
    if (docs.empty()) docs.push_back(Document{"doc0", {}, {}, {}});
    return docs.back();
  };
  auto flush = [&]() {
    if (current.empty()) return;
    auto& doc = ensure_doc();
    validate_sentence(current, fmt::format("{} document '{}' sentence {} (line {})", source_name, doc.id,
                                           doc.sentences.size(), sentence_start));
    doc.sentences.push_back(std::move(current));
    current.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (line.front() == '#') {
      const auto body = trim(line.substr(1));
      if (body.rfind("newdoc", 0) == 0) {
        flush();
        std::string id;
        if (const auto eq = body.find('='); eq != std::string::npos) id = trim(body.substr(eq + 1));
        if (id.empty()) id = fmt::format("doc{}", docs.size());
        docs.push_back(Document{id, {}, {}, {}});
      }
      continue;
    }
    const auto where = fmt::format("{} line {}", source_name, line_no);
    const auto cols = split_tabs(line);
    if (cols.size() != 10) throw Error(kModule, fmt::format("{}: expected 10 tab-separated columns, got {}", where, cols.size()));
    if (cols[0].find_first_of("-.") != std::string::npos) {
      throw Error(kModule, fmt::format("{}: multiword and empty-node lines are not supported ('{}')", where, cols[0]));
    }
    if (current.empty()) sentence_start = line_no;
    Token t;
    t.index = parse_int(cols[0], where);
    t.form = cols[1];
    t.upos = cols[3];
    t.head = parse_int(cols[6], where);
    t.deprel = cols[7];
    current.push_back(std::move(t));
  }
  flush();
  return docs;
}

std::vector<Document> load_conllu(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, fmt::format("cannot open CoNLL-U file '{}'", path));
  return read_conllu(in, path);
}

void write_conllu(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& doc : docs) {
    out << "# newdoc id = " << doc.id << '\n';
    for (const auto& s : doc.sentences) {
      for (const auto& t : s) {
        out << t.index << '\t' << t.form << "\t_\t" << t.upos << "\t_\t_\t" << t.head << '\t' << t.deprel << "\t_\t_\n";
      }
      out << '\n';
    }
  }
}

void save_conllu(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, fmt::format("cannot write '{}'", path));
  write_conllu(out, docs);
}

// ---------------------------------------------------------------------------
// Annotations

AnnotationLoadResult read_annotations(std::istream& in, std::vector<Document>& docs, const LabelScheme& scheme,
                                      const std::string& source_name) {
  AnnotationLoadResult result;
  Document* doc = nullptr;
  struct PendingPair {
    std::string source, target;
    std::size_t label;
    std::size_t line;
  };
  std::vector<PendingPair> pending;

  auto resolve = [&]() {
    if (!doc) return;
    for (const auto& p : pending) {
      const auto where = fmt::format("{} line {}", source_name, p.line);
      const auto* s = doc->find_event(p.source);
      const auto* t = doc->find_event(p.target);
      if (!s || !t) {
        throw Error(kModule, fmt::format("{}: pair references unknown event '{}'", where, !s ? p.source : p.target));
      }
      if (p.source == p.target) throw Error(kModule, fmt::format("{}: pair links event '{}' to itself", where, p.source));
      const auto gap = s->sentence > t->sentence ? s->sentence - t->sentence : t->sentence - s->sentence;
      if (gap > 1) {
        ++result.pairs_dropped;
        result.warnings.push_back(fmt::format("{}: dropped pair {} -> {} ({} sentences apart)", where, p.source, p.target, gap));
        continue;
      }
      doc->pairs.push_back(LabeledPair{p.source, p.target, p.label});
      ++result.pairs_accepted;
    }
    pending.clear();
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    const auto where = fmt::format("{} line {}", source_name, line_no);
    std::vector<std::string> fields;
    for (std::string f; ls >> f;) fields.push_back(f);

    if (kind == "DOC") {
      if (fields.size() != 1) throw Error(kModule, fmt::format("{}: DOC takes one field", where));
      resolve();
      auto it = std::find_if(docs.begin(), docs.end(), [&](const Document& d) { return d.id == fields[0]; });
      if (it == docs.end()) throw Error(kModule, fmt::format("{}: unknown document '{}'", where, fields[0]));
      doc = &*it;
    } else if (kind == "EVENT") {
      if (!doc) throw Error(kModule, fmt::format("{}: EVENT before any DOC", where));
      if (fields.size() != 4) throw Error(kModule, fmt::format("{}: EVENT takes 4 fields", where));
      EventMention e;
      e.id = fields[0];
      const int sent = parse_int(fields[1], where);
      e.first = parse_int(fields[2], where);
      e.last = parse_int(fields[3], where);
      if (sent < 0 || static_cast<std::size_t>(sent) >= doc->sentences.size()) {
        throw Error(kModule, fmt::format("{}: event '{}' sentence {} out of range (document has {})", where, e.id, sent, doc->sentences.size()));
      }
      e.sentence = static_cast<std::size_t>(sent);
      const int len = static_cast<int>(doc->sentences[e.sentence].size());
      if (e.first < 1 || e.last < e.first || e.last > len) {
        throw Error(kModule, fmt::format("{}: event '{}' span [{}, {}] outside sentence of {} tokens", where, e.id, e.first, e.last, len));
      }
      if (doc->find_event(e.id)) throw Error(kModule, fmt::format("{}: duplicate event id '{}'", where, e.id));
      doc->events.push_back(std::move(e));
    } else if (kind == "PAIR") {
      if (!doc) throw Error(kModule, fmt::format("{}: PAIR before any DOC", where));
      if (fields.size() != 3) throw Error(kModule, fmt::format("{}: PAIR takes 3 fields", where));
      pending.push_back(PendingPair{fields[0], fields[1], scheme.index_of(fields[2]), line_no});
    } else {
      throw Error(kModule, fmt::format("{}: unknown record type '{}'", where, kind));
    }
  }
  resolve();
  return result;
}

AnnotationLoadResult load_annotations(const std::string& path, std::vector<Document>& docs, const LabelScheme& scheme) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, fmt::format("cannot open annotation file '{}'", path));
  return read_annotations(in, docs, scheme, path);
}

void write_annotations(std::ostream& out, const std::vector<Document>& docs, const LabelScheme& scheme) {
  for (const auto& doc : docs) {
    if (doc.events.empty() && doc.pairs.empty()) continue;
    out << "DOC " << doc.id << '\n';
    for (const auto& e : doc.events) out << "EVENT " << e.id << ' ' << e.sentence << ' ' << e.first << ' ' << e.last << '\n';
    for (const auto& p : doc.pairs) out << "PAIR " << p.source << ' ' << p.target << ' ' << upper(scheme.label(p.label)) << '\n';
  }
}

void save_annotations(const std::string& path, const std::vector<Document>& docs, const LabelScheme& scheme) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, fmt::format("cannot write '{}'", path));
  write_annotations(out, docs, scheme);
}

// ---------------------------------------------------------------------------
// Statistics

LabelStats label_stats(const std::vector<Document>& docs, const LabelScheme& scheme) {
  LabelStats stats;
  std::vector<std::size_t> counts(scheme.size(), 0);
  for (const auto& d : docs)
    for (const auto& p : d.pairs) {
      ++counts.at(p.label);
      ++stats.total;
    }
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    const double pct = stats.total ? 100.0 * static_cast<double>(counts[i]) / static_cast<double>(stats.total) : 0.0;
    stats.rows.push_back(LabelStatsRow{scheme.label(i), counts[i], pct});
  }
  return stats;
}

std::string format_label_stats(const LabelStats& stats) {
  std::size_t width = 5;
  for (const auto& r : stats.rows) width = std::max(width, r.label.size());
  std::string out = fmt::format("{:<{}}  {:>7}  {:>6}\n", "Label", width, "Count", "%");
  for (const auto& r : stats.rows) out += fmt::format("{:<{}}  {:>7}  {:>5.1f}%\n", r.label, width, r.count, r.percent);
  out += fmt::format("{:<{}}  {:>7}\n", "Total", width, stats.total);
  return out;
}

}  // namespace sgt
