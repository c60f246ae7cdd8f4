#pragma once

// Documents, label schemes and vocabularies, plus the two on-disk formats the
// pipeline ingests:
//
// * CoNLL-U (10 tab-separated columns; ID, FORM, UPOS, HEAD and DEPREL are
//   consumed). Multiword ("1-2") and empty-node ("1.1") lines are rejected.
//   "# newdoc" starts a new document; a blank line ends a sentence.
//
// * Annotation side-file, one record per line:
//     DOC <doc-id>
//     EVENT <event-id> <sentence> <first-token> <last-token>
//     PAIR <source-event-id> <target-event-id> <LABEL>
//   Sentences are 0-based within the document; tokens are 1-based (CoNLL-U
//   IDs). Labels match the scheme case-insensitively. '#' starts a comment.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sgt {

struct Token {
  int index = 0;  // 1-based
  std::string form;
  std::string upos;
  int head = 0;  // 0 = sentence root
  std::string deprel;

  bool operator==(const Token&) const = default;
};

using Sentence = std::vector<Token>;

struct EventMention {
  std::string id;
  std::size_t sentence = 0;
  int first = 0;
  int last = 0;

  bool operator==(const EventMention&) const = default;
};

struct LabeledPair {
  std::string source;
  std::string target;
  std::size_t label = 0;

  bool operator==(const LabeledPair&) const = default;
};

struct Document {
  std::string id;
  std::vector<Sentence> sentences;
  std::vector<EventMention> events;
  std::vector<LabeledPair> pairs;

  const EventMention* find_event(const std::string& event_id) const;
  bool operator==(const Document&) const = default;
};

class LabelScheme {
 public:
  static LabelScheme tb_dense();
  static LabelScheme matres();
  /// "matres" or "tbdense"/"tb-dense" (case-insensitive).
  static LabelScheme by_name(const std::string& name);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t vague() const { return vague_; }
  const std::string& label(std::size_t index) const { return labels_.at(index); }

  /// Case-insensitive lookup; throws listing the valid labels.
  std::size_t index_of(const std::string& label) const;
  std::optional<std::size_t> find(const std::string& label) const;
  /// Label of the reversed pair (Before <-> After, Includes <-> Is_Included,
  /// Simultaneous and Vague map to themselves).
  std::size_t converse(std::size_t index) const;

 private:
  LabelScheme(std::string name, std::vector<std::string> labels);
  std::string name_;
  std::vector<std::string> labels_;
  std::size_t vague_ = 0;
};

/// Token-form, UPOS and DEPREL id maps. Token id 0 is the shared unknown
/// token; deprel id 0 is the reserved cross-sentence relation.
class Vocabularies {
 public:
  static constexpr std::size_t kUnknownToken = 0;
  static constexpr std::size_t kCrossSentence = 0;
  static constexpr const char* kUnknownForm = "<unk>";
  static constexpr const char* kCrossSentenceLabel = "<cross-sentence>";

  Vocabularies();

  std::size_t token_id(const std::string& form) const;
  std::size_t upos_id(const std::string& upos) const;
  std::size_t deprel_id(const std::string& deprel) const;

  std::size_t token_count() const { return forms_.size(); }
  std::size_t upos_count() const { return upos_.size(); }
  std::size_t deprel_count() const { return deprels_.size(); }

  const std::string& form(std::size_t id) const { return forms_.at(id); }
  const std::string& upos(std::size_t id) const { return upos_.at(id); }
  const std::string& deprel(std::size_t id) const { return deprels_.at(id); }

  void add_form(const std::string& form);
  void add_upos(const std::string& upos);
  void add_deprel(const std::string& deprel);

  void write(std::ostream& out) const;
  static Vocabularies read(std::istream& in);
  void save(const std::string& path) const;
  static Vocabularies load(const std::string& path);

  bool operator==(const Vocabularies& other) const;

 private:
  std::vector<std::string> forms_, upos_, deprels_;
  std::map<std::string, std::size_t> form_ids_, upos_ids_, deprel_ids_;
};

std::vector<Document> read_conllu(std::istream& in, const std::string& source_name = "<stream>");
std::vector<Document> load_conllu(const std::string& path);
void write_conllu(std::ostream& out, const std::vector<Document>& docs);
void save_conllu(const std::string& path, const std::vector<Document>& docs);

/// Checks 1..n ids, head range, a single root and acyclicity. Throws naming
/// `where` on violation.
void validate_sentence(const Sentence& sentence, const std::string& where);

struct AnnotationLoadResult {
  std::size_t pairs_accepted = 0;
  std::size_t pairs_dropped = 0;  // source/target more than one sentence apart
  std::vector<std::string> warnings;
};

AnnotationLoadResult read_annotations(std::istream& in, std::vector<Document>& docs,
                                      const LabelScheme& scheme,
                                      const std::string& source_name = "<stream>");
AnnotationLoadResult load_annotations(const std::string& path, std::vector<Document>& docs,
                                      const LabelScheme& scheme);
void write_annotations(std::ostream& out, const std::vector<Document>& docs, const LabelScheme& scheme);
void save_annotations(const std::string& path, const std::vector<Document>& docs, const LabelScheme& scheme);

/// Builds vocabularies from training documents.
Vocabularies build_vocabs(const std::vector<Document>& docs);

struct LabelStatsRow {
  std::string label;
  std::size_t count = 0;
  double percent = 0.0;
};

struct LabelStats {
  std::vector<LabelStatsRow> rows;
  std::size_t total = 0;
};

LabelStats label_stats(const std::vector<Document>& docs, const LabelScheme& scheme);
/// Aligned table with one-decimal percentages.
std::string format_label_stats(const LabelStats& stats);

}  // namespace sgt
