#pragma once

// Dependency graph over a window of one or two adjacent sentences, and the
// triple sets consumed by the two attention mechanisms.
//
// Node ids number the window's tokens in surface order (first sentence, then
// second). Edges point head -> dependent. A two-sentence window gets one
// extra edge from the first sentence's root to the second sentence's root,
// labeled with Vocabularies::kCrossSentence, so the window is a single tree.

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sgt/corpus.hpp"

namespace sgt {

struct Triple {
  std::size_t head = 0;
  std::size_t relation = 0;
  std::size_t dependent = 0;

  auto operator<=>(const Triple&) const = default;
};

struct NodeRef {
  std::size_t sentence = 0;  // index within the document
  int token = 0;             // 1-based CoNLL-U id

  auto operator<=>(const NodeRef&) const = default;
};

class SentenceGraph {
 public:
  SentenceGraph() = default;

  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<NodeRef>& nodes() const { return nodes_; }
  const std::vector<Triple>& edges() const { return edges_; }
  const std::vector<std::size_t>& roots() const { return roots_; }
  const std::vector<std::size_t>& window() const { return window_; }

  /// Node id of a window token; throws if the token is outside the window.
  std::size_t node_of(std::size_t sentence, int token) const;
  /// Index of the edge entering `node`; none for the window root.
  bool has_parent(std::size_t node) const;
  std::size_t in_edge(std::size_t node) const;
  const std::vector<std::size_t>& out_edges(std::size_t node) const;
  /// Edge indices of N_in(node) followed by N_out(node).
  std::vector<std::size_t> incident_edges(std::size_t node) const;
  std::size_t parent(std::size_t node) const { return edges_.at(in_edge(node)).head; }
  std::size_t depth(std::size_t node) const { return depth_.at(node); }

  void check_node(std::size_t node) const;

 private:
  friend SentenceGraph build_graph(const Document&, std::span<const std::size_t>, const Vocabularies&);

  std::vector<NodeRef> nodes_;
  std::vector<Triple> edges_;
  std::vector<std::size_t> roots_;
  std::vector<std::size_t> window_;
  std::vector<std::size_t> in_edge_;                 // npos for the window root
  std::vector<std::vector<std::size_t>> out_edges_;  // sorted by edge index
  std::vector<std::size_t> depth_;
};

struct NeighborTriples {
  std::vector<Triple> incoming;  // node is the dependent
  std::vector<Triple> outgoing;  // node is the head
};

struct SyntaxContext {
  std::size_t source = 0;
  std::size_t target = 0;
  std::vector<std::size_t> theta;       // path nodes from source to target, endpoints included
  std::vector<std::size_t> path_edges;  // edge indices along the path, source side first
  std::vector<std::size_t> phi_edges;   // unique edge indices, ascending
  std::vector<Triple> path;
  std::vector<Triple> phi;  // aligned with phi_edges
};

SentenceGraph build_graph(const Document& doc, std::span<const std::size_t> window, const Vocabularies& vocabs);

NeighborTriples neighbor_triples(const SentenceGraph& graph, std::size_t node);
std::vector<std::size_t> path_edges(const SentenceGraph& graph, std::size_t source, std::size_t target);
std::vector<Triple> path_triples(const SentenceGraph& graph, std::size_t source, std::size_t target);
SyntaxContext syntax_context(const SentenceGraph& graph, std::size_t source, std::size_t target);

/// Token of a (possibly multi-token) span that is closest to the sentence
/// root; ties go to the leftmost token.
int span_head(const Sentence& sentence, int first, int last);
/// Graph node for an event mention, by span_head.
std::size_t event_node(const SentenceGraph& graph, const Document& doc, const EventMention& event);

/// One triple per line "head deprel dependent" using token forms.
std::string dump_graph(const SentenceGraph& graph, const Document& doc, const Vocabularies& vocabs);
std::string dump_context(const SyntaxContext& context, const SentenceGraph& graph, const Document& doc,
                         const Vocabularies& vocabs);

}  // namespace sgt
