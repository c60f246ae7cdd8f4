#include "sgt/dep_graph.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>

#include "sgt/error.hpp"

namespace sgt {
namespace {

constexpr const char* kModule = "dep_graph";
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

}  // namespace

std::size_t SentenceGraph::node_of(std::size_t sentence, int token) const {
  const NodeRef key{sentence, token};
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), key);
  if (it == nodes_.end() || *it != key) {
    throw Error(kModule, fmt::format("token {} of sentence {} is not in the window", token, sentence));
  }
  return static_cast<std::size_t>(it - nodes_.begin());
}

void SentenceGraph::check_node(std::size_t node) const {
  if (node >= nodes_.size()) {
    throw Error(kModule, fmt::format("node {} is not in the graph ({} nodes)", node, nodes_.size()), Error::Kind::kUsage);
  }
}

bool SentenceGraph::has_parent(std::size_t node) const {
  check_node(node);
  return in_edge_[node] != kNone;
}

std::size_t SentenceGraph::in_edge(std::size_t node) const {
  if (!has_parent(node)) throw Error(kModule, fmt::format("node {} is the window root", node), Error::Kind::kUsage);
  return in_edge_[node];
}

const std::vector<std::size_t>& SentenceGraph::out_edges(std::size_t node) const {
  check_node(node);
  return out_edges_[node];
}

std::vector<std::size_t> SentenceGraph::incident_edges(std::size_t node) const {
  std::vector<std::size_t> out;
  if (has_parent(node)) out.push_back(in_edge_[node]);
  const auto& o = out_edges_[node];
  out.insert(out.end(), o.begin(), o.end());
  return out;
}

SentenceGraph build_graph(const Document& doc, std::span<const std::size_t> window, const Vocabularies& vocabs) {
  if (window.empty() || window.size() > 2) {
    throw Error(kModule, fmt::format("window must hold 1 or 2 sentences, got {}", window.size()), Error::Kind::kUsage);
  }
  if (window.size() == 2 && window[1] != window[0] + 1) {
    throw Error(kModule, fmt::format("window sentences {} and {} are not adjacent", window[0], window[1]), Error::Kind::kUsage);
  }
  for (auto s : window) {
    if (s >= doc.sentences.size()) {
      throw Error(kModule, fmt::format("sentence {} out of range for document '{}'", s, doc.id), Error::Kind::kUsage);
    }
  }

  SentenceGraph g;
  g.window_.assign(window.begin(), window.end());
  std::vector<std::size_t> offsets;
  for (auto s : window) {
    offsets.push_back(g.nodes_.size());
    for (const auto& t : doc.sentences[s]) g.nodes_.push_back(NodeRef{s, t.index});
  }
  const auto n = g.nodes_.size();
  g.in_edge_.assign(n, kNone);
  g.out_edges_.assign(n, {});

  for (std::size_t w = 0; w < window.size(); ++w) {
    const auto& sent = doc.sentences[window[w]];
    for (const auto& t : sent) {
      const auto node = offsets[w] + static_cast<std::size_t>(t.index - 1);
      if (t.head == 0) {
        g.roots_.push_back(node);
        if (w == 1) {
          g.in_edge_[node] = g.edges_.size();
          g.edges_.push_back(Triple{g.roots_.front(), Vocabularies::kCrossSentence, node});
        }
        continue;
      }
      g.in_edge_[node] = g.edges_.size();
      g.edges_.push_back(Triple{offsets[w] + static_cast<std::size_t>(t.head - 1), vocabs.deprel_id(t.deprel), node});
    }
  }
  if (g.roots_.size() != window.size()) {
    throw Error(kModule, fmt::format("document '{}': each window sentence needs exactly one root", doc.id));
  }
  for (std::size_t e = 0; e < g.edges_.size(); ++e) g.out_edges_[g.edges_[e].head].push_back(e);

  // Depth by walking parents; the tree was validated at load time but guard
  // against cycles from hand-built documents anyway.
  g.depth_.assign(n, kNone);
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<std::size_t> chain;
    std::size_t cur = v;
    while (g.depth_[cur] == kNone && g.in_edge_[cur] != kNone) {
      chain.push_back(cur);
      if (chain.size() > n) throw Error(kModule, fmt::format("document '{}': head links form a cycle", doc.id));
      cur = g.edges_[g.in_edge_[cur]].head;
    }
    if (g.depth_[cur] == kNone) g.depth_[cur] = 0;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) g.depth_[*it] = g.depth_[g.edges_[g.in_edge_[*it]].head] + 1;
  }
  return g;
}

NeighborTriples neighbor_triples(const SentenceGraph& graph, std::size_t node) {
  graph.check_node(node);
  NeighborTriples out;
  if (graph.has_parent(node)) out.incoming.push_back(graph.edges()[graph.in_edge(node)]);
  for (auto e : graph.out_edges(node)) out.outgoing.push_back(graph.edges()[e]);
  return out;
}

std::vector<std::size_t> path_edges(const SentenceGraph& graph, std::size_t source, std::size_t target) {
  graph.check_node(source);
  graph.check_node(target);
  std::vector<std::size_t> up, down;
  std::size_t a = source, b = target;
  while (graph.depth(a) > graph.depth(b)) {
    up.push_back(graph.in_edge(a));
    a = graph.parent(a);
  }
  while (graph.depth(b) > graph.depth(a)) {
    down.push_back(graph.in_edge(b));
    b = graph.parent(b);
  }
  while (a != b) {
    up.push_back(graph.in_edge(a));
    down.push_back(graph.in_edge(b));
    a = graph.parent(a);
    b = graph.parent(b);
  }
  up.insert(up.end(), down.rbegin(), down.rend());
  return up;
}

std::vector<Triple> path_triples(const SentenceGraph& graph, std::size_t source, std::size_t target) {
  std::vector<Triple> out;
  for (auto e : path_edges(graph, source, target)) out.push_back(graph.edges()[e]);
  return out;
}

SyntaxContext syntax_context(const SentenceGraph& graph, std::size_t source, std::size_t target) {
  SyntaxContext ctx;
  ctx.source = source;
  ctx.target = target;
  ctx.path_edges = path_edges(graph, source, target);
  ctx.theta.push_back(source);
  for (auto e : ctx.path_edges) {
    const auto& t = graph.edges()[e];
    ctx.path.push_back(t);
    // Walk the path: the next node is whichever endpoint we are not on.
    ctx.theta.push_back(t.head == ctx.theta.back() ? t.dependent : t.head);
  }
  std::vector<std::size_t> phi(ctx.path_edges);
  for (auto v : ctx.theta) {
    const auto inc = graph.incident_edges(v);
    phi.insert(phi.end(), inc.begin(), inc.end());
  }
  std::sort(phi.begin(), phi.end());
  phi.erase(std::unique(phi.begin(), phi.end()), phi.end());
  ctx.phi_edges = std::move(phi);
  for (auto e : ctx.phi_edges) ctx.phi.push_back(graph.edges()[e]);
  return ctx;
}

int span_head(const Sentence& sentence, int first, int last) {
  const int n = static_cast<int>(sentence.size());
  if (first < 1 || last < first || last > n) {
    throw Error(kModule, fmt::format("span [{}, {}] outside sentence of {} tokens", first, last, n));
  }
  auto depth = [&](int tok) {
    int d = 0;
    for (int cur = tok; sentence[cur - 1].head != 0 && d <= n; cur = sentence[cur - 1].head) ++d;
    return d;
  };
  int best = first;
  int best_depth = depth(first);
  for (int t = first + 1; t <= last; ++t) {
    const int d = depth(t);
    if (d < best_depth) {
      best = t;
      best_depth = d;
    }
  }
  return best;
}

std::size_t event_node(const SentenceGraph& graph, const Document& doc, const EventMention& event) {
  const int head = span_head(doc.sentences.at(event.sentence), event.first, event.last);
  return graph.node_of(event.sentence, head);
}

namespace {

std::string node_label(const SentenceGraph& graph, const Document& doc, std::size_t node) {
  const auto& ref = graph.nodes()[node];
  return fmt::format("{}:{}", node, doc.sentences[ref.sentence][static_cast<std::size_t>(ref.token - 1)].form);
}

std::string triple_line(const Triple& t, const SentenceGraph& graph, const Document& doc, const Vocabularies& vocabs) {
  return fmt::format("{} {} {}\n", node_label(graph, doc, t.head), vocabs.deprel(t.relation),
                     node_label(graph, doc, t.dependent));
}

}  // namespace

std::string dump_graph(const SentenceGraph& graph, const Document& doc, const Vocabularies& vocabs) {
  std::string out;
  for (const auto& t : graph.edges()) out += triple_line(t, graph, doc, vocabs);
  return out;
}

std::string dump_context(const SyntaxContext& ctx, const SentenceGraph& graph, const Document& doc,
                         const Vocabularies& vocabs) {
  std::string out = fmt::format("source {}\ntarget {}\ntheta", node_label(graph, doc, ctx.source),
                                node_label(graph, doc, ctx.target));
  for (auto v : ctx.theta) out += " " + node_label(graph, doc, v);
  out += "\npath\n";
  for (const auto& t : ctx.path) out += triple_line(t, graph, doc, vocabs);
  out += "phi\n";
  for (const auto& t : ctx.phi) out += triple_line(t, graph, doc, vocabs);
  return out;
}

}  // namespace sgt
