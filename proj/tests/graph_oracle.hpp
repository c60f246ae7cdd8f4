#pragma once

// Random dependency trees and a brute-force BFS / set-union oracle for the
// path, path-node and neighbor triple sets.

#include <algorithm>
#include <deque>
#include <random>
#include <set>
#include <vector>

#include "sgt/corpus.hpp"
#include "sgt/dep_graph.hpp"

namespace sgt::test {

inline Sentence random_tree(std::size_t n, std::mt19937_64& rng) {
  static const char* kRels[] = {"nsubj", "obj", "amod", "advmod", "mark", "det"};
  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i) + 1;
  std::shuffle(order.begin(), order.end(), rng);
  Sentence s(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& t = s[order[k] - 1];
    t.index = order[k];
    t.form = "w" + std::to_string(rng() % 20);
    t.upos = "X";
    if (k == 0) {
      t.head = 0;
      t.deprel = "root";
    } else {
      t.head = order[rng() % k];
      t.deprel = kRels[rng() % 6];
    }
  }
  return s;
}

/// A document with one or two random sentences totalling at most max_nodes tokens.
inline Document random_window_doc(std::size_t max_nodes, std::mt19937_64& rng) {
  Document d;
  d.id = "r";
  const bool two = max_nodes >= 2 && rng() % 2 == 0;
  if (two) {
    const std::size_t total = 2 + rng() % (max_nodes - 1);
    const std::size_t first = 1 + rng() % (total - 1);
    d.sentences.push_back(random_tree(first, rng));
    d.sentences.push_back(random_tree(total - first, rng));
  } else {
    d.sentences.push_back(random_tree(1 + rng() % max_nodes, rng));
  }
  return d;
}

struct OracleSets {
  std::vector<Triple> path;   // source to target
  std::set<std::size_t> theta;
  std::set<Triple> phi;
};

class BruteGraph {
 public:
  BruteGraph(const Document& doc, const Vocabularies& vocabs) {
    std::vector<std::size_t> offset;
    std::vector<std::size_t> roots;
    for (const auto& s : doc.sentences) {
      offset.push_back(n_);
      n_ += s.size();
    }
    for (std::size_t si = 0; si < doc.sentences.size(); ++si)
      for (const auto& t : doc.sentences[si]) {
        const std::size_t dep = offset[si] + static_cast<std::size_t>(t.index) - 1;
        if (t.head == 0) {
          roots.push_back(dep);
          continue;
        }
        edges_.push_back({offset[si] + static_cast<std::size_t>(t.head) - 1, vocabs.deprel_id(t.deprel), dep});
      }
    if (roots.size() == 2) edges_.push_back({roots[0], Vocabularies::kCrossSentence, roots[1]});
  }

  std::size_t size() const { return n_; }
  const std::vector<Triple>& edges() const { return edges_; }

  OracleSets sets(std::size_t s, std::size_t t) const {
    // BFS over the undirected tree, remembering the edge used to reach each node.
    std::vector<long> via(n_, -1);
    std::vector<bool> seen(n_, false);
    std::deque<std::size_t> queue{s};
    seen[s] = true;
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      for (std::size_t e = 0; e < edges_.size(); ++e) {
        const auto& tr = edges_[e];
        std::size_t v;
        if (tr.head == u) v = tr.dependent;
        else if (tr.dependent == u) v = tr.head;
        else continue;
        if (seen[v]) continue;
        seen[v] = true;
        via[v] = static_cast<long>(e);
        queue.push_back(v);
      }
    }
    OracleSets out;
    std::size_t cur = t;
    out.theta.insert(t);
    while (cur != s) {
      const auto& tr = edges_[static_cast<std::size_t>(via[cur])];
      out.path.push_back(tr);
      cur = tr.head == cur ? tr.dependent : tr.head;
      out.theta.insert(cur);
    }
    std::reverse(out.path.begin(), out.path.end());
    out.phi.insert(out.path.begin(), out.path.end());
    for (const auto& tr : edges_)
      if (out.theta.count(tr.head) || out.theta.count(tr.dependent)) out.phi.insert(tr);
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Triple> edges_;
};

inline std::vector<std::size_t> window_of(const Document& doc) {
  std::vector<std::size_t> w;
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) w.push_back(i);
  return w;
}

}  // namespace sgt::test
