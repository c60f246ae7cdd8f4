#include "sgt/gradcheck.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sgt/error.hpp"
#include "sgt/model.hpp"
#include "sgt/train.hpp"

namespace sgt {
namespace {

constexpr const char* kModule = "train_eval";

Sentence random_tree(std::size_t n, std::mt19937_64& rng) {
  static const char* upos[] = {"NOUN", "VERB", "ADJ"};
  static const char* deprels[] = {"nsubj", "obj", "amod", "advmod"};
  const auto root = static_cast<int>(rng() % n) + 1;
  // Attach tokens one at a time to an already attached token.
  std::vector<int> attached = {root};
  std::vector<int> pending;
  for (int i = 1; i <= static_cast<int>(n); ++i)
    if (i != root) pending.push_back(i);
  for (std::size_t i = pending.size(); i > 1; --i) std::swap(pending[i - 1], pending[rng() % i]);
  std::vector<int> head(n + 1, 0);
  for (int t : pending) {
    head[t] = attached[rng() % attached.size()];
    attached.push_back(t);
  }
  Sentence s;
  for (int i = 1; i <= static_cast<int>(n); ++i) {
    s.push_back(Token{i, fmt::format("w{}", rng() % 4), upos[rng() % 3], head[i], i == root ? "root" : deprels[rng() % 4]});
  }
  return s;
}

Tensor fixture_loss(const SgtModel& model, const Dataset& data) {
  Tensor total;
  for (const auto& s : data.sentences) {
    const std::size_t window[] = {s.sentence};
    const auto ctx = model.encoder().encode_window(data.docs->at(s.doc), window);
    const auto l = loss_event(event_scores(ctx, model.params()), s.labels, model.config().event_weights);
    total = total.defined() ? add(total, l) : l;
  }
  std::vector<Tensor> scores;
  std::vector<std::size_t> gold;
  for (const auto& p : data.pairs) {
    const auto ctx = model.encoder().encode_window(data.docs->at(p.doc), p.window);
    const auto fr = forward(p.graph, p.context, ctx, model.params(), model.config());
    scores.push_back(relation_scores(fr.source, fr.target, model.params()));
    gold.push_back(p.label);
  }
  return add(total, loss_relation(scores, gold, model.config().label_weights));
}

}  // namespace

std::vector<Document> gradcheck_fixture(std::size_t tokens, const LabelScheme& scheme, std::uint64_t seed) {
  if (tokens < 2) throw Error(kModule, "gradcheck fixture needs at least 2 tokens", Error::Kind::kUsage);
  std::mt19937_64 rng(seed);
  Document doc;
  doc.id = "gradcheck";
  const auto first = (tokens + 1) / 2;
  doc.sentences.push_back(random_tree(first, rng));
  doc.sentences.push_back(random_tree(tokens - first, rng));
  const auto pick = [&](std::size_t s) { return static_cast<int>(rng() % doc.sentences[s].size()) + 1; };
  const int a = pick(0), b = pick(1);
  doc.events.push_back({"e1", 0, a, a});
  doc.events.push_back({"e2", 1, b, b});
  doc.pairs.push_back({"e1", "e2", static_cast<std::size_t>(rng() % scheme.size())});
  return {doc};
}

GradcheckReport run_gradcheck(const GradcheckConfig& config) {
  if (!(config.step > 0.0)) throw Error(kModule, "gradcheck step must be positive", Error::Kind::kUsage);
  const auto scheme = LabelScheme::matres();
  const auto docs = gradcheck_fixture(config.tokens, scheme, config.seed);
  const auto vocabs = build_vocabs(docs);

  ModelConfig mc;
  mc.width = config.width;
  mc.layers = config.layers;
  mc.heads = config.heads;
  mc.relation_width = config.relation_width;
  mc.init_scale = config.init_scale;
  mc.event_weights = {0.3, 0.7};
  std::mt19937_64 rng(config.seed + 1);
  for (std::size_t i = 0; i < scheme.size(); ++i)
    mc.label_weights.push_back(0.5 + static_cast<double>(rng() % 1000) / 1000.0);
  EncoderConfig ec;
  ec.token_width = config.token_width;
  SgtModel model(mc, ec, vocabs, scheme, config.seed);
  // Spread embedding values like the other parameters.
  for (auto& [name, t] : model.encoder().named_parameters())
    for (auto& v : t.mutable_data()) v = config.init_scale * (2.0 * static_cast<double>(rng() % 100001) / 100000.0 - 1.0);

  const auto data = build_dataset(docs, vocabs);
  auto params = model.named_parameters();
  for (auto& [name, t] : params) t.zero_grad();
  const auto loss = fixture_loss(model, data);
  backward(loss);

  GradcheckReport report;
  report.loss = loss.item();
  for (auto& [name, t] : params) {
    GradcheckGroup g;
    g.name = name;
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto values = t.mutable_data();
    g.entries = values.size();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + config.step;
      const double up = fixture_loss(model, data).item();
      values[i] = saved - config.step;
      const double down = fixture_loss(model, data).item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * config.step);
      const double abs_err = std::abs(analytic[i] - numeric);
      const double rel = abs_err / std::max({std::abs(analytic[i]), std::abs(numeric), config.floor});
      g.max_absolute_error = std::max(g.max_absolute_error, abs_err);
      g.max_relative_error = std::max(g.max_relative_error, rel);
    }
    report.max_relative_error = std::max(report.max_relative_error, g.max_relative_error);
    report.groups.push_back(std::move(g));
  }
  return report;
}

}  // namespace sgt
