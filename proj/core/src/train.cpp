#include "sgt/train.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "sgt/error.hpp"
#include "sgt/optimizer.hpp"

namespace sgt {
namespace {

constexpr const char* kModule = "train_eval";

[[noreturn]] void usage(const std::string& message) { throw Error(kModule, message, Error::Kind::kUsage); }

template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng() % i]);
}

std::size_t argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

double grad_norm(const std::vector<Tensor>& params) {
  double s = 0.0;
  for (const auto& p : params)
    for (double g : p.grad()) s += g * g;
  return std::sqrt(s);
}

std::size_t batches(std::size_t items, std::size_t batch) { return (items + batch - 1) / batch; }

const Document& doc_of(const Dataset& data, std::size_t index) { return data.docs->at(index); }

Tensor sentence_event_loss(const SgtModel& model, const Dataset& data, const SentenceInstance& s) {
  const std::size_t window[] = {s.sentence};
  const auto ctx = model.encoder().encode_window(doc_of(data, s.doc), window);
  return loss_event(event_scores(ctx, model.params()), s.labels, model.config().event_weights);
}

Tensor pair_scores(const SgtModel& model, const Dataset& data, const PairInstance& p, ForwardTrace* trace = nullptr) {
  const auto ctx = model.encoder().encode_window(doc_of(data, p.doc), p.window);
  auto fr = forward(p.graph, p.context, ctx, model.params(), model.config());
  if (trace) *trace = std::move(fr.trace);
  return relation_scores(fr.source, fr.target, model.params());
}

Tensor sum_all(const std::vector<Tensor>& parts) {
  Tensor total = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) total = add(total, parts[i]);
  return total;
}

bool better(const EpochLog& a, const EpochLog& b) {
  if (a.dev_relations.f1 != b.dev_relations.f1) return a.dev_relations.f1 > b.dev_relations.f1;
  return a.dev_events.f1 > b.dev_events.f1;
}

void check_data(const Dataset& data, const char* what) {
  if (!data.docs) usage(fmt::format("{} dataset has no documents", what));
}

}  // namespace

std::size_t PairInstance::width() const {
  const auto lo = std::min(context.source, context.target), hi = std::max(context.source, context.target);
  return hi - lo - 1;
}

PairInstance make_pair_instance(const std::vector<Document>& docs, std::size_t doc, std::size_t source_event,
                                std::size_t target_event, std::size_t label, const Vocabularies& vocabs) {
  const auto& d = docs.at(doc);
  const auto& s = d.events.at(source_event);
  const auto& t = d.events.at(target_event);
  const auto lo = std::min(s.sentence, t.sentence), hi = std::max(s.sentence, t.sentence);
  if (hi - lo > 1) {
    throw Error(kModule, fmt::format("{}: pair {}->{} spans non-adjacent sentences", d.id, s.id, t.id));
  }
  PairInstance p;
  p.doc = doc;
  p.window = lo == hi ? std::vector<std::size_t>{lo} : std::vector<std::size_t>{lo, hi};
  p.source_event = source_event;
  p.target_event = target_event;
  p.label = label;
  p.key = PairKey{d.id, s.id, t.id};
  p.graph = build_graph(d, p.window, vocabs);
  const auto sn = event_node(p.graph, d, s), tn = event_node(p.graph, d, t);
  if (sn == tn) throw Error(kModule, fmt::format("{}: events {} and {} share a head token", d.id, s.id, t.id));
  p.context = syntax_context(p.graph, sn, tn);
  p.source_token = TokenKey{d.id, s.sentence, span_head(d.sentences.at(s.sentence), s.first, s.last)};
  p.target_token = TokenKey{d.id, t.sentence, span_head(d.sentences.at(t.sentence), t.first, t.last)};
  return p;
}

Dataset build_dataset(const std::vector<Document>& docs, const Vocabularies& vocabs) {
  Dataset data;
  data.docs = &docs;
  for (std::size_t di = 0; di < docs.size(); ++di) {
    const auto& d = docs[di];
    std::vector<SentenceInstance> sentences;
    for (std::size_t si = 0; si < d.sentences.size(); ++si)
      sentences.push_back({di, si, std::vector<std::size_t>(d.sentences[si].size(), 0)});
    for (const auto& e : d.events) {
      const int head = span_head(d.sentences.at(e.sentence), e.first, e.last);
      sentences.at(e.sentence).labels.at(static_cast<std::size_t>(head - 1)) = 1;
    }
    data.sentences.insert(data.sentences.end(), sentences.begin(), sentences.end());
    for (const auto& p : d.pairs) {
      const auto* s = d.find_event(p.source);
      const auto* t = d.find_event(p.target);
      if (!s || !t) throw Error(kModule, fmt::format("{}: pair {}->{} names an unknown event", d.id, p.source, p.target));
      data.pairs.push_back(make_pair_instance(docs, di, static_cast<std::size_t>(s - d.events.data()),
                                              static_cast<std::size_t>(t - d.events.data()), p.label, vocabs));
    }
  }
  return data;
}

std::array<double, 2> default_event_weights(const Dataset& data) {
  std::array<double, 2> counts{0.0, 0.0};
  for (const auto& s : data.sentences)
    for (auto l : s.labels) counts[l] += 1.0;
  const double total = counts[0] + counts[1];
  if (total == 0.0) return {0.5, 0.5};
  std::array<double, 2> raw{};
  double max_raw = 0.0;
  for (int c = 0; c < 2; ++c)
    if (counts[c] > 0.0) max_raw = std::max(max_raw, raw[c] = total / counts[c]);
  for (int c = 0; c < 2; ++c)
    if (counts[c] == 0.0) raw[c] = max_raw;
  const double z = raw[0] + raw[1];
  return {raw[0] / z, raw[1] / z};
}

std::vector<double> default_label_weights(const Dataset& data, const LabelScheme& scheme) {
  const auto k = scheme.size();
  std::vector<double> counts(k, 0.0);
  for (const auto& p : data.pairs) counts.at(p.label) += 1.0;
  const double total = static_cast<double>(data.pairs.size());
  if (total == 0.0) return std::vector<double>(k, 1.0);
  std::vector<double> raw(k, 0.0);
  double max_raw = 0.0;
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] > 0.0) max_raw = std::max(max_raw, raw[c] = total / counts[c]);
  double mean = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0.0) raw[c] = max_raw;
    mean += raw[c] / static_cast<double>(k);
  }
  for (auto& w : raw) w /= mean;
  return raw;
}

void TrainConfig::validate() const {
  if (epochs == 0) usage("epochs must be positive");
  if (warmup_epochs > epochs) usage(fmt::format("warmup epochs ({}) exceed total epochs ({})", warmup_epochs, epochs));
  if (batch_size == 0) usage("batch size must be positive");
  if (!(learning_rate > 0.0)) usage("learning rate must be positive");
  if (warmup_fraction < 0.0 || warmup_fraction > 1.0) usage("warmup fraction must lie in [0, 1]");
  if (max_grad_norm < 0.0) usage("max grad norm must be non-negative");
  if (event_weights && ((*event_weights)[0] < 0.0 || (*event_weights)[1] < 0.0)) usage("event weights must be non-negative");
  for (double w : label_weights)
    if (w < 0.0) usage("label weights must be non-negative");
}

TrainResult train(SgtModel& model, const Dataset& train_data, const Dataset* dev_data, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  check_data(train_data, "training");
  if (train_data.sentences.empty()) throw Error(kModule, "training set is empty");
  const std::size_t joint_epochs = config.epochs - config.warmup_epochs;
  if (joint_epochs > 0 && train_data.pairs.empty()) throw Error(kModule, "training set has no labeled pairs");

  auto& mc = model.mutable_config();
  mc.event_weights = config.event_weights.value_or(default_event_weights(train_data));
  if (config.label_weights.empty()) {
    mc.label_weights = default_label_weights(train_data, model.scheme());
  } else {
    if (config.label_weights.size() != model.scheme().size()) {
      usage(fmt::format("{} label weights given for {} labels", config.label_weights.size(), model.scheme().size()));
    }
    mc.label_weights = config.label_weights;
  }

  const auto event_steps = config.warmup_epochs * batches(train_data.sentences.size(), config.batch_size) +
                           joint_epochs * batches(train_data.pairs.size(), config.batch_size);
  const auto relation_steps = joint_epochs * batches(train_data.pairs.size(), config.batch_size);
  AdamConfig ac;
  ac.learning_rate = config.learning_rate;
  ac.schedule = config.schedule;
  ac.warmup_fraction = config.warmup_fraction;
  ac.max_grad_norm = config.max_grad_norm;
  ac.total_steps = event_steps;
  auto event_params = model.event_parameters();
  auto relation_params = model.relation_parameters();
  Adam event_opt(event_params, ac);
  ac.total_steps = relation_steps;
  Adam relation_opt(relation_params, ac);

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> sentence_index;
  for (std::size_t i = 0; i < train_data.sentences.size(); ++i)
    sentence_index[{train_data.sentences[i].doc, train_data.sentences[i].sentence}] = i;

  std::mt19937_64 rng(config.seed ^ 0x5851f42d4c957f2dULL);
  TrainResult result;
  std::optional<EpochLog> best;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const bool joint = epoch > config.warmup_epochs;
    EpochLog log;
    log.epoch = epoch;
    log.phase = joint ? "joint" : "event";
    std::size_t steps = 0, event_items = 0, relation_items = 0;

    if (!joint) {
      std::vector<std::size_t> order(train_data.sentences.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      shuffle(order, rng);
      for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
        event_opt.zero_grad();
        relation_opt.zero_grad();
        std::vector<Tensor> losses;
        for (std::size_t i = b; i < std::min(order.size(), b + config.batch_size); ++i)
          losses.push_back(sentence_event_loss(model, train_data, train_data.sentences[order[i]]));
        const auto loss = sum_all(losses);
        backward(loss);
        log.event_loss += loss.item();
        event_items += losses.size();
        log.event_grad_norm += grad_norm(event_params);
        log.relation_grad_norm += grad_norm(relation_params);
        event_opt.step();
        ++steps;
      }
    } else {
      std::vector<std::size_t> order(train_data.pairs.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      shuffle(order, rng);
      for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
        event_opt.zero_grad();
        relation_opt.zero_grad();
        std::set<std::size_t> sentences;
        std::vector<Tensor> scores;
        std::vector<std::size_t> gold;
        for (std::size_t i = b; i < std::min(order.size(), b + config.batch_size); ++i) {
          const auto& p = train_data.pairs[order[i]];
          for (auto s : p.window) sentences.insert(sentence_index.at({p.doc, s}));
          scores.push_back(pair_scores(model, train_data, p));
          gold.push_back(p.label);
        }
        std::vector<Tensor> event_losses;
        for (auto s : sentences) event_losses.push_back(sentence_event_loss(model, train_data, train_data.sentences[s]));
        const auto l_eve = sum_all(event_losses);
        const auto l_rel = loss_relation(scores, gold, model.config().label_weights);
        backward(add(l_eve, l_rel));
        log.event_loss += l_eve.item();
        log.relation_loss += l_rel.item();
        event_items += event_losses.size();
        relation_items += scores.size();
        log.event_grad_norm += grad_norm(event_params);
        log.relation_grad_norm += grad_norm(relation_params);
        event_opt.step();
        relation_opt.step();
        ++steps;
      }
    }
    if (event_items) log.event_loss /= static_cast<double>(event_items);
    if (relation_items) log.relation_loss /= static_cast<double>(relation_items);
    if (steps) {
      log.event_grad_norm /= static_cast<double>(steps);
      log.relation_grad_norm /= static_cast<double>(steps);
    }
    log.learning_rate = event_opt.current_learning_rate();

    if (dev_data) {
      const auto report = evaluate(model, *dev_data, EvalSetting::kGold);
      log.has_dev = true;
      log.dev_events = report.events;
      log.dev_relations = report.relations;
    }
    if (!dev_data || !best || better(log, *best)) {
      best = log;
      result.best_epoch = epoch;
      result.best = model.to_checkpoint();
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  model.load_values(result.best);
  return result;
}

std::vector<TokenKey> predict_events(const SgtModel& model, const Dataset& data) {
  check_data(data, "evaluation");
  std::vector<TokenKey> out;
  for (const auto& s : data.sentences) {
    const auto& doc = doc_of(data, s.doc);
    const std::size_t window[] = {s.sentence};
    const auto scores = event_scores(model.encoder().encode_window(doc, window), model.params());
    const auto v = scores.data();
    for (std::size_t i = 0; i < scores.rows(); ++i)
      if (v[2 * i + 1] > v[2 * i]) out.push_back(TokenKey{doc.id, s.sentence, static_cast<int>(i) + 1});
  }
  return out;
}

std::vector<PairOutput> predict_pairs(const SgtModel& model, const Dataset& data, bool keep_traces) {
  check_data(data, "evaluation");
  const auto events = predict_events(model, data);
  const std::set<TokenKey> detected(events.begin(), events.end());
  std::vector<PairOutput> out;
  for (const auto& p : data.pairs) {
    PairOutput o;
    o.key = p.key;
    const auto scores = pair_scores(model, data, p, keep_traces ? &o.trace : nullptr);
    o.probabilities.assign(scores.data().begin(), scores.data().end());
    o.label = argmax_row(o.probabilities);
    o.detected = detected.contains(p.source_token) && detected.contains(p.target_token);
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<std::pair<TokenKey, TokenKey>> joint_candidates(std::vector<TokenKey> detected) {
  std::sort(detected.begin(), detected.end());
  detected.erase(std::unique(detected.begin(), detected.end()), detected.end());
  std::vector<std::pair<TokenKey, TokenKey>> out;
  for (std::size_t i = 0; i < detected.size(); ++i)
    for (std::size_t j = i + 1; j < detected.size(); ++j) {
      const auto& a = detected[i];
      const auto& b = detected[j];
      if (a.doc != b.doc || b.sentence > a.sentence + 1) break;
      out.emplace_back(a, b);
    }
  return out;
}

EvalReport evaluate(const SgtModel& model, const Dataset& data, EvalSetting setting) {
  const auto outputs = predict_pairs(model, data);
  std::vector<PairPrediction> preds;
  for (const auto& o : outputs) preds.push_back(PairPrediction{o.key, o.label, o.detected});
  std::vector<GoldPair> gold;
  for (const auto& p : data.pairs) gold.push_back(GoldPair{p.key, p.label});
  auto report = evaluate_relations(preds, gold, model.scheme(), setting);

  const auto predicted_events = predict_events(model, data);
  std::vector<TokenKey> gold_events;
  for (const auto& s : data.sentences)
    for (std::size_t i = 0; i < s.labels.size(); ++i)
      if (s.labels[i]) gold_events.push_back(TokenKey{doc_of(data, s.doc).id, s.sentence, static_cast<int>(i) + 1});
  report.events = evaluate_events(predicted_events, gold_events);
  if (setting == EvalSetting::kJoint) report.candidate_pairs = joint_candidates(predicted_events).size();
  return report;
}

std::vector<std::vector<RelationPrediction>> predict_document_relations(const SgtModel& model,
                                                                        const std::vector<Document>& docs) {
  std::vector<std::vector<RelationPrediction>> out;
  for (std::size_t di = 0; di < docs.size(); ++di) {
    const auto& d = docs[di];
    std::vector<std::pair<TokenKey, std::size_t>> events;
    for (std::size_t e = 0; e < d.events.size(); ++e) {
      const auto& ev = d.events[e];
      events.emplace_back(TokenKey{d.id, ev.sentence, span_head(d.sentences.at(ev.sentence), ev.first, ev.last)}, e);
    }
    std::sort(events.begin(), events.end());
    Dataset single;
    single.docs = &docs;
    for (std::size_t i = 0; i < events.size(); ++i)
      for (std::size_t j = i + 1; j < events.size(); ++j) {
        const auto& a = events[i].first;
        const auto& b = events[j].first;
        if (b.sentence > a.sentence + 1) break;
        if (a == b) continue;
        single.pairs.push_back(make_pair_instance(docs, di, events[i].second, events[j].second, 0, model.vocabs()));
      }
    std::vector<RelationPrediction> preds;
    for (const auto& p : single.pairs) {
      const auto scores = pair_scores(model, single, p);
      preds.push_back(RelationPrediction{p.key.source, p.key.target, argmax_row(scores.data())});
    }
    out.push_back(std::move(preds));
  }
  return out;
}

std::vector<GridCell> grid_cells(const GridConfig& config) {
  auto canon = [](auto values, const char* name) {
    if (values.empty()) usage(fmt::format("grid candidate list '{}' is empty", name));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
  };
  const auto lrs = canon(config.learning_rates, "learning_rates");
  const auto bss = canon(config.batch_sizes, "batch_sizes");
  const auto ls = canon(config.layers, "layers");
  const auto hs = canon(config.heads, "heads");
  std::vector<GridCell> cells;
  for (double lr : lrs)
    for (auto bs : bss)
      for (auto l : ls)
        for (auto h : hs) cells.push_back(GridCell{cells.size(), lr, bs, l, h});
  return cells;
}

GridResult grid_search(const GridConfig& config, const CellEvaluator& evaluate_cell, std::size_t jobs) {
  if (!evaluate_cell) usage("grid search needs an evaluator");
  const auto cells = grid_cells(config);
  GridResult result;
  result.rows.resize(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        result.rows[i] = evaluate_cell(cells[i]);
        result.rows[i].cell = cells[i];
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, cells.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (std::size_t i = 1; i < result.rows.size(); ++i)
    if (result.rows[i].dev_relation_f > result.rows[result.best].dev_relation_f) result.best = i;
  return result;
}

}  // namespace sgt
