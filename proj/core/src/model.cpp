#include "sgt/model.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "sgt/error.hpp"

namespace sgt {
namespace {

constexpr const char* kModule = "sgt_model";

[[noreturn]] void usage(const std::string& message) { throw Error(kModule, message, Error::Kind::kUsage); }

class Initializer {
 public:
  Initializer(std::uint64_t seed, double scale) : rng_(seed), dist_(-scale, scale) {}

  Tensor matrix(std::size_t rows, std::size_t cols) {
    std::vector<double> values(rows * cols);
    for (auto& v : values) v = dist_(rng_);
    return Tensor::from({rows, cols}, std::move(values), true);
  }
  static Tensor zeros(std::size_t n) { return Tensor::zeros({n}, true); }
  static Tensor ones(std::size_t n) { return Tensor::from({n}, std::vector<double>(n, 1.0), true); }

 private:
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> dist_;
};

std::vector<double> copy_values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

std::string join_doubles(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += fmt::format("{}{:.17g}", i ? "," : "", values[i]);
  return out;
}

std::vector<double> split_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

}  // namespace

void ModelConfig::validate() const {
  if (width == 0 || layers == 0 || heads == 0 || relation_width == 0) usage("width, layers, heads and relation_width must be positive");
  if (width % heads != 0) usage(fmt::format("node width {} is not divisible by {} heads", width, heads));
  if (context_width == 0 || relation_count == 0 || label_count == 0) usage("context width, relation count and label count must be set");
  if (std::abs(event_weights[0] + event_weights[1] - 1.0) > 1e-9 || event_weights[0] <= 0.0 || event_weights[1] <= 0.0) {
    usage(fmt::format("event class weights must be positive and sum to 1, got {} and {}", event_weights[0], event_weights[1]));
  }
  if (!label_weights.empty()) {
    if (label_weights.size() != label_count) usage(fmt::format("{} label weights for {} labels", label_weights.size(), label_count));
    for (double w : label_weights)
      if (!(w > 0.0)) usage("label weights must be positive");
  }
  if (!(norm_eps > 0.0)) usage("norm_eps must be positive");
}

// ---------------------------------------------------------------------------
// Parameters

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const auto d = config.width, dk = config.head_width(), triple_in = 2 * d + config.relation_width;
  Initializer init(seed, config.init_scale);
  ModelParams p;
  p.node_init_weight = init.matrix(d, config.context_width);
  p.node_init_bias = Initializer::zeros(d);
  p.relation_embedding = init.matrix(config.relation_count, config.relation_width);
  for (std::size_t l = 0; l < config.layers; ++l) {
    LayerParams layer;
    for (std::size_t m = 0; m < config.heads; ++m) {
      layer.graph_heads.push_back(HeadParams{init.matrix(dk, d), init.matrix(dk, d), init.matrix(dk, d),
                                             init.matrix(d, triple_in), Initializer::zeros(d)});
    }
    layer.graph_output = init.matrix(d, d);
    for (std::size_t m = 0; m < config.heads; ++m) {
      layer.syntax_heads.push_back(
          HeadParams{init.matrix(dk, 2 * d), init.matrix(dk, d), init.matrix(dk, d), init.matrix(d, triple_in), Tensor()});
    }
    layer.syntax_triple_bias = Initializer::zeros(d);
    layer.syntax_output = init.matrix(d, d);
    layer.fusion = init.matrix(d, 2 * d);
    layer.non_event = init.matrix(d, d);
    layer.norm_gain = Initializer::ones(d);
    layer.norm_bias = Initializer::zeros(d);
    p.layers.push_back(std::move(layer));
  }
  p.event_weight = init.matrix(2, config.context_width);
  p.event_bias = Initializer::zeros(2);
  p.relation_weight = init.matrix(config.label_count, 2 * d);
  p.relation_bias = Initializer::zeros(config.label_count);
  return p;
}

std::vector<NamedTensor> ModelParams::named() const {
  std::vector<NamedTensor> out;
  out.emplace_back("node_init/weight", node_init_weight);
  out.emplace_back("node_init/bias", node_init_bias);
  out.emplace_back("relation_embedding", relation_embedding);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto prefix = fmt::format("layer{}", l);
    for (std::size_t m = 0; m < layer.graph_heads.size(); ++m) {
      const auto& h = layer.graph_heads[m];
      const auto hp = fmt::format("{}/graph/head{}", prefix, m);
      out.emplace_back(hp + "/query", h.query);
      out.emplace_back(hp + "/key", h.key);
      out.emplace_back(hp + "/value", h.value);
      out.emplace_back(hp + "/triple", h.triple);
      out.emplace_back(hp + "/triple_bias", h.triple_bias);
    }
    out.emplace_back(prefix + "/graph/output", layer.graph_output);
    for (std::size_t m = 0; m < layer.syntax_heads.size(); ++m) {
      const auto& h = layer.syntax_heads[m];
      const auto hp = fmt::format("{}/syntax/head{}", prefix, m);
      out.emplace_back(hp + "/query", h.query);
      out.emplace_back(hp + "/key", h.key);
      out.emplace_back(hp + "/value", h.value);
      out.emplace_back(hp + "/triple", h.triple);
    }
    out.emplace_back(prefix + "/syntax/triple_bias", layer.syntax_triple_bias);
    out.emplace_back(prefix + "/syntax/output", layer.syntax_output);
    out.emplace_back(prefix + "/fusion", layer.fusion);
    out.emplace_back(prefix + "/non_event", layer.non_event);
    out.emplace_back(prefix + "/norm/gain", layer.norm_gain);
    out.emplace_back(prefix + "/norm/bias", layer.norm_bias);
  }
  out.emplace_back("event/weight", event_weight);
  out.emplace_back("event/bias", event_bias);
  out.emplace_back("relation/weight", relation_weight);
  out.emplace_back("relation/bias", relation_bias);
  return out;
}

std::vector<Tensor> ModelParams::event_head() const { return {event_weight, event_bias}; }

std::vector<Tensor> ModelParams::relation_network() const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : named()) {
    if (name.rfind("event/", 0) != 0) out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Network operations

Incidence incidence_lists(const SentenceGraph& graph) {
  Incidence inc(graph.node_count());
  for (std::size_t v = 0; v < graph.node_count(); ++v) inc[v] = graph.incident_edges(v);
  return inc;
}

Tensor init_nodes(const Tensor& context, const ModelParams& params) {
  if (context.rank() != 2 || context.cols() != params.node_init_weight.cols()) {
    usage(fmt::format("init_nodes: context {} does not match node_init weight {}", shape_string(context.shape()),
                      shape_string(params.node_init_weight.shape())));
  }
  return linear(context, params.node_init_weight, params.node_init_bias);
}

Tensor triple_rep(const Tensor& head, const Tensor& relation, const Tensor& dependent, const Tensor& weight,
                  const Tensor& bias) {
  return linear(concat_cols({head, relation, dependent}), weight, bias);
}

Tensor triple_inputs(const Tensor& nodes, const SentenceGraph& graph, std::span<const std::size_t> edges,
                     const Tensor& relation_embedding) {
  std::vector<std::size_t> heads, rels, deps;
  for (auto e : edges) {
    const auto& t = graph.edges().at(e);
    heads.push_back(t.head);
    rels.push_back(t.relation);
    deps.push_back(t.dependent);
  }
  return concat_cols({gather_rows(nodes, heads), gather_rows(relation_embedding, rels), gather_rows(nodes, deps)});
}

GraphAttentionOutput graph_self_attention(const Tensor& nodes, const SentenceGraph& graph, const Incidence& incidence,
                                          const LayerParams& layer, const Tensor& relation_embedding,
                                          const ModelConfig& config) {
  if (graph.edges().empty()) usage("graph_self_attention: graph has no edges (single-token window)");
  if (nodes.rows() != graph.node_count() || nodes.cols() != config.width) {
    usage(fmt::format("graph_self_attention: node matrix {} does not match {} nodes of width {}",
                      shape_string(nodes.shape()), graph.node_count(), config.width));
  }
  std::vector<std::size_t> all_edges(graph.edges().size());
  std::iota(all_edges.begin(), all_edges.end(), 0);
  const auto inputs = triple_inputs(nodes, graph, all_edges, relation_embedding);
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(config.head_width()));

  GraphAttentionOutput out;
  std::vector<Tensor> heads;
  for (const auto& h : layer.graph_heads) {
    const auto triples = linear(inputs, h.triple, h.triple_bias);
    auto att = segment_attention(linear(nodes, h.query), linear(triples, h.key), linear(triples, h.value), incidence,
                                 scale_factor);
    heads.push_back(att.output);
    out.weights.push_back(std::move(att.weights));
  }
  out.output = linear(concat_cols(heads), layer.graph_output);
  return out;
}

SyntaxAttentionOutput syntax_guided_attention(const Tensor& nodes, const SentenceGraph& graph, std::size_t source,
                                              std::size_t target, std::span<const std::size_t> phi_edges,
                                              const LayerParams& layer, const Tensor& relation_embedding,
                                              const ModelConfig& config) {
  if (phi_edges.empty()) usage("syntax_guided_attention: empty triple set (degenerate pair)");
  graph.check_node(source);
  graph.check_node(target);
  const auto inputs = triple_inputs(nodes, graph, phi_edges, relation_embedding);
  const std::vector<std::size_t> s{source}, t{target};
  const auto pair = concat_cols({gather_rows(nodes, s), gather_rows(nodes, t)});
  std::vector<std::vector<std::size_t>> keys(1);
  keys[0].resize(phi_edges.size());
  std::iota(keys[0].begin(), keys[0].end(), 0);
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(config.head_width()));

  SyntaxAttentionOutput out;
  std::vector<Tensor> heads;
  for (const auto& h : layer.syntax_heads) {
    const auto triples = linear(inputs, h.triple, layer.syntax_triple_bias);
    auto att = segment_attention(linear(pair, h.query), linear(triples, h.key), linear(triples, h.value), keys,
                                 scale_factor);
    heads.push_back(att.output);
    out.weights.push_back(std::move(att.weights[0]));
  }
  out.output = linear(concat_cols(heads), layer.syntax_output);
  return out;
}

Tensor fuse(const Tensor& graph_out, const Tensor& syntax_out, std::size_t source, std::size_t target,
            const LayerParams& layer) {
  const auto n = graph_out.rows();
  if (source == target) usage("fuse: source and target must be distinct nodes");
  if (source >= n || target >= n) usage(fmt::format("fuse: node out of range for {} rows", n));
  if (syntax_out.rows() != 1 || syntax_out.cols() != graph_out.cols()) usage("fuse: pair vector must be [1 x d]");

  const std::vector<std::size_t> s{source}, t{target};
  const auto fused_source = linear(concat_cols({gather_rows(graph_out, s), syntax_out}), layer.fusion);
  const auto fused_target = linear(concat_cols({syntax_out, gather_rows(graph_out, t)}), layer.fusion);
  const auto others = linear(graph_out, layer.non_event);
  std::vector<std::size_t> pick(n);
  std::iota(pick.begin(), pick.end(), 0);
  pick[source] = n;
  pick[target] = n + 1;
  return gather_rows(concat_rows({others, fused_source, fused_target}), pick);
}

ForwardResult forward(const SentenceGraph& graph, const SyntaxContext& context, const Tensor& context_vectors,
                      const ModelParams& params, const ModelConfig& config, TripleOrder order) {
  if (params.layers.empty()) usage("forward: model has no layers");
  if (context_vectors.rows() != graph.node_count()) {
    usage(fmt::format("forward: {} context rows for {} graph nodes", context_vectors.rows(), graph.node_count()));
  }
  ForwardResult result;
  auto& trace = result.trace;
  trace.incidence = order.incidence ? *order.incidence : incidence_lists(graph);
  trace.phi_edges = order.phi_edges ? *order.phi_edges : context.phi_edges;

  auto nodes = init_nodes(context_vectors, params);
  trace.node_states.push_back(copy_values(nodes));
  for (const auto& layer : params.layers) {
    auto g = graph_self_attention(nodes, graph, trace.incidence, layer, params.relation_embedding, config);
    auto st = syntax_guided_attention(nodes, graph, context.source, context.target, trace.phi_edges, layer,
                                      params.relation_embedding, config);
    const auto fused = fuse(g.output, st.output, context.source, context.target, layer);
    nodes = layer_norm(add(fused, nodes), layer.norm_gain, layer.norm_bias, config.norm_eps);
    trace.layers.push_back(LayerTrace{std::move(g.weights), std::move(st.weights), nodes.rows()});
    trace.node_states.push_back(copy_values(nodes));
  }
  const std::vector<std::size_t> s{context.source}, t{context.target};
  result.source = gather_rows(nodes, s);
  result.target = gather_rows(nodes, t);
  result.nodes = nodes;
  return result;
}

Tensor event_scores(const Tensor& context_vectors, const ModelParams& params) {
  return softmax_rows(linear(context_vectors, params.event_weight, params.event_bias));
}

Tensor relation_scores(const Tensor& source, const Tensor& target, const ModelParams& params) {
  return softmax_rows(linear(concat_cols({source, target}), params.relation_weight, params.relation_bias));
}

Tensor loss_event(const Tensor& scores, std::span<const std::size_t> gold, const std::array<double, 2>& weights) {
  return weighted_cross_entropy(scores, gold, Tensor::from({2}, {weights[0], weights[1]}));
}

Tensor loss_relation(const std::vector<Tensor>& scores, std::span<const std::size_t> gold,
                     std::span<const double> weights) {
  if (scores.size() != gold.size()) usage(fmt::format("loss_relation: {} score rows for {} labels", scores.size(), gold.size()));
  if (scores.empty()) return Tensor::scalar(0.0);
  return weighted_cross_entropy(concat_rows(scores), gold,
                                Tensor::from({weights.size()}, std::vector<double>(weights.begin(), weights.end())));
}

// ---------------------------------------------------------------------------
// SgtModel

SgtModel::SgtModel(ModelConfig config, EncoderConfig encoder_config, const Vocabularies& vocabs,
                   const LabelScheme& scheme, std::uint64_t seed)
    : config_(std::move(config)), scheme_(scheme), encoder_(encoder_config, vocabs, seed ^ 0x9e3779b97f4a7c15ULL) {
  config_.context_width = encoder_.config().context_width();
  config_.relation_count = vocabs.deprel_count();
  config_.label_count = scheme.size();
  if (config_.label_weights.empty()) config_.label_weights.assign(config_.label_count, 1.0);
  params_ = ModelParams::init(config_, seed);
}

std::vector<NamedTensor> SgtModel::named_parameters() const {
  auto out = encoder_.named_parameters();
  auto rest = params_.named();
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

std::vector<Tensor> SgtModel::event_parameters() const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : encoder_.named_parameters()) out.push_back(t);
  for (const auto& t : params_.event_head()) out.push_back(t);
  return out;
}

std::vector<Tensor> SgtModel::relation_parameters() const { return params_.relation_network(); }

Checkpoint SgtModel::to_checkpoint() const {
  Checkpoint ck;
  ck.meta["scheme"] = scheme_.name();
  ck.meta["encoder.backend"] = encoder_backend_name(encoder_.config().backend);
  ck.meta["encoder.token_width"] = std::to_string(encoder_.config().token_width);
  ck.meta["model.width"] = std::to_string(config_.width);
  ck.meta["model.layers"] = std::to_string(config_.layers);
  ck.meta["model.heads"] = std::to_string(config_.heads);
  ck.meta["model.relation_width"] = std::to_string(config_.relation_width);
  ck.meta["model.event_weights"] = join_doubles(config_.event_weights);
  ck.meta["model.label_weights"] = join_doubles(config_.label_weights);
  ck.meta["model.norm_eps"] = fmt::format("{:.17g}", config_.norm_eps);
  for (const auto& [name, t] : named_parameters()) ck.params.emplace_back(name, t.clone());
  return ck;
}

SgtModel SgtModel::from_checkpoint(const Checkpoint& checkpoint, const Vocabularies& vocabs) {
  auto meta = [&](const std::string& key) -> const std::string& {
    const auto it = checkpoint.meta.find(key);
    if (it == checkpoint.meta.end()) throw Error(kModule, fmt::format("checkpoint lacks metadata '{}'", key));
    return it->second;
  };
  ModelConfig config;
  config.width = std::stoul(meta("model.width"));
  config.layers = std::stoul(meta("model.layers"));
  config.heads = std::stoul(meta("model.heads"));
  config.relation_width = std::stoul(meta("model.relation_width"));
  const auto ew = split_doubles(meta("model.event_weights"));
  if (ew.size() != 2) throw Error(kModule, "checkpoint event weights must have 2 entries");
  config.event_weights = {ew[0], ew[1]};
  config.label_weights = split_doubles(meta("model.label_weights"));
  config.norm_eps = std::stod(meta("model.norm_eps"));
  EncoderConfig enc;
  enc.backend = parse_encoder_backend(meta("encoder.backend"));
  enc.token_width = std::stoul(meta("encoder.token_width"));
  SgtModel model(config, enc, vocabs, LabelScheme::by_name(meta("scheme")), 0);
  model.load_values(checkpoint);
  return model;
}

void SgtModel::load_values(const Checkpoint& checkpoint) { assign_parameters(named_parameters(), checkpoint); }

}  // namespace sgt
