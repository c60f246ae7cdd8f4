#pragma once

// Syntax-guided graph transformer.
//
// Per layer l, for a source/target event pair (s, t):
//   G      graph multi-head self-attention: node i attends over the triples in
//          N_in(i) + N_out(i); keys/values are projections of the triple
//          representation R = W_r [h_head | r | h_dep] + b_r.
//   g_st   syntax-guided attention: one query from [h_s | h_t] attends over
//          the triples of Phi_st.
//   H_hat  fusion: rows s and t are fusion([g_s | g_st]) and
//          fusion([g_st | g_t]); every other row is non_event(g_i).
//   H      LayerNorm(H_hat + H_prev).
// The relation head reads [h_s | h_t] from the last layer; the event head
// reads the encoder's context vectors directly.
//
// Weight matrices are stored [out x in] and applied with linear().

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sgt/checkpoint.hpp"
#include "sgt/corpus.hpp"
#include "sgt/dep_graph.hpp"
#include "sgt/encoder.hpp"
#include "sgt/tensor.hpp"

namespace sgt {

struct ModelConfig {
  std::size_t width = 16;           // node width d
  std::size_t layers = 2;           // L
  std::size_t heads = 2;            // M; per-head width is width / heads
  std::size_t relation_width = 8;   // dependency-relation embedding width
  std::size_t context_width = 0;    // encoder output width
  std::size_t relation_count = 0;   // dependency relations incl. cross-sentence
  std::size_t label_count = 0;      // temporal labels incl. Vague
  std::array<double, 2> event_weights{0.5, 0.5};  // non-event, event; sums to 1
  std::vector<double> label_weights;              // per temporal label; empty = all 1
  double norm_eps = 1e-12;
  double init_scale = 0.3;  // Uniform(-init_scale, init_scale) for weight matrices

  std::size_t head_width() const { return width / heads; }
  void validate() const;
};

struct HeadParams {
  Tensor query;  // [head_width x d] (graph) or [head_width x 2d] (syntax-guided)
  Tensor key;    // [head_width x d]
  Tensor value;  // [head_width x d]
  Tensor triple; // [d x (2d + relation_width)]
  Tensor triple_bias;  // [d]; graph heads only, syntax heads share LayerParams::syntax_triple_bias
};

struct LayerParams {
  std::vector<HeadParams> graph_heads;
  Tensor graph_output;  // [d x d]
  std::vector<HeadParams> syntax_heads;
  Tensor syntax_triple_bias;  // [d]
  Tensor syntax_output;       // [d x d]
  Tensor fusion;              // [d x 2d], shared by source and target rows
  Tensor non_event;           // [d x d]
  Tensor norm_gain;           // [d]
  Tensor norm_bias;           // [d]
};

struct ModelParams {
  Tensor node_init_weight;    // [d x context_width]
  Tensor node_init_bias;      // [d]
  Tensor relation_embedding;  // [relation_count x relation_width], shared by all layers
  std::vector<LayerParams> layers;
  Tensor event_weight;     // [2 x context_width]
  Tensor event_bias;       // [2]
  Tensor relation_weight;  // [label_count x 2d]
  Tensor relation_bias;    // [label_count]

  /// Uniform(-init_scale, init_scale) matrices, zero biases, unit norm gains.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  std::vector<NamedTensor> named() const;
  std::vector<Tensor> event_head() const;
  /// Everything except the event head.
  std::vector<Tensor> relation_network() const;
};

/// Per-node lists of incident edge indices, N_in then N_out.
using Incidence = std::vector<std::vector<std::size_t>>;
Incidence incidence_lists(const SentenceGraph& graph);

struct GraphAttentionOutput {
  Tensor output;  // [n x d]
  std::vector<std::vector<std::vector<double>>> weights;  // [head][node][k], aligned with incidence
};

struct SyntaxAttentionOutput {
  Tensor output;  // [1 x d]
  std::vector<std::vector<double>> weights;  // [head][k], aligned with the phi edge list
};

Tensor init_nodes(const Tensor& context, const ModelParams& params);

/// Linear map of [head | relation | dependent] rows (each [1 x .]).
Tensor triple_rep(const Tensor& head, const Tensor& relation, const Tensor& dependent, const Tensor& weight,
                  const Tensor& bias);

/// Rows [h_head | r | h_dependent] for the listed edges.
Tensor triple_inputs(const Tensor& nodes, const SentenceGraph& graph, std::span<const std::size_t> edges,
                     const Tensor& relation_embedding);

GraphAttentionOutput graph_self_attention(const Tensor& nodes, const SentenceGraph& graph, const Incidence& incidence,
                                          const LayerParams& layer, const Tensor& relation_embedding,
                                          const ModelConfig& config);

SyntaxAttentionOutput syntax_guided_attention(const Tensor& nodes, const SentenceGraph& graph, std::size_t source,
                                              std::size_t target, std::span<const std::size_t> phi_edges,
                                              const LayerParams& layer, const Tensor& relation_embedding,
                                              const ModelConfig& config);

Tensor fuse(const Tensor& graph_out, const Tensor& syntax_out, std::size_t source, std::size_t target,
            const LayerParams& layer);

struct LayerTrace {
  std::vector<std::vector<std::vector<double>>> graph_weights;  // [head][node][k]
  std::vector<std::vector<double>> syntax_weights;             // [head][k]
  std::size_t normalized_rows = 0;
};

struct ForwardTrace {
  std::vector<std::vector<double>> node_states;  // H^0..H^L, row-major [n x d]
  std::vector<LayerTrace> layers;
  Incidence incidence;
  std::vector<std::size_t> phi_edges;  // key order of syntax_weights
};

struct ForwardResult {
  Tensor source;  // h^L_s, [1 x d]
  Tensor target;  // h^L_t, [1 x d]
  Tensor nodes;   // H^L
  ForwardTrace trace;
};

/// Optional enumeration orders for the triples; defaults are incidence_lists()
/// and the context's ascending phi edges.
struct TripleOrder {
  const Incidence* incidence = nullptr;
  const std::vector<std::size_t>* phi_edges = nullptr;
};

ForwardResult forward(const SentenceGraph& graph, const SyntaxContext& context, const Tensor& context_vectors,
                      const ModelParams& params, const ModelConfig& config, TripleOrder order = {});

/// softmax(W_event c_i + b_event) per token, [n x 2].
Tensor event_scores(const Tensor& context_vectors, const ModelParams& params);
/// softmax(W_z [h_s | h_t] + b), [1 x label_count].
Tensor relation_scores(const Tensor& source, const Tensor& target, const ModelParams& params);

Tensor loss_event(const Tensor& scores, std::span<const std::size_t> gold, const std::array<double, 2>& weights);
Tensor loss_relation(const std::vector<Tensor>& scores, std::span<const std::size_t> gold,
                     std::span<const double> weights);

/// Encoder plus network parameters, with checkpoint (de)serialization.
class SgtModel {
 public:
  SgtModel(ModelConfig config, EncoderConfig encoder_config, const Vocabularies& vocabs, const LabelScheme& scheme,
           std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ModelConfig& mutable_config() { return config_; }
  const Encoder& encoder() const { return encoder_; }
  Encoder& encoder() { return encoder_; }
  const ModelParams& params() const { return params_; }
  ModelParams& params() { return params_; }
  const LabelScheme& scheme() const { return scheme_; }
  const Vocabularies& vocabs() const { return encoder_.vocabs(); }

  std::vector<NamedTensor> named_parameters() const;
  /// Parameters updated by the event-detection loss: embedding + event head.
  std::vector<Tensor> event_parameters() const;
  /// Parameters updated only by the relation loss.
  std::vector<Tensor> relation_parameters() const;

  Checkpoint to_checkpoint() const;
  /// Rebuilds a model from a checkpoint written by to_checkpoint().
  static SgtModel from_checkpoint(const Checkpoint& checkpoint, const Vocabularies& vocabs);
  void load_values(const Checkpoint& checkpoint);

 private:
  ModelConfig config_;
  LabelScheme scheme_;
  Encoder encoder_;
  ModelParams params_;
};

}  // namespace sgt
