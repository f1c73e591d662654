#pragma once

// The MissFormer network. Inputs are per-step triples (x, y, missing-bit)
// mapped by an affine embedding onto d_model dimensions, summed with a
// sinusoidal positional encoding, passed through a stack of post-norm
// encoder layers (multi-head self-attention + feed-forward, each wrapped as
// residual then layer norm) and projected per token to a 2D position
// estimate. Missing steps enter as the constant token (0, 0, 1) and are
// never masked out of attention: the model learns what to do with them.

#include <missformer/corrupt.hpp>
#include <missformer/tensor.hpp>
#include <missformer/trajectory.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace missformer {

inline constexpr double kLayerNormEps = 1e-5;

// Sinusoidal encoding flavor. `literal` uses exponent d/d_model for every
// channel, so sine and cosine channels sweep frequencies independently;
// `paired` shares one frequency per sin/cos pair (exponent 2*floor(d/2)/d_model).
enum class PeVariant { literal, paired };

const char* to_string(PeVariant variant);
PeVariant pe_variant_from_string(const std::string& s);

struct ModelConfig {
  Index d_model = 64;
  Index n_head = 1;
  Index n_layer = 1;
  Index d_ff = 0;  // 0 -> 4 * d_model
  Index k_max = 20;
  SequenceMode input_mode = SequenceMode::positions;
  PeVariant pe_variant = PeVariant::literal;
  // Coordinates are multiplied by coord_scale before embedding and the head
  // output is divided by it, so raw meter ranges never reach the attention
  // logits. Purely a re-parameterization: estimates stay in meters.
  double coord_scale = 1.0;
  std::uint64_t seed = 0;

  Index ff_width() const { return d_ff > 0 ? d_ff : 4 * d_model; }
  Index head_width() const { return d_model / n_head; }
  void validate() const;  // throws std::invalid_argument
};

struct EncoderLayerParams {
  Tensor w_q, w_k, w_v, w_o;          // d_model x d_model projections
  Tensor w_ff1, b_ff1, w_ff2, b_ff2;  // feed-forward affine pair
  Tensor ln1_gain, ln1_bias;          // after the attention sublayer
  Tensor ln2_gain, ln2_bias;          // after the feed-forward sublayer
};

struct NamedParam {
  std::string name;
  Tensor tensor;
};

class MissFormerModel {
 public:
  explicit MissFormerModel(ModelConfig config);

  // Tensors alias shared autodiff nodes, so a copied model would share (not
  // duplicate) parameters; forbid copies to keep ownership obvious.
  MissFormerModel(const MissFormerModel&) = delete;
  MissFormerModel& operator=(const MissFormerModel&) = delete;
  MissFormerModel(MissFormerModel&&) = default;
  MissFormerModel& operator=(MissFormerModel&&) = default;

  const ModelConfig& config() const { return config_; }
  std::vector<NamedParam>& parameters() { return params_; }
  const std::vector<NamedParam>& parameters() const { return params_; }
  Index parameter_count() const;
  static Index parameter_count(const ModelConfig& config);
  void zero_grad();
  bool all_finite() const;

  Tensor embed_w, embed_b;  // 3 x d_model, 1 x d_model
  std::vector<EncoderLayerParams> layers;
  Tensor head_w, head_b;  // d_model x 2, 1 x 2

 private:
  ModelConfig config_;
  std::vector<NamedParam> params_;  // declared order, aliases the members
};

// One encoding entry / row / stacked matrix. Step index must satisfy
// 0 <= k < 10000 (the encoding is injective up to that horizon).
double positional_encoding_entry(Index k, Index d, Index d_model,
                                 PeVariant variant = PeVariant::literal);
DenseMatrix<double> positional_encoding(Index k, Index d_model,
                                        PeVariant variant = PeVariant::literal);
DenseMatrix<double> positional_encoding_matrix(Index length, Index d_model,
                                               PeVariant variant = PeVariant::literal);

// Embeds one sequence: row i = affine(values[i] * coord_scale, missing[i]) + PE_i.
Tensor embed(const ObservedSequence& obs, const MissFormerModel& model);

struct AttentionResult {
  Tensor output;
  Tensor weights;  // row-stochastic, one row per query
};

// softmax(Q K^T / sqrt(d_k)) V with the weights exposed for inspection.
AttentionResult attention(const Tensor& q, const Tensor& k, const Tensor& v);

// Recorded attention weights of one forward pass: weights[layer][head] is a
// k x k row-stochastic matrix.
struct AttentionRecord {
  std::vector<std::vector<DenseMatrix<double>>> weights;
};

struct ForwardOptions {
  bool record_attention = true;
  // Forces every attention matrix to the identity, reducing the network to a
  // per-token function of its own embedding (ablation/diagnostic).
  bool identity_attention = false;
};

struct ForwardResult {
  Tensor estimates;  // k x 2, meters
  AttentionRecord attention;
};

struct BatchForwardResult {
  Tensor estimates;  // (batch * k) x 2, meters, grouped by sequence
  std::vector<AttentionRecord> attention;  // one record per sequence when enabled
  Index seq_len = 0;
  Index batch_size = 0;
};

// All sequences in a batch must share one length (the trainer buckets by
// length); stacking them keeps the projections and feed-forward as single
// large matrix products.
BatchForwardResult encoder_forward_batch(const std::vector<const ObservedSequence*>& batch,
                                         const MissFormerModel& model,
                                         const ForwardOptions& options = {});

ForwardResult encoder_forward(const ObservedSequence& obs, const MissFormerModel& model,
                              const ForwardOptions& options = {});

// Extends the observed prefix by `horizon` missing tokens and runs the model;
// the returned trajectory covers the full extended length, its tail being the
// prediction. dt is carried through for downstream bookkeeping only.
Trajectory predict_full(const ObservedSequence& obs, const MissFormerModel& model, Index horizon,
                        double dt = 1.0);

}  // namespace missformer
