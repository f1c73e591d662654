#include <missformer/model.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace missformer {

const char* to_string(PeVariant variant) {
  return variant == PeVariant::literal ? "literal" : "paired";
}

PeVariant pe_variant_from_string(const std::string& s) {
  if (s == "literal") return PeVariant::literal;
  if (s == "paired") return PeVariant::paired;
  throw std::invalid_argument("unknown positional encoding variant '" + s + "'");
}

void ModelConfig::validate() const {
  if (d_model < 1) throw std::invalid_argument("d_model must be >= 1");
  if (n_head < 1) throw std::invalid_argument("n_head must be >= 1");
  if (n_layer < 1) throw std::invalid_argument("n_layer must be >= 1");
  if (d_model % n_head != 0)
    throw std::invalid_argument("d_model (" + std::to_string(d_model) +
                                ") must be divisible by n_head (" + std::to_string(n_head) + ")");
  if (d_ff < 0) throw std::invalid_argument("d_ff must be >= 0 (0 selects 4*d_model)");
  if (k_max < 2 || k_max >= 10000)
    throw std::invalid_argument("k_max must lie in [2, 10000); the positional encoding is only "
                                "injective below 10000 steps");
  if (!(coord_scale > 0.0) || !std::isfinite(coord_scale))
    throw std::invalid_argument("coord_scale must be finite and positive");
}

namespace {

DenseMatrix<double> xavier_uniform(Rng& rng, Index rows, Index cols) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  DenseMatrix<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-limit, limit);
  return m;
}

Tensor weight(Rng& rng, Index rows, Index cols) {
  return Tensor(xavier_uniform(rng, rows, cols), /*requires_grad=*/true);
}

Tensor zeros_param(Index rows, Index cols) {
  return Tensor(DenseMatrix<double>::Zero(rows, cols), /*requires_grad=*/true);
}

Tensor ones_param(Index rows, Index cols) {
  return Tensor(DenseMatrix<double>::Constant(rows, cols, 1.0), /*requires_grad=*/true);
}

}  // namespace

MissFormerModel::MissFormerModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const Index d = config_.d_model;
  const Index f = config_.ff_width();
  Rng rng(Rng::derive(config_.seed, /*stream=*/0x6d6f64656cULL));  // parameter stream

  embed_w = weight(rng, 3, d);
  embed_b = zeros_param(1, d);
  params_.push_back({"embed.w", embed_w});
  params_.push_back({"embed.b", embed_b});

  layers.resize(static_cast<std::size_t>(config_.n_layer));
  for (Index l = 0; l < config_.n_layer; ++l) {
    EncoderLayerParams& layer = layers[static_cast<std::size_t>(l)];
    layer.w_q = weight(rng, d, d);
    layer.w_k = weight(rng, d, d);
    layer.w_v = weight(rng, d, d);
    layer.w_o = weight(rng, d, d);
    layer.w_ff1 = weight(rng, d, f);
    layer.b_ff1 = zeros_param(1, f);
    layer.w_ff2 = weight(rng, f, d);
    layer.b_ff2 = zeros_param(1, d);
    layer.ln1_gain = ones_param(1, d);
    layer.ln1_bias = zeros_param(1, d);
    layer.ln2_gain = ones_param(1, d);
    layer.ln2_bias = zeros_param(1, d);

    const std::string prefix = "layer" + std::to_string(l) + ".";
    params_.push_back({prefix + "attn.wq", layer.w_q});
    params_.push_back({prefix + "attn.wk", layer.w_k});
    params_.push_back({prefix + "attn.wv", layer.w_v});
    params_.push_back({prefix + "attn.wo", layer.w_o});
    params_.push_back({prefix + "ff.w1", layer.w_ff1});
    params_.push_back({prefix + "ff.b1", layer.b_ff1});
    params_.push_back({prefix + "ff.w2", layer.w_ff2});
    params_.push_back({prefix + "ff.b2", layer.b_ff2});
    params_.push_back({prefix + "ln1.gain", layer.ln1_gain});
    params_.push_back({prefix + "ln1.bias", layer.ln1_bias});
    params_.push_back({prefix + "ln2.gain", layer.ln2_gain});
    params_.push_back({prefix + "ln2.bias", layer.ln2_bias});
  }

  head_w = weight(rng, d, 2);
  head_b = zeros_param(1, 2);
  params_.push_back({"head.w", head_w});
  params_.push_back({"head.b", head_b});
}

Index MissFormerModel::parameter_count() const {
  Index total = 0;
  for (const auto& p : params_) total += p.tensor.size();
  return total;
}

Index MissFormerModel::parameter_count(const ModelConfig& config) {
  config.validate();
  const Index d = config.d_model;
  const Index f = config.ff_width();
  const Index embed = 3 * d + d;
  const Index per_layer = 4 * d * d + (d * f + f) + (f * d + d) + 4 * d;
  const Index head = d * 2 + 2;
  return embed + config.n_layer * per_layer + head;
}

void MissFormerModel::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

bool MissFormerModel::all_finite() const {
  for (const auto& p : params_)
    if (!p.tensor.value().allFinite()) return false;
  return true;
}

double positional_encoding_entry(Index k, Index d, Index d_model, PeVariant variant) {
  if (k < 0 || k >= 10000)
    throw std::invalid_argument("positional encoding step index " + std::to_string(k) +
                                " outside [0, 10000)");
  if (d < 0 || d >= d_model) throw std::invalid_argument("encoding channel out of range");
  const double exponent = variant == PeVariant::literal
                              ? static_cast<double>(d) / static_cast<double>(d_model)
                              : static_cast<double>(2 * (d / 2)) / static_cast<double>(d_model);
  const double arg = static_cast<double>(k) / std::pow(10000.0, exponent);
  return (d % 2 == 0) ? std::sin(arg) : std::cos(arg);
}

DenseMatrix<double> positional_encoding(Index k, Index d_model, PeVariant variant) {
  DenseMatrix<double> row(1, d_model);
  for (Index d = 0; d < d_model; ++d) row(0, d) = positional_encoding_entry(k, d, d_model, variant);
  return row;
}

DenseMatrix<double> positional_encoding_matrix(Index length, Index d_model, PeVariant variant) {
  DenseMatrix<double> pe(length, d_model);
  for (Index k = 0; k < length; ++k) pe.row(k) = positional_encoding(k, d_model, variant);
  return pe;
}

namespace {

DenseMatrix<double> input_channels(const ObservedSequence& obs, double coord_scale) {
  const Index k = obs.length();
  DenseMatrix<double> x(k, 3);
  for (Index i = 0; i < k; ++i) {
    x(i, 0) = obs.values(i, 0) * coord_scale;
    x(i, 1) = obs.values(i, 1) * coord_scale;
    x(i, 2) = static_cast<double>(obs.missing[static_cast<std::size_t>(i)]);
  }
  return x;
}

}  // namespace

Tensor embed(const ObservedSequence& obs, const MissFormerModel& model) {
  const ModelConfig& config = model.config();
  validate(obs);
  if (obs.length() > config.k_max)
    throw std::invalid_argument("sequence length " + std::to_string(obs.length()) +
                                " exceeds k_max " + std::to_string(config.k_max));
  Tensor x(input_channels(obs, config.coord_scale));
  Tensor pe(positional_encoding_matrix(obs.length(), config.d_model, config.pe_variant));
  return add(add_rowwise(matmul(x, model.embed_w), model.embed_b), pe);
}

AttentionResult attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.cols() != k.cols())
    throw std::invalid_argument("attention: query width " + std::to_string(q.cols()) +
                                " does not match key width " + std::to_string(k.cols()));
  if (k.rows() != v.rows())
    throw std::invalid_argument("attention: " + std::to_string(k.rows()) + " keys vs " +
                                std::to_string(v.rows()) + " values");
  if (q.cols() < 1) throw std::invalid_argument("attention: empty key dimension");
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Tensor weights = softmax(scale(matmul(q, transpose(k)), inv_sqrt_dk), /*axis=*/1);
  return {matmul(weights, v), weights};
}

BatchForwardResult encoder_forward_batch(const std::vector<const ObservedSequence*>& batch,
                                         const MissFormerModel& model,
                                         const ForwardOptions& options) {
  const ModelConfig& config = model.config();
  if (batch.empty()) throw std::invalid_argument("empty forward batch");
  const Index b_size = static_cast<Index>(batch.size());
  const Index k = batch[0]->length();
  if (k < 2 || k > config.k_max)
    throw std::invalid_argument("sequence length " + std::to_string(k) + " outside [2, " +
                                std::to_string(config.k_max) + "]");
  for (const ObservedSequence* obs : batch) {
    validate(*obs);
    if (obs->length() != k)
      throw std::invalid_argument("forward batch mixes sequence lengths " + std::to_string(k) +
                                  " and " + std::to_string(obs->length()));
    if (obs->mode != config.input_mode)
      throw std::invalid_argument("sequence mode does not match the model's input mode");
  }

  const Index d = config.d_model;
  const Index n_head = config.n_head;
  const Index d_k = config.head_width();

  DenseMatrix<double> x(b_size * k, 3);
  for (Index b = 0; b < b_size; ++b)
    x.middleRows(b * k, k) = input_channels(*batch[static_cast<std::size_t>(b)], config.coord_scale);
  const DenseMatrix<double> pe_rows = positional_encoding_matrix(k, d, config.pe_variant);
  DenseMatrix<double> pe(b_size * k, d);
  for (Index b = 0; b < b_size; ++b) pe.middleRows(b * k, k) = pe_rows;

  Tensor h = add(add_rowwise(matmul(Tensor(std::move(x)), model.embed_w), model.embed_b),
                 Tensor(std::move(pe)));

  std::vector<AttentionRecord> records;
  if (options.record_attention) {
    records.resize(static_cast<std::size_t>(b_size));
    for (auto& rec : records) rec.weights.resize(static_cast<std::size_t>(config.n_layer));
  }

  for (Index l = 0; l < config.n_layer; ++l) {
    const EncoderLayerParams& layer = model.layers[static_cast<std::size_t>(l)];
    Tensor attn_stacked;
    if (options.identity_attention) {
      // Identity weights short-circuit attention to the value projection.
      attn_stacked = matmul(h, layer.w_v);
      if (options.record_attention)
        for (auto& rec : records)
          rec.weights[static_cast<std::size_t>(l)].assign(
              static_cast<std::size_t>(n_head), DenseMatrix<double>::Identity(k, k));
    } else {
      Tensor q_all = matmul(h, layer.w_q);
      Tensor k_all = matmul(h, layer.w_k);
      Tensor v_all = matmul(h, layer.w_v);
      std::vector<Tensor> per_seq;
      per_seq.reserve(static_cast<std::size_t>(b_size));
      for (Index b = 0; b < b_size; ++b) {
        std::vector<Tensor> per_head;
        per_head.reserve(static_cast<std::size_t>(n_head));
        Tensor qb = slice_rows(q_all, b * k, k);
        Tensor kb = slice_rows(k_all, b * k, k);
        Tensor vb = slice_rows(v_all, b * k, k);
        for (Index hh = 0; hh < n_head; ++hh) {
          AttentionResult res =
              attention(n_head == 1 ? qb : slice_cols(qb, hh * d_k, d_k),
                        n_head == 1 ? kb : slice_cols(kb, hh * d_k, d_k),
                        n_head == 1 ? vb : slice_cols(vb, hh * d_k, d_k));
          if (options.record_attention)
            records[static_cast<std::size_t>(b)]
                .weights[static_cast<std::size_t>(l)]
                .push_back(res.weights.value());
          per_head.push_back(std::move(res.output));
        }
        per_seq.push_back(n_head == 1 ? std::move(per_head[0]) : concat_cols(per_head));
      }
      attn_stacked = b_size == 1 ? std::move(per_seq[0]) : concat_rows(per_seq);
      attn_stacked = matmul(attn_stacked, layer.w_o);
    }
    h = layer_norm(add(h, attn_stacked), layer.ln1_gain, layer.ln1_bias, kLayerNormEps);

    Tensor ff = add_rowwise(
        matmul(relu(add_rowwise(matmul(h, layer.w_ff1), layer.b_ff1)), layer.w_ff2), layer.b_ff2);
    h = layer_norm(add(h, ff), layer.ln2_gain, layer.ln2_bias, kLayerNormEps);
  }

  Tensor out = add_rowwise(matmul(h, model.head_w), model.head_b);
  if (config.coord_scale != 1.0) out = scale(out, 1.0 / config.coord_scale);

  BatchForwardResult result;
  result.estimates = std::move(out);
  result.attention = std::move(records);
  result.seq_len = k;
  result.batch_size = b_size;
  return result;
}

ForwardResult encoder_forward(const ObservedSequence& obs, const MissFormerModel& model,
                              const ForwardOptions& options) {
  BatchForwardResult batch = encoder_forward_batch({&obs}, model, options);
  ForwardResult result;
  result.estimates = std::move(batch.estimates);
  if (options.record_attention) result.attention = std::move(batch.attention[0]);
  return result;
}

Trajectory predict_full(const ObservedSequence& obs, const MissFormerModel& model, Index horizon,
                        double dt) {
  if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
  const Index total = obs.length() + horizon;
  if (total > model.config().k_max)
    throw std::invalid_argument("observed prefix " + std::to_string(obs.length()) + " + horizon " +
                                std::to_string(horizon) + " exceeds k_max " +
                                std::to_string(model.config().k_max));
  ObservedSequence extended;
  extended.mode = obs.mode;
  extended.values = DenseMatrix<double>::Zero(total, 2);
  extended.values.topRows(obs.length()) = obs.values;
  extended.missing.assign(static_cast<std::size_t>(total), 0);
  for (Index i = 0; i < obs.length(); ++i)
    extended.missing[static_cast<std::size_t>(i)] = obs.missing[static_cast<std::size_t>(i)];
  if (horizon > 0) extended = mask_tail_for_prediction(extended, horizon);

  ForwardOptions options;
  options.record_attention = false;
  ForwardResult forward = encoder_forward(extended, model, options);

  Trajectory estimate;
  estimate.dt = dt;
  estimate.positions = forward.estimates.value();
  return estimate;
}

}  // namespace missformer
