#include "swe/layers.hpp"

#include <cmath>

#include "swe/error.hpp"

namespace swe::nn {

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "gelu") return Activation::gelu;
  fail("unknown activation: " + s);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::gelu: return "gelu";
  }
  return "identity";
}

namespace {

ad::Var activate(ad::Var x, Activation act) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return ad::relu(x);
    case Activation::gelu: return ad::gelu(x);
  }
  return x;
}

}  // namespace

Linear Linear::create(ParamStore& store, const std::string& name, int in,
                      int out, Activation act, Rng& rng) {
  require(in > 0 && out > 0, "linear " + name + ": dimensions must be positive");
  Linear l;
  l.in = in;
  l.out = out;
  l.act = act;
  l.weight = store.add(name + ".weight", fan_in_init({in, out}, in, rng));
  l.bias = store.add(name + ".bias", fan_in_init({out}, in, rng));
  return l;
}

ad::Var Linear::apply(Binder& b, ad::Var input) const {
  const ad::Tensor& x = input.value();
  require(x.rank() == 2 && x.dim(1) == in,
          "linear: input " + ad::shape_str(x.shape()) + " does not match in-dim " +
              std::to_string(in));
  ad::Var affine = ad::add_rowvec(ad::matmul(input, b[weight]), b[bias]);
  return activate(affine, act);
}

void EncoderConfig::validate() const {
  require(model_dim > 0 && n_heads > 0 && n_layers > 0,
          "encoder config: dimensions must be positive");
  require(model_dim % n_heads == 0,
          "encoder config: model_dim " + std::to_string(model_dim) +
              " not divisible by n_heads " + std::to_string(n_heads));
  require(dropout_rate >= 0.0 && dropout_rate < 1.0,
          "encoder config: dropout_rate must be in [0, 1)");
}

LayerNorm LayerNorm::create(ParamStore& store, const std::string& name, int dim) {
  LayerNorm ln;
  ln.dim = dim;
  ln.gamma = store.add(name + ".gamma", ad::Tensor::full({dim}, 1.0));
  ln.beta = store.add(name + ".beta", ad::Tensor::zeros({dim}));
  return ln;
}

ad::Var LayerNorm::apply(Binder& b, ad::Var input) const {
  ad::Var normed = ad::layer_norm_lastdim(input, eps);
  return ad::add_rowvec(ad::mul_rowvec(normed, b[gamma]), b[beta]);
}

MultiHeadAttention MultiHeadAttention::create(ParamStore& store,
                                              const std::string& name,
                                              int model_dim, int n_heads,
                                              Rng& rng) {
  require(model_dim % n_heads == 0,
          "attention: model_dim " + std::to_string(model_dim) +
              " not divisible by n_heads " + std::to_string(n_heads));
  MultiHeadAttention m;
  m.n_heads = n_heads;
  m.query = Linear::create(store, name + ".q", model_dim, model_dim,
                           Activation::identity, rng);
  m.key = Linear::create(store, name + ".k", model_dim, model_dim,
                         Activation::identity, rng);
  m.value = Linear::create(store, name + ".v", model_dim, model_dim,
                           Activation::identity, rng);
  m.out = Linear::create(store, name + ".o", model_dim, model_dim,
                         Activation::identity, rng);
  return m;
}

std::size_t MultiHeadAttention::param_count(int model_dim) {
  return 4 * Linear::param_count(model_dim, model_dim);
}

ad::Var MultiHeadAttention::apply(Binder& b, ad::Var input, double dropout_rate,
                                  Mode mode, Rng* dropout_rng,
                                  std::vector<ad::Var>* attn_out) const {
  int d = query.in;
  int head_dim = d / n_heads;
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

  ad::Var q = query.apply(b, input);
  ad::Var k = key.apply(b, input);
  ad::Var v = value.apply(b, input);

  ad::Var merged{};
  for (int h = 0; h < n_heads; ++h) {
    ad::Var qh = ad::slice_cols(q, h * head_dim, head_dim);
    ad::Var kh = ad::slice_cols(k, h * head_dim, head_dim);
    ad::Var vh = ad::slice_cols(v, h * head_dim, head_dim);
    ad::Var scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt);
    ad::Var weights = ad::softmax_lastdim(scores);
    if (attn_out) attn_out->push_back(weights);
    weights = dropout(weights, dropout_rate, mode, dropout_rng);
    ad::Var head = ad::matmul(weights, vh);
    merged = (h == 0) ? head : ad::concat_cols(merged, head);
  }
  return out.apply(b, merged);
}

EncoderLayer EncoderLayer::create(ParamStore& store, const std::string& name,
                                  const EncoderConfig& cfg, Rng& rng) {
  EncoderLayer l;
  l.attn = MultiHeadAttention::create(store, name + ".attn", cfg.model_dim,
                                      cfg.n_heads, rng);
  l.norm_attn = LayerNorm::create(store, name + ".norm1", cfg.model_dim);
  l.ffn_in = Linear::create(store, name + ".ffn1", cfg.model_dim, cfg.ffn_dim(),
                            Activation::relu, rng);
  l.ffn_out = Linear::create(store, name + ".ffn2", cfg.ffn_dim(), cfg.model_dim,
                             Activation::identity, rng);
  l.norm_ffn = LayerNorm::create(store, name + ".norm2", cfg.model_dim);
  return l;
}

ad::Var EncoderLayer::apply(Binder& b, ad::Var input, const EncoderConfig& cfg,
                            Mode mode, Rng* dropout_rng,
                            std::vector<ad::Var>* attn_out) const {
  ad::Var a = attn.apply(b, input, cfg.dropout_rate, mode, dropout_rng, attn_out);
  a = dropout(a, cfg.dropout_rate, mode, dropout_rng);
  ad::Var x = norm_attn.apply(b, ad::add(input, a));

  ad::Var f = ffn_out.apply(b, ffn_in.apply(b, x));
  f = dropout(f, cfg.dropout_rate, mode, dropout_rng);
  return norm_ffn.apply(b, ad::add(x, f));
}

TransformerEncoder TransformerEncoder::create(ParamStore& store,
                                              const std::string& name,
                                              const EncoderConfig& cfg,
                                              Rng& rng) {
  cfg.validate();
  TransformerEncoder enc;
  enc.cfg = cfg;
  enc.layers.reserve(static_cast<std::size_t>(cfg.n_layers));
  for (int i = 0; i < cfg.n_layers; ++i) {
    enc.layers.push_back(
        EncoderLayer::create(store, name + ".layer" + std::to_string(i), cfg, rng));
  }
  return enc;
}

ad::Var TransformerEncoder::apply(Binder& b, ad::Var input, Mode mode,
                                  Rng* dropout_rng,
                                  std::vector<ad::Var>* attn_out) const {
  const ad::Tensor& x = input.value();
  require(x.rank() == 2 && x.dim(1) == cfg.model_dim,
          "encoder: input " + ad::shape_str(x.shape()) +
              " does not match model_dim " + std::to_string(cfg.model_dim));
  ad::Var h = input;
  for (const auto& layer : layers) {
    h = layer.apply(b, h, cfg, mode, dropout_rng, attn_out);
  }
  return h;
}

std::size_t TransformerEncoder::param_count(const EncoderConfig& cfg) {
  std::size_t per_layer = MultiHeadAttention::param_count(cfg.model_dim) +
                          2 * LayerNorm::param_count(cfg.model_dim) +
                          Linear::param_count(cfg.model_dim, cfg.ffn_dim()) +
                          Linear::param_count(cfg.ffn_dim(), cfg.model_dim);
  return per_layer * static_cast<std::size_t>(cfg.n_layers);
}

ad::Var dropout(ad::Var input, double rate, Mode mode, Rng* rng) {
  require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0, 1)");
  if (mode == Mode::eval || rate == 0.0) return input;
  require(rng != nullptr, "dropout: train mode needs an rng");
  const ad::Tensor& x = input.value();
  double keep_scale = 1.0 / (1.0 - rate);
  ad::Tensor mask(x.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng->bernoulli(rate) ? 0.0 : keep_scale;
  }
  ad::Var mask_leaf = input.graph->leaf(std::move(mask));
  return ad::mul(input, mask_leaf);
}

LstmParams LstmParams::create(ParamStore& store, const std::string& name,
                              int in, int hidden, Rng& rng) {
  require(in > 0 && hidden > 0, "lstm " + name + ": dimensions must be positive");
  LstmParams p;
  p.input_dim = in;
  p.hidden_dim = hidden;
  p.w_input = store.add(name + ".w_input", fan_in_init({in, 4 * hidden}, in, rng));
  p.w_hidden =
      store.add(name + ".w_hidden", fan_in_init({hidden, 4 * hidden}, hidden, rng));
  p.bias = store.add(name + ".bias", fan_in_init({4 * hidden}, hidden, rng));
  return p;
}

std::size_t LstmParams::param_count(int in, int hidden) {
  return static_cast<std::size_t>(in) * 4 * hidden +
         static_cast<std::size_t>(hidden) * 4 * hidden + 4u * hidden;
}

ad::Var lstm_forward(Binder& b, const LstmParams& p, ad::Var seq) {
  const ad::Tensor& x = seq.value();
  require(x.rank() == 2 && x.dim(1) == p.input_dim,
          "lstm: input " + ad::shape_str(x.shape()) + " does not match in-dim " +
              std::to_string(p.input_dim));
  int steps = x.dim(0);
  int h = p.hidden_dim;
  ad::Graph& g = b.graph();

  ad::Var hidden = g.leaf(ad::Tensor::zeros({1, h}));
  ad::Var cell = g.leaf(ad::Tensor::zeros({1, h}));
  std::vector<ad::Var> outputs;
  outputs.reserve(static_cast<std::size_t>(steps));

  for (int t = 0; t < steps; ++t) {
    ad::Var xt = ad::slice_rows(seq, t, 1);
    ad::Var gates = ad::add_rowvec(
        ad::add(ad::matmul(xt, b[p.w_input]), ad::matmul(hidden, b[p.w_hidden])),
        b[p.bias]);
    ad::Var gi = ad::sigmoid(ad::slice_cols(gates, 0, h));
    ad::Var gf = ad::sigmoid(ad::slice_cols(gates, h, h));
    ad::Var gc = ad::tanh_op(ad::slice_cols(gates, 2 * h, h));
    ad::Var go = ad::sigmoid(ad::slice_cols(gates, 3 * h, h));
    cell = ad::add(ad::mul(gf, cell), ad::mul(gi, gc));
    hidden = ad::mul(go, ad::tanh_op(cell));
    outputs.push_back(hidden);
  }
  return ad::concat_rows(outputs);
}

ad::Tensor sinusoidal_positional_encoding(int length, int dim) {
  require(length > 0 && dim > 0, "positional encoding: dims must be positive");
  ad::Tensor pe({length, dim});
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < dim; i += 2) {
      double freq = std::pow(10000.0, -static_cast<double>(i) / dim);
      pe.at(pos, i) = std::sin(pos * freq);
      if (i + 1 < dim) pe.at(pos, i + 1) = std::cos(pos * freq);
    }
  }
  return pe;
}

}  // namespace swe::nn
