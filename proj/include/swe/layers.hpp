#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swe/graph.hpp"
#include "swe/params.hpp"
#include "swe/rng.hpp"

namespace swe::nn {

enum class Mode { train, eval };

enum class Activation { identity, relu, gelu };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

// Affine map with optional activation: act(x W + b), x is [n x in].
struct Linear {
  int weight = -1;
  int bias = -1;
  int in = 0;
  int out = 0;
  Activation act = Activation::identity;

  static Linear create(ParamStore& store, const std::string& name, int in,
                       int out, Activation act, Rng& rng);
  ad::Var apply(Binder& b, ad::Var input) const;
  static std::size_t param_count(int in, int out) {
    return static_cast<std::size_t>(in) * out + out;
  }
};

struct EncoderConfig {
  int model_dim = 512;
  int n_heads = 16;
  int n_layers = 24;
  int ffn_hidden_dim = 0;      // 0 means 4 * model_dim
  double dropout_rate = 0.0;   // on sublayer outputs, train mode only

  int ffn_dim() const { return ffn_hidden_dim > 0 ? ffn_hidden_dim : 4 * model_dim; }
  void validate() const;
};

struct LayerNorm {
  int gamma = -1;
  int beta = -1;
  int dim = 0;
  double eps = 1e-5;

  static LayerNorm create(ParamStore& store, const std::string& name, int dim);
  ad::Var apply(Binder& b, ad::Var input) const;
  static std::size_t param_count(int dim) { return 2u * static_cast<std::size_t>(dim); }
};

// Scaled dot-product self-attention over the whole sequence, no mask.
struct MultiHeadAttention {
  Linear query, key, value, out;
  int n_heads = 1;

  static MultiHeadAttention create(ParamStore& store, const std::string& name,
                                   int model_dim, int n_heads, Rng& rng);
  // attn_out, when given, collects the per-head [L x L] attention matrices.
  ad::Var apply(Binder& b, ad::Var input, double dropout_rate, Mode mode,
                Rng* dropout_rng, std::vector<ad::Var>* attn_out = nullptr) const;
  static std::size_t param_count(int model_dim);
};

struct EncoderLayer {
  MultiHeadAttention attn;
  LayerNorm norm_attn;
  Linear ffn_in;   // relu
  Linear ffn_out;  // identity
  LayerNorm norm_ffn;

  static EncoderLayer create(ParamStore& store, const std::string& name,
                             const EncoderConfig& cfg, Rng& rng);
  ad::Var apply(Binder& b, ad::Var input, const EncoderConfig& cfg, Mode mode,
                Rng* dropout_rng, std::vector<ad::Var>* attn_out = nullptr) const;
};

// Post-norm encoder stack: per layer, attention + residual + layer norm,
// then feed-forward + residual + layer norm. Shape-preserving [L x d].
struct TransformerEncoder {
  EncoderConfig cfg;
  std::vector<EncoderLayer> layers;

  static TransformerEncoder create(ParamStore& store, const std::string& name,
                                   const EncoderConfig& cfg, Rng& rng);
  ad::Var apply(Binder& b, ad::Var input, Mode mode, Rng* dropout_rng,
                std::vector<ad::Var>* attn_out = nullptr) const;
  static std::size_t param_count(const EncoderConfig& cfg);
};

// Inverted dropout: train mode zeroes each element with probability `rate`
// and scales survivors by 1/(1-rate); eval mode is the identity.
ad::Var dropout(ad::Var input, double rate, Mode mode, Rng* rng);

// Standard LSTM gate parameters; gates packed [input, forget, cell, output].
struct LstmParams {
  int w_input = -1;   // [in x 4h]
  int w_hidden = -1;  // [h x 4h]
  int bias = -1;      // [4h]
  int input_dim = 0;
  int hidden_dim = 0;

  static LstmParams create(ParamStore& store, const std::string& name, int in,
                           int hidden, Rng& rng);
  static std::size_t param_count(int in, int hidden);
};

// Runs the recurrence from zero initial state over [T x in], returning the
// hidden state at every step as [T x hidden].
ad::Var lstm_forward(Binder& b, const LstmParams& p, ad::Var seq);

// Sinusoidal position table, [length x dim]; added to embeddings where day
// order matters.
ad::Tensor sinusoidal_positional_encoding(int length, int dim);

}  // namespace swe::nn
