#include "swe/gradcheck_suite.hpp"

#include "swe/grad_check.hpp"
#include "swe/layers.hpp"
#include "swe/models.hpp"
#include "swe/rng.hpp"
#include "swe/training.hpp"

namespace swe::diag {

namespace {

constexpr double kEps = 1e-5;

ad::Tensor random_tensor(std::vector<int> shape, nn::Rng& rng) {
  ad::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

// Square-sum readout so output gradients are value-dependent. Scaled down
// so coordinates with structurally zero gradients (softmax shift
// invariance, layer-norm square-sums) are not swamped by the rounding
// noise of the finite differences; true relative errors are unaffected.
ad::Var readout(ad::Var v) { return ad::scale(ad::sum(ad::mul(v, v)), 1e-4); }

GradCheckCase check_op(const std::string& name, const ad::ScalarFn& f,
                       std::vector<ad::Tensor> inputs) {
  return {name, ad::grad_check(f, inputs, kEps)};
}

// f over a layer/model: leaves = all parameters then the input tensor(s)
std::vector<ad::Tensor> params_and_input(const nn::ParamStore& store,
                                         std::vector<ad::Tensor> extra) {
  std::vector<ad::Tensor> inputs;
  for (int id = 0; id < store.count(); ++id) inputs.push_back(store.value(id));
  for (auto& t : extra) inputs.push_back(std::move(t));
  return inputs;
}

std::vector<ad::Var> param_leaves(const nn::ParamStore& store,
                                  const std::vector<ad::Var>& leaves) {
  return {leaves.begin(), leaves.begin() + store.count()};
}

}  // namespace

std::vector<GradCheckCase> gradcheck_suite(bool tiny) {
  std::vector<GradCheckCase> cases;
  nn::Rng rng(42);

  // ---- primitive operations ----
  cases.push_back(check_op(
      "matmul",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::matmul(in[0], in[1]));
      },
      {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)}));
  cases.push_back(check_op(
      "transpose",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::transpose(in[0]));
      },
      {random_tensor({3, 4}, rng)}));
  cases.push_back(check_op(
      "add",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::add(in[0], in[1]));
      },
      {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)}));
  cases.push_back(check_op(
      "sub",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::sub(in[0], in[1]));
      },
      {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)}));
  cases.push_back(check_op(
      "mul",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::mul(in[0], in[1]));
      },
      {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)}));
  cases.push_back(check_op(
      "scale",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::scale(in[0], -1.7));
      },
      {random_tensor({3, 4}, rng)}));
  cases.push_back(check_op(
      "gelu",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::gelu(in[0]));
      },
      {random_tensor({4, 5}, rng)}));
  cases.push_back(check_op(
      "relu",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::relu(in[0]));
      },
      {random_tensor({4, 5}, rng)}));
  cases.push_back(check_op(
      "tanh",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::tanh_op(in[0]));
      },
      {random_tensor({4, 5}, rng)}));
  cases.push_back(check_op(
      "sigmoid",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::sigmoid(in[0]));
      },
      {random_tensor({4, 5}, rng)}));
  cases.push_back(check_op(
      "softmax_lastdim",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::softmax_lastdim(in[0]));
      },
      {random_tensor({4, 5}, rng)}));
  cases.push_back(check_op(
      "layer_norm_lastdim",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::layer_norm_lastdim(in[0], 1e-5));
      },
      {random_tensor({4, 5}, rng)}));
  cases.push_back(check_op(
      "add_rowvec",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::add_rowvec(in[0], in[1]));
      },
      {random_tensor({3, 4}, rng), random_tensor({4}, rng)}));
  cases.push_back(check_op(
      "mul_rowvec",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::mul_rowvec(in[0], in[1]));
      },
      {random_tensor({3, 4}, rng), random_tensor({4}, rng)}));
  cases.push_back(check_op(
      "concat_cols",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::concat_cols(in[0], in[1]));
      },
      {random_tensor({3, 2}, rng), random_tensor({3, 3}, rng)}));
  cases.push_back(check_op(
      "concat_rows",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::concat_rows({in[0], in[1], in[2]}));
      },
      {random_tensor({2, 3}, rng), random_tensor({1, 3}, rng),
       random_tensor({2, 3}, rng)}));
  cases.push_back(check_op(
      "slice_cols",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::slice_cols(in[0], 1, 2));
      },
      {random_tensor({3, 4}, rng)}));
  cases.push_back(check_op(
      "slice_rows",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::slice_rows(in[0], 1, 2));
      },
      {random_tensor({4, 3}, rng)}));
  cases.push_back(check_op(
      "reshape",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return readout(ad::reshape(in[0], {2, 6}));
      },
      {random_tensor({3, 4}, rng)}));
  cases.push_back(check_op(
      "sum",
      [](ad::Graph&, const std::vector<ad::Var>& in) {
        return ad::sum(ad::mul(in[0], in[0]));
      },
      {random_tensor({7}, rng)}));

  // ---- layers ----
  {
    nn::ParamStore store;
    nn::Rng init(7);
    nn::Linear lin = nn::Linear::create(store, "lin", 4, 3, nn::Activation::gelu, init);
    cases.push_back(check_op(
        "linear_layer",
        [&](ad::Graph& g, const std::vector<ad::Var>& in) {
          nn::Binder b(g, store, param_leaves(store, in));
          return readout(lin.apply(b, in.back()));
        },
        params_and_input(store, {random_tensor({5, 4}, rng)})));
  }
  {
    nn::ParamStore store;
    nn::Rng init(8);
    nn::LayerNorm ln = nn::LayerNorm::create(store, "ln", 5);
    cases.push_back(check_op(
        "layer_norm_affine",
        [&](ad::Graph& g, const std::vector<ad::Var>& in) {
          nn::Binder b(g, store, param_leaves(store, in));
          return readout(ln.apply(b, in.back()));
        },
        params_and_input(store, {random_tensor({3, 5}, rng)})));
  }
  {
    nn::ParamStore store;
    nn::Rng init(9);
    nn::MultiHeadAttention mha =
        nn::MultiHeadAttention::create(store, "mha", 6, 2, init);
    cases.push_back(check_op(
        "multi_head_attention",
        [&](ad::Graph& g, const std::vector<ad::Var>& in) {
          nn::Binder b(g, store, param_leaves(store, in));
          return readout(mha.apply(b, in.back(), 0.0, nn::Mode::eval, nullptr));
        },
        params_and_input(store, {random_tensor({4, 6}, rng)})));
  }
  {
    nn::ParamStore store;
    nn::Rng init(10);
    nn::EncoderConfig ecfg;
    ecfg.model_dim = 6;
    ecfg.n_heads = 2;
    ecfg.n_layers = 1;
    ecfg.ffn_hidden_dim = 8;
    nn::TransformerEncoder enc =
        nn::TransformerEncoder::create(store, "enc", ecfg, init);
    cases.push_back(check_op(
        "transformer_encoder",
        [&](ad::Graph& g, const std::vector<ad::Var>& in) {
          nn::Binder b(g, store, param_leaves(store, in));
          return readout(enc.apply(b, in.back(), nn::Mode::eval, nullptr));
        },
        params_and_input(store, {random_tensor({3, 6}, rng)})));
  }
  {
    nn::ParamStore store;
    nn::Rng init(11);
    nn::LstmParams lstm = nn::LstmParams::create(store, "lstm", 3, 4, init);
    cases.push_back(check_op(
        "lstm",
        [&](ad::Graph& g, const std::vector<ad::Var>& in) {
          nn::Binder b(g, store, param_leaves(store, in));
          return readout(nn::lstm_forward(b, lstm, in.back()));
        },
        params_and_input(store, {random_tensor({3, 3}, rng)})));
  }

  // ---- full models with MSE, eval mode (dropout off) ----
  {
    model::SpatialModelConfig cfg;
    cfg.n_locations = tiny ? 4 : 6;
    cfg.feature_dim = 3;
    cfg.embed_dim = 8;
    cfg.encoder.n_heads = 2;
    cfg.encoder.n_layers = tiny ? 1 : 2;
    cfg.encoder.ffn_hidden_dim = 16;
    cfg.output_hidden_dim = 8;
    model::SpatialModel spatial(cfg, 12);
    ad::Tensor target = random_tensor({cfg.n_locations}, rng);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(cfg.n_locations), 1);
    cases.push_back(check_op(
        "spatial_model_mse",
        [&](ad::Graph& g, const std::vector<ad::Var>& in) {
          nn::Binder b(g, spatial.params(), param_leaves(spatial.params(), in));
          ad::Var pred = spatial.forward(b, in.back(), nn::Mode::eval, nullptr);
          return ad::scale(train::mse_loss(g, pred, target, mask), 1e-4);
        },
        params_and_input(spatial.params(),
                         {random_tensor({cfg.n_locations, cfg.feature_dim}, rng)})));
  }
  {
    model::TemporalModelConfig cfg;
    cfg.season_length = tiny ? 5 : 8;
    cfg.feature_dim = 3;
    cfg.embed_dim = 8;
    cfg.encoder.n_heads = 2;
    cfg.encoder.n_layers = tiny ? 1 : 2;
    cfg.encoder.ffn_hidden_dim = 16;
    cfg.output_hidden_dim = 8;
    model::TemporalModel temporal(cfg, 13);
    ad::Tensor target = random_tensor({cfg.season_length}, rng);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(cfg.season_length), 1);
    cases.push_back(check_op(
        "temporal_model_mse",
        [&](ad::Graph& g, const std::vector<ad::Var>& in) {
          nn::Binder b(g, temporal.params(), param_leaves(temporal.params(), in));
          ad::Var pred = temporal.forward(b, in.back(), nn::Mode::eval, nullptr);
          return ad::scale(train::mse_loss(g, pred, target, mask), 1e-4);
        },
        params_and_input(temporal.params(),
                         {random_tensor({cfg.season_length, cfg.feature_dim}, rng)})));
  }
  {
    model::LstmBaselineConfig cfg;
    cfg.feature_dim = 3;
    cfg.hidden_dim = 4;
    model::LstmBaseline baseline(cfg, 14);
    int steps = tiny ? 3 : 6;
    ad::Tensor target = random_tensor({steps}, rng);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(steps), 1);
    cases.push_back(check_op(
        "lstm_baseline_mse",
        [&](ad::Graph& g, const std::vector<ad::Var>& in) {
          nn::Binder b(g, baseline.params(), param_leaves(baseline.params(), in));
          ad::Var pred = baseline.forward(b, in.back());
          return ad::scale(train::mse_loss(g, pred, target, mask), 1e-4);
        },
        params_and_input(baseline.params(),
                         {random_tensor({steps, cfg.feature_dim}, rng)})));
  }

  return cases;
}

}  // namespace swe::diag
