#include "swe/models.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "swe/error.hpp"

namespace swe::model {

using nlohmann::json;

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "spatial") return ModelKind::spatial;
  if (s == "temporal") return ModelKind::temporal;
  if (s == "lstm") return ModelKind::lstm;
  if (s == "lr") return ModelKind::lr;
  fail("unknown model kind: " + s + " (expected spatial|temporal|lstm|lr)");
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::spatial: return "spatial";
    case ModelKind::temporal: return "temporal";
    case ModelKind::lstm: return "lstm";
    case ModelKind::lr: return "lr";
  }
  return "spatial";
}

namespace {

std::vector<int> default_reduction(int embed_dim) {
  return {embed_dim, embed_dim / 2, embed_dim / 4, embed_dim / 4};
}

void validate_reduction(const std::vector<int>& dims, int embed_dim) {
  require(dims.size() == 4, "reduction_dims must list exactly 4 widths, got " +
                                std::to_string(dims.size()));
  for (int d : dims) require(d > 0, "reduction widths must be positive");
  require(dims.back() == 2 * embed_dim / 8,
          "last reduction width must be 2d/8 = " +
              std::to_string(2 * embed_dim / 8) + ", got " +
              std::to_string(dims.back()));
}

std::size_t attention_stack_param_count(int seq_len, int feature_dim,
                                        int embed_dim,
                                        const nn::EncoderConfig& enc,
                                        const std::vector<int>& reduction,
                                        int output_hidden) {
  std::size_t count = nn::Linear::param_count(feature_dim, embed_dim) +
                      nn::Linear::param_count(embed_dim, embed_dim) +
                      nn::TransformerEncoder::param_count(enc);
  int in = 2 * embed_dim;
  for (int out : reduction) {
    count += nn::Linear::param_count(in, out);
    in = out;
  }
  int flattened = seq_len * reduction.back();
  count += nn::Linear::param_count(flattened, output_hidden);
  count += nn::Linear::param_count(output_hidden, seq_len);
  return count;
}

}  // namespace

SpatialModelConfig SpatialModelConfig::resolved() const {
  SpatialModelConfig c = *this;
  c.encoder.model_dim = c.embed_dim;
  if (c.reduction_dims.empty()) c.reduction_dims = default_reduction(c.embed_dim);
  if (c.output_hidden_dim <= 0) c.output_hidden_dim = c.embed_dim;
  return c;
}

void SpatialModelConfig::validate() const {
  require(n_locations >= 2, "spatial model needs n >= 2 locations");
  require(feature_dim > 0, "feature_dim must be positive");
  require(embed_dim > 0 && embed_dim % 4 == 0,
          "embed_dim must be positive and divisible by 4 for the /8 reduction");
  require(encoder.model_dim == embed_dim,
          "encoder model_dim must equal embed_dim");
  encoder.validate();
  validate_reduction(reduction_dims, embed_dim);
  require(output_hidden_dim > 0, "output_hidden_dim must be positive");
  require(dropout_reduction >= 0.0 && dropout_reduction < 1.0 &&
              dropout_output >= 0.0 && dropout_output < 1.0,
          "dropout rates must be in [0, 1)");
}

TemporalModelConfig TemporalModelConfig::resolved() const {
  TemporalModelConfig c = *this;
  c.encoder.model_dim = c.embed_dim;
  if (c.reduction_dims.empty()) c.reduction_dims = default_reduction(c.embed_dim);
  if (c.output_hidden_dim <= 0) c.output_hidden_dim = c.embed_dim;
  return c;
}

void TemporalModelConfig::validate() const {
  require(season_length >= 1, "temporal model needs m >= 1");
  require(feature_dim > 0, "feature_dim must be positive");
  require(embed_dim > 0 && embed_dim % 4 == 0,
          "embed_dim must be positive and divisible by 4 for the /8 reduction");
  require(encoder.model_dim == embed_dim,
          "encoder model_dim must equal embed_dim");
  encoder.validate();
  validate_reduction(reduction_dims, embed_dim);
  require(output_hidden_dim > 0, "output_hidden_dim must be positive");
  require(dropout_reduction >= 0.0 && dropout_reduction < 1.0 &&
              dropout_output >= 0.0 && dropout_output < 1.0,
          "dropout rates must be in [0, 1)");
}

namespace detail {

AttentionStack AttentionStack::create(nn::ParamStore& store, int seq_len,
                                      int feature_dim, int embed_dim,
                                      const nn::EncoderConfig& enc_cfg,
                                      const std::vector<int>& reduction_dims,
                                      int output_hidden_dim,
                                      double dropout_reduction,
                                      double dropout_output,
                                      bool with_positional, nn::Rng& rng) {
  AttentionStack s;
  s.seq_len = seq_len;
  s.feature_dim = feature_dim;
  s.dropout_reduction = dropout_reduction;
  s.dropout_output = dropout_output;
  s.embed1 = nn::Linear::create(store, "embed1", feature_dim, embed_dim,
                                nn::Activation::gelu, rng);
  s.embed2 = nn::Linear::create(store, "embed2", embed_dim, embed_dim,
                                nn::Activation::gelu, rng);
  s.encoder = nn::TransformerEncoder::create(store, "encoder", enc_cfg, rng);
  int in = 2 * embed_dim;
  for (std::size_t i = 0; i < reduction_dims.size(); ++i) {
    // ReLU on reduction layers 1 and 3, identity on 2 and 4.
    nn::Activation act =
        (i % 2 == 0) ? nn::Activation::relu : nn::Activation::identity;
    s.reduce.push_back(nn::Linear::create(store, "reduce" + std::to_string(i + 1),
                                          in, reduction_dims[i], act, rng));
    in = reduction_dims[i];
  }
  int flattened = seq_len * reduction_dims.back();
  s.out_hidden = nn::Linear::create(store, "out_hidden", flattened,
                                    output_hidden_dim, nn::Activation::gelu, rng);
  s.out_final = nn::Linear::create(store, "out_final", output_hidden_dim,
                                   seq_len, nn::Activation::identity, rng);
  if (with_positional) {
    s.positional = nn::sinusoidal_positional_encoding(seq_len, embed_dim);
  }
  return s;
}

ad::Var AttentionStack::forward(nn::Binder& b, ad::Var x, nn::Mode mode,
                                nn::Rng* rng) const {
  const ad::Tensor& xv = x.value();
  require(xv.rank() == 2 && xv.dim(0) == seq_len && xv.dim(1) == feature_dim,
          "model input must be [" + std::to_string(seq_len) + " x " +
              std::to_string(feature_dim) + "], got " + ad::shape_str(xv.shape()));

  ad::Var embedded = embed2.apply(b, embed1.apply(b, x));
  if (positional.size() > 0) {
    embedded = ad::add(embedded, b.graph().leaf(positional));
  }
  ad::Var encoded = encoder.apply(b, embedded, mode, rng);
  ad::Var z = ad::concat_cols(encoded, embedded);
  for (const auto& layer : reduce) {
    z = layer.apply(b, z);
    z = nn::dropout(z, dropout_reduction, mode, rng);
  }
  ad::Var flat = ad::reshape(z, {1, seq_len * reduce.back().out});
  ad::Var hidden = out_hidden.apply(b, flat);
  hidden = nn::dropout(hidden, dropout_output, mode, rng);
  ad::Var y = out_final.apply(b, hidden);
  return ad::reshape(y, {seq_len});
}

}  // namespace detail

SpatialModel::SpatialModel(SpatialModelConfig cfg, std::uint64_t seed)
    : cfg_(cfg.resolved()) {
  cfg_.validate();
  nn::Rng rng(seed);
  stack_ = detail::AttentionStack::create(
      store_, cfg_.n_locations, cfg_.feature_dim, cfg_.embed_dim, cfg_.encoder,
      cfg_.reduction_dims, cfg_.output_hidden_dim, cfg_.dropout_reduction,
      cfg_.dropout_output, /*with_positional=*/false, rng);
}

ad::Var SpatialModel::forward(nn::Binder& b, ad::Var x, nn::Mode mode,
                              nn::Rng* rng) const {
  return stack_.forward(b, x, mode, rng);
}

ad::Tensor SpatialModel::predict(const ad::Tensor& x) const {
  ad::Graph g;
  nn::Binder b(g, store_, /*with_grad=*/false);
  ad::Var out = forward(b, g.leaf(x), nn::Mode::eval, nullptr);
  return out.value();
}

ArchWidths SpatialModel::widths(const SpatialModelConfig& cfg) {
  SpatialModelConfig c = cfg.resolved();
  return {c.embed_dim, 2 * c.embed_dim, c.reduction_dims.back(),
          c.n_locations * c.reduction_dims.back()};
}

std::size_t SpatialModel::param_count(const SpatialModelConfig& cfg) {
  SpatialModelConfig c = cfg.resolved();
  return attention_stack_param_count(c.n_locations, c.feature_dim, c.embed_dim,
                                     c.encoder, c.reduction_dims,
                                     c.output_hidden_dim);
}

TemporalModel::TemporalModel(TemporalModelConfig cfg, std::uint64_t seed)
    : cfg_(cfg.resolved()) {
  cfg_.validate();
  nn::Rng rng(seed);
  stack_ = detail::AttentionStack::create(
      store_, cfg_.season_length, cfg_.feature_dim, cfg_.embed_dim, cfg_.encoder,
      cfg_.reduction_dims, cfg_.output_hidden_dim, cfg_.dropout_reduction,
      cfg_.dropout_output, /*with_positional=*/true, rng);
}

ad::Var TemporalModel::forward(nn::Binder& b, ad::Var x, nn::Mode mode,
                               nn::Rng* rng) const {
  return stack_.forward(b, x, mode, rng);
}

ad::Tensor TemporalModel::predict(const ad::Tensor& x) const {
  ad::Graph g;
  nn::Binder b(g, store_, /*with_grad=*/false);
  ad::Var out = forward(b, g.leaf(x), nn::Mode::eval, nullptr);
  return out.value();
}

ArchWidths TemporalModel::widths(const TemporalModelConfig& cfg) {
  TemporalModelConfig c = cfg.resolved();
  return {c.embed_dim, 2 * c.embed_dim, c.reduction_dims.back(),
          c.season_length * c.reduction_dims.back()};
}

std::size_t TemporalModel::param_count(const TemporalModelConfig& cfg) {
  TemporalModelConfig c = cfg.resolved();
  return attention_stack_param_count(c.season_length, c.feature_dim,
                                     c.embed_dim, c.encoder, c.reduction_dims,
                                     c.output_hidden_dim);
}

LstmBaseline::LstmBaseline(LstmBaselineConfig cfg, std::uint64_t seed)
    : cfg_(cfg) {
  require(cfg_.feature_dim > 0 && cfg_.hidden_dim > 0,
          "lstm baseline: dimensions must be positive");
  nn::Rng rng(seed);
  lstm_ = nn::LstmParams::create(store_, "lstm", cfg_.feature_dim,
                                 cfg_.hidden_dim, rng);
  head_ = nn::Linear::create(store_, "head", cfg_.hidden_dim, 1,
                             nn::Activation::identity, rng);
}

ad::Var LstmBaseline::forward(nn::Binder& b, ad::Var seq) const {
  int steps = seq.value().dim(0);
  ad::Var hidden = nn::lstm_forward(b, lstm_, seq);
  ad::Var y = head_.apply(b, hidden);  // [m x 1]
  return ad::reshape(y, {steps});
}

ad::Tensor LstmBaseline::predict(const ad::Tensor& seq) const {
  ad::Graph g;
  nn::Binder b(g, store_, /*with_grad=*/false);
  ad::Var out = forward(b, g.leaf(seq));
  return out.value();
}

std::size_t LstmBaseline::param_count(const LstmBaselineConfig& cfg) {
  return nn::LstmParams::param_count(cfg.feature_dim, cfg.hidden_dim) +
         nn::Linear::param_count(cfg.hidden_dim, 1);
}

double LinearRegressionModel::predict(std::span<const double> features) const {
  require(static_cast<int>(features.size()) == feature_dim,
          "lr predict: feature width mismatch");
  double acc = weights.back();
  for (int f = 0; f < feature_dim; ++f) acc += weights[static_cast<std::size_t>(f)] * features[static_cast<std::size_t>(f)];
  return acc;
}

namespace {

// Cholesky solve of a symmetric positive definite system, in place.
// Returns false when a pivot collapses (singular / indefinite matrix).
bool cholesky_solve(std::vector<double>& a, int n, std::vector<double>& rhs) {
  double scale = 0.0;
  for (int j = 0; j < n; ++j)
    scale = std::max(scale, std::abs(a[static_cast<std::size_t>(j) * n + j]));
  double floor = std::max(scale, 1.0) * 1e-12;
  for (int j = 0; j < n; ++j) {
    double diag = a[static_cast<std::size_t>(j) * n + j];
    for (int k = 0; k < j; ++k) {
      double l = a[static_cast<std::size_t>(j) * n + k];
      diag -= l * l;
    }
    if (!(diag > floor)) return false;
    diag = std::sqrt(diag);
    a[static_cast<std::size_t>(j) * n + j] = diag;
    for (int i = j + 1; i < n; ++i) {
      double v = a[static_cast<std::size_t>(i) * n + j];
      for (int k = 0; k < j; ++k)
        v -= a[static_cast<std::size_t>(i) * n + k] * a[static_cast<std::size_t>(j) * n + k];
      a[static_cast<std::size_t>(i) * n + j] = v / diag;
    }
  }
  // forward then backward substitution
  for (int i = 0; i < n; ++i) {
    double v = rhs[static_cast<std::size_t>(i)];
    for (int k = 0; k < i; ++k) v -= a[static_cast<std::size_t>(i) * n + k] * rhs[static_cast<std::size_t>(k)];
    rhs[static_cast<std::size_t>(i)] = v / a[static_cast<std::size_t>(i) * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double v = rhs[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < n; ++k) v -= a[static_cast<std::size_t>(k) * n + i] * rhs[static_cast<std::size_t>(k)];
    rhs[static_cast<std::size_t>(i)] = v / a[static_cast<std::size_t>(i) * n + i];
  }
  return true;
}

}  // namespace

LinearRegressionModel linear_regression_fit(std::span<const double> x_rows,
                                            int n_rows, int n_features,
                                            std::span<const double> y,
                                            double ridge) {
  require(n_features > 0 && n_rows > n_features,
          "linear regression needs more rows than features (" +
              std::to_string(n_rows) + " rows, " + std::to_string(n_features) +
              " features)");
  require(x_rows.size() == static_cast<std::size_t>(n_rows) * n_features &&
              y.size() == static_cast<std::size_t>(n_rows),
          "linear regression: input sizes inconsistent");
  require(ridge >= 0.0, "ridge must be non-negative");

  int dim = n_features + 1;  // intercept appended as a constant-1 column
  std::vector<double> normal(static_cast<std::size_t>(dim) * dim, 0.0);
  std::vector<double> rhs(static_cast<std::size_t>(dim), 0.0);
  auto x_at = [&](int r, int f) -> double {
    if (f == n_features) return 1.0;
    return x_rows[static_cast<std::size_t>(r) * n_features + f];
  };
  for (int r = 0; r < n_rows; ++r) {
    for (int i = 0; i < dim; ++i) {
      double xi = x_at(r, i);
      rhs[static_cast<std::size_t>(i)] += xi * y[static_cast<std::size_t>(r)];
      for (int j = i; j < dim; ++j)
        normal[static_cast<std::size_t>(i) * dim + j] += xi * x_at(r, j);
    }
  }
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < i; ++j)
      normal[static_cast<std::size_t>(i) * dim + j] =
          normal[static_cast<std::size_t>(j) * dim + i];
  for (int i = 0; i < n_features; ++i)
    normal[static_cast<std::size_t>(i) * dim + i] += ridge;  // intercept unpenalized

  if (!cholesky_solve(normal, dim, rhs)) {
    fail("linear regression: singular normal matrix; pass ridge > 0");
  }
  LinearRegressionModel m;
  m.feature_dim = n_features;
  m.weights = std::move(rhs);
  return m;
}

std::vector<double> ensemble_predict(std::span<const double> y_spatial,
                                     std::span<const double> y_temporal) {
  require(y_spatial.size() == y_temporal.size(),
          "ensemble: prediction lengths differ, " +
              std::to_string(y_spatial.size()) + " vs " +
              std::to_string(y_temporal.size()));
  std::vector<double> out(y_spatial.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 0.5 * (y_spatial[i] + y_temporal[i]);
  return out;
}

nn::ParamStore* AnyModel::param_store() {
  switch (kind) {
    case ModelKind::spatial: return spatial ? &spatial->params() : nullptr;
    case ModelKind::temporal: return temporal ? &temporal->params() : nullptr;
    case ModelKind::lstm: return lstm ? &lstm->params() : nullptr;
    case ModelKind::lr: return nullptr;
  }
  return nullptr;
}

namespace {

json encoder_to_json(const nn::EncoderConfig& e) {
  return json{{"model_dim", e.model_dim},
              {"n_heads", e.n_heads},
              {"n_layers", e.n_layers},
              {"ffn_hidden_dim", e.ffn_hidden_dim},
              {"dropout_rate", e.dropout_rate}};
}

nn::EncoderConfig encoder_from_json(const json& j) {
  nn::EncoderConfig e;
  e.model_dim = j.at("model_dim").get<int>();
  e.n_heads = j.at("n_heads").get<int>();
  e.n_layers = j.at("n_layers").get<int>();
  e.ffn_hidden_dim = j.at("ffn_hidden_dim").get<int>();
  e.dropout_rate = j.at("dropout_rate").get<double>();
  return e;
}

json spatial_cfg_to_json(const SpatialModelConfig& c) {
  return json{{"n_locations", c.n_locations},
              {"feature_dim", c.feature_dim},
              {"embed_dim", c.embed_dim},
              {"encoder", encoder_to_json(c.encoder)},
              {"reduction_dims", c.reduction_dims},
              {"output_hidden_dim", c.output_hidden_dim},
              {"dropout_reduction", c.dropout_reduction},
              {"dropout_output", c.dropout_output}};
}

SpatialModelConfig spatial_cfg_from_json(const json& j) {
  SpatialModelConfig c;
  c.n_locations = j.at("n_locations").get<int>();
  c.feature_dim = j.at("feature_dim").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.encoder = encoder_from_json(j.at("encoder"));
  c.reduction_dims = j.at("reduction_dims").get<std::vector<int>>();
  c.output_hidden_dim = j.at("output_hidden_dim").get<int>();
  c.dropout_reduction = j.at("dropout_reduction").get<double>();
  c.dropout_output = j.at("dropout_output").get<double>();
  return c;
}

json temporal_cfg_to_json(const TemporalModelConfig& c) {
  return json{{"season_length", c.season_length},
              {"feature_dim", c.feature_dim},
              {"embed_dim", c.embed_dim},
              {"encoder", encoder_to_json(c.encoder)},
              {"reduction_dims", c.reduction_dims},
              {"output_hidden_dim", c.output_hidden_dim},
              {"dropout_reduction", c.dropout_reduction},
              {"dropout_output", c.dropout_output}};
}

TemporalModelConfig temporal_cfg_from_json(const json& j) {
  TemporalModelConfig c;
  c.season_length = j.at("season_length").get<int>();
  c.feature_dim = j.at("feature_dim").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.encoder = encoder_from_json(j.at("encoder"));
  c.reduction_dims = j.at("reduction_dims").get<std::vector<int>>();
  c.output_hidden_dim = j.at("output_hidden_dim").get<int>();
  c.dropout_reduction = j.at("dropout_reduction").get<double>();
  c.dropout_output = j.at("dropout_output").get<double>();
  return c;
}

json params_to_json(const nn::ParamStore& store) {
  json arr = json::array();
  for (int id = 0; id < store.count(); ++id) {
    const ad::Tensor& t = store.value(id);
    arr.push_back(json{{"name", store.name(id)},
                       {"shape", t.shape()},
                       {"data", t.values()}});
  }
  return arr;
}

void params_from_json(const json& arr, nn::ParamStore& store) {
  require(arr.is_array() && arr.size() == static_cast<std::size_t>(store.count()),
          "checkpoint: parameter count mismatch");
  std::vector<bool> seen(static_cast<std::size_t>(store.count()), false);
  for (const auto& entry : arr) {
    std::string name = entry.at("name").get<std::string>();
    int id = store.find(name);
    require(id >= 0, "checkpoint: unknown parameter " + name);
    require(!seen[static_cast<std::size_t>(id)],
            "checkpoint: duplicate parameter " + name);
    seen[static_cast<std::size_t>(id)] = true;
    auto shape = entry.at("shape").get<std::vector<int>>();
    auto values = entry.at("data").get<std::vector<double>>();
    require(shape == store.value(id).shape(),
            "checkpoint: shape mismatch for " + name);
    store.value(id) = ad::Tensor(std::move(shape), std::move(values));
  }
}

json meta_to_json(const CheckpointMeta& meta) {
  return json{{"norm_stats",
               json{{"feature_names", meta.norm_stats.feature_names},
                    {"mean", meta.norm_stats.mean},
                    {"stddev", meta.norm_stats.stddev}}},
              {"station_order", meta.station_order},
              {"train_seasons", meta.train_seasons},
              {"test_seasons", meta.test_seasons}};
}

CheckpointMeta meta_from_json(const json& j) {
  CheckpointMeta meta;
  const json& ns = j.at("norm_stats");
  meta.norm_stats.feature_names = ns.at("feature_names").get<std::vector<std::string>>();
  meta.norm_stats.mean = ns.at("mean").get<std::vector<double>>();
  meta.norm_stats.stddev = ns.at("stddev").get<std::vector<double>>();
  meta.station_order = j.at("station_order").get<std::vector<std::string>>();
  meta.train_seasons = j.at("train_seasons").get<std::vector<int>>();
  meta.test_seasons = j.at("test_seasons").get<std::vector<int>>();
  return meta;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const AnyModel& model,
                     const CheckpointMeta& meta) {
  json j;
  j["format_version"] = kCheckpointVersion;
  j["kind"] = to_string(model.kind);
  j["meta"] = meta_to_json(meta);
  switch (model.kind) {
    case ModelKind::spatial:
      require(model.spatial.has_value(), "save_checkpoint: spatial model absent");
      j["config"] = spatial_cfg_to_json(model.spatial->config());
      j["params"] = params_to_json(model.spatial->params());
      break;
    case ModelKind::temporal:
      require(model.temporal.has_value(), "save_checkpoint: temporal model absent");
      j["config"] = temporal_cfg_to_json(model.temporal->config());
      j["params"] = params_to_json(model.temporal->params());
      break;
    case ModelKind::lstm:
      require(model.lstm.has_value(), "save_checkpoint: lstm model absent");
      j["config"] = json{{"feature_dim", model.lstm->config().feature_dim},
                         {"hidden_dim", model.lstm->config().hidden_dim}};
      j["params"] = params_to_json(model.lstm->params());
      break;
    case ModelKind::lr:
      require(model.lr.has_value(), "save_checkpoint: lr model absent");
      j["config"] = json{{"feature_dim", model.lr->feature_dim}};
      j["params"] = json{{"weights", model.lr->weights}};
      break;
  }
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write checkpoint: " + path);
  out << j.dump(2) << "\n";
  require(out.good(), "write failed for checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot read checkpoint: " + path);
  json j = json::parse(in, nullptr, /*allow_exceptions=*/true);
  require(j.at("format_version").get<int>() == kCheckpointVersion,
          "checkpoint: unsupported format version");

  LoadedCheckpoint loaded;
  loaded.meta = meta_from_json(j.at("meta"));
  ModelKind kind = model_kind_from_string(j.at("kind").get<std::string>());
  loaded.model.kind = kind;
  switch (kind) {
    case ModelKind::spatial: {
      loaded.model.spatial.emplace(spatial_cfg_from_json(j.at("config")), 0);
      params_from_json(j.at("params"), loaded.model.spatial->params());
      break;
    }
    case ModelKind::temporal: {
      loaded.model.temporal.emplace(temporal_cfg_from_json(j.at("config")), 0);
      params_from_json(j.at("params"), loaded.model.temporal->params());
      break;
    }
    case ModelKind::lstm: {
      LstmBaselineConfig cfg;
      cfg.feature_dim = j.at("config").at("feature_dim").get<int>();
      cfg.hidden_dim = j.at("config").at("hidden_dim").get<int>();
      loaded.model.lstm.emplace(cfg, 0);
      params_from_json(j.at("params"), loaded.model.lstm->params());
      break;
    }
    case ModelKind::lr: {
      LinearRegressionModel lr;
      lr.feature_dim = j.at("config").at("feature_dim").get<int>();
      lr.weights = j.at("params").at("weights").get<std::vector<double>>();
      require(lr.weights.size() == static_cast<std::size_t>(lr.feature_dim) + 1,
              "checkpoint: lr weight count mismatch");
      loaded.model.lr = std::move(lr);
      break;
    }
  }
  return loaded;
}

}  // namespace swe::model
