#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swe/data.hpp"
#include "swe/layers.hpp"

namespace swe::model {

enum class ModelKind { spatial, temporal, lstm, lr };
ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

// Layer widths along the pipeline, for instrumentation: embedding d,
// locationwise concat 2d, post-reduction 2d/8, flattened seq_len * 2d/8.
struct ArchWidths {
  int embed = 0;
  int concat = 0;
  int reduced = 0;
  int flattened = 0;
};

struct SpatialModelConfig {
  int n_locations = 0;  // n, fixed station order
  int feature_dim = 0;  // F
  int embed_dim = 512;  // d
  nn::EncoderConfig encoder;          // model_dim forced to embed_dim
  std::vector<int> reduction_dims;    // empty -> {d, d/2, d/4, d/4}
  int output_hidden_dim = 0;          // 0 -> embed_dim
  double dropout_reduction = 0.20;
  double dropout_output = 0.10;

  SpatialModelConfig resolved() const;
  void validate() const;  // call on a resolved config
};

struct TemporalModelConfig {
  int season_length = 270;  // m
  int feature_dim = 0;
  int embed_dim = 512;
  nn::EncoderConfig encoder;
  std::vector<int> reduction_dims;
  int output_hidden_dim = 0;
  double dropout_reduction = 0.20;
  double dropout_output = 0.10;

  TemporalModelConfig resolved() const;
  void validate() const;
};

namespace detail {

// Shared pipeline of both attention models: embed twice with GELU to d,
// encode, concat encoded with embedded (2d), reduce through four linear
// layers to 2d/8 with ReLU on the first and third, flatten the whole
// sequence, then a GELU hidden layer and a linear head emitting one value
// per sequence element.
struct AttentionStack {
  nn::Linear embed1, embed2;
  nn::TransformerEncoder encoder;
  std::vector<nn::Linear> reduce;
  nn::Linear out_hidden, out_final;
  ad::Tensor positional;  // zero-size when unused
  int seq_len = 0;
  int feature_dim = 0;
  double dropout_reduction = 0.0;
  double dropout_output = 0.0;

  static AttentionStack create(nn::ParamStore& store, int seq_len,
                               int feature_dim, int embed_dim,
                               const nn::EncoderConfig& enc_cfg,
                               const std::vector<int>& reduction_dims,
                               int output_hidden_dim, double dropout_reduction,
                               double dropout_output, bool with_positional,
                               nn::Rng& rng);
  ad::Var forward(nn::Binder& b, ad::Var x, nn::Mode mode, nn::Rng* rng) const;
};

}  // namespace detail

// Sequence over locations for one (day, season): [n x F] -> n SWE values.
class SpatialModel {
 public:
  SpatialModel(SpatialModelConfig cfg, std::uint64_t seed);

  const SpatialModelConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  ad::Var forward(nn::Binder& b, ad::Var x, nn::Mode mode, nn::Rng* rng) const;
  ad::Tensor predict(const ad::Tensor& x) const;

  static ArchWidths widths(const SpatialModelConfig& cfg);
  static std::size_t param_count(const SpatialModelConfig& cfg);

 private:
  SpatialModelConfig cfg_;
  nn::ParamStore store_;
  detail::AttentionStack stack_;
};

// Sequence over the days of one location's season: [m x F] -> m SWE values.
// Adds sinusoidal positions after embedding; day order matters here.
class TemporalModel {
 public:
  TemporalModel(TemporalModelConfig cfg, std::uint64_t seed);

  const TemporalModelConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  ad::Var forward(nn::Binder& b, ad::Var x, nn::Mode mode, nn::Rng* rng) const;
  ad::Tensor predict(const ad::Tensor& x) const;

  static ArchWidths widths(const TemporalModelConfig& cfg);
  static std::size_t param_count(const TemporalModelConfig& cfg);

 private:
  TemporalModelConfig cfg_;
  nn::ParamStore store_;
  detail::AttentionStack stack_;
};

struct LstmBaselineConfig {
  int feature_dim = 0;
  int hidden_dim = 128;
};

// One-layer LSTM over the season with a per-step linear head.
class LstmBaseline {
 public:
  LstmBaseline(LstmBaselineConfig cfg, std::uint64_t seed);

  const LstmBaselineConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  ad::Var forward(nn::Binder& b, ad::Var seq) const;
  ad::Tensor predict(const ad::Tensor& seq) const;

  static std::size_t param_count(const LstmBaselineConfig& cfg);

 private:
  LstmBaselineConfig cfg_;
  nn::ParamStore store_;
  nn::LstmParams lstm_;
  nn::Linear head_;
};

struct LinearRegressionModel {
  int feature_dim = 0;
  std::vector<double> weights;  // feature_dim coefficients then intercept

  double predict(std::span<const double> features) const;
};

// Closed-form least squares with intercept; ridge penalizes the feature
// coefficients only. A singular normal matrix with ridge = 0 is an error.
LinearRegressionModel linear_regression_fit(std::span<const double> x_rows,
                                            int n_rows, int n_features,
                                            std::span<const double> y,
                                            double ridge);

// Elementwise mean of two aligned prediction vectors.
std::vector<double> ensemble_predict(std::span<const double> y_spatial,
                                     std::span<const double> y_temporal);

// Owns whichever model a run trains; exactly one member is engaged.
struct AnyModel {
  ModelKind kind = ModelKind::spatial;
  std::optional<SpatialModel> spatial;
  std::optional<TemporalModel> temporal;
  std::optional<LstmBaseline> lstm;
  std::optional<LinearRegressionModel> lr;

  nn::ParamStore* param_store();
};

// Dataset context a checkpoint must carry to be reusable: the exact station
// order and the normalization applied to features at train time.
struct CheckpointMeta {
  data::NormStats norm_stats;
  std::vector<std::string> station_order;
  std::vector<int> train_seasons;
  std::vector<int> test_seasons;
};

void save_checkpoint(const std::string& path, const AnyModel& model,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  AnyModel model;
  CheckpointMeta meta;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace swe::model
