#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "swe/data.hpp"
#include "swe/graph.hpp"
#include "swe/models.hpp"
#include "swe/params.hpp"

namespace swe::train {

struct TrainConfig {
  double lr0 = 1e-4;
  double scheduler_factor = 0.6;
  int scheduler_period_epochs = 3;
  int epochs = 50;
  int batch_size = 16;
  double weight_decay = 0.01;
  double grad_clip = 1.0;  // global norm; 0 disables
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double lr_ridge = 1e-8;  // jitter for the closed-form baseline

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

// Mean squared error over the unmasked elements only.
ad::Var mse_loss(ad::Graph& g, ad::Var pred, const ad::Tensor& target,
                 const std::vector<std::uint8_t>& mask);

// Step decay: lr0 * factor^floor(epoch / period).
double scheduler_lr(int epoch, const TrainConfig& cfg);

// First and second moments per parameter, plus the shared step counter.
struct AdamWState {
  std::vector<ad::Tensor> m;
  std::vector<ad::Tensor> v;
  long step = 0;

  static AdamWState init(const nn::ParamStore& params);
};

// Decoupled weight decay: params -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta).
void adamw_step(nn::ParamStore& params, const std::vector<ad::Tensor>& grads,
                AdamWState& state, const TrainConfig& cfg, double lr);

// Input/target assembly for one training example.
ad::Tensor spatial_example_input(const data::SeasonDataset& ds, int day0, int s);
ad::Tensor temporal_example_input(const data::SeasonDataset& ds, int station, int s);
void spatial_example_target(const data::SeasonDataset& ds, int day0, int s,
                            ad::Tensor& target, std::vector<std::uint8_t>& mask);
void temporal_example_target(const data::SeasonDataset& ds, int station, int s,
                             ad::Tensor& target, std::vector<std::uint8_t>& mask);

// Called after each epoch with the epoch index and that epoch's stats;
// hosts use it for interval checkpointing and progress logging.
using EpochCallback = std::function<void(int epoch, const EpochStats& stats)>;

// Trains in place. Spatial examples are (day, season) pairs; temporal and
// LSTM examples are (station, season) pairs; the linear baseline pools all
// labeled rows and solves in closed form (epochs are ignored for it).
TrainHistory train_model(model::AnyModel& model, const data::SeasonDataset& ds,
                         const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {});

void write_history_csv(const std::string& path, const TrainHistory& history);

}  // namespace swe::train
