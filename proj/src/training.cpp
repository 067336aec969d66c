#include "swe/training.hpp"

#include <chrono>
#include <functional>
#include <cmath>
#include <fstream>

#include "swe/error.hpp"
#include "swe/rng.hpp"

namespace swe::train {

void TrainConfig::validate() const {
  require(lr0 > 0.0, "train config: lr0 must be positive");
  require(scheduler_factor > 0.0 && scheduler_factor <= 1.0,
          "train config: scheduler_factor must be in (0, 1]");
  require(scheduler_period_epochs > 0, "train config: scheduler period must be positive");
  require(epochs >= 0, "train config: epochs must be non-negative");
  require(batch_size > 0, "train config: batch_size must be positive");
  require(weight_decay >= 0.0, "train config: weight_decay must be non-negative");
  require(grad_clip >= 0.0, "train config: grad_clip must be non-negative");
}

ad::Var mse_loss(ad::Graph& g, ad::Var pred, const ad::Tensor& target,
                 const std::vector<std::uint8_t>& mask) {
  const ad::Tensor& pv = pred.value();
  require(pv.size() == target.size(),
          "mse_loss: prediction and target lengths differ, " +
              std::to_string(pv.size()) + " vs " + std::to_string(target.size()));
  require(mask.empty() || mask.size() == target.size(),
          "mse_loss: mask length mismatch");
  std::size_t kept = 0;
  ad::Tensor mask_t(pv.shape());
  for (std::size_t i = 0; i < pv.size(); ++i) {
    bool keep = mask.empty() || mask[i];
    mask_t[i] = keep ? 1.0 : 0.0;
    kept += keep ? 1u : 0u;
  }
  require(kept > 0, "mse_loss: every element is masked out");

  ad::Tensor target_shaped(pv.shape(), target.values());
  ad::Var target_leaf = g.leaf(std::move(target_shaped));
  ad::Var diff = ad::sub(pred, target_leaf);
  ad::Var squared = ad::mul(diff, diff);
  ad::Var masked = ad::mul(squared, g.leaf(std::move(mask_t)));
  return ad::scale(ad::sum(masked), 1.0 / static_cast<double>(kept));
}

double scheduler_lr(int epoch, const TrainConfig& cfg) {
  require(epoch >= 0, "scheduler: epoch must be non-negative");
  int steps = epoch / cfg.scheduler_period_epochs;
  // chained multiplication, not pow: keeps the decayed values bit-exact
  // against their decimal spellings (1e-4, 6e-5, 3.6e-5, ...)
  double lr = cfg.lr0;
  for (int i = 0; i < steps; ++i) lr *= cfg.scheduler_factor;
  return lr;
}

AdamWState AdamWState::init(const nn::ParamStore& params) {
  AdamWState s;
  for (int id = 0; id < params.count(); ++id) {
    s.m.push_back(ad::Tensor::zeros(params.value(id).shape()));
    s.v.push_back(ad::Tensor::zeros(params.value(id).shape()));
  }
  return s;
}

void adamw_step(nn::ParamStore& params, const std::vector<ad::Tensor>& grads,
                AdamWState& state, const TrainConfig& cfg, double lr) {
  require(grads.size() == static_cast<std::size_t>(params.count()),
          "adamw: gradient list does not match parameter count");
  require(state.m.size() == grads.size() && state.v.size() == grads.size(),
          "adamw: state does not match parameter count");
  state.step += 1;
  double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (int id = 0; id < params.count(); ++id) {
    ad::Tensor& theta = params.value(id);
    const ad::Tensor& g = grads[static_cast<std::size_t>(id)];
    require(g.same_shape(theta), "adamw: gradient shape mismatch for " +
                                     params.name(id) + ", " +
                                     ad::shape_str(g.shape()) + " vs " +
                                     ad::shape_str(theta.shape()));
    ad::Tensor& m = state.m[static_cast<std::size_t>(id)];
    ad::Tensor& v = state.v[static_cast<std::size_t>(id)];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      double m_hat = m[i] / bc1;
      double v_hat = v[i] / bc2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps) +
                  lr * cfg.weight_decay * theta[i];
    }
  }
}

ad::Tensor spatial_example_input(const data::SeasonDataset& ds, int day0, int s) {
  int n = ds.n_stations();
  int F = ds.feature_dim();
  ad::Tensor x({n, F});
  for (int i = 0; i < n; ++i)
    for (int f = 0; f < F; ++f) x.at(i, f) = ds.features[ds.findex(i, day0, s, f)];
  return x;
}

ad::Tensor temporal_example_input(const data::SeasonDataset& ds, int station, int s) {
  int m = ds.season_length;
  int F = ds.feature_dim();
  ad::Tensor x({m, F});
  for (int d = 0; d < m; ++d)
    for (int f = 0; f < F; ++f) x.at(d, f) = ds.features[ds.findex(station, d, s, f)];
  return x;
}

void spatial_example_target(const data::SeasonDataset& ds, int day0, int s,
                            ad::Tensor& target, std::vector<std::uint8_t>& mask) {
  int n = ds.n_stations();
  target = ad::Tensor({n});
  mask.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    target[static_cast<std::size_t>(i)] = ds.labels[ds.lindex(i, day0, s)];
    mask[static_cast<std::size_t>(i)] = ds.label_present[ds.lindex(i, day0, s)];
  }
}

void temporal_example_target(const data::SeasonDataset& ds, int station, int s,
                             ad::Tensor& target, std::vector<std::uint8_t>& mask) {
  int m = ds.season_length;
  target = ad::Tensor({m});
  mask.assign(static_cast<std::size_t>(m), 0);
  for (int d = 0; d < m; ++d) {
    target[static_cast<std::size_t>(d)] = ds.labels[ds.lindex(station, d, s)];
    mask[static_cast<std::size_t>(d)] = ds.label_present[ds.lindex(station, d, s)];
  }
}

namespace {

struct Example {
  int a = 0;  // day0 for spatial; station for temporal/lstm
  int s = 0;  // season index
};

bool any_set(const std::vector<std::uint8_t>& mask) {
  for (auto b : mask)
    if (b) return true;
  return false;
}

TrainHistory fit_linear_regression(model::AnyModel& model,
                                   const data::SeasonDataset& ds,
                                   const TrainConfig& cfg) {
  int F = ds.feature_dim();
  std::vector<double> rows, targets;
  for (int s = 0; s < ds.n_seasons(); ++s) {
    bool in_train = false;
    for (int y : ds.train_seasons) in_train |= (ds.seasons[static_cast<std::size_t>(s)] == y);
    if (!in_train) continue;
    for (int i = 0; i < ds.n_stations(); ++i)
      for (int d = 0; d < ds.season_length; ++d) {
        if (!ds.label_present[ds.lindex(i, d, s)]) continue;
        for (int f = 0; f < F; ++f) rows.push_back(ds.features[ds.findex(i, d, s, f)]);
        targets.push_back(ds.labels[ds.lindex(i, d, s)]);
      }
  }
  require(!targets.empty(), "train: no labeled training examples");
  model.lr = model::linear_regression_fit(
      rows, static_cast<int>(targets.size()), F, targets, cfg.lr_ridge);
  return {};
}

}  // namespace

TrainHistory train_model(model::AnyModel& model, const data::SeasonDataset& ds,
                         const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  require(!ds.train_seasons.empty(), "train: dataset has no training seasons");

  if (model.kind == model::ModelKind::lr) {
    return fit_linear_regression(model, ds, cfg);
  }

  nn::ParamStore* params = model.param_store();
  require(params != nullptr, "train: model has no parameter store");

  // forward + masked loss for one example, by model kind
  auto example_loss = [&](const Example& ex, ad::Graph& g, nn::Binder& b,
                          nn::Mode mode, nn::Rng* rng) -> ad::Var {
    ad::Tensor target;
    std::vector<std::uint8_t> mask;
    ad::Var pred{};
    switch (model.kind) {
      case model::ModelKind::spatial: {
        ad::Tensor x = spatial_example_input(ds, ex.a, ex.s);
        spatial_example_target(ds, ex.a, ex.s, target, mask);
        pred = model.spatial->forward(b, g.leaf(std::move(x)), mode, rng);
        break;
      }
      case model::ModelKind::temporal: {
        ad::Tensor x = temporal_example_input(ds, ex.a, ex.s);
        temporal_example_target(ds, ex.a, ex.s, target, mask);
        pred = model.temporal->forward(b, g.leaf(std::move(x)), mode, rng);
        break;
      }
      case model::ModelKind::lstm: {
        ad::Tensor x = temporal_example_input(ds, ex.a, ex.s);
        temporal_example_target(ds, ex.a, ex.s, target, mask);
        pred = model.lstm->forward(b, g.leaf(std::move(x)));
        break;
      }
      case model::ModelKind::lr:
        fail("unreachable");
    }
    return mse_loss(g, pred, target, mask);
  };

  // enumerate training examples with at least one labeled element
  std::vector<Example> examples;
  for (int s = 0; s < ds.n_seasons(); ++s) {
    bool in_train = false;
    for (int y : ds.train_seasons) in_train |= (ds.seasons[static_cast<std::size_t>(s)] == y);
    if (!in_train) continue;
    if (model.kind == model::ModelKind::spatial) {
      for (int d = 0; d < ds.season_length; ++d) {
        ad::Tensor target;
        std::vector<std::uint8_t> mask;
        spatial_example_target(ds, d, s, target, mask);
        if (any_set(mask)) examples.push_back({d, s});
      }
    } else {
      for (int i = 0; i < ds.n_stations(); ++i) {
        ad::Tensor target;
        std::vector<std::uint8_t> mask;
        temporal_example_target(ds, i, s, target, mask);
        if (any_set(mask)) examples.push_back({i, s});
      }
    }
  }
  require(!examples.empty(), "train: no labeled training examples");

  nn::Rng rng(cfg.seed + 1);  // shuffling and dropout; init used cfg.seed
  AdamWState state = AdamWState::init(*params);
  TrainHistory history;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    double lr = scheduler_lr(epoch, cfg);
    rng.shuffle(examples.begin(), examples.end());

    double loss_sum = 0.0;
    std::size_t batch_start = 0;
    while (batch_start < examples.size()) {
      std::size_t batch_end =
          std::min(batch_start + static_cast<std::size_t>(cfg.batch_size),
                   examples.size());
      std::size_t batch_n = batch_end - batch_start;

      std::vector<ad::Tensor> grads;
      for (int id = 0; id < params->count(); ++id)
        grads.push_back(ad::Tensor::zeros(params->value(id).shape()));

      for (std::size_t e = batch_start; e < batch_end; ++e) {
        ad::Graph g;
        nn::Binder b(g, *params);
        ad::Var loss = example_loss(examples[e], g, b, nn::Mode::train, &rng);
        double loss_val = loss.value()[0];
        require(std::isfinite(loss_val),
                "train: loss became non-finite at epoch " + std::to_string(epoch));
        loss_sum += loss_val;
        g.backward(loss);
        double w = 1.0 / static_cast<double>(batch_n);
        for (int id : b.bound_ids()) {
          const ad::Tensor& grad = g.grad(b.var_of(id));
          ad::Tensor& acc = grads[static_cast<std::size_t>(id)];
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * grad[i];
        }
      }

      if (cfg.grad_clip > 0.0) {
        double norm_sq = 0.0;
        for (const auto& gt : grads)
          for (double v : gt.values()) norm_sq += v * v;
        double norm = std::sqrt(norm_sq);
        if (norm > cfg.grad_clip) {
          double factor = cfg.grad_clip / norm;
          for (auto& gt : grads)
            for (auto& v : gt.values()) v *= factor;
        }
      }
      adamw_step(*params, grads, state, cfg, lr);
      batch_start = batch_end;
    }

    auto t1 = std::chrono::steady_clock::now();
    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_sum / static_cast<double>(examples.size());
    stats.lr = lr;
    stats.seconds = std::chrono::duration<double>(t1 - t0).count();
    history.epochs.push_back(stats);
    if (on_epoch) on_epoch(epoch, stats);
  }
  return history;
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot write history: " + path);
  out << "epoch,loss,lr,seconds\n";
  char buf[160];
  for (const auto& e : history.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.3f\n", e.epoch, e.loss,
                  e.lr, e.seconds);
    out << buf;
  }
  require(out.good(), "write failed for history: " + path);
}

}  // namespace swe::train
