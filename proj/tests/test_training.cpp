#include <doctest.h>

#include <cmath>

#include "swe/data.hpp"
#include "swe/error.hpp"
#include "swe/synthetic.hpp"
#include "swe/training.hpp"

using namespace swe;
using ad::Graph;
using ad::Tensor;
using ad::Var;

namespace {

data::SeasonDataset tiny_dataset(int n = 4, int m = 10, int seasons = 3,
                                 double noise = 0.2, std::uint64_t seed = 7) {
  data::SyntheticConfig scfg;
  scfg.n_stations = n;
  scfg.season_length = m;
  scfg.n_seasons = seasons;
  scfg.noise = noise;
  scfg.seed = seed;
  auto gen = data::generate_synthetic(scfg);
  data::DatasetConfig cfg;
  cfg.season_length = m;
  cfg.gamma_window = 1;
  cfg.test_years = {2000 + seasons};  // last season held out
  return data::build_dataset(gen.stations, gen.records, cfg);
}

train::TrainConfig fast_config() {
  train::TrainConfig cfg;
  cfg.lr0 = 1e-3;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = 1;
  return cfg;
}

model::AnyModel tiny_spatial_model(const data::SeasonDataset& ds,
                                   std::uint64_t seed) {
  model::SpatialModelConfig c;
  c.n_locations = ds.n_stations();
  c.feature_dim = ds.feature_dim();
  c.embed_dim = 8;
  c.encoder.n_heads = 2;
  c.encoder.n_layers = 1;
  c.encoder.ffn_hidden_dim = 16;
  c.dropout_reduction = 0.0;
  c.dropout_output = 0.0;
  model::AnyModel m;
  m.kind = model::ModelKind::spatial;
  m.spatial.emplace(c, seed);
  return m;
}

}  // namespace

TEST_CASE("mse of a perfect prediction is zero") {
  Graph g;
  Var pred = g.leaf(Tensor({3}, {1, 2, 3}));
  Tensor target({3}, {1, 2, 3});
  CHECK(train::mse_loss(g, pred, target, {}).value()[0] == 0.0);
}

TEST_CASE("mse averages squared differences") {
  Graph g;
  Var pred = g.leaf(Tensor({2}, {1, 3}));
  Tensor target({2}, {1, 1});
  CHECK(train::mse_loss(g, pred, target, {}).value()[0] == 2.0);  // (0+4)/2
}

TEST_CASE("masked elements do not contribute to the loss") {
  Graph g;
  Var pred = g.leaf(Tensor({2}, {1, 9}));
  Tensor target({2}, {1, 1});
  CHECK(train::mse_loss(g, pred, target, {1, 0}).value()[0] == 0.0);
}

TEST_CASE("an all-masked loss is a contract error") {
  Graph g;
  Var pred = g.leaf(Tensor({2}, {1, 2}));
  Tensor target({2}, {0, 0});
  CHECK_THROWS_AS(train::mse_loss(g, pred, target, {0, 0}), Error);
}

TEST_CASE("mse gradient flows only through unmasked elements") {
  Graph g;
  Var pred = g.leaf(Tensor({2}, {3, 9}), true);
  Tensor target({2}, {1, 1});
  Var loss = train::mse_loss(g, pred, target, {1, 0});
  g.backward(loss);
  CHECK(pred.grad()[0] == doctest::Approx(2.0 * (3 - 1)));
  CHECK(pred.grad()[1] == 0.0);
}

TEST_CASE("scheduler follows the step-decay table exactly") {
  train::TrainConfig cfg;  // lr0 1e-4, factor 0.6, period 3
  const double expected[5] = {1e-4, 6e-5, 3.6e-5, 2.16e-5, 1.296e-5};
  for (int epoch = 0; epoch <= 12; ++epoch) {
    CHECK(train::scheduler_lr(epoch, cfg) == expected[epoch / 3]);  // bit-exact
  }
  CHECK_THROWS_AS(train::scheduler_lr(-1, cfg), Error);
}

TEST_CASE("adamw leaves parameters alone when gradients vanish and wd is 0") {
  nn::ParamStore store;
  store.add("w", Tensor({2}, {1.5, -2.5}));
  auto state = train::AdamWState::init(store);
  train::TrainConfig cfg;
  cfg.weight_decay = 0.0;
  std::vector<Tensor> grads = {Tensor::zeros({2})};
  train::adamw_step(store, grads, state, cfg, 1e-4);
  CHECK(store.value(0).values() == std::vector<double>{1.5, -2.5});
}

TEST_CASE("adamw first step matches the hand computation") {
  // t=1, g=1, theta=1, wd=0.01, lr=1e-4: m_hat = v_hat = 1,
  // theta <- 1 - 1e-4/(1+1e-8) - 1e-6
  nn::ParamStore store;
  store.add("w", Tensor({1}, {1.0}));
  auto state = train::AdamWState::init(store);
  train::TrainConfig cfg;  // betas 0.9/0.999, eps 1e-8, wd 0.01 default
  std::vector<Tensor> grads = {Tensor({1}, {1.0})};
  train::adamw_step(store, grads, state, cfg, 1e-4);
  double expected = 1.0 - 1e-4 / (1.0 + 1e-8) - 1e-4 * 0.01 * 1.0;
  CHECK(store.value(0)[0] == doctest::Approx(expected).epsilon(1e-15));
  CHECK(store.value(0)[0] == doctest::Approx(0.9998990).epsilon(1e-7));
}

TEST_CASE("adamw with wd=0 reproduces a hand-traced two-step Adam run") {
  nn::ParamStore store;
  store.add("w", Tensor({1}, {0.5}));
  auto state = train::AdamWState::init(store);
  train::TrainConfig cfg;
  cfg.weight_decay = 0.0;
  double lr = 0.01;

  // independent trace of the same recurrence
  double m = 0, v = 0, theta = 0.5;
  for (int t = 1; t <= 2; ++t) {
    double g = t == 1 ? 0.3 : -0.2;
    std::vector<Tensor> grads = {Tensor({1}, {g})};
    train::adamw_step(store, grads, state, cfg, lr);

    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    double mh = m / (1.0 - std::pow(0.9, t));
    double vh = v / (1.0 - std::pow(0.999, t));
    theta -= lr * mh / (std::sqrt(vh) + 1e-8);
    CHECK(store.value(0)[0] == doctest::Approx(theta).epsilon(1e-15));
  }
}

TEST_CASE("adamw is pure given identical state and inputs") {
  auto run = [](double seed_val) {
    nn::ParamStore store;
    store.add("w", Tensor({3}, {seed_val, -1.0, 2.0}));
    auto state = train::AdamWState::init(store);
    train::TrainConfig cfg;
    std::vector<Tensor> grads = {Tensor({3}, {0.1, -0.4, 0.9})};
    train::adamw_step(store, grads, state, cfg, 1e-3);
    train::adamw_step(store, grads, state, cfg, 1e-3);
    return store.value(0).values();
  };
  CHECK(run(0.7) == run(0.7));
}

TEST_CASE("adamw rejects mismatched gradient shapes") {
  nn::ParamStore store;
  store.add("w", Tensor({2}, {1, 2}));
  auto state = train::AdamWState::init(store);
  train::TrainConfig cfg;
  std::vector<Tensor> grads = {Tensor({3})};
  CHECK_THROWS_AS(train::adamw_step(store, grads, state, cfg, 1e-4), Error);
}

TEST_CASE("training with zero epochs returns initialized params, empty history") {
  auto ds = tiny_dataset();
  auto m = tiny_spatial_model(ds, 3);
  Tensor before = m.spatial->params().value(0);
  train::TrainConfig cfg = fast_config();
  cfg.epochs = 0;
  auto history = train::train_model(m, ds, cfg);
  CHECK(history.epochs.empty());
  CHECK(m.spatial->params().value(0).values() == before.values());
}

TEST_CASE("recorded lr sequence matches the scheduler formula") {
  auto ds = tiny_dataset();
  auto m = tiny_spatial_model(ds, 3);
  train::TrainConfig cfg = fast_config();
  cfg.epochs = 7;
  cfg.scheduler_factor = 0.5;
  cfg.scheduler_period_epochs = 2;
  auto history = train::train_model(m, ds, cfg);
  REQUIRE(history.epochs.size() == 7);
  for (const auto& e : history.epochs) {
    CHECK(e.lr == train::scheduler_lr(e.epoch, cfg));
    CHECK(std::isfinite(e.loss));
  }
}

TEST_CASE("training is reproducible from the seed") {
  auto ds = tiny_dataset();
  auto run = [&]() {
    auto m = tiny_spatial_model(ds, 11);
    train::TrainConfig cfg = fast_config();
    cfg.seed = 21;
    cfg.epochs = 3;
    auto history = train::train_model(m, ds, cfg);
    std::vector<double> losses;
    for (const auto& e : history.epochs) losses.push_back(e.loss);
    return std::make_pair(losses, m.spatial->params().value(1).values());
  };
  auto a = run();
  auto b = run();
  CHECK(a.first == b.first);    // identical loss trace
  CHECK(a.second == b.second);  // identical final params
}

TEST_CASE("loss decreases within the first epochs on a learnable set") {
  auto ds = tiny_dataset(4, 10, 3, 0.1, 9);
  auto m = tiny_spatial_model(ds, 5);
  train::TrainConfig cfg = fast_config();
  cfg.epochs = 8;
  cfg.lr0 = 5e-3;
  cfg.scheduler_factor = 1.0;
  auto history = train::train_model(m, ds, cfg);
  CHECK(history.epochs.back().loss < history.epochs.front().loss);
}

TEST_CASE("temporal and lstm kinds train end to end") {
  auto ds = tiny_dataset(3, 8, 3, 0.2, 13);
  train::TrainConfig cfg = fast_config();
  cfg.epochs = 1;
  cfg.batch_size = 2;

  model::AnyModel temporal;
  temporal.kind = model::ModelKind::temporal;
  model::TemporalModelConfig tc;
  tc.season_length = ds.season_length;
  tc.feature_dim = ds.feature_dim();
  tc.embed_dim = 8;
  tc.encoder.n_heads = 2;
  tc.encoder.n_layers = 1;
  tc.encoder.ffn_hidden_dim = 16;
  temporal.temporal.emplace(tc, 1);
  CHECK(train::train_model(temporal, ds, cfg).epochs.size() == 1);

  model::AnyModel lstm;
  lstm.kind = model::ModelKind::lstm;
  model::LstmBaselineConfig lc;
  lc.feature_dim = ds.feature_dim();
  lc.hidden_dim = 8;
  lstm.lstm.emplace(lc, 1);
  CHECK(train::train_model(lstm, ds, cfg).epochs.size() == 1);
}

TEST_CASE("lr kind fits in closed form and predicts") {
  auto ds = tiny_dataset(3, 8, 3, 0.2, 17);
  model::AnyModel m;
  m.kind = model::ModelKind::lr;
  train::TrainConfig cfg = fast_config();
  auto history = train::train_model(m, ds, cfg);
  CHECK(history.epochs.empty());
  REQUIRE(m.lr.has_value());
  CHECK(m.lr->feature_dim == ds.feature_dim());
  CHECK(m.lr->weights.size() == static_cast<std::size_t>(ds.feature_dim()) + 1);
}

TEST_CASE("a diverging run aborts with a non-finite-loss diagnostic") {
  auto ds = tiny_dataset();
  auto m = tiny_spatial_model(ds, 1);
  train::TrainConfig cfg = fast_config();
  cfg.lr0 = 1e200;  // guaranteed blow-up
  cfg.grad_clip = 0.0;
  cfg.epochs = 5;
  CHECK_THROWS_WITH_AS(train::train_model(m, ds, cfg),
                       doctest::Contains("non-finite"), Error);
}

TEST_CASE("loss drops over the first 10 epochs for at least 9 of seeds 0..9") {
  auto ds = tiny_dataset(8, 10, 4, 0.2, 7);
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto m = tiny_spatial_model(ds, seed);
    train::TrainConfig cfg;
    cfg.lr0 = 5e-3;
    cfg.scheduler_factor = 1.0;
    cfg.epochs = 10;
    cfg.batch_size = 8;
    cfg.seed = seed;
    auto history = train::train_model(m, ds, cfg);
    if (history.epochs.back().loss < history.epochs.front().loss) ++improved;
  }
  CHECK(improved >= 9);
}

TEST_CASE("epoch callback fires once per epoch with matching stats") {
  auto ds = tiny_dataset();
  auto m = tiny_spatial_model(ds, 2);
  train::TrainConfig cfg = fast_config();
  cfg.epochs = 3;
  std::vector<int> seen;
  auto history = train::train_model(m, ds, cfg, [&](int epoch, const train::EpochStats& s) {
    seen.push_back(epoch);
    CHECK(s.epoch == epoch);
  });
  CHECK(seen == std::vector<int>{0, 1, 2});
  CHECK(history.epochs.size() == 3);
}

TEST_CASE("dropout active in train mode perturbs the loss trace") {
  auto ds = tiny_dataset(4, 10, 3, 0.1, 19);
  train::TrainConfig cfg = fast_config();
  cfg.epochs = 1;

  // same seed, same model init, dropout on vs off -> different first loss
  auto loss_with = [&](double rate) {
    model::SpatialModelConfig c;
    c.n_locations = ds.n_stations();
    c.feature_dim = ds.feature_dim();
    c.embed_dim = 8;
    c.encoder.n_heads = 2;
    c.encoder.n_layers = 1;
    c.encoder.ffn_hidden_dim = 16;
    c.dropout_reduction = rate;
    c.dropout_output = 0.0;
    model::AnyModel m;
    m.kind = model::ModelKind::spatial;
    m.spatial.emplace(c, 23);
    return train::train_model(m, ds, cfg).epochs[0].loss;
  };
  CHECK(loss_with(0.0) != loss_with(0.4));
}
