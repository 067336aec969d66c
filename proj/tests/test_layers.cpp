#include <doctest.h>

#include <cmath>

#include "swe/error.hpp"
#include "swe/graph.hpp"
#include "swe/layers.hpp"
#include "swe/params.hpp"
#include "swe/rng.hpp"

using namespace swe;
using ad::Graph;
using ad::Tensor;
using ad::Var;

namespace {

Tensor random_tensor(std::vector<int> shape, nn::Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

nn::EncoderConfig tiny_encoder(int d = 8, int heads = 2, int layers = 2) {
  nn::EncoderConfig cfg;
  cfg.model_dim = d;
  cfg.n_heads = heads;
  cfg.n_layers = layers;
  cfg.ffn_hidden_dim = 2 * d;
  return cfg;
}

}  // namespace

TEST_CASE("linear with identity weights passes input through") {
  nn::ParamStore store;
  nn::Rng rng(1);
  nn::Linear lin = nn::Linear::create(store, "l", 3, 3, nn::Activation::identity, rng);
  store.value(lin.weight) = Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  store.value(lin.bias) = Tensor::zeros({3});

  Graph g;
  nn::Binder b(g, store);
  Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(lin.apply(b, g.leaf(x)).value().values() == x.values());
}

TEST_CASE("linear with zero weights emits the bias on every row") {
  nn::ParamStore store;
  nn::Rng rng(1);
  nn::Linear lin = nn::Linear::create(store, "l", 2, 3, nn::Activation::identity, rng);
  store.value(lin.weight) = Tensor::zeros({2, 3});
  store.value(lin.bias) = Tensor({3}, {7, 8, 9});

  Graph g;
  nn::Binder b(g, store);
  auto out = lin.apply(b, g.leaf(Tensor({2, 2}, {1, 2, 3, 4}))).value();
  for (int r = 0; r < 2; ++r) {
    CHECK(out.at(r, 0) == 7);
    CHECK(out.at(r, 1) == 8);
    CHECK(out.at(r, 2) == 9);
  }
}

TEST_CASE("linear rejects a mismatched input width") {
  nn::ParamStore store;
  nn::Rng rng(1);
  nn::Linear lin = nn::Linear::create(store, "l", 4, 2, nn::Activation::relu, rng);
  Graph g;
  nn::Binder b(g, store);
  CHECK_THROWS_AS(lin.apply(b, g.leaf(Tensor({2, 3}))), Error);
}

TEST_CASE("linear output shape is rows x out") {
  nn::ParamStore store;
  nn::Rng rng(2);
  nn::Linear lin = nn::Linear::create(store, "l", 4, 6, nn::Activation::gelu, rng);
  Graph g;
  nn::Binder b(g, store);
  auto out = lin.apply(b, g.leaf(random_tensor({5, 4}, rng))).value();
  CHECK(out.shape() == std::vector<int>{5, 6});
}

TEST_CASE("encoder config validates head divisibility") {
  nn::EncoderConfig cfg = tiny_encoder(10, 3);
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("single-token attention weight matrix is exactly [[1]]") {
  nn::ParamStore store;
  nn::Rng rng(3);
  nn::MultiHeadAttention mha = nn::MultiHeadAttention::create(store, "a", 8, 2, rng);
  Graph g;
  nn::Binder b(g, store);
  std::vector<Var> attn;
  mha.apply(b, g.leaf(random_tensor({1, 8}, rng)), 0.0, nn::Mode::eval, nullptr,
            &attn);
  REQUIRE(attn.size() == 2);  // one matrix per head
  for (const Var& a : attn) {
    CHECK(a.value().shape() == std::vector<int>{1, 1});
    CHECK(a.value()[0] == 1.0);
  }
}

TEST_CASE("identical attention input rows produce identical output rows") {
  nn::ParamStore store;
  nn::Rng rng(4);
  nn::MultiHeadAttention mha = nn::MultiHeadAttention::create(store, "a", 8, 2, rng);
  Tensor row = random_tensor({1, 8}, rng);
  Tensor x({4, 8});
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 8; ++c) x.at(r, c) = row[static_cast<std::size_t>(c)];

  Graph g;
  nn::Binder b(g, store);
  auto out = mha.apply(b, g.leaf(x), 0.0, nn::Mode::eval, nullptr).value();
  for (int r = 1; r < 4; ++r)
    for (int c = 0; c < 8; ++c)
      CHECK(out.at(r, c) == doctest::Approx(out.at(0, c)).epsilon(1e-12));
}

TEST_CASE("attention weight rows sum to one on random input") {
  nn::ParamStore store;
  nn::Rng rng(5);
  nn::MultiHeadAttention mha = nn::MultiHeadAttention::create(store, "a", 8, 4, rng);
  Graph g;
  nn::Binder b(g, store);
  std::vector<Var> attn;
  mha.apply(b, g.leaf(random_tensor({6, 8}, rng)), 0.0, nn::Mode::eval, nullptr,
            &attn);
  REQUIRE(attn.size() == 4);
  for (const Var& a : attn) {
    const Tensor& w = a.value();
    for (int r = 0; r < 6; ++r) {
      double row = 0.0;
      for (int c = 0; c < 6; ++c) row += w.at(r, c);
      CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("encoder preserves the input shape") {
  nn::ParamStore store;
  nn::Rng rng(6);
  auto cfg = tiny_encoder();
  auto enc = nn::TransformerEncoder::create(store, "e", cfg, rng);
  for (int len : {1, 3, 9}) {
    Graph g;
    nn::Binder b(g, store);
    auto out = enc.apply(b, g.leaf(random_tensor({len, 8}, rng)), nn::Mode::eval,
                         nullptr)
                   .value();
    CHECK(out.shape() == std::vector<int>{len, 8});
  }
}

TEST_CASE("encoder is permutation-equivariant without positional encoding") {
  nn::ParamStore store;
  nn::Rng rng(7);
  auto enc = nn::TransformerEncoder::create(store, "e", tiny_encoder(), rng);

  const int len = 5;
  Tensor x = random_tensor({len, 8}, rng);
  std::vector<int> perm = {3, 0, 4, 1, 2};
  Tensor px({len, 8});
  for (int r = 0; r < len; ++r)
    for (int c = 0; c < 8; ++c) px.at(r, c) = x.at(perm[static_cast<std::size_t>(r)], c);

  Graph g1, g2;
  nn::Binder b1(g1, store), b2(g2, store);
  auto out = enc.apply(b1, g1.leaf(x), nn::Mode::eval, nullptr).value();
  auto pout = enc.apply(b2, g2.leaf(px), nn::Mode::eval, nullptr).value();
  for (int r = 0; r < len; ++r)
    for (int c = 0; c < 8; ++c)
      CHECK(pout.at(r, c) ==
            doctest::Approx(out.at(perm[static_cast<std::size_t>(r)], c)).epsilon(1e-9));
}

TEST_CASE("layer norm core rows have mean 0 and variance 1") {
  nn::Rng rng(8);
  Graph g;
  // well-scaled rows so the 1e-5 stabilizer is negligible next to 1e-9
  Tensor raw = random_tensor({4, 16}, rng);
  for (auto& v : raw.values()) v *= 1000.0;
  Var x = g.leaf(raw);
  auto y = ad::layer_norm_lastdim(x, 1e-5).value();
  for (int r = 0; r < 4; ++r) {
    double mean = 0.0, var = 0.0;
    for (int c = 0; c < 16; ++c) mean += y.at(r, c);
    mean /= 16;
    for (int c = 0; c < 16; ++c) var += (y.at(r, c) - mean) * (y.at(r, c) - mean);
    var /= 16;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-9);
  }
}

TEST_CASE("dropout in eval mode is the identity") {
  nn::Rng rng(9);
  Graph g;
  Tensor x = random_tensor({10, 10}, rng);
  Var out = nn::dropout(g.leaf(x), 0.5, nn::Mode::eval, &rng);
  CHECK(out.value().values() == x.values());
}

TEST_CASE("dropout with rate zero is the identity even in train mode") {
  nn::Rng rng(10);
  Graph g;
  Tensor x = random_tensor({10, 10}, rng);
  Var out = nn::dropout(g.leaf(x), 0.0, nn::Mode::train, &rng);
  CHECK(out.value().values() == x.values());
}

TEST_CASE("dropout keeps about half the elements and doubles survivors") {
  nn::Rng rng(11);
  Graph g;
  const int n = 100000;
  Var x = g.leaf(Tensor::full({n}, 1.0));
  auto y = nn::dropout(x, 0.5, nn::Mode::train, &rng).value();
  int survivors = 0;
  for (int i = 0; i < n; ++i) {
    if (y[static_cast<std::size_t>(i)] != 0.0) {
      CHECK(y[static_cast<std::size_t>(i)] == 2.0);
      ++survivors;
    }
  }
  double fraction = static_cast<double>(survivors) / n;
  CHECK(fraction > 0.49);
  CHECK(fraction < 0.51);
}

TEST_CASE("dropout rejects rates outside [0,1)") {
  nn::Rng rng(12);
  Graph g;
  Var x = g.leaf(Tensor({2}, {1, 2}));
  CHECK_THROWS_AS(nn::dropout(x, 1.0, nn::Mode::train, &rng), Error);
  CHECK_THROWS_AS(nn::dropout(x, -0.1, nn::Mode::train, &rng), Error);
}

TEST_CASE("lstm with all-zero parameters emits all-zero hidden states") {
  nn::ParamStore store;
  nn::Rng rng(13);
  nn::LstmParams p = nn::LstmParams::create(store, "lstm", 3, 4, rng);
  store.value(p.w_input) = Tensor::zeros({3, 16});
  store.value(p.w_hidden) = Tensor::zeros({4, 16});
  store.value(p.bias) = Tensor::zeros({16});

  Graph g;
  nn::Binder b(g, store);
  auto out = nn::lstm_forward(b, p, g.leaf(random_tensor({5, 3}, rng))).value();
  CHECK(out.shape() == std::vector<int>{5, 4});
  for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("lstm with one step equals a single cell application") {
  nn::ParamStore store;
  nn::Rng rng(14);
  nn::LstmParams p = nn::LstmParams::create(store, "lstm", 3, 4, rng);
  Tensor seq = random_tensor({3, 3}, rng);

  Graph g;
  nn::Binder b(g, store);
  auto full = nn::lstm_forward(b, p, g.leaf(seq)).value();

  Tensor first({1, 3}, {seq[0], seq[1], seq[2]});
  Graph g2;
  nn::Binder b2(g2, store);
  auto single = nn::lstm_forward(b2, p, g2.leaf(first)).value();
  for (int c = 0; c < 4; ++c)
    CHECK(single.at(0, c) == doctest::Approx(full.at(0, c)).epsilon(1e-15));
}

TEST_CASE("parameter counts are pure functions of the configs") {
  nn::ParamStore store;
  nn::Rng rng(15);
  nn::Linear lin = nn::Linear::create(store, "l", 7, 5, nn::Activation::relu, rng);
  (void)lin;
  CHECK(store.total_size() == nn::Linear::param_count(7, 5));

  nn::ParamStore store2;
  auto cfg = tiny_encoder(8, 2, 3);
  auto enc = nn::TransformerEncoder::create(store2, "e", cfg, rng);
  (void)enc;
  CHECK(store2.total_size() == nn::TransformerEncoder::param_count(cfg));

  nn::ParamStore store3;
  auto lstm = nn::LstmParams::create(store3, "r", 6, 9, rng);
  (void)lstm;
  CHECK(store3.total_size() == nn::LstmParams::param_count(6, 9));
}

TEST_CASE("fan-in initialization stays within its bound and is seeded") {
  nn::Rng a(21), b(21), c(22);
  auto t1 = nn::fan_in_init({20, 20}, 16, a);
  auto t2 = nn::fan_in_init({20, 20}, 16, b);
  auto t3 = nn::fan_in_init({20, 20}, 16, c);
  CHECK(t1.values() == t2.values());
  CHECK(t1.values() != t3.values());
  for (double v : t1.values()) CHECK(std::abs(v) <= 0.25);
}

TEST_CASE("positional encoding distinguishes positions") {
  Tensor pe = nn::sinusoidal_positional_encoding(10, 8);
  CHECK(pe.shape() == std::vector<int>{10, 8});
  CHECK(pe.at(0, 0) == 0.0);
  CHECK(pe.at(0, 1) == 1.0);
  bool differ = false;
  for (int c = 0; c < 8; ++c) differ |= (pe.at(1, c) != pe.at(2, c));
  CHECK(differ);
}
