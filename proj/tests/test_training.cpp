#include <doctest.h>

#include <cmath>
#include <limits>

#include "rgcf/training.hpp"
#include "testutil.hpp"

using namespace rgcf;

namespace {

using testutil::gradient_check;

InteractionDataset small_dataset(std::uint32_t m, std::uint32_t n, Rng& rng) {
  InteractionDataset d;
  d.num_users = m;
  d.num_items = n;
  d.train = testutil::random_interactions(m, n, 0.3, rng);
  return d;
}

}  // namespace

TEST_CASE("init_embeddings: deterministic, zero biases") {
  const auto a = init_embeddings(5, 7, 4, 99);
  const auto b = init_embeddings(5, 7, 4, 99);
  CHECK(a.e0 == b.e0);
  CHECK(a.biases == b.biases);
  for (double v : a.biases) CHECK(v == 0.0);
  CHECK(a.e0.rows() == 12);
  CHECK(a.e0.cols() == 4);
}

TEST_CASE("init_embeddings: sample statistics match the stated law") {
  const auto st = init_embeddings(500, 500, 1000, 4242);  // 1e6 entries
  double sum = 0.0, sq = 0.0;
  for (double v : st.e0.values()) {
    sum += v;
    sq += v * v;
  }
  const double mean = sum / 1e6;
  CHECK(std::abs(mean) <= 3.0 * (0.01 / 1000.0));
  CHECK(std::sqrt(sq / 1e6) == doctest::Approx(0.01).epsilon(0.01));
}

TEST_CASE("sample_batch: forced negative when only one candidate") {
  InteractionDataset d;
  d.num_users = 1;
  d.num_items = 2;
  d.train.pairs = {{0, 0}};
  Rng rng(1);
  const auto batch = sample_batch(d, 64, rng);
  for (const auto& t : batch.triples) {
    CHECK(t.user == 0);
    CHECK(t.pos == 0);
    CHECK(t.neg == 1);
  }
}

TEST_CASE("sample_batch: triples satisfy the membership invariant") {
  Rng rng(2);
  const auto d = small_dataset(8, 12, rng);
  const auto index = build_user_index(d.train, d.num_users);
  Rng sampler(3);
  for (int rep = 0; rep < 10; ++rep) {
    const auto batch = sample_batch(d, index, 1000, sampler);
    for (const auto& t : batch.triples) {
      CHECK(index.contains(t.user, t.pos));
      CHECK_FALSE(index.contains(t.user, t.neg));
    }
  }
}

TEST_CASE("sample_batch: positive pairs are drawn uniformly") {
  InteractionDataset d;
  d.num_users = 3;
  d.num_items = 8;
  d.train.pairs = {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5},
                   {1, 0}, {1, 1}, {1, 2}, {1, 3}, {2, 0}, {2, 1}};
  normalize(d.train);
  const std::size_t pair_count = d.train.size();
  const auto index = build_user_index(d.train, d.num_users);

  Rng rng(4);
  const std::size_t draws = 100000;
  std::vector<std::size_t> counts(pair_count, 0);
  for (std::size_t got = 0; got < draws;) {
    const auto batch = sample_batch(d, index, 1000, rng);
    for (const auto& t : batch.triples) {
      const auto it = std::lower_bound(d.train.pairs.begin(), d.train.pairs.end(),
                                       Interaction{t.user, t.pos});
      ++counts[static_cast<std::size_t>(it - d.train.pairs.begin())];
      ++got;
    }
  }
  const double expected = static_cast<double>(draws) / pair_count;
  const double sigma =
      std::sqrt(draws * (1.0 / pair_count) * (1.0 - 1.0 / pair_count));
  for (std::size_t c : counts)
    CHECK(std::abs(static_cast<double>(c) - expected) <= 3.0 * sigma);
}

TEST_CASE("sample_batch: fails when no negative exists anywhere") {
  InteractionDataset d;
  d.num_users = 2;
  d.num_items = 2;
  d.train.pairs = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  Rng rng(5);
  CHECK_THROWS_AS(sample_batch(d, 4, rng), std::runtime_error);
}

TEST_CASE("bpr_loss: frozen values") {
  auto loss1 = [](double pos, double neg, double re = 0, double rb = 0,
                  double alpha = 0, double beta = 0) {
    const std::vector<double> p{pos}, n{neg};
    return bpr_loss(p, n, re, rb, alpha, beta);
  };
  CHECK(loss1(1.5, 1.5) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
  CHECK(loss1(0.0, 2.0) == doctest::Approx(2.1269280110429727).epsilon(1e-12));
  CHECK(loss1(1000.0, 0.0) <= 1e-8);  // saturated win
  CHECK(loss1(1.0, 1.0, 2.0, 3.0, 0.5, 0.25) ==
        doctest::Approx(std::log(2.0) + 1.0 + 0.75).epsilon(1e-12));
}

TEST_CASE("bpr_loss: rejects bad inputs") {
  const std::vector<double> two{1.0, 2.0}, one{1.0};
  CHECK_THROWS_AS(bpr_loss(two, one, 0, 0, 0, 0), std::invalid_argument);
  const std::vector<double> inf{std::numeric_limits<double>::infinity()};
  const std::vector<double> zero{0.0};
  const std::vector<double> nan{std::nan("")};
  CHECK_THROWS_AS(bpr_loss(inf, zero, 0, 0, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(bpr_loss(zero, nan, 0, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("backward: depth 0 gradient needs no propagation") {
  Rng rng(6);
  const auto d = small_dataset(4, 5, rng);
  ModelConfig cfg;
  cfg.k = 3;
  cfg.L = 0;
  cfg.lambda = 1.0;
  cfg.alpha = 0.0;
  cfg.beta = 0.0;
  const auto op = build_propagation(build_adjacency(d), cfg.lambda);
  const auto st = testutil::random_state(4, 5, 3, rng, 0.5, true);
  Rng sampler(7);
  const auto batch = sample_batch(d, 8, sampler);

  const auto stack = propagate(op, st, 0);
  const auto fe = finalize(stack, FinalMode::last_layer);
  const std::span<const double> biases(st.biases);
  const auto g = backward(op, stack, fe, biases, batch, cfg);

  // hand accumulation of the same formulas, no operator involved
  DenseMatrix<double> expected(9, 3);
  const double inv_b = 1.0 / batch.size();
  for (const auto& t : batch.triples) {
    const double diff = score(fe, biases, t.user, t.pos) -
                        score(fe, biases, t.user, t.neg);
    const double coef = inv_b / (1.0 + std::exp(diff));
    for (std::size_t c = 0; c < 3; ++c) {
      expected(t.user, c) +=
          -coef * (fe.e_star(4 + t.pos, c) - fe.e_star(4 + t.neg, c));
      expected(4 + t.pos, c) += -coef * fe.e_star(t.user, c);
      expected(4 + t.neg, c) += coef * fe.e_star(t.user, c);
    }
  }
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(g.e0.values()[i] == doctest::Approx(expected.values()[i]).epsilon(1e-12));
}

TEST_CASE("backward: finite-difference agreement across modes and scopes") {
  Rng rng(8);
  for (const FinalMode mode : {FinalMode::last_layer, FinalMode::concat}) {
    for (const RegScope scope : {RegScope::batch, RegScope::full}) {
      const auto d = small_dataset(4, 6, rng);
      ModelConfig cfg;
      cfg.k = 3;
      cfg.L = 2;
      cfg.lambda = 0.5;
      cfg.alpha = 0.03;
      cfg.beta = 0.02;
      cfg.mode = mode;
      cfg.reg_scope = scope;
      CHECK(gradient_check(d, cfg, rng) <= 1e-4);
    }
  }
}

TEST_CASE("backward: user bias gradient from the ranking term is exactly zero") {
  Rng rng(9);
  const auto d = small_dataset(5, 7, rng);
  ModelConfig cfg;
  cfg.k = 4;
  cfg.L = 2;
  cfg.lambda = 1.0;
  cfg.alpha = 0.01;  // embedding reg on, bias reg off
  cfg.beta = 0.0;
  const auto op = build_propagation(build_adjacency(d), cfg.lambda);
  const auto st = testutil::random_state(5, 7, 4, rng, 0.5, true);
  Rng sampler(10);
  const auto batch = sample_batch(d, 32, sampler);
  const auto stack = propagate(op, st, cfg.L);
  const auto fe = finalize(stack, cfg.mode);
  const auto g =
      backward(op, stack, fe, std::span<const double>(st.biases), batch, cfg);
  for (std::uint32_t u = 0; u < 5; ++u) CHECK(g.biases[u] == 0.0);
}

TEST_CASE("backward: saturated sigmoid gives a zero batch gradient") {
  InteractionDataset d;
  d.num_users = 1;
  d.num_items = 2;
  d.train.pairs = {{0, 0}};
  ModelConfig cfg;
  cfg.k = 1;
  cfg.L = 0;
  cfg.alpha = 0.0;
  cfg.beta = 0.0;
  const auto op = build_propagation(build_adjacency(d), 0.0);
  EmbeddingState st;
  st.num_users = 1;
  st.e0 = DenseMatrix<double>(3, 1);
  st.e0(0, 0) = 1.0;
  st.e0(1, 0) = 1000.0;   // positive item
  st.e0(2, 0) = -1000.0;  // negative item
  st.biases = {0.0, 0.0, 0.0};

  TripleBatch batch;
  batch.triples = {{0, 0, 1}};
  const auto stack = propagate(op, st, 0);
  const auto fe = finalize(stack, FinalMode::last_layer);
  const auto g =
      backward(op, stack, fe, std::span<const double>(st.biases), batch, cfg);
  for (double v : g.e0.values()) CHECK(v == 0.0);
  for (double v : g.biases) CHECK(v == 0.0);
}

TEST_CASE("adam: zero gradient leaves fresh parameters unchanged") {
  EmbeddingState st;
  st.num_users = 1;
  st.e0 = DenseMatrix<double>(2, 2, 0.7);
  st.biases = {0.1, -0.2};
  auto adam = make_adam_state(st);
  Gradients g;
  g.e0 = DenseMatrix<double>(2, 2, 0.0);
  g.biases = {0.0, 0.0};
  const auto before = st;
  adam_step(st, g, adam, 0.1);
  CHECK(st.e0 == before.e0);
  CHECK(st.biases == before.biases);
}

TEST_CASE("adam: first step moves by about lr against the gradient sign") {
  EmbeddingState st;
  st.num_users = 1;
  st.e0 = DenseMatrix<double>(2, 1, 0.0);
  st.biases = {0.0, 0.0};
  auto adam = make_adam_state(st);
  Gradients g;
  g.e0 = DenseMatrix<double>(2, 1);
  g.e0(0, 0) = 0.5;
  g.e0(1, 0) = -0.02;
  g.biases = {0.3, 0.0};
  const double lr = 0.01;
  adam_step(st, g, adam, lr);

  CHECK(st.e0(0, 0) == doctest::Approx(-lr).epsilon(1e-6));
  CHECK(st.e0(1, 0) == doctest::Approx(lr).epsilon(1e-5));
  CHECK(st.biases[0] == doctest::Approx(-lr).epsilon(1e-6));
  CHECK(st.biases[1] == 0.0);
}

TEST_CASE("adam: identical calls from identical state match bit for bit") {
  Rng rng(11);
  auto make = [&]() {
    Rng init_rng(77);
    EmbeddingState st;
    st.num_users = 2;
    st.e0 = testutil::random_matrix(5, 3, init_rng);
    st.biases.assign(5, 0.25);
    return st;
  };
  Gradients g;
  g.e0 = testutil::random_matrix(5, 3, rng, 0.1);
  g.biases.assign(5, -0.05);

  auto a = make();
  auto b = make();
  auto sa = make_adam_state(a);
  auto sb = make_adam_state(b);
  for (int step = 0; step < 3; ++step) {
    adam_step(a, g, sa, 0.003);
    adam_step(b, g, sb, 0.003);
  }
  CHECK(a.e0 == b.e0);
  CHECK(a.biases == b.biases);
}

TEST_CASE("adam: non-finite gradient is rejected") {
  EmbeddingState st;
  st.num_users = 1;
  st.e0 = DenseMatrix<double>(2, 1, 0.0);
  st.biases = {0.0, 0.0};
  auto adam = make_adam_state(st);
  Gradients g;
  g.e0 = DenseMatrix<double>(2, 1, 0.0);
  g.e0(0, 0) = std::numeric_limits<double>::quiet_NaN();
  g.biases = {0.0, 0.0};
  CHECK_THROWS_AS(adam_step(st, g, adam, 0.1), std::invalid_argument);
}

TEST_CASE("train: zero epochs returns the initialized state") {
  const auto d = testutil::planted_blocks(4, 4, 2, 12);
  ModelConfig cfg;
  cfg.k = 3;
  cfg.L = 1;
  cfg.max_epochs = 0;
  cfg.seed = 31;
  const auto [state, report] = train(cfg, d);
  CHECK(report.epoch_loss.empty());
  CHECK(report.stopping_epoch == 0);

  Rng rng(31);
  const auto fresh = init_embeddings<double>(d.num_users, d.num_items, 3, rng);
  CHECK(state.e0 == fresh.e0);
  CHECK(state.biases == fresh.biases);
}

TEST_CASE("train: fixed seed reproduces the loss sequence bit for bit") {
  const auto d = testutil::planted_blocks(6, 6, 2, 13);
  ModelConfig cfg;
  cfg.k = 8;
  cfg.L = 2;
  cfg.lambda = 1.0;
  cfg.alpha = 1e-4;
  cfg.batch_size = 64;
  cfg.max_epochs = 12;
  cfg.eval_every = 0;
  cfg.learning_rate = 0.02;
  cfg.seed = 2024;
  const auto [sa, ra] = train(cfg, d);
  const auto [sb, rb] = train(cfg, d);
  CHECK(ra.epoch_loss == rb.epoch_loss);
  CHECK(sa.e0 == sb.e0);
  CHECK(sa.biases == sb.biases);
}

TEST_CASE("train: user biases stay at init when beta is zero") {
  const auto d = testutil::planted_blocks(5, 5, 2, 14);
  ModelConfig cfg;
  cfg.k = 4;
  cfg.L = 1;
  cfg.alpha = 1e-3;
  cfg.beta = 0.0;
  cfg.reg_scope = RegScope::batch;
  cfg.batch_size = 32;
  cfg.max_epochs = 8;
  cfg.eval_every = 0;
  cfg.learning_rate = 0.05;
  const auto [state, report] = train(cfg, d);
  for (std::uint32_t u = 0; u < d.num_users; ++u) CHECK(state.biases[u] == 0.0);
  // item biases do move
  bool any_item_bias = false;
  for (std::uint32_t i = 0; i < d.num_items; ++i)
    if (state.biases[d.num_users + i] != 0.0) any_item_bias = true;
  CHECK(any_item_bias);
}

TEST_CASE("train: loss trends down on planted structure") {
  const auto d = testutil::planted_blocks(10, 10, 2, 17);
  ModelConfig cfg;
  cfg.k = 16;
  cfg.L = 2;
  cfg.lambda = 1.0;
  cfg.alpha = 1e-4;
  cfg.beta = 1e-4;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 256;
  cfg.max_epochs = 60;
  cfg.eval_every = 0;
  cfg.seed = 18;
  const auto [state, report] = train(cfg, d);
  REQUIRE(report.epoch_loss.size() == 60);

  // per-epoch batch losses are resampled draws, so the trend is asserted on
  // the running average, checked at 5-epoch marks past the warmup
  double running = 0.0, prev_mark = 0.0;
  for (std::size_t e = 0; e < 60; ++e) {
    running += report.epoch_loss[e];
    if ((e + 1) % 5 == 0) {
      const double mark = running / static_cast<double>(e + 1);
      if (e + 1 > 5) CHECK(mark <= prev_mark);
      prev_mark = mark;
    }
  }
  // and the last smoothed window sits strictly below the first
  auto window = [&](std::size_t start) {
    double s = 0.0;
    for (std::size_t e = start; e < start + 5; ++e) s += report.epoch_loss[e];
    return s / 5.0;
  };
  CHECK(window(55) < window(0));
}

TEST_CASE("train: single-precision path is finite and deterministic") {
  const auto d = testutil::planted_blocks(5, 10, 2, 16);
  ModelConfig cfg;
  cfg.k = 8;
  cfg.L = 2;
  cfg.lambda = 1.0;
  cfg.alpha = 1e-4;
  cfg.batch_size = 64;
  cfg.max_epochs = 10;
  cfg.eval_every = 0;
  cfg.learning_rate = 0.02;
  cfg.precision = Precision::single;
  const auto [sa, ra] = train(cfg, d);
  const auto [sb, rb] = train(cfg, d);
  CHECK(sa.e0 == sb.e0);
  CHECK(ra.epoch_loss == rb.epoch_loss);
  for (double v : sa.e0.values()) CHECK(std::isfinite(v));
  // stored values really are single precision
  for (double v : sa.e0.values())
    CHECK(static_cast<double>(static_cast<float>(v)) == v);
  CHECK(ra.epoch_loss.back() < ra.epoch_loss.front());
}

TEST_CASE("train: early stopping keeps the best checkpoint") {
  auto d = testutil::planted_blocks(6, 10, 2, 15);
  // move a fifth of train to validation so eval can run
  const auto split = split_validation(d.train, 0.2, 3);
  d = build_dataset(split.train, split.validation, d.test);

  ModelConfig cfg;
  cfg.k = 8;
  cfg.L = 2;
  cfg.lambda = 1.0;
  cfg.alpha = 1e-4;
  cfg.batch_size = 64;
  cfg.max_epochs = 40;
  cfg.eval_every = 2;
  cfg.patience = 3;
  cfg.learning_rate = 0.05;
  cfg.seed = 5;
  const auto [state, report] = train(cfg, d);
  CHECK(report.stopping_epoch <= 40);
  CHECK(!report.evals.empty());
  CHECK(report.best_epoch > 0);
  double best = -1.0;
  for (const auto& e : report.evals) best = std::max(best, e.recall);
  for (const auto& e : report.evals)
    if (e.epoch == report.best_epoch) CHECK(e.recall == best);
}
