#include "zsbir/network.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace zsbir;

TEST_CASE("generator forward: zeros, ReLU clipping, oracle") {
  GeneratorParams p;
  p.W = Mat::Zero(3, 4);
  p.b = Vec::Zero(3);
  Vec v = Vec::Ones(4);
  CHECK(generator_forward(p, v) == Vec::Zero(3));

  p.b << -1.0, 0.5, -0.2;
  Vec out = generator_forward(p, v);
  CHECK(out(0) == 0.0);
  CHECK(out(1) == 0.5);
  CHECK(out(2) == 0.0);

  Rng rng(21);
  GeneratorParams q = detail::init_generator(512, 64, rng);
  Vec x(512);
  rng.fill_normal(x, 0, 1);
  Vec got = generator_forward(q, x);
  auto want = oracle::relu_fc(oracle::to_rows(q.W), oracle::to_vec(q.b),
                              oracle::to_vec(x));
  for (int i = 0; i < 64; ++i)
    REQUIRE_THAT(got(i), Catch::Matchers::WithinAbs(want[i], 1e-10));

  CHECK_THROWS_AS(generator_forward(q, Vec::Zero(5)), DataError);
}

TEST_CASE("generator row form agrees with the vector form") {
  Rng rng(22);
  GeneratorParams p = detail::init_generator(6, 3, rng);
  Mat x(5, 6);
  rng.fill_normal(x, 0, 1);
  Mat rows = generator_forward_rows(p, x);
  for (int i = 0; i < 5; ++i) {
    Vec one = generator_forward(p, x.row(i).transpose());
    REQUIRE((rows.row(i).transpose() - one).norm() == 0.0);
  }
}

TEST_CASE("discriminator forward: zeros give 0.5, range is (0,1), oracle") {
  DiscriminatorParams p;
  p.W1 = Mat::Zero(4, 3);
  p.b1 = Vec::Zero(4);
  p.w2 = Vec::Zero(4);
  p.b2 = 0.0;
  CHECK(discriminator_forward(p, Vec::Ones(3)) == 0.5);

  Rng rng(23);
  DiscriminatorParams q = detail::init_discriminator(8, 16, rng);
  for (int trial = 0; trial < 50; ++trial) {
    Vec v(8);
    rng.fill_normal(v, 0, 3);
    double d = discriminator_forward(q, v);
    REQUIRE(d > 0.0);
    REQUIRE(d < 1.0);
    REQUIRE_THAT(d, Catch::Matchers::WithinAbs(
                        oracle::disc_prob(q, oracle::to_vec(v)), 1e-12));
  }
}

TEST_CASE("classifier forward: uniform at zero, shift invariant, simplex") {
  ClassifierParams p;
  p.W = Mat::Zero(4, 5);
  p.b = Vec::Zero(5);
  Vec z = Vec::Ones(4);
  Vec probs = classifier_forward(p, z);
  for (int c = 0; c < 5; ++c) CHECK(probs(c) == Catch::Approx(0.2));

  Rng rng(24);
  ClassifierParams q = detail::init_classifier(6, 4, rng);
  Vec zz(6);
  rng.fill_normal(zz, 0, 1);
  Vec p1 = classifier_forward(q, zz);
  ClassifierParams shifted = q;
  shifted.b.array() += 7.5;  // constant shift of all logits
  Vec p2 = classifier_forward(shifted, zz);
  for (int c = 0; c < 4; ++c)
    REQUIRE_THAT(p1(c), Catch::Matchers::WithinAbs(p2(c), 1e-12));

  // simplex to 1e-9 and oracle agreement
  for (int trial = 0; trial < 30; ++trial) {
    rng.fill_normal(zz, 0, 2);
    Vec pr = classifier_forward(q, zz);
    double sum = 0.0;
    auto want = oracle::softmax_probs(q, oracle::to_vec(zz));
    for (int c = 0; c < 4; ++c) {
      REQUIRE(pr(c) >= 0.0);
      REQUIRE_THAT(pr(c), Catch::Matchers::WithinAbs(want[c], 1e-12));
      sum += pr(c);
    }
    REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("init_model is deterministic in the seed") {
  ModelDims dims;
  dims.feature_dim = 32;
  dims.sem_dim = 8;
  dims.side_dim = 12;
  dims.n_seen = 5;
  dims.disc_hidden = 16;
  ModelState a = init_model(dims, 42);
  ModelState b = init_model(dims, 42);
  CHECK(a.sketch_to_sem.W == b.sketch_to_sem.W);
  CHECK(a.d_image.W1 == b.d_image.W1);
  CHECK(a.side_ae.W2 == b.side_ae.W2);
  CHECK(a.cls_image.W == b.cls_image.W);

  ModelState c = init_model(dims, 43);
  CHECK(a.sketch_to_sem.W != c.sketch_to_sem.W);

  // biases start at zero, weights are fan-in bounded
  CHECK(a.sketch_to_sem.b.norm() == 0.0);
  CHECK(a.sketch_to_sem.W.cwiseAbs().maxCoeff() <=
        1.0 / std::sqrt(32.0));

  // M = 64 operating point builds cleanly
  dims.sem_dim = 64;
  ModelState big = init_model(dims, 7);
  CHECK(big.sketch_to_sem.W.rows() == 64);
  CHECK(big.sem_to_sketch.W.cols() == 64);
}

TEST_CASE("init_model validates dimensions") {
  ModelDims dims;
  dims.feature_dim = 8;
  dims.sem_dim = 0;
  dims.side_dim = 4;
  dims.n_seen = 2;
  CHECK_THROWS_AS(init_model(dims, 1), ConfigError);
  dims.sem_dim = 4;
  dims.encode_side = false;
  dims.side_dim = 6;  // must equal sem_dim when the encoder is bypassed
  CHECK_THROWS_AS(init_model(dims, 1), ConfigError);
}
