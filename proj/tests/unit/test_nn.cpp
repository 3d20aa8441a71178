#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "../support/grad_cases.hpp"
#include "../support/oracles.hpp"
#include "repute/nn/loss.hpp"
#include "repute/nn/optimizer.hpp"
#include "repute/nn/serialize.hpp"

using namespace repute;
using namespace repute::nn;

TEST(GradientCheck, EveryLayerKindAndComposite) {
  for (const auto& r : gradcase::run_all()) {
    EXPECT_LT(r.rel_error, gradcase::tolerance(r)) << r.name;
  }
}

TEST(GradientCheck, DetectsWrongGradient) {
  Network n({3});
  n.emplace<Dense>(3, 2);
  n.init(1);
  const Tensor x({3}, std::vector<double>{0.5, -0.2, 0.9});
  const Tensor y({2}, std::vector<double>{0.1, 0.3});
  Objective obj{[&] { return mse_loss(y, n.infer(x)); },
                [&] {
                  n.backward(mse_grad(y, n.forward(x)));
                  n.params()[0]->grad[0] += 0.5;
                }};
  EXPECT_GT(gradient_check(n.params(), obj), 1e-2);
}

TEST(Conv1D, OutputLengthProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 1 + rng() % 40, k = 1 + rng() % 6, s = 1 + rng() % 3, p = rng() % 3;
    Conv1D conv(2, 3, k, s, p);
    const long long expect = static_cast<long long>(len + 2 * p) - static_cast<long long>(k) < 0
                                 ? 0
                                 : (static_cast<long long>(len + 2 * p) - static_cast<long long>(k)) /
                                           static_cast<long long>(s) +
                                       1;
    EXPECT_EQ(conv.output_length(len), static_cast<std::size_t>(expect));
    if (expect > 0) {
      EXPECT_EQ(conv.output_shape({len, 2}), (Shape{static_cast<std::size_t>(expect), 3}));
      conv.init(rng);
      EXPECT_EQ(conv.infer(Tensor({len, 2}, 1.0)).shape(), (Shape{static_cast<std::size_t>(expect), 3}));
    } else {
      EXPECT_THROW(conv.output_shape({len, 2}), ShapeError);
    }
  }
}

TEST(Conv1D, MatchesDirectSum) {
  Conv1D conv(2, 1, 3, 2, 1);
  std::mt19937_64 rng(1);
  conv.init(rng);
  conv.bias().value[0] = 0.25;
  const Tensor x({5, 2}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const Tensor y = conv.infer(x);
  ASSERT_EQ(y.shape(), (Shape{3, 1}));
  const auto& w = conv.weight().value;  // [out, k, in]
  for (std::size_t t = 0; t < 3; ++t) {
    double s = 0.25;
    for (std::size_t k = 0; k < 3; ++k) {
      const long long pos = static_cast<long long>(t * 2 + k) - 1;
      if (pos < 0 || pos >= 5) continue;
      for (std::size_t c = 0; c < 2; ++c) s += w[k * 2 + c] * x[static_cast<std::size_t>(pos) * 2 + c];
    }
    EXPECT_NEAR(y[t], s, 1e-12);
  }
}

TEST(Network, ShapeErrorsNameTheLayer) {
  Network n({4});
  n.emplace<Dense>(4, 3);
  try {
    n.emplace<Dense>(5, 2);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos);
  }
  EXPECT_THROW(n.forward(Tensor({5})), ShapeError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Network, RejectsNonFiniteInput) {
  Network n({2});
  n.emplace<Dense>(2, 1);
  n.init(0);
  EXPECT_THROW(n.forward(Tensor({2}, std::vector<double>{1.0, std::numeric_limits<double>::quiet_NaN()})), Error);
}

TEST(Network, InferMatchesForwardAndCopiesAreDeep) {
  Network n({6, 2});
  n.emplace<Conv1D>(2, 3, 3, 1, 1).emplace<ReLU>().emplace<Flatten>().emplace<Dense>(18, 2).emplace<Sigmoid>();
  n.init(4);
  std::mt19937_64 rng(4);
  const auto x = gradcase::random_tensor({6, 2}, rng);
  EXPECT_EQ(n.infer(x), n.forward(x));
  Network copy = n;
  copy.params()[0]->value[0] += 1.0;
  EXPECT_NE(copy.infer(x), n.infer(x));
}

TEST(Loss, MseExactness) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    const Shape s = {1 + rng() % 24, 1 + rng() % 10};
    const auto a = gradcase::random_tensor(s, rng, -5, 5);
    const auto b = gradcase::random_tensor(s, rng, -5, 5);
    EXPECT_EQ(mse_loss(a, a), 0.0);
    EXPECT_NEAR(mse_loss(a, b), oracle::direct_mse(a.span(), b.span()), 1e-12);
  }
  EXPECT_THROW(mse_loss(Tensor({2}), Tensor({3})), ShapeError);
}

TEST(Loss, BceClipsAndMatchesFormula) {
  const Tensor t({2}, std::vector<double>{1.0, 0.0});
  const Tensor p({2}, std::vector<double>{0.8, 0.3});
  EXPECT_NEAR(bce_loss(t, p), -(std::log(0.8) + std::log(0.7)) / 2, 1e-15);
  EXPECT_TRUE(std::isfinite(bce_loss(t, Tensor({2}, std::vector<double>{0.0, 1.0}))));
}

TEST(Optimizer, SgdStepAndAdamDescends) {
  Param p{"w", Tensor({2}, std::vector<double>{1.0, -2.0}), Tensor({2}, std::vector<double>{0.5, 0.5})};
  Sgd(0.1).step({&p});
  EXPECT_DOUBLE_EQ(p.value[0], 0.95);
  EXPECT_DOUBLE_EQ(p.value[1], -2.05);

  Param q{"w", Tensor({1}, std::vector<double>{3.0}), Tensor({1})};
  Adam adam(0.1);
  for (int i = 0; i < 500; ++i) {
    q.grad[0] = 2 * q.value[0];
    adam.step({&q});
  }
  EXPECT_LT(std::abs(q.value[0]), 0.05);
}

TEST(Serialize, RoundTripIsExact) {
  Network n({8, 2});
  n.emplace<Conv1D>(2, 3, 3, 2, 1)
      .emplace<ReLU>()
      .emplace<Flatten>()
      .emplace<Dense>(12, 12)
      .emplace<Reshape>(Shape{4, 3})
      .emplace<Upsample1D>(2)
      .emplace<Tanh>();
  n.init(21);
  std::stringstream ss;
  save_network(ss, n, {{"note", "x"}});
  const auto loaded = load_network(ss);
  EXPECT_EQ(loaded.meta.at("note"), "x");
  std::mt19937_64 rng(2);
  const auto x = gradcase::random_tensor({8, 2}, rng);
  EXPECT_EQ(loaded.network.infer(x), n.infer(x));

  std::stringstream bad("NOT-A-MODEL\n");
  EXPECT_THROW(load_network(bad), Error);
}
