#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <stdexcept>

#include "daiqa/quality/aggregate.hpp"

using namespace daiqa::quality;

TEST(ActivateWeight, ClampsAndAddsEpsilon) {
  EXPECT_DOUBLE_EQ(activate_weight(-0.3, 1e-6), 1e-6);
  EXPECT_DOUBLE_EQ(activate_weight(0.5, 1e-6), 0.500001);
  EXPECT_DOUBLE_EQ(activate_weight(0.0), kDefaultWeightEpsilon);
  EXPECT_THROW(activate_weight(1.0, 0.0), std::invalid_argument);
}

TEST(Aggregate, Examples) {
  EXPECT_DOUBLE_EQ(aggregate(std::vector<double>{0.7}, std::vector<double>{42.0}), 0.7);
  EXPECT_NEAR(aggregate(std::vector<double>{0.2, 0.4, 0.6}, std::vector<double>{1, 1, 1}), 0.4, 1e-15);
  EXPECT_NEAR(aggregate(std::vector<double>{0.2, 0.8}, std::vector<double>{1, 3}), 0.65, 1e-15);
}

TEST(Aggregate, Errors) {
  EXPECT_THROW(aggregate(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(aggregate(std::vector<double>{0.1, 0.2}, std::vector<double>{1}), std::invalid_argument);
  EXPECT_THROW(aggregate(std::vector<double>{0.1}, std::vector<double>{0.0}), std::invalid_argument);
  EXPECT_THROW(aggregate(std::vector<PatchPrediction>{}), std::invalid_argument);
}

TEST(Aggregate, PatchOverloadUsesActivatedWeights) {
  std::vector<PatchPrediction> p{{0.2, 1.0, activate_weight(1.0), {}}, {0.8, -5.0, activate_weight(-5.0), {}}};
  EXPECT_NEAR(aggregate(p), (0.2 * (1.0 + 1e-6) + 0.8 * 1e-6) / (1.0 + 2e-6), 1e-15);
}

TEST(Aggregate, RandomPropertySuite) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0, 1), raw(-1, 2), scale(0.01, 100);
  std::uniform_int_distribution<int> count(1, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = count(rng);
    std::vector<double> s(n), w(n);
    for (int i = 0; i < n; ++i) {
      s[i] = unit(rng);
      w[i] = activate_weight(raw(rng));
      ASSERT_GT(w[i], 0.0);
    }
    const double a = aggregate(s, w);
    EXPECT_GE(a, *std::min_element(s.begin(), s.end()));
    EXPECT_LE(a, *std::max_element(s.begin(), s.end()));

    const double c = scale(rng);
    std::vector<double> wc(w);
    for (auto& v : wc) v *= c;
    EXPECT_NEAR(aggregate(s, wc), a, 1e-9);

    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> sp(n), wp(n);
    for (int i = 0; i < n; ++i) {
      sp[i] = s[perm[i]];
      wp[i] = w[perm[i]];
    }
    EXPECT_NEAR(aggregate(sp, wp), a, 1e-9);

    s.push_back(a);
    w.push_back(activate_weight(raw(rng)));
    EXPECT_NEAR(aggregate(s, w), a, 1e-9);
  }
}

TEST(LossRegression, Examples) {
  EXPECT_DOUBLE_EQ(loss_regression(std::vector<double>{0.3, 0.9}, std::vector<double>{0.3, 0.9}).value, 0.0);
  EXPECT_NEAR(loss_regression(std::vector<double>{0.5}, std::vector<double>{0.7}).value, 0.2, 1e-15);
  EXPECT_NEAR(loss_regression(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5, 0.5}).value, 0.5, 1e-15);
}

TEST(LossRegression, SymmetricWithSignGradient) {
  const std::vector<double> a{0.1, 0.9, 0.4}, b{0.3, 0.2, 0.4};
  const auto ab = loss_regression(a, b), ba = loss_regression(b, a);
  EXPECT_DOUBLE_EQ(ab.value, ba.value);
  EXPECT_EQ(ab.grad, (std::vector<double>{-1.0 / 3, 1.0 / 3, 0.0}));
  EXPECT_THROW(loss_regression(a, std::vector<double>{1}), std::invalid_argument);
}
