#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "daiqa/metrics/correlation.hpp"

using namespace daiqa::metrics;

namespace {

// Straight from the definition, no shared code with the library.
double pearson_ref(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// O(n^2) average ranks: 1 + #smaller + (#equal - 1) / 2.
std::vector<double> ranks_ref(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    int less = 0, equal = 0;
    for (double u : v) {
      less += u < v[i];
      equal += u == v[i];
    }
    r[i] = 1.0 + less + (equal - 1) / 2.0;
  }
  return r;
}

std::vector<double> transformed(const std::vector<double>& v, double (*f)(double)) {
  std::vector<double> out;
  for (double x : v) out.push_back(f(x));
  return out;
}

}  // namespace

TEST(Plcc, SelfAndAffine) {
  const std::vector<double> y{1, 2, 3};
  EXPECT_DOUBLE_EQ(plcc(y, y), 1.0);
  EXPECT_NEAR(plcc(y, std::vector<double>{2, 4, 6}), 1.0, 1e-15);
}

TEST(Plcc, HandValue) {
  EXPECT_NEAR(plcc(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 4}), 9.0 / (2.0 * std::sqrt(21.0)), 1e-12);
}

TEST(Plcc, ConstantIsUndefined) {
  EXPECT_THROW(plcc(std::vector<double>{1, 2, 3}, std::vector<double>{5, 5, 5}), std::domain_error);
  EXPECT_THROW(plcc(std::vector<double>{4, 4}, std::vector<double>{1, 2}), std::domain_error);
}

TEST(Plcc, BadLengths) {
  EXPECT_THROW(plcc(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
  EXPECT_THROW(plcc(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST(Plcc, AffineInvarianceAndSignFlip) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::vector<double> a(30), b(30);
  for (int i = 0; i < 30; ++i) {
    a[i] = nd(rng);
    b[i] = a[i] + nd(rng);
  }
  const double r = plcc(a, b);
  std::vector<double> b2, b3;
  for (double x : b) {
    b2.push_back(3.5 * x - 2.0);
    b3.push_back(-0.25 * x + 9.0);
  }
  EXPECT_NEAR(plcc(a, b2), r, 1e-12);
  EXPECT_NEAR(plcc(a, b3), -r, 1e-12);
}

TEST(Srocc, Monotone) {
  const std::vector<double> y{0.1, 0.5, 0.7, 2.0};
  EXPECT_DOUBLE_EQ(srocc(y, std::vector<double>{1, 2, 3, 40}), 1.0);
  EXPECT_DOUBLE_EQ(srocc(y, std::vector<double>{4, 3, 2, 1}), -1.0);
}

TEST(Srocc, HandValue) {
  EXPECT_NEAR(srocc(std::vector<double>{1, 2, 3}, std::vector<double>{3, 1, 2}), -0.5, 1e-15);
}

TEST(Srocc, TiesUseAverageRanks) {
  const std::vector<double> ra{1.5, 1.5, 3}, rb{1, 2, 3};
  EXPECT_NEAR(srocc(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 3}), pearson_ref(ra, rb), 1e-12);
  EXPECT_EQ(average_ranks(std::vector<double>{2, 7, 2, 2}), (std::vector<double>{2, 4, 2, 2}));
  EXPECT_TRUE(has_ties(std::vector<double>{1, 2, 1}));
  EXPECT_FALSE(has_ties(std::vector<double>{1, 2, 3}));
}

TEST(Srocc, ConstantIsUndefined) {
  EXPECT_THROW(srocc(std::vector<double>{1, 2, 3}, std::vector<double>{0, 0, 0}), std::domain_error);
}

TEST(Srocc, InvariantUnderIncreasingTransforms) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ud(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(25), b(25);
    for (int i = 0; i < 25; ++i) {
      a[i] = ud(rng);
      b[i] = a[i] + ud(rng);
    }
    const double r = srocc(a, b);
    EXPECT_NEAR(srocc(transformed(a, [](double x) { return std::exp(x); }), b), r, 1e-12);
    EXPECT_NEAR(srocc(a, transformed(b, [](double x) { return x * x * x; })), r, 1e-12);
    EXPECT_NEAR(srocc(transformed(a, [](double x) { return 2 * x + 7; }), b), r, 1e-12);
  }
}

TEST(Correlation, MatchesBruteForceOnRandomVectors) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(2, 50);
  std::uniform_int_distribution<int> coarse(0, 6);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    const bool tied = trial % 3 == 0;
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = tied ? coarse(rng) : nd(rng);
      b[i] = tied ? coarse(rng) : nd(rng);
    }
    const auto constant = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
    };
    if (constant(a) || constant(b)) continue;
    EXPECT_NEAR(plcc(a, b), pearson_ref(a, b), 1e-9);
    EXPECT_NEAR(srocc(a, b), pearson_ref(ranks_ref(a), ranks_ref(b)), 1e-9);
  }
}

TEST(Srocc, ClosedFormAgreesWithRankPearsonWhenTieFree) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(17), b(17);
    for (int i = 0; i < 17; ++i) {
      a[i] = nd(rng);
      b[i] = nd(rng);
    }
    EXPECT_NEAR(srocc(a, b), pearson_ref(ranks_ref(a), ranks_ref(b)), 1e-12);
  }
}
