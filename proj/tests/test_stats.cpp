#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sohkit/random.hpp"
#include "sohkit/stats.hpp"

using namespace sohkit;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, bool with_ties) {
  std::vector<double> v(n);
  for (auto& x : v) {
    x = with_ties ? std::floor(rng.uniform(-5.0, 5.0) * 4.0) / 4.0
                  : rng.normal();
  }
  return v;
}

}  // namespace

TEST(Summarize, WorkedExample) {
  const std::vector<double> v = {1, 2, 3, 4, 5};
  const StatVector s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.median, 3.0);
  EXPECT_DOUBLE_EQ(s.sum, 15.0);
  EXPECT_NEAR(s.std_dev, std::sqrt(2.5), 1e-15);
  EXPECT_DOUBLE_EQ(s.variance, 2.5);
  EXPECT_DOUBLE_EQ(s.kurtosis, 1.7);
  EXPECT_DOUBLE_EQ(s.iqr, 2.5);
  EXPECT_FALSE(s.kurtosis_degenerate);
}

TEST(Summarize, ConstantInputDegeneratesKurtosisOnly) {
  const std::vector<double> v = {2, 2, 2, 2};
  const StatVector s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.sum, 8.0);
  EXPECT_DOUBLE_EQ(s.std_dev, 0.0);
  EXPECT_DOUBLE_EQ(s.variance, 0.0);
  EXPECT_DOUBLE_EQ(s.iqr, 0.0);
  EXPECT_TRUE(s.kurtosis_degenerate);
  EXPECT_TRUE(std::isnan(s.kurtosis));
}

TEST(Summarize, RejectsShortAndNonFiniteInput) {
  const std::vector<double> three = {1, 2, 3};
  EXPECT_THROW(
      {
        try {
          summarize(three);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
          throw;
        }
      },
      Error);
  const std::vector<double> bad = {1, 2, std::nan(""), 4};
  EXPECT_THROW(summarize(bad), Error);
}

TEST(Summarize, VarianceIsSquaredStdDev) {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const auto v = random_vector(rng, 4 + rng.uniform_index(40), false);
    const StatVector s = summarize(v);
    EXPECT_NEAR(s.variance, s.std_dev * s.std_dev,
                1e-12 * std::max(1.0, s.variance));
    EXPECT_GE(s.iqr, 0.0);
    EXPECT_GE(s.variance, 0.0);
  }
}

TEST(Summarize, MatchesIndependentOracleOn1000Vectors) {
  Rng rng(42);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto v = random_vector(rng, 4 + rng.uniform_index(60), rep % 3 == 0);
    const StatVector s = summarize(v);
    const double tol = 1e-10;
    EXPECT_NEAR(s.mean, oracle::o_mean(v), tol * std::max(1.0, std::abs(s.mean)));
    EXPECT_NEAR(s.median, oracle::o_median(v), tol);
    EXPECT_NEAR(s.sum, oracle::o_sum(v), tol * std::max(1.0, std::abs(s.sum)));
    EXPECT_NEAR(s.std_dev, oracle::o_stddev(v), tol);
    EXPECT_NEAR(s.variance, oracle::o_variance(v), tol);
    if (!s.kurtosis_degenerate)
      EXPECT_NEAR(s.kurtosis, oracle::o_kurtosis(v),
                  tol * std::max(1.0, std::abs(s.kurtosis)));
    EXPECT_NEAR(s.iqr, oracle::o_iqr(v), tol);
  }
}

TEST(Summarize, NormalDrawsMatchTheory) {
  Rng rng(7);
  std::vector<double> v(100000);
  for (auto& x : v) x = rng.normal();
  const StatVector s = summarize(v);
  EXPECT_NEAR(s.kurtosis, 3.0, 0.1);
  EXPECT_NEAR(s.iqr, 1.3489795003921634, 0.02);
  EXPECT_NEAR(s.mean, 0.0, 0.02);
  EXPECT_NEAR(s.std_dev, 1.0, 0.02);
}

TEST(Quantile, PlottingPositionInterpolation) {
  const std::vector<double> v = {1, 2, 3, 4, 5};
  // p_i = 0.1, 0.3, 0.5, 0.7, 0.9
  EXPECT_DOUBLE_EQ(quantile(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile(v, 0.75), 4.25);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.05), 1.0);   // below first position
  EXPECT_DOUBLE_EQ(quantile(v, 0.95), 5.0);   // above last position
}

TEST(Spearman, MonotoneIdentity) {
  const std::vector<double> x = {0.5, 1.5, 2.0, 9.0};
  EXPECT_DOUBLE_EQ(spearman(x, x), 1.0);
}

TEST(Spearman, WorkedExampleEq3) {
  const std::vector<double> x = {1, 2, 3};
  const std::vector<double> y = {3, 1, 2};
  EXPECT_NEAR(spearman(x, y), -0.5, 1e-15);
}

TEST(Spearman, ConstantInputIsUndefined) {
  const std::vector<double> x = {1, 1, 1, 1};
  const std::vector<double> y = {1, 2, 3, 4};
  EXPECT_THROW(
      {
        try {
          spearman(x, y);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::UndefinedCorrelation);
          throw;
        }
      },
      Error);
}

TEST(Spearman, MatchesRankPearsonOracleWithTies) {
  Rng rng(1234);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 3 + rng.uniform_index(50);
    const auto x = random_vector(rng, n, true);
    const auto y = random_vector(rng, n, true);
    double expected;
    try {
      expected = oracle::o_spearman(x, y);
    } catch (...) {
      continue;
    }
    if (std::isnan(expected)) continue;  // constant vector drawn
    EXPECT_NEAR(spearman(x, y), expected, 1e-12);
  }
}

TEST(Spearman, TieFreeMatchesClosedForm) {
  Rng rng(99);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 3 + rng.uniform_index(30);
    const auto x = random_vector(rng, n, false);
    const auto y = random_vector(rng, n, false);
    EXPECT_NEAR(spearman(x, y), oracle::o_spearman_distinct(x, y), 1e-12);
  }
}

TEST(Spearman, RankInvarianceUnderMonotoneMaps) {
  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 4 + rng.uniform_index(30);
    const auto x = random_vector(rng, n, false);
    const auto y = random_vector(rng, n, false);
    const double base = spearman(x, y);
    std::vector<double> fx(n), gy(n);
    for (std::size_t i = 0; i < n; ++i) {
      fx[i] = std::exp(x[i]);
      gy[i] = 3.0 * y[i] + 11.0;
    }
    EXPECT_NEAR(spearman(fx, gy), base, 1e-12);
  }
}

TEST(Spearman, Antisymmetry) {
  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 4 + rng.uniform_index(30);
    const auto x = random_vector(rng, n, rep % 2 == 0);
    const auto y = random_vector(rng, n, rep % 2 == 0);
    std::vector<double> ny(n);
    for (std::size_t i = 0; i < n; ++i) ny[i] = -y[i];
    double rho;
    try {
      rho = spearman(x, y);
    } catch (const Error&) {
      continue;
    }
    EXPECT_NEAR(spearman(x, ny), -rho, 1e-12);
  }
}

TEST(Pearson, FitRecoverExactLines) {
  const std::vector<double> x = {60, 70, 80, 90, 100};
  std::vector<double> y = x;
  LinearFit f = pearson_fit(x, y);
  EXPECT_NEAR(f.r, 1.0, 1e-15);
  EXPECT_NEAR(f.slope, 1.0, 1e-15);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.0 * x[i] - 50.0;
  f = pearson_fit(x, y);
  EXPECT_NEAR(f.r, 1.0, 1e-15);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, -50.0, 1e-9);
}
