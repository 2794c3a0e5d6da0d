#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sohkit/error.hpp"

namespace sohkit {

// The seven summary statistics applied to a voltage or current window.
// Definitions are fixed so that every consumer (feature tables, tests,
// serialized artifacts) agrees bit for bit:
//   - std_dev / variance use the sample divisor (L - 1)
//   - kurtosis is the raw (non-excess) biased estimator m4 / m2^2 with
//     population moments mk = (1/L) sum (x - mean)^k; 3 for a normal
//   - iqr = q75 - q25 with quantiles interpolated on plotting positions
//     p_i = (i - 0.5) / L
struct StatVector {
  double mean = 0.0;
  double median = 0.0;
  double sum = 0.0;
  double std_dev = 0.0;
  double variance = 0.0;
  double kurtosis = 0.0;
  double iqr = 0.0;
  // All values identical (m2 == 0): kurtosis is undefined and set to NaN.
  bool kurtosis_degenerate = false;

  static constexpr std::size_t kCount = 7;

  double operator[](std::size_t i) const {
    switch (i) {
      case 0: return mean;
      case 1: return median;
      case 2: return sum;
      case 3: return std_dev;
      case 4: return variance;
      case 5: return kurtosis;
      case 6: return iqr;
    }
    raise(ErrorCode::DimensionMismatch, "StatVector index out of range");
  }
};

inline const std::vector<std::string>& stat_names() {
  static const std::vector<std::string> names = {
      "mean", "median", "sum", "std_dev", "variance", "kurtosis", "iqr"};
  return names;
}

// Quantile by linear interpolation on plotting positions p_i = (i - 0.5) / L
// over the sorted values; clamps to the extremes outside [p_1, p_L].
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 0) raise(ErrorCode::InsufficientData, "quantile of empty range");
  if (n == 1) return sorted[0];
  const double lp = (p * n) - 0.5;  // fractional index: p_i = (i - 0.5)/n -> i-1 = p*n - 0.5
  if (lp <= 0.0) return sorted[0];
  if (lp >= static_cast<double>(n - 1)) return sorted[n - 1];
  const auto lo = static_cast<std::size_t>(lp);
  const double frac = lp - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::span<const double> values, double p) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, p);
}

inline StatVector summarize(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 4)
    raise(ErrorCode::InsufficientData,
          "summarize needs at least 4 values, got " + std::to_string(n));
  for (double v : values)
    if (!std::isfinite(v))
      raise(ErrorCode::MalformedCurve, "summarize: non-finite value");

  StatVector s;
  s.sum = std::accumulate(values.begin(), values.end(), 0.0);
  s.mean = s.sum / static_cast<double>(n);

  double m2 = 0.0, m4 = 0.0, ss = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    const double d2 = d * d;
    ss += d2;
    m2 += d2;
    m4 += d2 * d2;
  }
  s.variance = ss / static_cast<double>(n - 1);
  s.std_dev = std::sqrt(s.variance);
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  if (m2 == 0.0) {
    s.kurtosis = std::numeric_limits<double>::quiet_NaN();
    s.kurtosis_degenerate = true;
  } else {
    s.kurtosis = m4 / (m2 * m2);
  }

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.median = (n % 2 == 1)
                 ? sorted[n / 2]
                 : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  return s;
}

// Pearson correlation plus the least-squares line through (x, y).
struct LinearFit {
  double r = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
};

inline LinearFit pearson_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    raise(ErrorCode::DimensionMismatch, "pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 3)
    raise(ErrorCode::InsufficientData, "pearson needs at least 3 pairs");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    raise(ErrorCode::UndefinedCorrelation, "pearson: zero variance input");
  LinearFit f;
  f.r = sxy / std::sqrt(sxx * syy);
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  return pearson_fit(x, y).r;
}

// Fractional (average) ranks, 1-based. Tied values share the mean of the
// ranks they span.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

// Spearman rank correlation with average ranks for ties. With distinct
// values this equals 1 - 6*sum(d^2)/(N(N^2-1)); with ties it is the Pearson
// correlation of the rank vectors, to which that formula reduces tie-free.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    raise(ErrorCode::DimensionMismatch, "spearman: length mismatch");
  if (x.size() < 3)
    raise(ErrorCode::InsufficientData, "spearman needs at least 3 pairs");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  return pearson(rx, ry);
}

}  // namespace sohkit
