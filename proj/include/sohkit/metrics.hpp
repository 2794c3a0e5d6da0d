#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sohkit/error.hpp"
#include "sohkit/stats.hpp"

namespace sohkit {

struct ErrorMetrics {
  double rmspe = 0.0;  // percent
  double mpe = 0.0;    // percent
};

// RMSPE = sqrt( (1/c) sum (y_pred/y_exp - 1)^2 ) * 100%
// MPE   = (100%/c) sum |y_pred/y_exp - 1|
// over the c characterization cycles of one cell.
inline ErrorMetrics compute_metrics(std::span<const double> y_pred,
                                    std::span<const double> y_exp) {
  if (y_pred.size() != y_exp.size())
    raise(ErrorCode::DimensionMismatch, "compute_metrics: length mismatch");
  if (y_pred.empty())
    raise(ErrorCode::InsufficientData, "compute_metrics: no cycles");
  double sq = 0.0, ab = 0.0;
  for (std::size_t j = 0; j < y_pred.size(); ++j) {
    if (y_exp[j] == 0.0)
      raise(ErrorCode::InvalidNominal, "compute_metrics: expected SOH is zero");
    const double e = y_pred[j] / y_exp[j] - 1.0;
    sq += e * e;
    ab += std::abs(e);
  }
  const auto c = static_cast<double>(y_pred.size());
  return {std::sqrt(sq / c) * 100.0, ab / c * 100.0};
}

// Predicted-vs-expected trace for one test cell.
struct CyclePrediction {
  long cycle_index = 0;
  double y_exp = 0.0;
  double y_pred = 0.0;
  double sigma_pred = 0.0;
};

struct CellErrorReport {
  std::string cell_id;
  double rmspe = 0.0;
  double mpe = 0.0;
  std::vector<CyclePrediction> per_cycle;
};

// Five-number boxplot summary with whiskers at the most extreme data inside
// 1.5*IQR beyond the quartiles; points outside are listed as outliers.
struct BoxplotStats {
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
};

inline BoxplotStats boxplot_stats(std::span<const double> values) {
  if (values.empty())
    raise(ErrorCode::InsufficientData, "boxplot of empty data");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  BoxplotStats b;
  b.q25 = quantile_sorted(sorted, 0.25);
  b.median = quantile_sorted(sorted, 0.5);
  b.q75 = quantile_sorted(sorted, 0.75);
  const double iqr = b.q75 - b.q25;
  const double lo_fence = b.q25 - 1.5 * iqr;
  const double hi_fence = b.q75 + 1.5 * iqr;
  b.whisker_low = sorted.back();
  b.whisker_high = sorted.front();
  for (double v : sorted) {
    if (v < lo_fence || v > hi_fence) {
      b.outliers.push_back(v);
    } else {
      b.whisker_low = std::min(b.whisker_low, v);
      b.whisker_high = std::max(b.whisker_high, v);
    }
  }
  return b;
}

inline double median_of(std::span<const double> values) {
  if (values.empty()) raise(ErrorCode::InsufficientData, "median of empty data");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return (n % 2 == 1) ? sorted[n / 2]
                      : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

inline double mean_of(std::span<const double> values) {
  if (values.empty()) raise(ErrorCode::InsufficientData, "mean of empty data");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

}  // namespace sohkit
