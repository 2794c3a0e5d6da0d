// Test-only reference implementations, deliberately coded independently of
// the library paths they check: slow loops, explicit inverses, brute-force
// rank counting. Nothing here is included by library headers.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// --- statistics -----------------------------------------------------------

inline double o_mean(const std::vector<double>& v) {
  long double s = 0.0L;
  for (double x : v) s += x;
  return static_cast<double>(s / v.size());
}

inline double o_sum(const std::vector<double>& v) {
  long double s = 0.0L;
  for (double x : v) s += x;
  return static_cast<double>(s);
}

inline double o_median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  const double hi = v[v.size() / 2];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + v.size() / 2 - 1, v.end());
  return 0.5 * (v[v.size() / 2 - 1] + hi);
}

inline double o_variance(const std::vector<double>& v) {
  const double m = o_mean(v);
  long double s = 0.0L;
  for (double x : v) s += (x - m) * (x - m);
  return static_cast<double>(s / (v.size() - 1));
}

inline double o_stddev(const std::vector<double>& v) {
  return std::sqrt(o_variance(v));
}

// Raw (non-excess) kurtosis with population moments.
inline double o_kurtosis(const std::vector<double>& v) {
  const double m = o_mean(v);
  long double m2 = 0.0L, m4 = 0.0L;
  for (double x : v) {
    const long double d = x - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= v.size();
  m4 /= v.size();
  return static_cast<double>(m4 / (m2 * m2));
}

// Quantile on plotting positions p_i = (i - 0.5)/L, found by explicit scan.
inline double o_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  auto pos = [n](std::size_t i) {
    return (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  };
  if (p <= pos(0)) return v.front();
  if (p >= pos(n - 1)) return v.back();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (p >= pos(i) && p <= pos(i + 1)) {
      const double t = (p - pos(i)) / (pos(i + 1) - pos(i));
      return v[i] + t * (v[i + 1] - v[i]);
    }
  }
  return v.back();
}

inline double o_iqr(const std::vector<double>& v) {
  return o_quantile(v, 0.75) - o_quantile(v, 0.25);
}

// --- correlation ----------------------------------------------------------

inline double o_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = o_mean(x), my = o_mean(y);
  long double sxy = 0.0L, sxx = 0.0L, syy = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// Average ranks by brute-force counting: rank_i = 1 + #smaller + #equal/2
// adjustment. O(n^2), no sorting.
inline std::vector<double> o_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t smaller = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++smaller;
      if (v[j] == v[i]) ++equal;
    }
    r[i] = static_cast<double>(smaller) + 0.5 * static_cast<double>(equal - 1) + 1.0;
  }
  return r;
}

inline double o_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return o_pearson(o_ranks(x), o_ranks(y));
}

// Tie-free closed form: 1 - 6 sum d^2 / (N (N^2 - 1)).
inline double o_spearman_distinct(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  const std::vector<double> rx = o_ranks(x), ry = o_ranks(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(x.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

// --- integration ----------------------------------------------------------

// Fine-grid midpoint Riemann sum of a piecewise-linear sampled signal.
inline double o_riemann(const std::vector<double>& t, const std::vector<double>& f,
                        std::size_t refine = 4096) {
  auto value_at = [&](double tau) {
    for (std::size_t i = 1; i < t.size(); ++i)
      if (tau <= t[i])
        return f[i - 1] + (f[i] - f[i - 1]) * (tau - t[i - 1]) / (t[i] - t[i - 1]);
    return f.back();
  };
  const double lo = t.front(), hi = t.back();
  const double h = (hi - lo) / static_cast<double>(refine);
  long double acc = 0.0L;
  for (std::size_t k = 0; k < refine; ++k)
    acc += value_at(lo + (static_cast<double>(k) + 0.5) * h);
  return static_cast<double>(acc * h);
}

// --- Gaussian process -----------------------------------------------------

// Posterior by explicit dense inverse: no Cholesky, no shared code with the
// library. Constant basis, beta profiled by generalized least squares.
struct NaiveGpResult {
  double mean = 0.0;
  double variance = 0.0;
  double beta = 0.0;
};

inline double o_matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& xi, double sf2) {
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double z = (a[d] - b[d]) / xi[d];
    r2 += z * z;
  }
  const double r = std::sqrt(r2);
  const double s5 = std::sqrt(5.0);
  return sf2 * (1.0 + s5 * r + 5.0 / 3.0 * r2) * std::exp(-s5 * r);
}

inline NaiveGpResult o_gp_predict(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& xi, double sf2, double sn2,
                                  const Eigen::VectorXd& x_star) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd A(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      A(i, j) = o_matern52(X.row(i).transpose(), X.row(j).transpose(), xi, sf2);
  A.diagonal().array() += sn2;
  const Eigen::MatrixXd Ainv = A.fullPivLu().inverse();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const double beta =
      (ones.transpose() * Ainv * y).value() / (ones.transpose() * Ainv * ones).value();
  const Eigen::VectorXd resid = y.array() - beta;
  Eigen::VectorXd k_star(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k_star[i] = o_matern52(x_star, X.row(i).transpose(), xi, sf2);
  NaiveGpResult out;
  out.beta = beta;
  out.mean = beta + (k_star.transpose() * Ainv * resid).value();
  out.variance = sf2 - (k_star.transpose() * Ainv * k_star).value();
  return out;
}

}  // namespace oracle
