#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "sohkit/error.hpp"
#include "sohkit/optimizer.hpp"
#include "sohkit/random.hpp"

namespace sohkit {

// ---------------------------------------------------------------------------
// Hyperparameters and kernel
// ---------------------------------------------------------------------------

// Matern-5/2 kernel with automatic relevance determination: one length
// scale per input dimension, plus signal variance, observation noise
// variance and the coefficient of the constant basis H = 1.
struct GPRHyperparams {
  Eigen::VectorXd length_scales;   // xi_d > 0
  double signal_variance = 1.0;    // sigma_f^2 > 0
  double noise_variance = 0.1;     // sigma_n^2 > 0
  double basis_coefficient = 0.0;  // beta

  void validate(Eigen::Index dims) const {
    if (length_scales.size() != dims)
      raise(ErrorCode::DimensionMismatch,
            "length_scales has " + std::to_string(length_scales.size()) +
                " entries for " + std::to_string(dims) + " feature dims");
    for (Eigen::Index d = 0; d < length_scales.size(); ++d)
      if (!(length_scales[d] > 0.0))
        raise(ErrorCode::InvalidHyperparameter, "length scale must be > 0");
    if (!(signal_variance > 0.0))
      raise(ErrorCode::InvalidHyperparameter, "signal variance must be > 0");
    if (!(noise_variance > 0.0))
      raise(ErrorCode::InvalidHyperparameter, "noise variance must be > 0");
  }
};

namespace detail {

inline constexpr double kSqrt5 = 2.23606797749978969640917366873;

// Scaled distance r with r^2 = sum_d (x_d - x'_d)^2 / xi_d^2.
inline double scaled_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                              const Eigen::VectorXd& xi) {
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double z = (a[d] - b[d]) / xi[d];
    r2 += z * z;
  }
  return std::sqrt(r2);
}

inline double matern52_of_r(double r, double sf2) {
  return sf2 * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r * r) * std::exp(-kSqrt5 * r);
}

}  // namespace detail

// k(x, x') = sigma_f^2 (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r), the nu = 5/2
// closed form with per-dimension length scales.
inline double matern52(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                       const GPRHyperparams& hp) {
  if (x.size() != x_prime.size())
    raise(ErrorCode::DimensionMismatch, "matern52: input dimensions differ");
  hp.validate(x.size());
  const double r = detail::scaled_distance(x, x_prime, hp.length_scales);
  return detail::matern52_of_r(r, hp.signal_variance);
}

// Symmetric kernel matrix; optionally exposes the scaled distances and
// exp(-sqrt5 R) terms the gradient reuses.
inline Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X,
                                     const GPRHyperparams& hp,
                                     Eigen::MatrixXd* scaled_r = nullptr,
                                     Eigen::MatrixXd* exp_term = nullptr) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  if (scaled_r) scaled_r->resize(n, n);
  if (exp_term) exp_term->resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      double r2 = 0.0;
      for (Eigen::Index d = 0; d < X.cols(); ++d) {
        const double z = (X(i, d) - X(j, d)) / hp.length_scales[d];
        r2 += z * z;
      }
      const double r = std::sqrt(r2);
      const double e = std::exp(-detail::kSqrt5 * r);
      const double k = hp.signal_variance *
                       (1.0 + detail::kSqrt5 * r + (5.0 / 3.0) * r2) * e;
      K(i, j) = K(j, i) = k;
      if (scaled_r) (*scaled_r)(i, j) = (*scaled_r)(j, i) = r;
      if (exp_term) (*exp_term)(i, j) = (*exp_term)(j, i) = e;
    }
  }
  return K;
}

// ---------------------------------------------------------------------------
// Factorization with jitter ladder
// ---------------------------------------------------------------------------

struct CholeskyResult {
  Eigen::MatrixXd lower;
  double jitter = 0.0;  // diagonal boost that was needed, 0 in the clean case
};

// Factori­zes A = L L^T, escalating jitter 1e-10 * mean(diag) by x10 up to 3
// retries before giving up.
inline CholeskyResult robust_cholesky(const Eigen::MatrixXd& A) {
  const Eigen::Index n = A.rows();
  double jitter = 0.0;
  const double base = 1e-10 * (A.trace() / static_cast<double>(n));
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Eigen::MatrixXd Aj = A;
    if (jitter > 0.0) Aj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(Aj);
    if (llt.info() == Eigen::Success) {
      return {Eigen::MatrixXd(llt.matrixL()), jitter};
    }
    jitter = (jitter == 0.0) ? base : jitter * 10.0;
  }
  raise(ErrorCode::NotPositiveDefinite,
        "covariance matrix not positive definite after jitter escalation");
}

// ---------------------------------------------------------------------------
// Log marginal likelihood
// ---------------------------------------------------------------------------

struct LmlResult {
  double value = 0.0;
  // d/d log(xi_1..d), then d/d log(sigma_f^2), then d/d log(sigma_n^2).
  Eigen::VectorXd gradient;
  double beta = 0.0;  // profiled basis coefficient
};

// L = -1/2 log det(A) - 1/2 (y - H beta)' A^{-1} (y - H beta) - N/2 log 2pi
// with A = K + sigma_n^2 I and beta profiled by generalized least squares
// (exact: the gradient of the profiled objective equals the fixed-beta
// gradient because dL/dbeta = 0 at the GLS solution).
inline LmlResult log_marginal_likelihood(const GPRHyperparams& hp,
                                         const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index dims = X.cols();
  if (n < 1) raise(ErrorCode::InsufficientData, "need at least one row");
  if (y.size() != n)
    raise(ErrorCode::DimensionMismatch, "y length does not match X rows");
  hp.validate(dims);

  Eigen::MatrixXd R, E;
  Eigen::MatrixXd A = kernel_matrix(X, hp, &R, &E);
  const Eigen::MatrixXd K = A;  // kernel part, before the noise diagonal
  A.diagonal().array() += hp.noise_variance;
  const CholeskyResult chol = robust_cholesky(A);
  const auto& L = chol.lower;

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd Ainv_ones = L.transpose().triangularView<Eigen::Upper>().solve(
      L.triangularView<Eigen::Lower>().solve(ones));
  const Eigen::VectorXd Ainv_y = L.transpose().triangularView<Eigen::Upper>().solve(
      L.triangularView<Eigen::Lower>().solve(y));
  const double denom = ones.dot(Ainv_ones);
  const double beta = ones.dot(Ainv_y) / denom;
  const Eigen::VectorXd resid = y.array() - beta;
  const Eigen::VectorXd alpha = Ainv_y - beta * Ainv_ones;  // A^{-1} resid

  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(L(i, i));
  log_det *= 2.0;

  LmlResult out;
  out.beta = beta;
  out.value = -0.5 * log_det - 0.5 * resid.dot(alpha) -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  // Gradient: 1/2 tr((alpha alpha' - A^{-1}) dA/dtheta) per log-parameter.
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(n, n);
  L.triangularView<Eigen::Lower>().solveInPlace(W);
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(W);  // W = A^{-1}
  const Eigen::MatrixXd M = alpha * alpha.transpose() - W;

  out.gradient.resize(dims + 2);
  // dK/dlog xi_d = sf2 * (5/3)(1 + sqrt5 r) exp(-sqrt5 r) * delta_d^2 / xi_d^2.
  // P = M .* (that common factor); the per-dimension contraction
  // sum_ij P_ij (x_id - x_jd)^2 expands to 2 q'(P 1) - 2 x_d'(P x_d).
  const Eigen::MatrixXd P =
      (M.array() * E.array() * (1.0 + detail::kSqrt5 * R.array()) *
       ((5.0 / 3.0) * hp.signal_variance))
          .matrix();
  const Eigen::VectorXd P_row_sums = P * ones;
  for (Eigen::Index d = 0; d < dims; ++d) {
    const Eigen::VectorXd xd = X.col(d);
    const Eigen::VectorXd q = xd.array().square();
    const double contraction = 2.0 * q.dot(P_row_sums) - 2.0 * xd.dot(P * xd);
    out.gradient[d] =
        0.5 * contraction / (hp.length_scales[d] * hp.length_scales[d]);
  }
  out.gradient[dims] = 0.5 * M.cwiseProduct(K).sum();         // d/dlog sf2
  out.gradient[dims + 1] = 0.5 * hp.noise_variance * M.trace();  // d/dlog sn2
  return out;
}

// ---------------------------------------------------------------------------
// Fitted model
// ---------------------------------------------------------------------------

// Immutable after fitting: hyperparameters, retained training data, the
// lower-triangular factor of K + sigma_n^2 I and the precomputed solve of
// the centered targets.
struct GPRModel {
  GPRHyperparams hyperparams;
  Eigen::MatrixXd train_inputs;
  Eigen::VectorXd train_targets;
  Eigen::MatrixXd chol_lower;
  Eigen::VectorXd alpha;  // (K + sn2 I)^{-1} (y - H beta)
  double jitter = 0.0;
  double log_marginal = -std::numeric_limits<double>::infinity();

  Eigen::Index dims() const { return train_inputs.cols(); }
  Eigen::Index size() const { return train_inputs.rows(); }
};

struct FitOptions {
  int starts = 4;  // 1 heuristic + seeded log-uniform perturbations
  std::uint64_t seed = 0;
  BfgsOptions bfgs{};
  double scale_bound_low = 1e-6;   // bounds on every xi, sf2, sn2
  double scale_bound_high = 1e6;
  bool scalar_length_scale = false;  // tie all dimensions to one xi
};

namespace detail {

// Packs hyperparameters into the optimizer's log-coordinate vector.
// Scalar mode collapses the length scales into one coordinate whose
// gradient is the sum over dimensions.
inline Eigen::VectorXd pack_log(const GPRHyperparams& hp, bool scalar) {
  const Eigen::Index d = hp.length_scales.size();
  Eigen::VectorXd v(scalar ? 3 : d + 2);
  if (scalar) {
    v[0] = std::log(hp.length_scales[0]);
    v[1] = std::log(hp.signal_variance);
    v[2] = std::log(hp.noise_variance);
  } else {
    for (Eigen::Index i = 0; i < d; ++i) v[i] = std::log(hp.length_scales[i]);
    v[d] = std::log(hp.signal_variance);
    v[d + 1] = std::log(hp.noise_variance);
  }
  return v;
}

inline GPRHyperparams unpack_log(const Eigen::VectorXd& v, Eigen::Index dims,
                                 bool scalar) {
  GPRHyperparams hp;
  hp.length_scales.resize(dims);
  if (scalar) {
    hp.length_scales.setConstant(std::exp(v[0]));
    hp.signal_variance = std::exp(v[1]);
    hp.noise_variance = std::exp(v[2]);
  } else {
    for (Eigen::Index i = 0; i < dims; ++i) hp.length_scales[i] = std::exp(v[i]);
    hp.signal_variance = std::exp(v[dims]);
    hp.noise_variance = std::exp(v[dims + 1]);
  }
  return hp;
}

}  // namespace detail

// Completes a model at fixed hyperparameters: factorization, profiled beta,
// alpha. Shared by fit() and deserialization.
inline GPRModel finalize_model(const GPRHyperparams& hp, Eigen::MatrixXd X,
                               Eigen::VectorXd y) {
  GPRModel model;
  model.hyperparams = hp;
  Eigen::MatrixXd A = kernel_matrix(X, hp);
  A.diagonal().array() += hp.noise_variance;
  CholeskyResult chol = robust_cholesky(A);
  const auto& L = chol.lower;
  const Eigen::Index n = X.rows();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd Ainv_ones = L.transpose().triangularView<Eigen::Upper>().solve(
      L.triangularView<Eigen::Lower>().solve(ones));
  const Eigen::VectorXd Ainv_y = L.transpose().triangularView<Eigen::Upper>().solve(
      L.triangularView<Eigen::Lower>().solve(y));
  const double beta = ones.dot(Ainv_y) / ones.dot(Ainv_ones);
  model.hyperparams.basis_coefficient = beta;
  model.alpha = Ainv_y - beta * Ainv_ones;
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(L(i, i));
  const Eigen::VectorXd resid = y.array() - beta;
  model.log_marginal = -log_det - 0.5 * resid.dot(model.alpha) -
                       0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  model.chol_lower = std::move(chol.lower);
  model.jitter = chol.jitter;
  model.train_inputs = std::move(X);
  model.train_targets = std::move(y);
  return model;
}

// Multi-start quasi-Newton ascent of the log marginal likelihood over
// log-hyperparameters. Start (a) uses per-dimension standard deviations of X
// and the variance of y; the remaining starts perturb it log-uniformly
// within +-1 decade, seeded. Deterministic for fixed (data, seed, options).
inline GPRModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const FitOptions& opts = {}) {
  const Eigen::Index n = X.rows();
  const Eigen::Index dims = X.cols();
  if (n < 2) raise(ErrorCode::InsufficientData, "fit needs at least 2 rows");
  if (y.size() != n)
    raise(ErrorCode::DimensionMismatch, "y length does not match X rows");
  if (!X.allFinite() || !y.allFinite())
    raise(ErrorCode::FitFailure, "fit: non-finite training data");
  bool any_distinct = false;
  for (Eigen::Index i = 1; i < n && !any_distinct; ++i)
    any_distinct = (X.row(i).array() != X.row(0).array()).any();
  if (!any_distinct)
    raise(ErrorCode::InsufficientData, "fit needs at least 2 distinct rows");

  const double lo = std::log(opts.scale_bound_low);
  const double hi = std::log(opts.scale_bound_high);
  auto clamp_log = [&](double v) { return std::min(std::max(v, lo), hi); };

  // Heuristic start.
  const double y_mean = y.mean();
  const double y_var = (n > 1) ? (y.array() - y_mean).square().sum() /
                                     static_cast<double>(n - 1)
                               : 1.0;
  GPRHyperparams hp0;
  hp0.length_scales.resize(dims);
  for (Eigen::Index d = 0; d < dims; ++d) {
    const double mean = X.col(d).mean();
    const double sd = std::sqrt((X.col(d).array() - mean).square().sum() /
                                static_cast<double>(std::max<Eigen::Index>(n - 1, 1)));
    hp0.length_scales[d] = sd > 0.0 ? sd : 1.0;
  }
  hp0.signal_variance = y_var > 0.0 ? y_var : 1.0;
  hp0.noise_variance = 0.1 * (y_var > 0.0 ? y_var : 1.0);

  const bool scalar = opts.scalar_length_scale;
  Eigen::VectorXd base = detail::pack_log(hp0, scalar);
  for (Eigen::Index i = 0; i < base.size(); ++i) base[i] = clamp_log(base[i]);
  const Eigen::VectorXd lower = Eigen::VectorXd::Constant(base.size(), lo);
  const Eigen::VectorXd upper = Eigen::VectorXd::Constant(base.size(), hi);

  auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) -> double {
    const GPRHyperparams hp = detail::unpack_log(v, dims, scalar);
    LmlResult lml;
    try {
      lml = log_marginal_likelihood(hp, X, y);
    } catch (const Error&) {
      grad.setZero(v.size());
      return std::numeric_limits<double>::infinity();
    }
    if (scalar) {
      grad.resize(3);
      grad[0] = -lml.gradient.head(dims).sum();
      grad[1] = -lml.gradient[dims];
      grad[2] = -lml.gradient[dims + 1];
    } else {
      grad = -lml.gradient;
    }
    return -lml.value;
  };

  double best_value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  std::vector<std::string> failures;
  const double decade = std::log(10.0);
  for (int s = 0; s < std::max(opts.starts, 1); ++s) {
    Eigen::VectorXd x0 = base;
    if (s > 0) {
      Rng rng(mix_seed(opts.seed, static_cast<std::uint64_t>(s)));
      for (Eigen::Index i = 0; i < x0.size(); ++i)
        x0[i] = clamp_log(x0[i] + rng.uniform(-decade, decade));
    }
    const BfgsResult res = bfgs_minimize(objective, x0, lower, upper, opts.bfgs);
    if (std::isfinite(res.value) && res.value < best_value) {
      best_value = res.value;
      best_x = res.x;
    } else if (!std::isfinite(res.value)) {
      failures.push_back("start " + std::to_string(s) + ": non-finite likelihood");
    }
  }
  if (!best_x.size()) {
    std::string diag;
    for (const auto& f : failures) diag += (diag.empty() ? "" : "; ") + f;
    raise(ErrorCode::FitFailure, "no start produced a finite likelihood (" + diag + ")");
  }
  return finalize_model(detail::unpack_log(best_x, dims, scalar), X, y);
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

struct PredictOptions {
  // Latent (health-state) uncertainty by default; switch on to add the
  // observation noise variance to the predictive variance.
  bool include_observation_noise = false;
};

struct GPRPrediction {
  double mean = 0.0;
  double std_dev = 0.0;
};

inline GPRPrediction predict(const GPRModel& model, const Eigen::VectorXd& x_star,
                             const PredictOptions& opts = {}) {
  if (x_star.size() != model.dims())
    raise(ErrorCode::DimensionMismatch,
          "query has " + std::to_string(x_star.size()) + " dims, model has " +
              std::to_string(model.dims()));
  const Eigen::Index n = model.size();
  Eigen::VectorXd k_star(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = detail::scaled_distance(
        x_star, model.train_inputs.row(i).transpose(), model.hyperparams.length_scales);
    k_star[i] = detail::matern52_of_r(r, model.hyperparams.signal_variance);
  }
  GPRPrediction out;
  out.mean = model.hyperparams.basis_coefficient + k_star.dot(model.alpha);
  const Eigen::VectorXd v =
      model.chol_lower.triangularView<Eigen::Lower>().solve(k_star);
  double var = model.hyperparams.signal_variance - v.squaredNorm();
  if (opts.include_observation_noise) var += model.hyperparams.noise_variance;
  out.std_dev = std::sqrt(std::max(var, 0.0));
  return out;
}

}  // namespace sohkit
