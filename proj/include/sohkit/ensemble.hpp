#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sohkit/error.hpp"
#include "sohkit/gpr.hpp"
#include "sohkit/random.hpp"

namespace sohkit {

// ---------------------------------------------------------------------------
// Configuration and bags
// ---------------------------------------------------------------------------

struct EnsembleConfig {
  std::size_t m = 7;    // number of models
  std::size_t n = 30;   // bag sample size, drawn with replacement
  std::uint64_t master_seed = 0;
  double weight_epsilon = 1e-8;  // floor on sigma_a before inversion
  FitOptions fit;

  void validate() const {
    if (m < 1) raise(ErrorCode::ConfigError, "ensemble m must be >= 1");
    if (n < 2) raise(ErrorCode::ConfigError, "ensemble n must be >= 2");
    if (!(weight_epsilon > 0.0))
      raise(ErrorCode::ConfigError, "weight_epsilon must be > 0");
  }
};

namespace detail {

inline constexpr std::uint64_t kBagStream = 0xBA6500;
inline constexpr std::uint64_t kFitStream = 0xF17000;

}  // namespace detail

// Optimizer seed for bag `a`; the retry after a failed fit bumps `attempt`.
inline std::uint64_t bag_fit_seed(std::uint64_t master_seed, std::size_t ordinal,
                                  int attempt = 0) {
  return mix_seed(master_seed,
                  detail::kFitStream + static_cast<std::uint64_t>(attempt), ordinal);
}

// The stream for bag `a` is seeded by hash(master_seed, a) alone, so bags
// never depend on generation order or worker count.
inline std::vector<std::size_t> make_bag(std::size_t n_rows, std::size_t n,
                                         std::uint64_t master_seed,
                                         std::size_t ordinal) {
  Rng rng(mix_seed(master_seed, detail::kBagStream, ordinal));
  std::vector<std::size_t> bag(n);
  for (auto& idx : bag)
    idx = static_cast<std::size_t>(rng.uniform_index(n_rows));
  return bag;
}

// m lists of n indices drawn uniformly with replacement from [0, n_rows).
inline std::vector<std::vector<std::size_t>> make_bags(std::size_t n_rows,
                                                       const EnsembleConfig& config) {
  config.validate();
  if (n_rows < 1) raise(ErrorCode::EmptyInput, "make_bags: empty dataset");
  std::vector<std::vector<std::size_t>> bags;
  bags.reserve(config.m);
  for (std::size_t a = 0; a < config.m; ++a)
    bags.push_back(make_bag(n_rows, config.n, config.master_seed, a));
  return bags;
}

// Factor reduction of data: how much less data the ensemble trains on than
// the full set.
inline double frd(std::size_t total_rows, const EnsembleConfig& config) {
  if (config.m == 0 || config.n == 0)
    raise(ErrorCode::ConfigError, "frd: m*n must be > 0");
  return static_cast<double>(total_rows) /
         (static_cast<double>(config.m) * static_cast<double>(config.n));
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

// m independently fitted models with their bag provenance. Immutable once
// trained; safe to share across prediction workers.
struct BaggedEnsemble {
  EnsembleConfig config;
  std::vector<std::vector<std::size_t>> bag_indices;  // all m bags
  std::vector<GPRModel> models;                       // successfully fitted
  std::vector<std::size_t> model_ordinals;            // bag ordinal per model
  std::vector<std::string> warnings;                  // excluded-bag notes
  Eigen::Index dims = 0;
};

namespace detail {

inline GPRModel fit_bag(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const std::vector<std::size_t>& bag,
                        const EnsembleConfig& config, std::size_t ordinal,
                        int attempt) {
  Eigen::MatrixXd Xb(bag.size(), X.cols());
  Eigen::VectorXd yb(bag.size());
  for (std::size_t i = 0; i < bag.size(); ++i) {
    Xb.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(bag[i]));
    yb[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(bag[i])];
  }
  FitOptions opts = config.fit;
  opts.seed = bag_fit_seed(config.master_seed, ordinal, attempt);
  return fit(Xb, yb, opts);
}

}  // namespace detail

// Trains one GPR per bag. Work may be spread over `workers` threads; results
// land in per-ordinal slots so the outcome is identical for any worker
// count. A failed fit is retried once with a perturbed optimizer seed, then
// the bag is excluded with a warning; only all bags failing is an error.
inline BaggedEnsemble train_ensemble(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const EnsembleConfig& config, int workers = 1) {
  config.validate();
  const auto n_rows = static_cast<std::size_t>(X.rows());
  if (n_rows < 1) raise(ErrorCode::EmptyInput, "train_ensemble: empty dataset");
  if (y.size() != X.rows())
    raise(ErrorCode::DimensionMismatch, "train_ensemble: y length mismatch");

  BaggedEnsemble ens;
  ens.config = config;
  ens.dims = X.cols();
  ens.bag_indices = make_bags(n_rows, config);

  struct Slot {
    GPRModel model;
    bool ok = false;
    std::string note;
  };
  std::vector<Slot> slots(config.m);

  auto run_bag = [&](std::size_t a) {
    try {
      slots[a].model = detail::fit_bag(X, y, ens.bag_indices[a], config, a, 0);
      slots[a].ok = true;
    } catch (const Error& first) {
      try {
        slots[a].model = detail::fit_bag(X, y, ens.bag_indices[a], config, a, 1);
        slots[a].ok = true;
      } catch (const Error& second) {
        slots[a].note = "bag " + std::to_string(a) +
                        " excluded after retry: " + second.what();
      }
    }
  };

  if (workers <= 1 || config.m <= 1) {
    for (std::size_t a = 0; a < config.m; ++a) run_bag(a);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t a = next.fetch_add(1);
        if (a >= config.m) return;
        run_bag(a);
      }
    };
    std::vector<std::thread> pool;
    const std::size_t count =
        std::min<std::size_t>(static_cast<std::size_t>(workers), config.m);
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t a = 0; a < config.m; ++a) {
    if (slots[a].ok) {
      ens.models.push_back(std::move(slots[a].model));
      ens.model_ordinals.push_back(a);
    } else {
      ens.warnings.push_back(slots[a].note);
    }
  }
  if (ens.models.empty())
    raise(ErrorCode::FitFailure, "every bag failed to fit");
  return ens;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct ModelVote {
  double y = 0.0;      // per-model predicted SOH
  double sigma = 0.0;  // per-model predictive standard deviation
  double weight = 0.0;
};

struct Prediction {
  double y_pred = 0.0;
  double sigma_pred = 0.0;
  std::vector<ModelVote> per_model;
  std::size_t nonzero_weights = 0;  // Z
};

// Inverse-standard-deviation weighted fusion:
//   w_a = 1 / max(sigma_a, eps)
//   y_pred = sum w_a y_a / sum w_a
//   sigma_pred = sqrt( Z sum w_a (y_a - y_pred)^2 / ((Z-1) sum w_a) )
// Z counts nonzero weights. Z = 1 leaves the dispersion formula singular;
// the single model's own sigma is returned instead.
inline Prediction aggregate(const std::vector<std::pair<double, double>>& per_model,
                            double epsilon = 1e-8) {
  if (per_model.empty())
    raise(ErrorCode::NoModels, "aggregate: no model outputs");
  if (!(epsilon > 0.0))
    raise(ErrorCode::ConfigError, "aggregate: epsilon must be > 0");
  Prediction out;
  out.per_model.reserve(per_model.size());
  double sum_w = 0.0, sum_wy = 0.0;
  for (const auto& [y_a, sigma_a] : per_model) {
    ModelVote vote;
    vote.y = y_a;
    vote.sigma = sigma_a;
    vote.weight = 1.0 / std::max(sigma_a, epsilon);
    if (vote.weight != 0.0) ++out.nonzero_weights;
    sum_w += vote.weight;
    sum_wy += vote.weight * y_a;
    out.per_model.push_back(vote);
  }
  out.y_pred = sum_wy / sum_w;
  if (out.nonzero_weights <= 1) {
    out.sigma_pred = out.per_model.front().sigma;
    return out;
  }
  double dispersion = 0.0;
  for (const auto& vote : out.per_model) {
    const double d = vote.y - out.y_pred;
    dispersion += vote.weight * d * d;
  }
  const auto z = static_cast<double>(out.nonzero_weights);
  out.sigma_pred = std::sqrt(z * dispersion / ((z - 1.0) * sum_w));
  return out;
}

// Runs every model on x_star and fuses the votes; the per-model trace is
// retained for diagnostics.
inline Prediction ensemble_predict(const BaggedEnsemble& ensemble,
                                   const Eigen::VectorXd& x_star,
                                   const PredictOptions& opts = {}) {
  if (ensemble.models.empty())
    raise(ErrorCode::NoModels, "ensemble has no trained models");
  std::vector<std::pair<double, double>> votes;
  votes.reserve(ensemble.models.size());
  for (const auto& model : ensemble.models) {
    const GPRPrediction p = predict(model, x_star, opts);
    votes.emplace_back(p.mean, p.std_dev);
  }
  return aggregate(votes, ensemble.config.weight_epsilon);
}

}  // namespace sohkit
