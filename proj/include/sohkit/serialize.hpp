#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sohkit/ensemble.hpp"
#include "sohkit/error.hpp"
#include "sohkit/experiment.hpp"
#include "sohkit/features.hpp"
#include "sohkit/gpr.hpp"
#include "sohkit/io.hpp"

namespace sohkit {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

// JSON doubles are emitted in shortest round-trip form by the library, so
// serialize -> parse -> serialize is byte-stable and values survive exactly.

// ---------------------------------------------------------------------------
// GPR model
// ---------------------------------------------------------------------------

inline Json model_to_json(const GPRModel& model) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["length_scales"] = std::vector<double>(
      model.hyperparams.length_scales.data(),
      model.hyperparams.length_scales.data() + model.hyperparams.length_scales.size());
  j["signal_variance"] = model.hyperparams.signal_variance;
  j["noise_variance"] = model.hyperparams.noise_variance;
  j["basis_coefficient"] = model.hyperparams.basis_coefficient;
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < model.train_inputs.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index d = 0; d < model.train_inputs.cols(); ++d)
      row.push_back(model.train_inputs(i, d));
    rows.push_back(std::move(row));
  }
  j["train_inputs"] = std::move(rows);
  j["train_targets"] = std::vector<double>(
      model.train_targets.data(),
      model.train_targets.data() + model.train_targets.size());
  return j;
}

inline GPRModel model_from_json(const Json& j) {
  if (!j.contains("format_version") || j.at("format_version").get<int>() != kFormatVersion)
    raise(ErrorCode::IoError, "model: unsupported format version");
  GPRHyperparams hp;
  const auto scales = j.at("length_scales").get<std::vector<double>>();
  hp.length_scales =
      Eigen::Map<const Eigen::VectorXd>(scales.data(),
                                        static_cast<Eigen::Index>(scales.size()));
  hp.signal_variance = j.at("signal_variance").get<double>();
  hp.noise_variance = j.at("noise_variance").get<double>();
  const auto& rows = j.at("train_inputs");
  const auto targets = j.at("train_targets").get<std::vector<double>>();
  if (rows.size() != targets.size())
    raise(ErrorCode::IoError, "model: inputs/targets length mismatch");
  Eigen::MatrixXd X(rows.size(), scales.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto row = rows[i].get<std::vector<double>>();
    if (row.size() != scales.size())
      raise(ErrorCode::IoError, "model: ragged train_inputs");
    for (std::size_t d = 0; d < row.size(); ++d)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = row[d];
  }
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      targets.data(), static_cast<Eigen::Index>(targets.size()));
  // The factorization and profiled beta are recomputed from the stored data;
  // identical inputs give identical results, which the stored value guards.
  GPRModel model = finalize_model(hp, std::move(X), std::move(y));
  const double stored_beta = j.at("basis_coefficient").get<double>();
  if (model.hyperparams.basis_coefficient != stored_beta)
    raise(ErrorCode::IoError, "model: stored basis coefficient does not reproduce");
  return model;
}

// ---------------------------------------------------------------------------
// Ensemble
// ---------------------------------------------------------------------------

inline Json fit_options_to_json(const FitOptions& f) {
  return Json{{"starts", f.starts},
              {"seed", f.seed},
              {"max_iterations", f.bfgs.max_iterations},
              {"gradient_tolerance", f.bfgs.gradient_tolerance},
              {"scale_bound_low", f.scale_bound_low},
              {"scale_bound_high", f.scale_bound_high},
              {"scalar_length_scale", f.scalar_length_scale}};
}

inline FitOptions fit_options_from_json(const Json& j) {
  FitOptions f;
  f.starts = j.at("starts").get<int>();
  f.seed = j.at("seed").get<std::uint64_t>();
  f.bfgs.max_iterations = j.at("max_iterations").get<int>();
  f.bfgs.gradient_tolerance = j.at("gradient_tolerance").get<double>();
  f.scale_bound_low = j.at("scale_bound_low").get<double>();
  f.scale_bound_high = j.at("scale_bound_high").get<double>();
  f.scalar_length_scale = j.at("scalar_length_scale").get<bool>();
  return f;
}

inline Json ensemble_to_json(const BaggedEnsemble& ens) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["m"] = ens.config.m;
  j["n"] = ens.config.n;
  j["master_seed"] = ens.config.master_seed;
  j["weight_epsilon"] = ens.config.weight_epsilon;
  j["fit"] = fit_options_to_json(ens.config.fit);
  j["bag_indices"] = ens.bag_indices;
  j["model_ordinals"] = ens.model_ordinals;
  j["warnings"] = ens.warnings;
  j["dims"] = ens.dims;
  Json models = Json::array();
  for (const auto& m : ens.models) models.push_back(model_to_json(m));
  j["models"] = std::move(models);
  return j;
}

inline BaggedEnsemble ensemble_from_json(const Json& j) {
  if (!j.contains("format_version") || j.at("format_version").get<int>() != kFormatVersion)
    raise(ErrorCode::IoError, "ensemble: unsupported format version");
  BaggedEnsemble ens;
  ens.config.m = j.at("m").get<std::size_t>();
  ens.config.n = j.at("n").get<std::size_t>();
  ens.config.master_seed = j.at("master_seed").get<std::uint64_t>();
  ens.config.weight_epsilon = j.at("weight_epsilon").get<double>();
  ens.config.fit = fit_options_from_json(j.at("fit"));
  ens.bag_indices = j.at("bag_indices").get<std::vector<std::vector<std::size_t>>>();
  ens.model_ordinals = j.at("model_ordinals").get<std::vector<std::size_t>>();
  ens.warnings = j.at("warnings").get<std::vector<std::string>>();
  ens.dims = j.at("dims").get<Eigen::Index>();
  for (const auto& mj : j.at("models")) ens.models.push_back(model_from_json(mj));
  return ens;
}

// ---------------------------------------------------------------------------
// Feature selection
// ---------------------------------------------------------------------------

inline Json selection_to_json(const FeatureSelection& sel,
                              const std::vector<std::string>& names) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["selected_indices"] = sel.selected_indices;
  Json rho = Json::array();
  for (std::size_t i = 0; i < sel.rho_with_response.size(); ++i) {
    Json entry;
    entry["index"] = i;
    if (i < names.size()) entry["name"] = names[i];
    if (std::isfinite(sel.rho_with_response[i]))
      entry["rho"] = sel.rho_with_response[i];
    else
      entry["rho"] = nullptr;
    rho.push_back(std::move(entry));
  }
  j["rho_with_response"] = std::move(rho);
  Json rejected = Json::array();
  for (const auto& [idx, reason] : sel.rejected)
    rejected.push_back(Json{
        {"index", idx},
        {"reason", reason == RejectionReason::LowRank ? "LOW_RANK" : "REDUNDANT"}});
  j["rejected"] = std::move(rejected);
  return j;
}

inline FeatureSelection selection_from_json(const Json& j) {
  FeatureSelection sel;
  sel.selected_indices = j.at("selected_indices").get<std::vector<std::size_t>>();
  for (const auto& entry : j.at("rho_with_response"))
    sel.rho_with_response.push_back(
        entry.at("rho").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                  : entry.at("rho").get<double>());
  for (const auto& entry : j.at("rejected"))
    sel.rejected.emplace_back(entry.at("index").get<std::size_t>(),
                              entry.at("reason").get<std::string>() == "LOW_RANK"
                                  ? RejectionReason::LowRank
                                  : RejectionReason::Redundant);
  return sel;
}

// ---------------------------------------------------------------------------
// Reports (canonical: no wall times, so equal seeds give equal bytes)
// ---------------------------------------------------------------------------

inline Json boxplot_to_json(const BoxplotStats& b) {
  return Json{{"median", b.median},           {"q25", b.q25},
              {"q75", b.q75},                 {"whisker_low", b.whisker_low},
              {"whisker_high", b.whisker_high}, {"outliers", b.outliers}};
}

inline Json experiment_report_to_json(const ExperimentReport& report) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["assessments"] = report.assessments;
  j["rmspe_median"] = report.rmspe_median;
  j["rmspe_mean"] = report.rmspe_mean;
  j["mpe_median"] = report.mpe_median;
  j["mpe_mean"] = report.mpe_mean;
  j["rmspe_boxplot"] = boxplot_to_json(report.rmspe_box);
  j["mpe_boxplot"] = boxplot_to_json(report.mpe_box);
  Json iterations = Json::array();
  for (const auto& it : report.iterations) {
    Json ji;
    ji["iteration"] = it.iteration;
    ji["train_cells"] = it.split.train_cells;
    ji["test_cells"] = it.split.test_cells;
    ji["selected_features"] = it.selected_features;
    if (!it.error.empty()) ji["error"] = it.error;
    Json cells = Json::array();
    for (const auto& cell : it.cell_reports) {
      Json jc;
      jc["cell_id"] = cell.cell_id;
      jc["rmspe"] = cell.rmspe;
      jc["mpe"] = cell.mpe;
      Json cyc = Json::array();
      for (const auto& p : cell.per_cycle)
        cyc.push_back(Json{{"cycle", p.cycle_index},
                           {"y_exp", p.y_exp},
                           {"y_pred", p.y_pred},
                           {"sigma_pred", p.sigma_pred}});
      jc["per_cycle"] = std::move(cyc);
      cells.push_back(std::move(jc));
    }
    ji["cells"] = std::move(cells);
    iterations.push_back(std::move(ji));
  }
  j["iterations"] = std::move(iterations);
  return j;
}

inline Json sweep_to_json(const SweepGrid& grid) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["m_values"] = grid.m_values;
  j["n_values"] = grid.n_values;
  Json cells = Json::array();
  for (std::size_t mi = 0; mi < grid.m_values.size(); ++mi)
    for (std::size_t ni = 0; ni < grid.n_values.size(); ++ni) {
      const SweepCell& c = grid.cells[mi][ni];
      cells.push_back(Json{{"m", grid.m_values[mi]},
                           {"n", grid.n_values[ni]},
                           {"mpe_mean", c.mpe_mean},
                           {"rmspe_mean", c.rmspe_mean},
                           {"fit_seconds_mean", c.fit_seconds_mean},
                           {"iterations", c.iterations}});
    }
  j["cells"] = std::move(cells);
  return j;
}

inline Json timing_to_json(const TimingReport& t) {
  return Json{{"format_version", kFormatVersion},
              {"total_rows", t.total_rows},
              {"baseline_rows", t.baseline_rows},
              {"baseline_fit_seconds", t.baseline_fit_seconds},
              {"baseline_predict_seconds", t.baseline_predict_seconds},
              {"bagged_fit_seconds", t.bagged_fit_seconds},
              {"bagged_predict_seconds", t.bagged_predict_seconds},
              {"bagged_aggregate_seconds", t.bagged_aggregate_seconds},
              {"bagged_fit_seconds_parallel", t.bagged_fit_seconds_parallel},
              {"fit_ratio", t.fit_ratio},
              {"predict_ratio", t.predict_ratio},
              {"frd", t.frd_value},
              {"predict_queries", t.predict_queries}};
}

// ---------------------------------------------------------------------------
// Artifact envelope: every file on disk carries provenance
// ---------------------------------------------------------------------------

inline Json wrap_artifact(const std::string& kind, std::uint64_t config_hash,
                          std::uint64_t master_seed, Json payload) {
  return Json{{"artifact", kind},
              {"format_version", kFormatVersion},
              {"config_hash", hash_hex(config_hash)},
              {"master_seed", master_seed},
              {"payload", std::move(payload)}};
}

struct ArtifactEnvelope {
  std::string kind;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  Json payload;
};

inline ArtifactEnvelope unwrap_artifact(const Json& j, const std::string& expected_kind) {
  if (!j.contains("artifact"))
    raise(ErrorCode::IoError, "file is not a pipeline artifact");
  ArtifactEnvelope env;
  env.kind = j.at("artifact").get<std::string>();
  if (env.kind != expected_kind)
    raise(ErrorCode::IoError,
          "expected a '" + expected_kind + "' artifact, found '" + env.kind + "'");
  if (j.at("format_version").get<int>() != kFormatVersion)
    raise(ErrorCode::IoError, "unsupported artifact format version");
  env.config_hash = j.at("config_hash").get<std::string>();
  env.master_seed = j.at("master_seed").get<std::uint64_t>();
  env.payload = j.at("payload");
  return env;
}

}  // namespace sohkit
