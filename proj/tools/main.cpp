// sohkit: battery SOH estimation from charge-curve statistics with bagged
// Gaussian process regression. Stage-wise pipeline: every command reads the
// previous stage's artifact and writes its own, stamped with the config hash
// and master seed.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sohkit/config.hpp"
#include "sohkit/experiment.hpp"
#include "sohkit/serialize.hpp"
#include "sohkit/synthetic.hpp"

namespace fs = std::filesystem;
using namespace sohkit;

namespace {

// ---------------------------------------------------------------------------
// Artifact stamping
// ---------------------------------------------------------------------------

// The hash covers the mathematical configuration only: where outputs go and
// how many workers ran must not invalidate artifact chains.
std::uint64_t effective_config_hash(const PipelineConfig& config) {
  PipelineConfig c = config;
  c.output_dir.clear();
  c.workers = 1;
  return config_hash(c);
}

std::string stamp_line(const std::string& kind, const PipelineConfig& config) {
  return "# sohkit " + kind + " format_version=" + std::to_string(kFormatVersion) +
         " config_hash=" + hash_hex(effective_config_hash(config)) +
         " master_seed=" + std::to_string(config.master_seed);
}

struct CsvStamp {
  std::string kind;
  std::string config_hash;
  std::string master_seed;
};

std::optional<CsvStamp> read_stamp(const std::string& line) {
  if (line.rfind("# sohkit ", 0) != 0) return std::nullopt;
  std::istringstream in(line.substr(9));
  CsvStamp stamp;
  in >> stamp.kind;
  std::string token;
  while (in >> token) {
    if (token.rfind("config_hash=", 0) == 0) stamp.config_hash = token.substr(12);
    if (token.rfind("master_seed=", 0) == 0) stamp.master_seed = token.substr(12);
  }
  return stamp;
}

void check_input_exists(const std::string& path, const std::string& producer) {
  if (!fs::exists(path))
    raise(ErrorCode::IoError, "input '" + path + "' not found; run `sohkit " +
                                  producer + "` first (or pass the path explicitly)");
}

void verify_stamp_hash(const CsvStamp& stamp, const PipelineConfig& config,
                       const std::string& path, bool allow_mismatch) {
  const std::string expected = hash_hex(effective_config_hash(config));
  if (stamp.config_hash == expected) return;
  const std::string msg = "artifact '" + path + "' was produced under config hash " +
                          stamp.config_hash + ", current config hashes to " + expected;
  if (allow_mismatch)
    std::cerr << "warning: " << msg << " (proceeding, --allow-hash-mismatch)\n";
  else
    raise(ErrorCode::ConfigError, msg + "; pass --allow-hash-mismatch to override");
}

std::ofstream open_output(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  return out;
}

void write_json_artifact(const fs::path& path, const std::string& kind,
                         const PipelineConfig& config, Json payload) {
  auto out = open_output(path);
  out << wrap_artifact(kind, effective_config_hash(config), config.master_seed,
                       std::move(payload))
             .dump(2)
      << '\n';
  std::cout << "wrote " << path.string() << '\n';
}

Json read_json_artifact(const std::string& path, const std::string& kind,
                        const PipelineConfig& config, bool allow_mismatch) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot read '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    raise(ErrorCode::IoError, "'" + path + "' is not valid JSON: " + e.what());
  }
  const ArtifactEnvelope env = unwrap_artifact(j, kind);
  CsvStamp stamp;
  stamp.config_hash = env.config_hash;
  verify_stamp_hash(stamp, config, path, allow_mismatch);
  return env.payload;
}

// ---------------------------------------------------------------------------
// History and feature tables
// ---------------------------------------------------------------------------

void write_history(const fs::path& path, const std::vector<CellAgingHistory>& fleet,
                   const PipelineConfig& config) {
  auto out = open_output(path);
  out << stamp_line("history", config) << '\n';
  serialize_history_table(fleet, out);
  std::cout << "wrote " << path.string() << '\n';
}

std::vector<CellAgingHistory> read_history(const std::string& path,
                                           const PipelineConfig& config,
                                           bool allow_mismatch) {
  check_input_exists(path, "synth (or ingest)");
  std::ifstream in(path, std::ios::binary);
  std::string first;
  std::getline(in, first);
  if (const auto stamp = read_stamp(first))
    verify_stamp_hash(*stamp, config, path, allow_mismatch);
  in.seekg(0);
  ParseResult parsed = parse_cycling_table(in, TableSchema{});
  IngestOptions opts;
  opts.chemistry = config.dataset.chemistry;
  opts.voltage_limits = config.dataset.voltage_limits;
  opts.current_limits = config.dataset.current_limits;
  opts.q_nom = config.dataset.q_nom;
  opts.e_nom = config.dataset.e_nom;
  opts.resample_interval = resolved_window(config).sample_interval;
  return ingest_histories(std::move(parsed), opts);
}

void write_features(const fs::path& path, const std::vector<FeatureRecord>& records,
                    const WindowSpec& window, const PipelineConfig& config) {
  auto out = open_output(path);
  out << stamp_line("features", config) << '\n';
  out << "cell_id,cycle,soh";
  for (const auto& name : feature_names(window)) out << ',' << name;
  out << '\n';
  for (const auto& r : records) {
    out << r.cell_id << ',' << r.cycle_index << ',' << format_double(r.soh);
    for (double v : r.features) out << ',' << format_double(v);
    out << '\n';
  }
  std::cout << "wrote " << path.string() << " (" << records.size() << " records)\n";
}

std::vector<FeatureRecord> read_features(const std::string& path,
                                         const PipelineConfig& config,
                                         bool allow_mismatch,
                                         std::vector<std::string>* names = nullptr) {
  check_input_exists(path, "featurize");
  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::getline(in, line);
  if (const auto stamp = read_stamp(line)) {
    verify_stamp_hash(*stamp, config, path, allow_mismatch);
    std::getline(in, line);
  }
  const auto header = split_fields(line, ',');
  if (header.size() < 4 || header[0] != "cell_id")
    raise(ErrorCode::SchemaError, "'" + path + "' is not a feature table");
  if (names) names->assign(header.begin() + 3, header.end());
  std::vector<FeatureRecord> records;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_fields(line, ',');
    if (fields.size() != header.size())
      raise(ErrorCode::SchemaError, "ragged row in '" + path + "'");
    FeatureRecord r;
    r.cell_id = fields[0];
    const auto cycle = parse_long(fields[1]);
    const auto soh = parse_double(fields[2]);
    if (!cycle || !soh)
      raise(ErrorCode::SchemaError, "bad numeric field in '" + path + "'");
    r.cycle_index = *cycle;
    r.soh = *soh;
    for (std::size_t i = 3; i < fields.size(); ++i) {
      const auto v = parse_double(fields[i]);
      r.features.push_back(v ? *v : std::numeric_limits<double>::quiet_NaN());
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) raise(ErrorCode::EmptyInput, "'" + path + "' has no records");
  return records;
}

ExperimentConfig experiment_config(const PipelineConfig& config) {
  ExperimentConfig cfg;
  cfg.window = resolved_window(config);
  cfg.select_k = config.selection.k;
  cfg.redundancy = config.selection.redundancy;
  cfg.ensemble = config.ensemble;
  cfg.split_fraction = config.eval.split_fraction;
  cfg.iterations = config.eval.iterations;
  cfg.workers = config.workers;
  cfg.predict.include_observation_noise = config.predictive_noise;
  return cfg;
}

Eigen::MatrixXd to_eigen(const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd X(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return X;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_synth(const PipelineConfig& config) {
  SyntheticFleetSpec spec = config.synth;
  spec.seed = mix_seed(config.master_seed, 0x5F1E);
  const auto fleet = generate_synthetic_fleet(spec);
  write_history(fs::path(config.output_dir) / "history.csv", fleet, config);
  std::size_t rows = 0;
  for (const auto& h : fleet) rows += h.cycles.size();
  std::cout << "generated " << fleet.size() << " cells, " << rows
            << " characterization cycles\n";
  return 0;
}

int cmd_ingest(const PipelineConfig& config, const std::string& input) {
  const std::string path = input.empty() ? config.dataset.path : input;
  if (path.empty())
    raise(ErrorCode::ConfigError, "no input: pass --in or set dataset.path");
  check_input_exists(path, "ingest (external input)");
  std::ifstream in(path, std::ios::binary);
  ParseResult parsed = parse_cycling_table(in, config.dataset.schema);
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << '\n';
  IngestOptions opts;
  opts.chemistry = config.dataset.chemistry;
  opts.voltage_limits = config.dataset.voltage_limits;
  opts.current_limits = config.dataset.current_limits;
  opts.anchor = config.dataset.anchor;
  opts.q_nom = config.dataset.q_nom;
  opts.e_nom = config.dataset.e_nom;
  opts.resample_interval = resolved_window(config).sample_interval;
  const std::size_t rejected = parsed.rejected_rows;
  const std::size_t parsed_rows = parsed.parsed_rows;
  const auto fleet = ingest_histories(std::move(parsed), opts);
  write_history(fs::path(config.output_dir) / "history.csv", fleet, config);
  std::cout << "ingested " << fleet.size() << " cells (" << parsed_rows
            << " rows parsed, " << rejected << " rejected)\n";
  return 0;
}

int cmd_featurize(const PipelineConfig& config, const std::string& history_path,
                  bool allow_mismatch) {
  const auto fleet = read_history(history_path, config, allow_mismatch);
  std::vector<std::string> warnings;
  const WindowSpec window = resolved_window(config);
  const auto records = featurize(fleet, window, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  write_features(fs::path(config.output_dir) / "features.csv", records, window, config);
  return 0;
}

int cmd_select(const PipelineConfig& config, const std::string& features_path,
               bool allow_mismatch) {
  std::vector<std::string> names;
  const auto records = read_features(features_path, config, allow_mismatch, &names);
  const FeatureSelection sel =
      select_features(records, config.selection.k, config.selection.redundancy);
  write_json_artifact(fs::path(config.output_dir) / "selection.json", "selection",
                      config, selection_to_json(sel, names));
  std::cout << "selected " << sel.selected_indices.size() << " of " << names.size()
            << " features\n";
  return 0;
}

int cmd_train(const PipelineConfig& config, const std::string& features_path,
              const std::string& selection_path, bool allow_mismatch) {
  const auto records = read_features(features_path, config, allow_mismatch);
  check_input_exists(selection_path, "select");
  const FeatureSelection sel = selection_from_json(
      read_json_artifact(selection_path, "selection", config, allow_mismatch));
  auto [rows, y_vec] = to_matrix(records, sel.selected_indices);
  const Eigen::MatrixXd X = to_eigen(rows);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      y_vec.data(), static_cast<Eigen::Index>(y_vec.size()));
  EnsembleConfig ens_config = config.ensemble;
  ens_config.master_seed = mix_seed(config.master_seed, 0x7EA19);
  const BaggedEnsemble ens = train_ensemble(X, y, ens_config, config.workers);
  for (const auto& w : ens.warnings) std::cerr << "warning: " << w << '\n';
  Json payload;
  payload["ensemble"] = ensemble_to_json(ens);
  payload["selected_indices"] = sel.selected_indices;
  write_json_artifact(fs::path(config.output_dir) / "ensemble.json", "ensemble",
                      config, std::move(payload));
  std::cout << "trained " << ens.models.size() << "/" << ens.config.m
            << " models on bags of " << ens.config.n << " (FRD "
            << format_double(frd(static_cast<std::size_t>(X.rows()), ens_config))
            << ")\n";
  return 0;
}

int cmd_predict(const PipelineConfig& config, const std::string& ensemble_path,
                const std::string& features_path, bool allow_mismatch, bool trace) {
  check_input_exists(ensemble_path, "train");
  const Json payload =
      read_json_artifact(ensemble_path, "ensemble", config, allow_mismatch);
  const BaggedEnsemble ens = ensemble_from_json(payload.at("ensemble"));
  const auto selected = payload.at("selected_indices").get<std::vector<std::size_t>>();
  const auto records = read_features(features_path, config, allow_mismatch);

  PredictOptions popts;
  popts.include_observation_noise = config.predictive_noise;
  const fs::path out_path = fs::path(config.output_dir) / "predictions.csv";
  auto out = open_output(out_path);
  out << stamp_line("predictions", config) << '\n';
  out << "cell_id,cycle,soh_exp,y_pred,sigma_pred\n";
  std::ofstream trace_out;
  if (trace) {
    trace_out = open_output(fs::path(config.output_dir) / "predictions_trace.csv");
    trace_out << stamp_line("predictions-trace", config) << '\n';
    trace_out << "cell_id,cycle,model_ordinal,y_a,sigma_a,w_a\n";
  }
  for (const auto& r : records) {
    Eigen::VectorXd x(selected.size());
    for (std::size_t j = 0; j < selected.size(); ++j) {
      if (selected[j] >= r.features.size())
        raise(ErrorCode::DimensionMismatch, "feature table too narrow for ensemble");
      x[static_cast<Eigen::Index>(j)] = r.features[selected[j]];
    }
    const Prediction p = ensemble_predict(ens, x, popts);
    out << r.cell_id << ',' << r.cycle_index << ',' << format_double(r.soh) << ','
        << format_double(p.y_pred) << ',' << format_double(p.sigma_pred) << '\n';
    if (trace)
      for (std::size_t a = 0; a < p.per_model.size(); ++a)
        trace_out << r.cell_id << ',' << r.cycle_index << ','
                  << ens.model_ordinals[a] << ',' << format_double(p.per_model[a].y)
                  << ',' << format_double(p.per_model[a].sigma) << ','
                  << format_double(p.per_model[a].weight) << '\n';
  }
  std::cout << "wrote " << out_path.string() << " (" << records.size() << " rows)\n";
  return 0;
}

int cmd_evaluate(const PipelineConfig& config, const std::string& history_path,
                 bool allow_mismatch) {
  const auto fleet = read_history(history_path, config, allow_mismatch);
  const ExperimentReport report =
      run_experiment(fleet, experiment_config(config), config.master_seed);

  const fs::path out_dir(config.output_dir);
  write_json_artifact(out_dir / "report.json", "report", config,
                      experiment_report_to_json(report));
  {
    auto out = open_output(out_dir / "report_cells.csv");
    out << stamp_line("report-cells", config) << '\n';
    out << "iteration,cell_id,rmspe,mpe\n";
    for (const auto& it : report.iterations)
      for (const auto& cell : it.cell_reports)
        out << it.iteration << ',' << cell.cell_id << ',' << format_double(cell.rmspe)
            << ',' << format_double(cell.mpe) << '\n';
  }
  {
    auto out = open_output(out_dir / "report_boxplot.csv");
    out << stamp_line("report-boxplot", config) << '\n';
    out << "metric,median,q25,q75,whisker_low,whisker_high,outliers\n";
    auto row = [&](const char* name, const BoxplotStats& b) {
      out << name << ',' << format_double(b.median) << ',' << format_double(b.q25)
          << ',' << format_double(b.q75) << ',' << format_double(b.whisker_low) << ','
          << format_double(b.whisker_high) << ',' << b.outliers.size() << '\n';
    };
    row("rmspe", report.rmspe_box);
    row("mpe", report.mpe_box);
  }
  {
    // Wall times are observational; they live outside the canonical report
    // so equal seeds keep producing byte-identical report files.
    auto out = open_output(out_dir / "timing.txt");
    out << "fit_seconds " << format_double(report.fit_seconds) << '\n'
        << "predict_seconds " << format_double(report.predict_seconds) << '\n';
  }
  std::cout << "assessments " << report.assessments << '\n'
            << "rmspe median " << format_double(report.rmspe_median) << "% mean "
            << format_double(report.rmspe_mean) << "%\n"
            << "mpe   median " << format_double(report.mpe_median) << "% mean "
            << format_double(report.mpe_mean) << "%\n";
  return 0;
}

int cmd_sweep(const PipelineConfig& config, const std::string& history_path,
              bool allow_mismatch) {
  const auto fleet = read_history(history_path, config, allow_mismatch);
  SweepLimits limits;
  limits.max_m = config.resources.max_m;
  limits.max_n = config.resources.max_bag_size;
  const SweepGrid grid =
      sweep_mn(fleet, experiment_config(config), config.sweep.m_values,
               config.sweep.n_values, config.sweep.iterations, config.master_seed,
               limits);
  const fs::path out_dir(config.output_dir);
  write_json_artifact(out_dir / "sweep.json", "sweep", config, sweep_to_json(grid));
  auto out = open_output(out_dir / "sweep.csv");
  out << stamp_line("sweep", config) << '\n';
  out << "m,n,mpe_mean,rmspe_mean,fit_seconds_mean\n";
  for (std::size_t mi = 0; mi < grid.m_values.size(); ++mi)
    for (std::size_t ni = 0; ni < grid.n_values.size(); ++ni) {
      const auto& cell = grid.cells[mi][ni];
      out << grid.m_values[mi] << ',' << grid.n_values[ni] << ','
          << format_double(cell.mpe_mean) << ',' << format_double(cell.rmspe_mean)
          << ',' << format_double(cell.fit_seconds_mean) << '\n';
    }
  std::cout << "swept " << grid.m_values.size() * grid.n_values.size()
            << " grid cells over " << config.sweep.iterations << " iterations\n";
  return 0;
}

int cmd_bench(const PipelineConfig& config, const std::string& history_path,
              bool allow_mismatch) {
  const auto fleet = read_history(history_path, config, allow_mismatch);
  const WindowSpec window = resolved_window(config);
  const auto records = featurize(fleet, window);
  const FeatureSelection sel =
      select_features(records, config.selection.k, config.selection.redundancy);
  auto [rows, y_vec] = to_matrix(records, sel.selected_indices);
  const Eigen::MatrixXd X = to_eigen(rows);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      y_vec.data(), static_cast<Eigen::Index>(y_vec.size()));
  const TimingReport rep = benchmark_timing(
      X, y, config.ensemble, config.eval.baseline_cap, config.master_seed,
      config.eval.timing_queries, config.workers > 1 ? config.workers : 0);
  write_json_artifact(fs::path(config.output_dir) / "bench.json", "bench", config,
                      timing_to_json(rep));
  std::cout << "baseline fit " << format_double(rep.baseline_fit_seconds)
            << " s on " << rep.baseline_rows << " rows; bagged fit "
            << format_double(rep.bagged_fit_seconds) << " s (ratio "
            << format_double(rep.fit_ratio) << ", FRD "
            << format_double(rep.frd_value) << ")\n";
  return 0;
}

std::string config_reference_text() {
  PipelineConfig c;
  c.window_explicit = true;  // show the window block keys too
  std::string text =
      "Config file: JSON; absent keys take the defaults below; unknown keys are "
      "rejected.\nPresets (--preset): nmc-paper (m=3, n=20), lco-paper (m=7, n=30), "
      "lfp-paper (m=20, n=200).\nDefaults:\n";
  text += config_to_json(c).dump(2);
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "sohkit: battery state-of-health estimation from charge-curve statistics\n"
      "with Spearman feature selection and bagged Gaussian process regression"};
  app.footer(config_reference_text());
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, preset, out_override, in_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> workers_override;
  bool allow_mismatch = false;
  app.add_option("--config", config_path, "JSON config file (default: all defaults)");
  app.add_option("--preset", preset, "paper preset: nmc-paper | lco-paper | lfp-paper");
  app.add_option("--seed", seed_override, "override master seed");
  app.add_option("--out", out_override, "override output directory");
  app.add_option("--workers", workers_override, "override worker count");
  app.add_flag("--allow-hash-mismatch", allow_mismatch,
               "accept artifacts produced under a different config hash");

  auto* synth = app.add_subcommand("synth", "generate a synthetic fleet history");
  auto* ingest = app.add_subcommand("ingest", "parse a raw cycling table");
  ingest->add_option("--in", in_path, "raw table path (default: dataset.path)");
  std::string history_path, features_path, selection_path, ensemble_path;
  auto* featurize_cmd =
      app.add_subcommand("featurize", "extract shifted window statistics");
  auto* select_cmd = app.add_subcommand("select", "rank and filter features");
  auto* train_cmd = app.add_subcommand("train", "train the bagged GPR ensemble");
  auto* predict_cmd = app.add_subcommand("predict", "predict SOH for feature rows");
  bool trace = false;
  predict_cmd->add_flag("--trace", trace, "write per-model vote trace");
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "run the repeated 70-30 protocol");
  auto* sweep_cmd = app.add_subcommand("sweep", "grid over ensemble m and n");
  auto* bench_cmd =
      app.add_subcommand("bench", "baseline-vs-bagged timing benchmark");
  for (auto* cmd : {featurize_cmd, evaluate_cmd, sweep_cmd, bench_cmd})
    cmd->add_option("--history", history_path, "history artifact (default <out>/history.csv)");
  for (auto* cmd : {select_cmd, train_cmd, predict_cmd})
    cmd->add_option("--features", features_path, "features artifact (default <out>/features.csv)");
  train_cmd->add_option("--selection", selection_path,
                        "selection artifact (default <out>/selection.json)");
  predict_cmd->add_option("--ensemble", ensemble_path,
                          "ensemble artifact (default <out>/ensemble.json)");

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig config;
    if (!config_path.empty()) {
      config = load_config(config_path);
    }
    if (!preset.empty()) {
      // Preset first, then re-overlay the file so explicit keys win.
      PipelineConfig base;
      apply_preset(base, preset);
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        nlohmann::json j;
        if (in.peek() != std::ifstream::traits_type::eof()) in >> j;
        // Start from the preset and apply the file on top of it.
        nlohmann::json merged = config_to_json(base);
        merged.merge_patch(j.is_null() ? nlohmann::json::object() : j);
        config = config_from_json(merged);
      } else {
        config = base;
      }
    }
    if (seed_override) config.master_seed = *seed_override;
    if (!out_override.empty()) config.output_dir = out_override;
    if (workers_override) config.workers = *workers_override;

    const auto default_in = [&](const std::string& given, const char* name) {
      return given.empty() ? (fs::path(config.output_dir) / name).string() : given;
    };

    if (synth->parsed()) return cmd_synth(config);
    if (ingest->parsed()) return cmd_ingest(config, in_path);
    if (featurize_cmd->parsed())
      return cmd_featurize(config, default_in(history_path, "history.csv"),
                           allow_mismatch);
    if (select_cmd->parsed())
      return cmd_select(config, default_in(features_path, "features.csv"),
                        allow_mismatch);
    if (train_cmd->parsed())
      return cmd_train(config, default_in(features_path, "features.csv"),
                       default_in(selection_path, "selection.json"), allow_mismatch);
    if (predict_cmd->parsed())
      return cmd_predict(config, default_in(ensemble_path, "ensemble.json"),
                         default_in(features_path, "features.csv"), allow_mismatch,
                         trace);
    if (evaluate_cmd->parsed())
      return cmd_evaluate(config, default_in(history_path, "history.csv"),
                          allow_mismatch);
    if (sweep_cmd->parsed())
      return cmd_sweep(config, default_in(history_path, "history.csv"),
                       allow_mismatch);
    if (bench_cmd->parsed())
      return cmd_bench(config, default_in(history_path, "history.csv"),
                       allow_mismatch);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
