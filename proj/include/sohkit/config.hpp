#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sohkit/ensemble.hpp"
#include "sohkit/error.hpp"
#include "sohkit/features.hpp"
#include "sohkit/ingestion.hpp"
#include "sohkit/io.hpp"
#include "sohkit/synthetic.hpp"

namespace sohkit {

// Every pipeline stage reads its knobs from this one structure. Every field
// has a default; unknown keys in a config file are rejected, and validation
// reports every violation rather than the first.
struct PipelineConfig {
  struct Dataset {
    std::string path;
    TableSchema schema;
    Chemistry chemistry = Chemistry::Other;
    std::optional<double> q_nom;
    std::optional<double> e_nom;
    SignalRange voltage_limits{0.0, 6.0};
    std::optional<SignalRange> current_limits;
    std::optional<Anchor> anchor;
  } dataset;

  WindowSpec window;
  bool window_explicit = false;  // set when the file carries a window block

  struct Selection {
    std::size_t k = 10;
    double redundancy = 0.8;
  } selection;

  EnsembleConfig ensemble;  // fit options ride inside
  bool predictive_noise = false;

  struct Eval {
    double split_fraction = 0.7;
    std::size_t iterations = 10;
    std::size_t baseline_cap = 2000;
    std::size_t timing_queries = 50;
  } eval;

  struct Sweep {
    std::vector<std::size_t> m_values{2, 7, 20};
    std::vector<std::size_t> n_values{10, 30, 80};
    std::size_t iterations = 10;
  } sweep;

  SyntheticFleetSpec synth;

  struct Resources {
    std::size_t max_bag_size = 5000;
    std::size_t max_baseline_rows = 20000;
    std::size_t max_m = 200;
  } resources;

  std::uint64_t master_seed = 0;
  int workers = 1;
  std::string output_dir = "out";
};

// ---------------------------------------------------------------------------
// JSON mapping
// ---------------------------------------------------------------------------

namespace detail {

using Json = nlohmann::json;

inline Json window_to_json(const WindowSpec& w) {
  return Json{{"cc_rule", cc_rule_name(w.cc_rule)},
              {"cc_seconds", w.cc_seconds},
              {"v_low", w.v_low},
              {"v_high", w.v_high},
              {"cv_rule", cv_rule_name(w.cv_rule)},
              {"cv_seconds", w.cv_seconds},
              {"sample_interval", w.sample_interval},
              {"cv_band", w.cv_band}};
}

inline Json synth_to_json(const SyntheticFleetSpec& s) {
  return Json{{"cell_count", s.cell_count},
              {"cycles_per_cell", s.cycles_per_cell},
              {"soh_start", s.soh_start},
              {"soh_end", s.soh_end},
              {"shape", fade_shape_name(s.shape)},
              {"q_nom", s.q_nom},
              {"e_nom", s.e_nom},
              {"sample_interval", s.sample_interval},
              {"cc_duration", s.cc_duration},
              {"cv_duration", s.cv_duration},
              {"v_base", s.v_base},
              {"cc_slope", s.cc_slope},
              {"cc_current", s.cc_current},
              {"cv_i0", s.cv_i0},
              {"cv_tau", s.cv_tau},
              {"plateau_margin", s.plateau_margin},
              {"with_cv", s.with_cv},
              {"with_discharge", s.with_discharge},
              {"voltage_gain", s.voltage_gain},
              {"current_gain", s.current_gain},
              {"noise_voltage", s.noise_voltage},
              {"noise_current", s.noise_current},
              {"cell_offset_scale", s.cell_offset_scale},
              {"seed", s.seed}};
}

}  // namespace detail

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  using Json = nlohmann::json;
  Json j;
  j["master_seed"] = c.master_seed;
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir;

  Json dataset;
  dataset["path"] = c.dataset.path;
  dataset["delimiter"] = std::string(1, c.dataset.schema.delimiter);
  dataset["columns"] = Json{{"cell_id", c.dataset.schema.cell_id},
                            {"cycle", c.dataset.schema.cycle},
                            {"time", c.dataset.schema.time},
                            {"voltage", c.dataset.schema.voltage},
                            {"current", c.dataset.schema.current},
                            {"phase", c.dataset.schema.phase},
                            {"capacity", c.dataset.schema.capacity},
                            {"energy", c.dataset.schema.energy}};
  dataset["chemistry"] = chemistry_name(c.dataset.chemistry);
  dataset["q_nom"] = c.dataset.q_nom ? Json(*c.dataset.q_nom) : Json(nullptr);
  dataset["e_nom"] = c.dataset.e_nom ? Json(*c.dataset.e_nom) : Json(nullptr);
  dataset["voltage_limits"] =
      Json::array({c.dataset.voltage_limits.low, c.dataset.voltage_limits.high});
  dataset["current_limits"] =
      c.dataset.current_limits
          ? Json::array({c.dataset.current_limits->low, c.dataset.current_limits->high})
          : Json(nullptr);
  dataset["anchor_signal"] =
      c.dataset.anchor
          ? Json(c.dataset.anchor->signal == Anchor::Signal::Voltage ? "voltage"
                                                                     : "current")
          : Json(nullptr);
  dataset["anchor_value"] =
      c.dataset.anchor ? Json(c.dataset.anchor->value) : Json(nullptr);
  j["dataset"] = std::move(dataset);

  if (c.window_explicit) j["window"] = detail::window_to_json(c.window);

  j["selection"] = Json{{"k", c.selection.k}, {"redundancy", c.selection.redundancy}};
  j["ensemble"] = Json{{"m", c.ensemble.m},
                       {"n", c.ensemble.n},
                       {"weight_epsilon", c.ensemble.weight_epsilon}};
  j["fit"] = Json{{"starts", c.ensemble.fit.starts},
                  {"max_iterations", c.ensemble.fit.bfgs.max_iterations},
                  {"gradient_tolerance", c.ensemble.fit.bfgs.gradient_tolerance},
                  {"scale_bound_low", c.ensemble.fit.scale_bound_low},
                  {"scale_bound_high", c.ensemble.fit.scale_bound_high},
                  {"scalar_length_scale", c.ensemble.fit.scalar_length_scale},
                  {"predictive_noise", c.predictive_noise}};
  j["eval"] = Json{{"split_fraction", c.eval.split_fraction},
                   {"iterations", c.eval.iterations},
                   {"baseline_cap", c.eval.baseline_cap},
                   {"timing_queries", c.eval.timing_queries}};
  j["sweep"] = Json{{"m_values", c.sweep.m_values},
                    {"n_values", c.sweep.n_values},
                    {"iterations", c.sweep.iterations}};
  j["synth"] = detail::synth_to_json(c.synth);
  j["resources"] = Json{{"max_bag_size", c.resources.max_bag_size},
                        {"max_baseline_rows", c.resources.max_baseline_rows},
                        {"max_m", c.resources.max_m}};
  return j;
}

namespace detail {

// Reference keysets come from a default-constructed config so the accepted
// schema and the emitted schema can never drift apart.
inline void collect_unknown_keys(const Json& input, const Json& reference,
                                 const std::string& path,
                                 std::vector<std::string>& errors) {
  if (!input.is_object()) return;
  for (const auto& [key, value] : input.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!reference.is_object() || !reference.contains(key)) {
      errors.push_back("unknown key '" + where + "'");
      continue;
    }
    if (value.is_object()) collect_unknown_keys(value, reference.at(key), where, errors);
  }
}

template <typename T>
void read_key(const Json& j, const char* key, T& out, const std::string& path,
              std::vector<std::string>& errors) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception&) {
    errors.push_back("type mismatch at '" + path + "." + key + "'");
  }
}

inline void read_optional_range(const Json& j, const char* key,
                                std::optional<SignalRange>& out,
                                const std::string& path,
                                std::vector<std::string>& errors) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    const auto arr = j.at(key).get<std::vector<double>>();
    if (arr.size() != 2) throw Json::type_error::create(302, "range", nullptr);
    out = SignalRange{arr[0], arr[1]};
  } catch (const Json::exception&) {
    errors.push_back("expected [low, high] at '" + path + "." + key + "'");
  }
}

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  using detail::read_key;
  PipelineConfig c;
  std::vector<std::string> errors;

  // Window presence toggles explicitness; validate keys against the full
  // reference including the window block.
  PipelineConfig ref_cfg;
  ref_cfg.window_explicit = true;
  detail::collect_unknown_keys(j, config_to_json(ref_cfg), "", errors);

  read_key(j, "master_seed", c.master_seed, "", errors);
  read_key(j, "workers", c.workers, "", errors);
  read_key(j, "output_dir", c.output_dir, "", errors);

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    read_key(d, "path", c.dataset.path, "dataset", errors);
    std::string delim(1, c.dataset.schema.delimiter);
    read_key(d, "delimiter", delim, "dataset", errors);
    if (delim.size() == 1)
      c.dataset.schema.delimiter = delim[0];
    else
      errors.push_back("dataset.delimiter must be a single character");
    if (d.contains("columns")) {
      const auto& cols = d.at("columns");
      read_key(cols, "cell_id", c.dataset.schema.cell_id, "dataset.columns", errors);
      read_key(cols, "cycle", c.dataset.schema.cycle, "dataset.columns", errors);
      read_key(cols, "time", c.dataset.schema.time, "dataset.columns", errors);
      read_key(cols, "voltage", c.dataset.schema.voltage, "dataset.columns", errors);
      read_key(cols, "current", c.dataset.schema.current, "dataset.columns", errors);
      read_key(cols, "phase", c.dataset.schema.phase, "dataset.columns", errors);
      read_key(cols, "capacity", c.dataset.schema.capacity, "dataset.columns", errors);
      read_key(cols, "energy", c.dataset.schema.energy, "dataset.columns", errors);
    }
    if (d.contains("chemistry") && !d.at("chemistry").is_null()) {
      try {
        c.dataset.chemistry = chemistry_from_string(d.at("chemistry").get<std::string>());
      } catch (const std::exception&) {
        errors.push_back("dataset.chemistry must be NMC, LCO, LFP or OTHER");
      }
    }
    double q = 0.0, e = 0.0;
    if (d.contains("q_nom") && !d.at("q_nom").is_null()) {
      read_key(d, "q_nom", q, "dataset", errors);
      c.dataset.q_nom = q;
    }
    if (d.contains("e_nom") && !d.at("e_nom").is_null()) {
      read_key(d, "e_nom", e, "dataset", errors);
      c.dataset.e_nom = e;
    }
    if (d.contains("voltage_limits") && !d.at("voltage_limits").is_null()) {
      try {
        const auto arr = d.at("voltage_limits").get<std::vector<double>>();
        if (arr.size() == 2)
          c.dataset.voltage_limits = SignalRange{arr[0], arr[1]};
        else
          errors.push_back("dataset.voltage_limits must be [low, high]");
      } catch (const nlohmann::json::exception&) {
        errors.push_back("dataset.voltage_limits must be [low, high]");
      }
    }
    detail::read_optional_range(d, "current_limits", c.dataset.current_limits,
                                "dataset", errors);
    if (d.contains("anchor_value") && !d.at("anchor_value").is_null()) {
      Anchor a;
      read_key(d, "anchor_value", a.value, "dataset", errors);
      std::string sig = "voltage";
      read_key(d, "anchor_signal", sig, "dataset", errors);
      if (sig == "voltage")
        a.signal = Anchor::Signal::Voltage;
      else if (sig == "current")
        a.signal = Anchor::Signal::Current;
      else
        errors.push_back("dataset.anchor_signal must be 'voltage' or 'current'");
      c.dataset.anchor = a;
    }
  }

  if (j.contains("window")) {
    c.window_explicit = true;
    const auto& w = j.at("window");
    std::string cc = cc_rule_name(c.window.cc_rule);
    std::string cv = cv_rule_name(c.window.cv_rule);
    read_key(w, "cc_rule", cc, "window", errors);
    read_key(w, "cv_rule", cv, "window", errors);
    try {
      c.window.cc_rule = cc_rule_from_string(cc);
      c.window.cv_rule = cv_rule_from_string(cv);
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
    read_key(w, "cc_seconds", c.window.cc_seconds, "window", errors);
    read_key(w, "v_low", c.window.v_low, "window", errors);
    read_key(w, "v_high", c.window.v_high, "window", errors);
    read_key(w, "cv_seconds", c.window.cv_seconds, "window", errors);
    read_key(w, "sample_interval", c.window.sample_interval, "window", errors);
    read_key(w, "cv_band", c.window.cv_band, "window", errors);
  }

  if (j.contains("selection")) {
    read_key(j.at("selection"), "k", c.selection.k, "selection", errors);
    read_key(j.at("selection"), "redundancy", c.selection.redundancy, "selection",
             errors);
  }
  if (j.contains("ensemble")) {
    read_key(j.at("ensemble"), "m", c.ensemble.m, "ensemble", errors);
    read_key(j.at("ensemble"), "n", c.ensemble.n, "ensemble", errors);
    read_key(j.at("ensemble"), "weight_epsilon", c.ensemble.weight_epsilon,
             "ensemble", errors);
  }
  if (j.contains("fit")) {
    const auto& f = j.at("fit");
    read_key(f, "starts", c.ensemble.fit.starts, "fit", errors);
    read_key(f, "max_iterations", c.ensemble.fit.bfgs.max_iterations, "fit", errors);
    read_key(f, "gradient_tolerance", c.ensemble.fit.bfgs.gradient_tolerance, "fit",
             errors);
    read_key(f, "scale_bound_low", c.ensemble.fit.scale_bound_low, "fit", errors);
    read_key(f, "scale_bound_high", c.ensemble.fit.scale_bound_high, "fit", errors);
    read_key(f, "scalar_length_scale", c.ensemble.fit.scalar_length_scale, "fit",
             errors);
    read_key(f, "predictive_noise", c.predictive_noise, "fit", errors);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    read_key(e, "split_fraction", c.eval.split_fraction, "eval", errors);
    read_key(e, "iterations", c.eval.iterations, "eval", errors);
    read_key(e, "baseline_cap", c.eval.baseline_cap, "eval", errors);
    read_key(e, "timing_queries", c.eval.timing_queries, "eval", errors);
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    read_key(s, "m_values", c.sweep.m_values, "sweep", errors);
    read_key(s, "n_values", c.sweep.n_values, "sweep", errors);
    read_key(s, "iterations", c.sweep.iterations, "sweep", errors);
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    read_key(s, "cell_count", c.synth.cell_count, "synth", errors);
    read_key(s, "cycles_per_cell", c.synth.cycles_per_cell, "synth", errors);
    read_key(s, "soh_start", c.synth.soh_start, "synth", errors);
    read_key(s, "soh_end", c.synth.soh_end, "synth", errors);
    if (s.contains("shape") && !s.at("shape").is_null()) {
      try {
        c.synth.shape = fade_shape_from_string(s.at("shape").get<std::string>());
      } catch (const std::exception&) {
        errors.push_back("synth.shape must be LINEAR, POWER_LAW or KNEE");
      }
    }
    read_key(s, "q_nom", c.synth.q_nom, "synth", errors);
    read_key(s, "e_nom", c.synth.e_nom, "synth", errors);
    read_key(s, "sample_interval", c.synth.sample_interval, "synth", errors);
    read_key(s, "cc_duration", c.synth.cc_duration, "synth", errors);
    read_key(s, "cv_duration", c.synth.cv_duration, "synth", errors);
    read_key(s, "v_base", c.synth.v_base, "synth", errors);
    read_key(s, "cc_slope", c.synth.cc_slope, "synth", errors);
    read_key(s, "cc_current", c.synth.cc_current, "synth", errors);
    read_key(s, "cv_i0", c.synth.cv_i0, "synth", errors);
    read_key(s, "cv_tau", c.synth.cv_tau, "synth", errors);
    read_key(s, "plateau_margin", c.synth.plateau_margin, "synth", errors);
    read_key(s, "with_cv", c.synth.with_cv, "synth", errors);
    read_key(s, "with_discharge", c.synth.with_discharge, "synth", errors);
    read_key(s, "voltage_gain", c.synth.voltage_gain, "synth", errors);
    read_key(s, "current_gain", c.synth.current_gain, "synth", errors);
    read_key(s, "noise_voltage", c.synth.noise_voltage, "synth", errors);
    read_key(s, "noise_current", c.synth.noise_current, "synth", errors);
    read_key(s, "cell_offset_scale", c.synth.cell_offset_scale, "synth", errors);
    read_key(s, "seed", c.synth.seed, "synth", errors);
  }
  if (j.contains("resources")) {
    const auto& r = j.at("resources");
    read_key(r, "max_bag_size", c.resources.max_bag_size, "resources", errors);
    read_key(r, "max_baseline_rows", c.resources.max_baseline_rows, "resources",
             errors);
    read_key(r, "max_m", c.resources.max_m, "resources", errors);
  }

  // Invariant checks, accumulated like the key errors.
  if (c.ensemble.m < 1) errors.push_back("ensemble.m must be >= 1");
  if (c.ensemble.n < 2) errors.push_back("ensemble.n must be >= 2");
  if (!(c.ensemble.weight_epsilon > 0.0))
    errors.push_back("ensemble.weight_epsilon must be > 0");
  if (!(c.eval.split_fraction > 0.0) || !(c.eval.split_fraction < 1.0))
    errors.push_back("eval.split_fraction must be inside (0, 1)");
  if (c.selection.k < 1) errors.push_back("selection.k must be >= 1");
  if (!(c.selection.redundancy > 0.0) || c.selection.redundancy > 1.0)
    errors.push_back("selection.redundancy must be in (0, 1]");
  if (c.workers < 1) errors.push_back("workers must be >= 1");
  if (c.window_explicit && c.window.sample_interval <= 0.0)
    errors.push_back("window.sample_interval must be > 0");
  if (c.ensemble.n > c.resources.max_bag_size)
    errors.push_back("ensemble.n exceeds resources.max_bag_size");
  if (c.ensemble.m > c.resources.max_m)
    errors.push_back("ensemble.m exceeds resources.max_m");
  if (c.eval.baseline_cap > c.resources.max_baseline_rows)
    errors.push_back("eval.baseline_cap exceeds resources.max_baseline_rows");

  if (!errors.empty()) {
    std::string joined;
    for (const auto& e : errors) joined += (joined.empty() ? "" : "; ") + e;
    raise(ErrorCode::ConfigError, joined);
  }
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open config file '" + path + "'");
  nlohmann::json j;
  if (in.peek() == std::ifstream::traits_type::eof()) {
    j = nlohmann::json::object();  // empty file: all defaults
  } else {
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      raise(ErrorCode::ConfigError, "config parse error: " + std::string(e.what()));
    }
  }
  return config_from_json(j);
}

// The window the featurize stage should use: explicit wins, otherwise the
// chemistry preset; a chemistry-less config must spell the window out.
inline WindowSpec resolved_window(const PipelineConfig& c) {
  if (c.window_explicit) return c.window;
  if (const auto preset = WindowSpec::for_chemistry(c.dataset.chemistry))
    return *preset;
  raise(ErrorCode::ConfigError,
        "no window spec: set dataset.chemistry to NMC/LCO/LFP or provide an "
        "explicit window block");
}

// Built-in per-chemistry starting points; user keys overlay afterwards.
inline void apply_preset(PipelineConfig& c, const std::string& name) {
  if (name == "nmc-paper") {
    c.dataset.chemistry = Chemistry::NMC;
    c.ensemble.m = 3;
    c.ensemble.n = 20;
  } else if (name == "lco-paper") {
    c.dataset.chemistry = Chemistry::LCO;
    c.ensemble.m = 7;
    c.ensemble.n = 30;
  } else if (name == "lfp-paper") {
    c.dataset.chemistry = Chemistry::LFP;
    c.ensemble.m = 20;
    c.ensemble.n = 200;
  } else {
    raise(ErrorCode::ConfigError,
          "unknown preset '" + name + "' (nmc-paper, lco-paper, lfp-paper)");
  }
}

inline std::uint64_t config_hash(const PipelineConfig& c) {
  return fnv1a_hash(config_to_json(c).dump());
}

}  // namespace sohkit
