#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sohkit/error.hpp"
#include "sohkit/ingestion.hpp"
#include "sohkit/stats.hpp"
#include "sohkit/types.hpp"

namespace sohkit {

// ---------------------------------------------------------------------------
// Window specification
// ---------------------------------------------------------------------------

enum class CcRule {
  DurationFromStart,  // CC samples with t <= seconds
  VoltageRange,       // CC samples with v_low <= V <= v_high
  LowerPortion,       // first `seconds` of the CC phase
};

enum class CvRule {
  None,          // chemistry without a CV phase
  UpperPortion,  // first `seconds` of the CV phase
  FullCurve,     // whole CV current trace
};

// Which region of the charge profile feeds feature generation. CC rules read
// voltage, CV rules read current. Output length varies across cycles for
// VoltageRange and FullCurve; that is intentional (sum then carries
// region-size information).
struct WindowSpec {
  CcRule cc_rule = CcRule::LowerPortion;
  double cc_seconds = 30.0;  // DurationFromStart / LowerPortion
  double v_low = 0.0;        // VoltageRange
  double v_high = 0.0;
  CvRule cv_rule = CvRule::None;
  double cv_seconds = 60.0;  // UpperPortion
  double sample_interval = 2.0;
  // Voltage band (volts, below the curve maximum) identifying the CV plateau
  // when a FULL charge curve must be split.
  double cv_band = 0.02;

  // Per-chemistry defaults.
  static WindowSpec lfp() {
    WindowSpec w;
    w.cc_rule = CcRule::LowerPortion;
    w.cc_seconds = 30.0;
    w.cv_rule = CvRule::UpperPortion;
    w.cv_seconds = 60.0;
    w.sample_interval = 2.0;
    return w;
  }
  static WindowSpec lco() {
    WindowSpec w;
    w.cc_rule = CcRule::VoltageRange;
    w.v_low = 3.65;
    w.v_high = 4.2;
    w.cv_rule = CvRule::FullCurve;
    w.sample_interval = 10.0;
    return w;
  }
  static WindowSpec nmc() {
    WindowSpec w;
    w.cc_rule = CcRule::DurationFromStart;
    w.cc_seconds = 3600.0;
    w.cv_rule = CvRule::None;
    w.sample_interval = 10.0;
    return w;
  }
  static std::optional<WindowSpec> for_chemistry(Chemistry c) {
    switch (c) {
      case Chemistry::LFP: return lfp();
      case Chemistry::LCO: return lco();
      case Chemistry::NMC: return nmc();
      case Chemistry::Other: return std::nullopt;
    }
    return std::nullopt;
  }

  std::size_t feature_count() const {
    return cv_rule == CvRule::None ? StatVector::kCount : 2 * StatVector::kCount;
  }
};

inline const char* cc_rule_name(CcRule r) {
  switch (r) {
    case CcRule::DurationFromStart: return "DURATION_FROM_START";
    case CcRule::VoltageRange: return "VOLTAGE_RANGE";
    case CcRule::LowerPortion: return "LOWER_PORTION";
  }
  return "?";
}

inline CcRule cc_rule_from_string(const std::string& s) {
  if (s == "DURATION_FROM_START") return CcRule::DurationFromStart;
  if (s == "VOLTAGE_RANGE") return CcRule::VoltageRange;
  if (s == "LOWER_PORTION") return CcRule::LowerPortion;
  raise(ErrorCode::ConfigError, "unrecognized cc_rule '" + s + "'");
}

inline const char* cv_rule_name(CvRule r) {
  switch (r) {
    case CvRule::None: return "NONE";
    case CvRule::UpperPortion: return "UPPER_PORTION";
    case CvRule::FullCurve: return "FULL_CURVE";
  }
  return "?";
}

inline CvRule cv_rule_from_string(const std::string& s) {
  if (s == "NONE") return CvRule::None;
  if (s == "UPPER_PORTION") return CvRule::UpperPortion;
  if (s == "FULL_CURVE") return CvRule::FullCurve;
  raise(ErrorCode::ConfigError, "unrecognized cv_rule '" + s + "'");
}

// Feature column names in table order: CC stats then CV stats.
inline std::vector<std::string> feature_names(const WindowSpec& spec) {
  std::vector<std::string> names;
  for (const auto& s : stat_names()) names.push_back("cc_" + s);
  if (spec.cv_rule != CvRule::None)
    for (const auto& s : stat_names()) names.push_back("cv_" + s);
  return names;
}

// ---------------------------------------------------------------------------
// Phase handling
// ---------------------------------------------------------------------------

struct ChargePhases {
  ChargeCurve cc;
  std::optional<ChargeCurve> cv;
};

// Splits a FULL charge curve at the CV plateau: the CV segment is the
// longest suffix whose voltage stays within `band` of the curve maximum.
// A suffix shorter than 2 samples does not count as a CV phase.
inline ChargePhases split_cc_cv(const ChargeCurve& curve, double band) {
  if (curve.samples.size() < 2)
    raise(ErrorCode::InsufficientData, "cannot split a curve with < 2 samples");
  double v_max = curve.samples.front().voltage;
  for (const auto& s : curve.samples) v_max = std::max(v_max, s.voltage);
  const double threshold = v_max - band;
  std::size_t onset = curve.samples.size();
  while (onset > 0 && curve.samples[onset - 1].voltage >= threshold) --onset;

  ChargePhases out;
  out.cc.cell_id = curve.cell_id;
  out.cc.cycle_index = curve.cycle_index;
  out.cc.phase = Phase::CC;
  const std::size_t cv_len = curve.samples.size() - onset;
  const std::size_t cc_len = (cv_len >= 2) ? onset : curve.samples.size();
  out.cc.samples.assign(curve.samples.begin(),
                        curve.samples.begin() + static_cast<long>(cc_len));
  if (cv_len >= 2) {
    ChargeCurve cv;
    cv.cell_id = curve.cell_id;
    cv.cycle_index = curve.cycle_index;
    cv.phase = Phase::CV;
    cv.samples.assign(curve.samples.begin() + static_cast<long>(onset),
                      curve.samples.end());
    out.cv = std::move(cv);
  }
  return out;
}

namespace detail {

// Re-interpolates onto the spec interval unless the curve already sits on
// that grid.
inline ChargeCurve ensure_interval(const ChargeCurve& curve, double interval) {
  bool on_grid = curve.samples.size() >= 2;
  for (std::size_t i = 1; on_grid && i < curve.samples.size(); ++i) {
    const double dt = curve.samples[i].time - curve.samples[i - 1].time;
    if (std::abs(dt - interval) > 1e-9 * std::max(1.0, interval)) on_grid = false;
  }
  if (on_grid) return curve;
  constexpr double kNoLimit = 1e300;
  return clean_and_resample(curve, SignalRange{-kNoLimit, kNoLimit}, interval);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Window extraction
// ---------------------------------------------------------------------------

// Returns the signal values inside the region the spec names for this
// curve's phase: voltage for CC rules, current for CV rules. The curve is
// re-resampled at spec.sample_interval when it is on a different grid.
// Fixed-duration windows include both endpoints (30 s at 2 s -> 16 samples).
inline std::vector<double> extract_window(const ChargeCurve& curve,
                                          const WindowSpec& spec) {
  if (curve.phase == Phase::Discharge || curve.phase == Phase::Full)
    raise(ErrorCode::MissingPhase,
          "extract_window expects a CC or CV curve; split FULL curves first");
  if (curve.samples.empty())
    raise(ErrorCode::EmptyWindow, "curve has no samples");

  const ChargeCurve grid = detail::ensure_interval(curve, spec.sample_interval);
  std::vector<double> values;
  const double tol = 1e-9 * std::max(1.0, spec.sample_interval);

  if (curve.phase == Phase::CC) {
    const double t0 = grid.samples.front().time;
    for (const auto& s : grid.samples) {
      switch (spec.cc_rule) {
        case CcRule::DurationFromStart:
          if (s.time <= spec.cc_seconds + tol) values.push_back(s.voltage);
          break;
        case CcRule::LowerPortion:
          if (s.time - t0 <= spec.cc_seconds + tol) values.push_back(s.voltage);
          break;
        case CcRule::VoltageRange:
          if (s.voltage >= spec.v_low && s.voltage <= spec.v_high)
            values.push_back(s.voltage);
          break;
      }
    }
  } else {  // Phase::CV
    if (spec.cv_rule == CvRule::None)
      raise(ErrorCode::MissingPhase, "window spec defines no CV rule");
    const double t0 = grid.samples.front().time;
    for (const auto& s : grid.samples) {
      if (spec.cv_rule == CvRule::FullCurve ||
          s.time - t0 <= spec.cv_seconds + tol)
        values.push_back(s.current);
    }
  }
  if (values.empty())
    raise(ErrorCode::EmptyWindow,
          "window is empty for curve " + curve.cell_id + "/" +
              std::to_string(curve.cycle_index));
  return values;
}

// ---------------------------------------------------------------------------
// Feature records
// ---------------------------------------------------------------------------

// Up-to-14 shifted statistics for one characterization cycle, paired with
// its SOH response. CC stats come first, then CV stats.
struct FeatureRecord {
  std::string cell_id;
  long cycle_index = 0;
  std::vector<double> features;
  double soh = 0.0;
};

namespace detail {

inline void append_stats(const StatVector& s, std::vector<double>& out) {
  for (std::size_t i = 0; i < StatVector::kCount; ++i) out.push_back(s[i]);
}

}  // namespace detail

// Raw (unshifted) statistics for one cycle.
inline std::vector<double> cycle_statistics(const CharacterizationCycle& cyc,
                                            const WindowSpec& spec) {
  const ChargeCurve& charge = cyc.charge_curve;
  ChargePhases phases;
  if (charge.phase == Phase::Full) {
    phases = split_cc_cv(charge, spec.cv_band);
  } else if (charge.phase == Phase::CC) {
    phases.cc = charge;
  } else if (charge.phase == Phase::CV) {
    raise(ErrorCode::MissingPhase,
          "cycle " + std::to_string(cyc.cycle_index) + " has no CC data");
  }
  if (phases.cc.samples.empty())
    raise(ErrorCode::MissingPhase,
          "cycle " + std::to_string(cyc.cycle_index) + " has no CC data");

  std::vector<double> out;
  out.reserve(spec.feature_count());
  detail::append_stats(summarize(extract_window(phases.cc, spec)), out);
  if (spec.cv_rule != CvRule::None) {
    if (!phases.cv)
      raise(ErrorCode::MissingPhase,
            "cycle " + std::to_string(cyc.cycle_index) +
                " has no CV phase but the window spec requires one");
    detail::append_stats(summarize(extract_window(*phases.cv, spec)), out);
  }
  return out;
}

// Shifts per-cell statistics by the beginning-of-life (earliest cycle)
// values, so the first record of every cell is exactly zero and degradation
// appears as drift from zero.
inline std::vector<FeatureRecord> shift_by_bol(
    const std::string& cell_id, const std::vector<long>& cycle_indices,
    const std::vector<std::vector<double>>& raw_stats,
    const std::vector<double>& soh, std::vector<std::string>* warnings = nullptr) {
  if (raw_stats.empty())
    raise(ErrorCode::EmptyInput, "cell " + cell_id + ": no statistics to shift");
  if (raw_stats.size() != soh.size() || raw_stats.size() != cycle_indices.size())
    raise(ErrorCode::DimensionMismatch, "shift_by_bol: length mismatch");
  if (raw_stats.size() == 1 && warnings)
    warnings->push_back("cell " + cell_id +
                        ": single characterization cycle, features are all zero");
  const std::vector<double>& bol = raw_stats.front();
  std::vector<FeatureRecord> out;
  out.reserve(raw_stats.size());
  for (std::size_t i = 0; i < raw_stats.size(); ++i) {
    if (raw_stats[i].size() != bol.size())
      raise(ErrorCode::DimensionMismatch,
            "cell " + cell_id + ": inconsistent statistic count across cycles");
    FeatureRecord rec;
    rec.cell_id = cell_id;
    rec.cycle_index = cycle_indices[i];
    rec.soh = soh[i];
    rec.features.resize(bol.size());
    for (std::size_t j = 0; j < bol.size(); ++j)
      rec.features[j] = (i == 0) ? 0.0 : raw_stats[i][j] - bol[j];
    out.push_back(std::move(rec));
  }
  return out;
}

// Full extraction pipeline for a set of histories: window -> statistics ->
// BOL shift. Cells and cycles keep their input order.
inline std::vector<FeatureRecord> featurize(
    const std::vector<CellAgingHistory>& histories, const WindowSpec& spec,
    std::vector<std::string>* warnings = nullptr) {
  std::vector<FeatureRecord> out;
  for (const auto& hist : histories) {
    std::vector<std::vector<double>> raw;
    std::vector<long> cycles;
    std::vector<double> soh;
    raw.reserve(hist.cycles.size());
    for (const auto& cyc : hist.cycles) {
      raw.push_back(cycle_statistics(cyc, spec));
      cycles.push_back(cyc.cycle_index);
      soh.push_back(cyc.soh_c);
    }
    auto recs = shift_by_bol(hist.cell_id, cycles, raw, soh, warnings);
    out.insert(out.end(), std::make_move_iterator(recs.begin()),
               std::make_move_iterator(recs.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature selection
// ---------------------------------------------------------------------------

enum class RejectionReason { LowRank, Redundant };

struct FeatureSelection {
  std::vector<std::size_t> selected_indices;      // in acceptance order
  std::vector<double> rho_with_response;          // per input feature; NaN if undefined
  std::vector<std::pair<std::size_t, RejectionReason>> rejected;
};

// Greedy filter selection: rank features by |Spearman rho| against the
// response, accept in descending order, and drop any candidate whose rank
// correlation with an already-accepted feature reaches the redundancy
// threshold. Ties in |rho| break toward the lower feature index.
inline FeatureSelection select_features(const std::vector<FeatureRecord>& records,
                                        std::size_t k = 10,
                                        double redundancy = 0.8) {
  if (records.size() < 3)
    raise(ErrorCode::InsufficientData, "select_features needs >= 3 records");
  if (k < 1) raise(ErrorCode::ConfigError, "k must be >= 1");
  if (redundancy <= 0.0 || redundancy > 1.0)
    raise(ErrorCode::ConfigError, "redundancy threshold must be in (0, 1]");
  const std::size_t n_features = records.front().features.size();
  for (const auto& r : records)
    if (r.features.size() != n_features)
      raise(ErrorCode::DimensionMismatch, "inconsistent feature counts");

  std::vector<double> response;
  response.reserve(records.size());
  for (const auto& r : records) response.push_back(r.soh);

  std::vector<std::vector<double>> columns(n_features,
                                           std::vector<double>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t j = 0; j < n_features; ++j)
      columns[j][i] = records[i].features[j];

  FeatureSelection sel;
  sel.rho_with_response.assign(n_features,
                               std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < n_features; ++j) {
    bool finite = true;
    for (double v : columns[j])
      if (!std::isfinite(v)) { finite = false; break; }
    if (!finite) {
      sel.rejected.emplace_back(j, RejectionReason::LowRank);
      continue;
    }
    try {
      sel.rho_with_response[j] = spearman(columns[j], response);
      candidates.push_back(j);
    } catch (const Error&) {
      // constant feature (or constant response): uninformative
      sel.rejected.emplace_back(j, RejectionReason::LowRank);
    }
  }
  if (candidates.empty())
    raise(ErrorCode::NoInformativeFeatures,
          "every feature is degenerate against the response");

  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) {
                     const double ra = std::abs(sel.rho_with_response[a]);
                     const double rb = std::abs(sel.rho_with_response[b]);
                     if (ra != rb) return ra > rb;
                     return a < b;
                   });

  for (std::size_t j : candidates) {
    if (sel.selected_indices.size() >= k) {
      sel.rejected.emplace_back(j, RejectionReason::LowRank);
      continue;
    }
    bool redundant = false;
    for (std::size_t accepted : sel.selected_indices) {
      const double rho = spearman(columns[j], columns[accepted]);
      if (std::abs(rho) >= redundancy) {
        redundant = true;
        break;
      }
    }
    if (redundant)
      sel.rejected.emplace_back(j, RejectionReason::Redundant);
    else
      sel.selected_indices.push_back(j);
  }
  return sel;
}

// Projects records onto the selected columns; rows keep their input order.
inline std::pair<std::vector<std::vector<double>>, std::vector<double>>
to_matrix(const std::vector<FeatureRecord>& records,
          const std::vector<std::size_t>& selected) {
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  X.reserve(records.size());
  y.reserve(records.size());
  for (const auto& r : records) {
    std::vector<double> row;
    row.reserve(selected.size());
    for (std::size_t j : selected) {
      if (j >= r.features.size())
        raise(ErrorCode::DimensionMismatch, "selected index out of range");
      row.push_back(r.features[j]);
    }
    X.push_back(std::move(row));
    y.push_back(r.soh);
  }
  return {std::move(X), std::move(y)};
}

}  // namespace sohkit
