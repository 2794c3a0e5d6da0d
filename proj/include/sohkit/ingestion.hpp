#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "sohkit/error.hpp"
#include "sohkit/io.hpp"
#include "sohkit/stats.hpp"
#include "sohkit/types.hpp"

namespace sohkit {

// ---------------------------------------------------------------------------
// Cleaning and resampling
// ---------------------------------------------------------------------------

struct SignalRange {
  double low = 0.0;
  double high = 0.0;
};

// Grid start reference: first crossing of a voltage or current level.
struct Anchor {
  enum class Signal { Voltage, Current };
  Signal signal = Signal::Voltage;
  double value = 0.0;
};

namespace detail {

inline double sample_signal(const Sample& s, Anchor::Signal sig) {
  return sig == Anchor::Signal::Voltage ? s.voltage : s.current;
}

inline double lerp(double x0, double y0, double x1, double y1, double x) {
  if (x1 == x0) return y0;
  return y0 + (y1 - y0) * ((x - x0) / (x1 - x0));
}

}  // namespace detail

// Removes out-of-limit samples, then linearly interpolates the survivors
// onto a uniform grid of spacing `interval`, starting where the anchored
// signal first crosses `anchor` (or at the first surviving sample).
// Out-of-limit removal happens before interpolation so spikes never
// contaminate interpolated values.
inline ChargeCurve clean_and_resample(
    const ChargeCurve& curve, SignalRange voltage_limits, double interval,
    const std::optional<Anchor>& anchor = std::nullopt,
    const std::optional<SignalRange>& current_limits = std::nullopt) {
  if (interval <= 0.0)
    raise(ErrorCode::ConfigError, "resample interval must be > 0");

  std::vector<Sample> kept;
  kept.reserve(curve.samples.size());
  for (const auto& s : curve.samples) {
    if (s.voltage < voltage_limits.low || s.voltage > voltage_limits.high) continue;
    if (current_limits &&
        (s.current < current_limits->low || s.current > current_limits->high))
      continue;
    kept.push_back(s);
  }
  if (kept.size() < 2)
    raise(ErrorCode::InsufficientData,
          "curve " + curve.cell_id + "/" + std::to_string(curve.cycle_index) +
              ": fewer than 2 in-limit samples");
  for (std::size_t i = 1; i < kept.size(); ++i)
    if (kept[i].time <= kept[i - 1].time)
      raise(ErrorCode::MalformedCurve,
            "curve " + curve.cell_id + "/" + std::to_string(curve.cycle_index) +
                ": time not strictly increasing");

  double t_start = kept.front().time;
  if (anchor) {
    // First crossing wins; located by linear interpolation between the
    // bracketing samples.
    bool found = false;
    const double a = anchor->value;
    if (detail::sample_signal(kept.front(), anchor->signal) == a) {
      found = true;
    } else {
      for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
        const double s0 = detail::sample_signal(kept[i], anchor->signal) - a;
        const double s1 = detail::sample_signal(kept[i + 1], anchor->signal) - a;
        if (s0 == 0.0) {
          t_start = kept[i].time;
          found = true;
          break;
        }
        if ((s0 < 0.0 && s1 >= 0.0) || (s0 > 0.0 && s1 <= 0.0)) {
          t_start = detail::lerp(s0, kept[i].time, s1, kept[i + 1].time, 0.0);
          found = true;
          break;
        }
      }
    }
    if (!found)
      raise(ErrorCode::AnchorNotReached,
            "curve " + curve.cell_id + "/" + std::to_string(curve.cycle_index) +
                ": signal never crosses anchor " + format_double(a));
  }

  const double t_end = kept.back().time;
  const double tol = 1e-9 * std::max(1.0, std::abs(t_end));
  ChargeCurve out;
  out.cell_id = curve.cell_id;
  out.cycle_index = curve.cycle_index;
  out.phase = curve.phase;

  std::size_t j = 0;
  for (std::size_t k = 0;; ++k) {
    const double t = t_start + static_cast<double>(k) * interval;
    if (t > t_end + tol) break;
    const double tc = std::min(t, t_end);
    while (j + 1 < kept.size() && kept[j + 1].time <= tc) ++j;
    Sample s;
    s.time = t;
    if (kept[j].time == tc || j + 1 == kept.size()) {
      s.voltage = kept[j].voltage;
      s.current = kept[j].current;
    } else {
      const auto& p = kept[j];
      const auto& q = kept[j + 1];
      s.voltage = detail::lerp(p.time, p.voltage, q.time, q.voltage, tc);
      s.current = detail::lerp(p.time, p.current, q.time, q.current, tc);
    }
    out.samples.push_back(s);
  }
  if (out.samples.empty())
    raise(ErrorCode::InsufficientData, "resample grid produced no samples");
  return out;
}

// ---------------------------------------------------------------------------
// Capacity / energy integration and health indicators
// ---------------------------------------------------------------------------

struct IntegrationResult {
  double capacity_ah = 0.0;
  double energy_wh = 0.0;
};

// Trapezoidal integrals of |I| and V*|I| over the discharge trace.
// Trapezoid is exact on piecewise-linear data, which lab-grade sampling is
// close to at characterization rates.
inline IntegrationResult integrate_discharge(const ChargeCurve& curve) {
  if (curve.phase != Phase::Discharge)
    raise(ErrorCode::MissingPhase, "integrate_discharge expects a DISCHARGE curve");
  if (curve.samples.size() < 2)
    raise(ErrorCode::InsufficientData, "discharge curve needs at least 2 samples");
  double q = 0.0, e = 0.0;
  for (std::size_t i = 1; i < curve.samples.size(); ++i) {
    const auto& a = curve.samples[i - 1];
    const auto& b = curve.samples[i];
    const double dt = b.time - a.time;
    if (dt <= 0.0)
      raise(ErrorCode::MalformedCurve,
            "discharge curve " + curve.cell_id + "/" +
                std::to_string(curve.cycle_index) + ": time not strictly increasing");
    const double ia = std::abs(a.current), ib = std::abs(b.current);
    q += 0.5 * dt * (ia + ib);
    e += 0.5 * dt * (a.voltage * ia + b.voltage * ib);
  }
  return {q / 3600.0, e / 3600.0};
}

struct SohValue {
  double soh_c = 0.0;
  std::optional<double> soh_e;
};

inline SohValue compute_soh(double capacity_ah, double q_nom_ah,
                            std::optional<double> energy_wh = std::nullopt,
                            std::optional<double> e_nom_wh = std::nullopt) {
  if (q_nom_ah <= 0.0)
    raise(ErrorCode::InvalidNominal, "q_nom must be > 0");
  SohValue out;
  out.soh_c = 100.0 * capacity_ah / q_nom_ah;
  if (energy_wh) {
    if (!e_nom_wh || *e_nom_wh <= 0.0)
      raise(ErrorCode::InvalidNominal, "e_nom must be > 0 when energy is given");
    out.soh_e = 100.0 * (*energy_wh) / (*e_nom_wh);
  }
  return out;
}

// Pearson r and least-squares line over all (SOH_C, SOH_E) pairs pooled
// across cells.
inline LinearFit soh_correlation(const std::vector<CellAgingHistory>& histories) {
  std::vector<double> c, e;
  for (const auto& h : histories)
    for (const auto& cyc : h.cycles)
      if (cyc.soh_e) {
        c.push_back(cyc.soh_c);
        e.push_back(*cyc.soh_e);
      }
  if (c.size() < 3)
    raise(ErrorCode::InsufficientData,
          "soh_correlation needs at least 3 cycles with both SOH values");
  return pearson_fit(c, e);
}

// ---------------------------------------------------------------------------
// Table parsing
// ---------------------------------------------------------------------------

// Maps the roles the pipeline needs onto column names in the source header.
// cell_id/cycle/time/voltage/current are mandatory; the rest resolve only
// when present.
struct TableSchema {
  char delimiter = ',';
  std::string cell_id = "cell_id";
  std::string cycle = "cycle";
  std::string time = "time";
  std::string voltage = "voltage";
  std::string current = "current";
  std::string phase = "phase";
  std::string capacity = "capacity";
  std::string energy = "energy";
};

struct ParseResult {
  std::vector<CellAgingHistory> histories;
  std::size_t parsed_rows = 0;
  std::size_t rejected_rows = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline int find_column(const std::vector<std::string>& header,
                       const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

struct RawRow {
  double time, voltage, current;
  Phase phase;
  std::optional<double> capacity, energy;
};

}  // namespace detail

// Groups rows by cell and cycle, ordered by time. Rows with unparseable
// numerics are counted and reported, not silently dropped. Capacity/energy
// columns, when mapped, apply per cycle (first finite value wins). SOH and
// nominal values are filled by finalize_history.
inline ParseResult parse_cycling_table(std::istream& in, const TableSchema& schema) {
  std::string line;
  if (!std::getline(in, line))
    raise(ErrorCode::EmptyInput, "table has no header row");
  // Tolerate artifact stamp lines above the header.
  while (!line.empty() && line[0] == '#')
    if (!std::getline(in, line))
      raise(ErrorCode::EmptyInput, "table has no header row");

  const auto header = split_fields(line, schema.delimiter);
  const int ci_cell = detail::find_column(header, schema.cell_id);
  const int ci_cycle = detail::find_column(header, schema.cycle);
  const int ci_time = detail::find_column(header, schema.time);
  const int ci_volt = detail::find_column(header, schema.voltage);
  const int ci_curr = detail::find_column(header, schema.current);
  {
    std::string missing;
    auto need = [&](int idx, const std::string& name) {
      if (idx < 0) missing += (missing.empty() ? "" : ", ") + name;
    };
    need(ci_cell, schema.cell_id);
    need(ci_cycle, schema.cycle);
    need(ci_time, schema.time);
    need(ci_volt, schema.voltage);
    need(ci_curr, schema.current);
    if (!missing.empty())
      raise(ErrorCode::SchemaError, "missing mandatory column(s): " + missing);
  }
  const int ci_phase = detail::find_column(header, schema.phase);
  const int ci_cap = detail::find_column(header, schema.capacity);
  const int ci_energy = detail::find_column(header, schema.energy);

  // cell -> cycle -> phase-tagged rows
  std::map<std::string, std::map<long, std::vector<detail::RawRow>>> grouped;
  ParseResult result;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_fields(line, schema.delimiter);
    auto field = [&](int idx) -> std::string_view {
      return (idx >= 0 && static_cast<std::size_t>(idx) < fields.size())
                 ? std::string_view(fields[static_cast<std::size_t>(idx)])
                 : std::string_view();
    };
    const auto cycle = parse_long(field(ci_cycle));
    const auto time = parse_double(field(ci_time));
    const auto volt = parse_double(field(ci_volt));
    const auto curr = parse_double(field(ci_curr));
    const std::string cell(field(ci_cell));
    if (cell.empty() || !cycle || !time || !volt || !curr) {
      ++result.rejected_rows;
      continue;
    }
    detail::RawRow row;
    row.time = *time;
    row.voltage = *volt;
    row.current = *curr;
    row.phase = Phase::Full;
    if (ci_phase >= 0) {
      try {
        row.phase = phase_from_string(std::string(field(ci_phase)));
      } catch (const Error&) {
        ++result.rejected_rows;
        continue;
      }
    }
    if (ci_cap >= 0) row.capacity = parse_double(field(ci_cap));
    if (ci_energy >= 0) row.energy = parse_double(field(ci_energy));
    grouped[cell][*cycle].push_back(row);
    ++result.parsed_rows;
  }
  if (result.parsed_rows == 0)
    raise(ErrorCode::EmptyInput, "no parseable data rows");
  if (result.rejected_rows > 0)
    result.warnings.push_back(std::to_string(result.rejected_rows) +
                              " row(s) rejected (unparseable fields)");

  for (auto& [cell, cycles] : grouped) {
    CellAgingHistory hist;
    hist.cell_id = cell;
    for (auto& [cycle_index, rows] : cycles) {
      std::stable_sort(rows.begin(), rows.end(),
                       [](const detail::RawRow& a, const detail::RawRow& b) {
                         return a.time < b.time;
                       });
      CharacterizationCycle cyc;
      cyc.cycle_index = cycle_index;
      ChargeCurve charge;
      charge.cell_id = cell;
      charge.cycle_index = cycle_index;
      ChargeCurve discharge;
      discharge.cell_id = cell;
      discharge.cycle_index = cycle_index;
      discharge.phase = Phase::Discharge;
      bool saw_cc = false, saw_cv = false, saw_full = false;
      for (const auto& row : rows) {
        if (cyc.capacity <= 0.0 && row.capacity && *row.capacity > 0.0)
          cyc.capacity = *row.capacity;
        if (!cyc.energy && row.energy && *row.energy > 0.0)
          cyc.energy = *row.energy;
        Sample s{row.time, row.voltage, row.current};
        if (row.phase == Phase::Discharge) {
          discharge.samples.push_back(s);
        } else {
          charge.samples.push_back(s);
          saw_cc |= row.phase == Phase::CC;
          saw_cv |= row.phase == Phase::CV;
          saw_full |= row.phase == Phase::Full;
        }
      }
      if (charge.samples.empty() && discharge.samples.empty()) continue;
      charge.phase = (saw_cc && !saw_cv && !saw_full) ? Phase::CC
                     : (saw_cv && !saw_cc && !saw_full) ? Phase::CV
                                                        : Phase::Full;
      cyc.charge_curve = std::move(charge);
      if (!discharge.samples.empty()) cyc.discharge_curve = std::move(discharge);
      hist.cycles.push_back(std::move(cyc));
    }
    if (!hist.cycles.empty()) result.histories.push_back(std::move(hist));
  }
  return result;
}

// Canonical table serialization: one row per sample with the canonical
// column names, so parse(serialize(h)) == h. Doubles use shortest
// round-trip formatting.
inline void serialize_history_table(const std::vector<CellAgingHistory>& histories,
                                    std::ostream& out, char delimiter = ',') {
  const char d = delimiter;
  out << "cell_id" << d << "cycle" << d << "phase" << d << "time" << d
      << "voltage" << d << "current" << d << "capacity" << d << "energy" << '\n';
  auto write_curve = [&](const ChargeCurve& c, const CharacterizationCycle& cyc) {
    for (const auto& s : c.samples) {
      out << c.cell_id << d << c.cycle_index << d << phase_name(c.phase) << d
          << format_double(s.time) << d << format_double(s.voltage) << d
          << format_double(s.current) << d
          << (cyc.capacity > 0.0 ? format_double(cyc.capacity) : std::string())
          << d << (cyc.energy ? format_double(*cyc.energy) : std::string())
          << '\n';
    }
  };
  for (const auto& h : histories)
    for (const auto& cyc : h.cycles) {
      write_curve(cyc.charge_curve, cyc);
      if (cyc.discharge_curve) write_curve(*cyc.discharge_curve, cyc);
    }
}

// ---------------------------------------------------------------------------
// Finalization: cleaning, capacity recovery, SOH stamping
// ---------------------------------------------------------------------------

struct IngestOptions {
  SignalRange voltage_limits{0.0, 6.0};
  std::optional<SignalRange> current_limits;  // off by default: spikes are
                                              // removed on voltage only
  double resample_interval = 10.0;            // seconds
  std::optional<Anchor> anchor;
  std::optional<double> q_nom;  // default: first-cycle capacity
  std::optional<double> e_nom;  // default: first-cycle energy
  Chemistry chemistry = Chemistry::Other;
};

// Cleans and resamples charge curves, integrates discharge curves where the
// table carried no capacity column, fills nominal values from the first
// characterization cycle unless overridden, and stamps SOH per cycle.
inline CellAgingHistory finalize_history(CellAgingHistory hist,
                                         const IngestOptions& opts) {
  hist.chemistry = opts.chemistry;
  for (auto& cyc : hist.cycles) {
    cyc.charge_curve = clean_and_resample(cyc.charge_curve, opts.voltage_limits,
                                          opts.resample_interval, opts.anchor,
                                          opts.current_limits);
    if (cyc.capacity <= 0.0 || (!cyc.energy && cyc.discharge_curve)) {
      if (!cyc.discharge_curve && cyc.capacity <= 0.0)
        raise(ErrorCode::InsufficientData,
              "cell " + hist.cell_id + " cycle " + std::to_string(cyc.cycle_index) +
                  ": no capacity column and no discharge curve to integrate");
      if (cyc.discharge_curve) {
        const auto integ = integrate_discharge(*cyc.discharge_curve);
        if (cyc.capacity <= 0.0) cyc.capacity = integ.capacity_ah;
        if (!cyc.energy) cyc.energy = integ.energy_wh;
      }
    }
  }
  if (hist.cycles.empty())
    raise(ErrorCode::EmptyInput, "cell " + hist.cell_id + ": no cycles");
  hist.q_nom = opts.q_nom.value_or(hist.cycles.front().capacity);
  if (opts.e_nom)
    hist.e_nom = *opts.e_nom;
  else if (hist.cycles.front().energy)
    hist.e_nom = *hist.cycles.front().energy;
  for (auto& cyc : hist.cycles) {
    const auto soh = compute_soh(cyc.capacity, hist.q_nom, cyc.energy,
                                 hist.e_nom > 0.0 ? std::optional<double>(hist.e_nom)
                                                  : std::nullopt);
    cyc.soh_c = soh.soh_c;
    cyc.soh_e = soh.soh_e;
  }
  validate_history(hist);
  return hist;
}

inline std::vector<CellAgingHistory> ingest_histories(ParseResult parsed,
                                                      const IngestOptions& opts) {
  std::vector<CellAgingHistory> out;
  out.reserve(parsed.histories.size());
  for (auto& h : parsed.histories)
    out.push_back(finalize_history(std::move(h), opts));
  return out;
}

}  // namespace sohkit
