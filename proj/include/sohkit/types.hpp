#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sohkit/error.hpp"

namespace sohkit {

enum class Phase { CC, CV, Discharge, Full };

enum class Chemistry { NMC, LCO, LFP, Other };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::CC: return "CC";
    case Phase::CV: return "CV";
    case Phase::Discharge: return "DISCHARGE";
    case Phase::Full: return "FULL";
  }
  return "?";
}

inline Phase phase_from_string(const std::string& s) {
  if (s == "CC" || s == "cc") return Phase::CC;
  if (s == "CV" || s == "cv") return Phase::CV;
  if (s == "DISCHARGE" || s == "discharge" || s == "DCH") return Phase::Discharge;
  if (s == "FULL" || s == "full" || s == "CHARGE" || s == "charge") return Phase::Full;
  raise(ErrorCode::SchemaError, "unrecognized phase label '" + s + "'");
}

inline const char* chemistry_name(Chemistry c) {
  switch (c) {
    case Chemistry::NMC: return "NMC";
    case Chemistry::LCO: return "LCO";
    case Chemistry::LFP: return "LFP";
    case Chemistry::Other: return "OTHER";
  }
  return "?";
}

inline Chemistry chemistry_from_string(const std::string& s) {
  if (s == "NMC" || s == "nmc") return Chemistry::NMC;
  if (s == "LCO" || s == "lco") return Chemistry::LCO;
  if (s == "LFP" || s == "lfp") return Chemistry::LFP;
  if (s == "OTHER" || s == "other" || s.empty()) return Chemistry::Other;
  raise(ErrorCode::SchemaError, "unrecognized chemistry '" + s + "'");
}

// One timestamped measurement on a cycling rig.
struct Sample {
  double time = 0.0;     // seconds
  double voltage = 0.0;  // volts
  double current = 0.0;  // amperes

  bool operator==(const Sample&) const = default;
};

// Timestamped voltage/current trace for one phase (or the whole charge) of
// one cycle of one cell. Time is strictly increasing within samples.
struct ChargeCurve {
  std::string cell_id;
  long cycle_index = 0;
  Phase phase = Phase::Full;
  std::vector<Sample> samples;

  bool operator==(const ChargeCurve&) const = default;
};

// A periodic standardized full cycle used to measure true capacity.
// capacity/energy may be zero straight out of the parser when the source
// table carries neither a capacity column nor a discharge trace; ingest
// finalization fills them in and validates the >0 invariant.
struct CharacterizationCycle {
  long cycle_index = 0;
  ChargeCurve charge_curve;
  std::optional<ChargeCurve> discharge_curve;
  double capacity = 0.0;               // ampere-hours
  std::optional<double> energy;        // watt-hours
  double soh_c = 0.0;                  // percent
  std::optional<double> soh_e;         // percent

  bool operator==(const CharacterizationCycle&) const = default;
};

// Per-cell sequence of characterization cycles with the nominal values the
// health indicators are referenced against.
struct CellAgingHistory {
  std::string cell_id;
  Chemistry chemistry = Chemistry::Other;
  double q_nom = 0.0;              // ampere-hours
  double e_nom = 0.0;              // watt-hours; 0 when SOH_E is not computed
  std::vector<CharacterizationCycle> cycles;

  bool operator==(const CellAgingHistory&) const = default;
};

inline void validate_history(const CellAgingHistory& h) {
  if (h.q_nom <= 0.0)
    raise(ErrorCode::InvalidNominal, "cell " + h.cell_id + ": q_nom must be > 0");
  long prev = -0x7FFFFFFF;
  for (const auto& c : h.cycles) {
    if (c.cycle_index <= prev)
      raise(ErrorCode::MalformedCurve,
            "cell " + h.cell_id + ": cycle indices not strictly increasing");
    prev = c.cycle_index;
    if (c.capacity <= 0.0)
      raise(ErrorCode::InvalidNominal, "cell " + h.cell_id + " cycle " +
                                           std::to_string(c.cycle_index) +
                                           ": capacity must be > 0");
    if (c.soh_c <= 0.0 || c.soh_c > 120.0)
      raise(ErrorCode::InvalidNominal,
            "cell " + h.cell_id + " cycle " + std::to_string(c.cycle_index) +
                ": soh_c outside (0, 120] percent, check units");
    if (c.soh_e && h.e_nom <= 0.0)
      raise(ErrorCode::InvalidNominal,
            "cell " + h.cell_id + ": e_nom must be > 0 when soh_e is present");
  }
}

}  // namespace sohkit
