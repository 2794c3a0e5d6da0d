#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "sohkit/error.hpp"
#include "sohkit/random.hpp"
#include "sohkit/types.hpp"

namespace sohkit {

enum class FadeShape { Linear, PowerLaw, Knee };

inline const char* fade_shape_name(FadeShape s) {
  switch (s) {
    case FadeShape::Linear: return "LINEAR";
    case FadeShape::PowerLaw: return "POWER_LAW";
    case FadeShape::Knee: return "KNEE";
  }
  return "?";
}

inline FadeShape fade_shape_from_string(const std::string& s) {
  if (s == "LINEAR" || s == "linear") return FadeShape::Linear;
  if (s == "POWER_LAW" || s == "power_law") return FadeShape::PowerLaw;
  if (s == "KNEE" || s == "knee") return FadeShape::Knee;
  raise(ErrorCode::ConfigError, "unrecognized fade shape '" + s + "'");
}

// Seeded fleet generator for dataset-free testing. Each cell gets a monotone
// SOH trajectory; each cycle gets a CC(+CV) charge curve whose window
// statistics shift from their beginning-of-life values proportionally to
// (100 - SOH) through the configured gains. Capacity is set so the SOH
// definition recovers the trajectory exactly.
struct SyntheticFleetSpec {
  std::size_t cell_count = 30;
  std::size_t cycles_per_cell = 35;
  double soh_start = 100.0;  // percent
  double soh_end = 60.0;
  FadeShape shape = FadeShape::Linear;
  double q_nom = 1.1;  // Ah
  double e_nom = 3.5;  // Wh

  // Charge-curve construction.
  double sample_interval = 2.0;  // s
  double cc_duration = 60.0;     // s
  double cv_duration = 60.0;     // s
  double v_base = 3.0;           // CC start voltage at beginning of life, V
  double cc_slope = 0.008;       // V/s
  double cc_current = 2.0;       // A
  double cv_i0 = 1.0;            // CV current at plateau start, A
  double cv_tau = 30.0;          // s
  double plateau_margin = 0.02;  // CV plateau sits 2x this above the CC top, V
  bool with_cv = true;           // false: CC-only charging (NMC-like)
  bool with_discharge = false;   // emit an integrable discharge trace

  // Feature-response gains: additive level shift per unit fade fraction,
  // fade = (soh_start - SOH)/100. Offsets keep every window statistic an
  // exact affine function of SOH when noise is zero.
  double voltage_gain = 0.5;  // V per unit fade
  double current_gain = 0.3;  // A per unit fade

  double noise_voltage = 0.0;  // V per sample
  double noise_current = 0.0;  // A per sample
  double cell_offset_scale = 0.01;  // per-cell base-voltage spread, V

  std::uint64_t seed = 0;

  void validate() const {
    if (cell_count < 1 || cycles_per_cell < 1)
      raise(ErrorCode::ConfigError, "fleet needs >= 1 cell and >= 1 cycle");
    if (!(soh_end < soh_start))
      raise(ErrorCode::ConfigError, "soh span must decrease (start > end)");
    if (!(soh_start <= 110.0) || !(soh_end > 0.0))
      raise(ErrorCode::ConfigError, "soh span outside a sane percent range");
    if (sample_interval <= 0.0 || cc_duration <= 0.0)
      raise(ErrorCode::ConfigError, "curve durations must be positive");
    if (q_nom <= 0.0 || e_nom <= 0.0)
      raise(ErrorCode::ConfigError, "nominal values must be positive");
  }
};

namespace detail {

inline double fade_trajectory(FadeShape shape, double u, double start, double end,
                              double shape_jitter) {
  switch (shape) {
    case FadeShape::Linear:
      return start + (end - start) * u;
    case FadeShape::PowerLaw: {
      const double p = 1.6 + 0.4 * shape_jitter;
      return start + (end - start) * std::pow(u, p);
    }
    case FadeShape::Knee: {
      // Gentle fade to the knee, then an accelerating late-life drop.
      const double u_knee = 0.55 + 0.15 * shape_jitter;
      const double soh_knee = start + 0.35 * (end - start);
      if (u <= u_knee) return start + (soh_knee - start) * (u / u_knee);
      const double w = (u - u_knee) / (1.0 - u_knee);
      return soh_knee + (end - soh_knee) * w * w;
    }
  }
  raise(ErrorCode::ConfigError, "unknown fade shape");
}

}  // namespace detail

inline std::vector<CellAgingHistory> generate_synthetic_fleet(
    const SyntheticFleetSpec& spec) {
  spec.validate();
  std::vector<CellAgingHistory> fleet;
  fleet.reserve(spec.cell_count);

  const double dt = spec.sample_interval;
  const auto n_cc = static_cast<std::size_t>(std::floor(spec.cc_duration / dt)) + 1;
  const auto n_cv = static_cast<std::size_t>(std::floor(spec.cv_duration / dt)) + 1;

  for (std::size_t c = 0; c < spec.cell_count; ++c) {
    Rng rng(mix_seed(spec.seed, 0x5F1EE7, c));
    const double cell_offset = spec.cell_offset_scale * (2.0 * rng.uniform() - 1.0);
    const double end_jitter = rng.uniform();  // cells do not all fade equally far
    const double shape_jitter = rng.uniform();
    const double end_soh =
        spec.soh_end + end_jitter * 0.1 * (spec.soh_start - spec.soh_end);

    CellAgingHistory hist;
    char name[32];
    std::snprintf(name, sizeof(name), "synth-%03zu", c);
    hist.cell_id = name;
    hist.chemistry = Chemistry::Other;
    hist.q_nom = spec.q_nom;
    hist.e_nom = spec.e_nom;

    for (std::size_t k = 0; k < spec.cycles_per_cell; ++k) {
      const double u = (spec.cycles_per_cell == 1)
                           ? 0.0
                           : static_cast<double>(k) /
                                 static_cast<double>(spec.cycles_per_cell - 1);
      const double soh = detail::fade_trajectory(spec.shape, u, spec.soh_start,
                                                 end_soh, shape_jitter);
      const double fade = (spec.soh_start - soh) / 100.0;

      CharacterizationCycle cyc;
      cyc.cycle_index = static_cast<long>(k) * 10;
      cyc.capacity = spec.q_nom * soh / 100.0;
      cyc.energy = spec.e_nom * soh / 100.0;
      cyc.soh_c = soh;
      cyc.soh_e = soh;

      ChargeCurve charge;
      charge.cell_id = hist.cell_id;
      charge.cycle_index = cyc.cycle_index;
      charge.phase = spec.with_cv ? Phase::Full : Phase::CC;

      const double v0 = spec.v_base + cell_offset + spec.voltage_gain * fade;
      for (std::size_t i = 0; i < n_cc; ++i) {
        const double t = static_cast<double>(i) * dt;
        Sample s;
        s.time = t;
        s.voltage = v0 + spec.cc_slope * t + spec.noise_voltage * rng.normal();
        s.current = spec.cc_current + spec.noise_current * rng.normal();
        charge.samples.push_back(s);
      }
      if (spec.with_cv) {
        // Plateau strictly above the CC top so the band split is exact.
        const double v_cv =
            v0 + spec.cc_slope * spec.cc_duration + 2.0 * spec.plateau_margin;
        const double t_cv0 = spec.cc_duration + dt;
        for (std::size_t i = 0; i < n_cv; ++i) {
          const double t = t_cv0 + static_cast<double>(i) * dt;
          Sample s;
          s.time = t;
          s.voltage = v_cv + spec.noise_voltage * rng.normal();
          s.current = spec.cv_i0 * std::exp(-(t - t_cv0) / spec.cv_tau) +
                      spec.current_gain * fade +
                      spec.noise_current * rng.normal();
          charge.samples.push_back(s);
        }
      }
      cyc.charge_curve = std::move(charge);

      if (spec.with_discharge) {
        // Constant-current discharge sized so the trapezoidal integral
        // reproduces the capacity exactly.
        ChargeCurve d;
        d.cell_id = hist.cell_id;
        d.cycle_index = cyc.cycle_index;
        d.phase = Phase::Discharge;
        const double i_d = 1.0;
        const double duration = cyc.capacity * 3600.0 / i_d;
        const int steps = 8;
        for (int i = 0; i <= steps; ++i) {
          const double t = duration * static_cast<double>(i) / steps;
          Sample s;
          s.time = t;
          s.voltage = 3.3 - 0.5 * static_cast<double>(i) / steps;
          s.current = i_d;
          d.samples.push_back(s);
        }
        cyc.discharge_curve = std::move(d);
      }
      hist.cycles.push_back(std::move(cyc));
    }
    fleet.push_back(std::move(hist));
  }
  return fleet;
}

}  // namespace sohkit
