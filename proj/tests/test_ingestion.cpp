#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "sohkit/ingestion.hpp"
#include "sohkit/random.hpp"
#include "sohkit/synthetic.hpp"

using namespace sohkit;

namespace {

ChargeCurve make_curve(Phase phase, std::vector<Sample> samples) {
  ChargeCurve c;
  c.cell_id = "cell-0";
  c.cycle_index = 1;
  c.phase = phase;
  c.samples = std::move(samples);
  return c;
}

}  // namespace

// --- clean_and_resample -----------------------------------------------------

TEST(CleanResample, LinearInterpolationOnGrid) {
  const auto curve = make_curve(
      Phase::CC, {{0, 3.0, 1.0}, {2, 3.2, 1.0}, {4, 3.4, 1.0}});
  const ChargeCurve out = clean_and_resample(curve, {2.0, 4.2}, 1.0);
  ASSERT_EQ(out.samples.size(), 5u);
  EXPECT_DOUBLE_EQ(out.samples[1].time, 1.0);
  EXPECT_DOUBLE_EQ(out.samples[1].voltage, 3.1);
  EXPECT_DOUBLE_EQ(out.samples[3].voltage, 3.3);
}

TEST(CleanResample, OutOfLimitSampleRemovedBeforeInterpolation) {
  // A 5.1 V spike against [2.0, 4.2]: the interpolated value at its slot must
  // come from the neighbors, never from the spike.
  const auto curve = make_curve(Phase::CC, {{0, 3.0, 1.0},
                                            {1, 5.1, 1.0},
                                            {2, 3.2, 1.0},
                                            {4, 3.4, 1.0}});
  const ChargeCurve out = clean_and_resample(curve, {2.0, 4.2}, 1.0);
  ASSERT_EQ(out.samples.size(), 5u);
  EXPECT_DOUBLE_EQ(out.samples[1].voltage, 3.1);
}

TEST(CleanResample, AnchorStartsGridAtCrossing) {
  // Voltage ramps 3.0 -> 4.2 over 120 s; anchor 3.65 V crosses at t = 65 s.
  std::vector<Sample> samples;
  for (int t = 0; t <= 120; t += 10)
    samples.push_back({static_cast<double>(t), 3.0 + 0.01 * t, 1.0});
  const auto curve = make_curve(Phase::CC, samples);
  const Anchor anchor{Anchor::Signal::Voltage, 3.65};
  const ChargeCurve out = clean_and_resample(curve, {2.0, 4.3}, 10.0, anchor);
  ASSERT_FALSE(out.samples.empty());
  EXPECT_NEAR(out.samples.front().time, 65.0, 1e-9);
  EXPECT_NEAR(out.samples.front().voltage, 3.65, 1e-12);
  // Independent re-interpolation oracle: count = floor((120 - 65)/10) + 1.
  EXPECT_EQ(out.samples.size(), 6u);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double t = 65.0 + 10.0 * static_cast<double>(i);
    EXPECT_NEAR(out.samples[i].voltage, 3.0 + 0.01 * t, 1e-12);
  }
}

TEST(CleanResample, AnchorNeverCrossedFails) {
  const auto curve = make_curve(Phase::CC, {{0, 3.0, 1}, {10, 3.1, 1}});
  const Anchor anchor{Anchor::Signal::Voltage, 3.65};
  try {
    clean_and_resample(curve, {2.0, 4.2}, 1.0, anchor);
    FAIL() << "expected anchor-not-reached";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AnchorNotReached);
  }
}

TEST(CleanResample, TooFewValidSamplesFails) {
  const auto curve = make_curve(Phase::CC, {{0, 9.0, 1}, {1, 9.0, 1}, {2, 3.0, 1}});
  try {
    clean_and_resample(curve, {2.0, 4.2}, 1.0);
    FAIL() << "expected insufficient-data";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

TEST(CleanResample, IdempotentOnUniformInLimitCurve) {
  std::vector<Sample> samples;
  for (int t = 0; t <= 100; t += 5)
    samples.push_back({static_cast<double>(t), 3.0 + 0.002 * t, 1.5 - 0.001 * t});
  const auto curve = make_curve(Phase::CC, samples);
  const ChargeCurve once = clean_and_resample(curve, {2.0, 4.2}, 5.0);
  const ChargeCurve twice = clean_and_resample(once, {2.0, 4.2}, 5.0);
  ASSERT_EQ(once.samples.size(), curve.samples.size());
  ASSERT_EQ(twice.samples.size(), once.samples.size());
  for (std::size_t i = 0; i < once.samples.size(); ++i) {
    EXPECT_NEAR(once.samples[i].voltage, curve.samples[i].voltage, 1e-12);
    EXPECT_NEAR(twice.samples[i].voltage, once.samples[i].voltage, 1e-12);
    EXPECT_NEAR(twice.samples[i].current, once.samples[i].current, 1e-12);
  }
}

// --- integrate_discharge ----------------------------------------------------

TEST(IntegrateDischarge, ConstantCurrentRectangle) {
  const auto curve = make_curve(Phase::Discharge, {{0, 3.0, 1.0}, {3600, 3.0, 1.0}});
  const auto r = integrate_discharge(curve);
  EXPECT_DOUBLE_EQ(r.capacity_ah, 1.0);
  EXPECT_DOUBLE_EQ(r.energy_wh, 3.0);
}

TEST(IntegrateDischarge, ConstantPower) {
  const auto curve = make_curve(Phase::Discharge, {{0, 3.0, 2.0}, {1800, 3.0, 2.0}});
  const auto r = integrate_discharge(curve);
  EXPECT_DOUBLE_EQ(r.capacity_ah, 1.0);
  EXPECT_DOUBLE_EQ(r.energy_wh, 3.0);
}

TEST(IntegrateDischarge, RampMatchesFineGridOracle) {
  // Current ramps 2 -> 0 A over 3600 s at constant 3 V: 1 Ah exactly.
  std::vector<Sample> samples;
  std::vector<double> t, i, vi;
  for (int k = 0; k <= 36; ++k) {
    const double tk = 100.0 * k;
    const double ik = 2.0 * (1.0 - tk / 3600.0);
    samples.push_back({tk, 3.0, ik});
    t.push_back(tk);
    i.push_back(ik);
    vi.push_back(3.0 * ik);
  }
  const auto r = integrate_discharge(make_curve(Phase::Discharge, samples));
  EXPECT_NEAR(r.capacity_ah, 1.0, 1e-12);
  const double oracle_q = oracle::o_riemann(t, i, 1 << 16) / 3600.0;
  const double oracle_e = oracle::o_riemann(t, vi, 1 << 16) / 3600.0;
  EXPECT_NEAR(r.capacity_ah, oracle_q, 1e-9 * oracle_q);
  EXPECT_NEAR(r.energy_wh, oracle_e, 1e-9 * oracle_e);
}

TEST(IntegrateDischarge, RefinementInvariance) {
  // Trapezoid is exact on piecewise-linear data: halving the spacing of a
  // linear current ramp leaves capacity unchanged beyond round-off. Energy
  // shares that exactness only when the voltage is constant (V * |I| stays
  // piecewise-linear).
  auto build = [](int step, bool flat_voltage) {
    std::vector<Sample> samples;
    for (int tk = 0; tk <= 3600; tk += step) {
      const double tt = tk;
      const double v = flat_voltage ? 3.2 : 3.2 - tt * 1e-4;
      samples.push_back({tt, v, 2.0 - tt / 1800.0});
    }
    return make_curve(Phase::Discharge, samples);
  };
  const auto coarse = integrate_discharge(build(200, false));
  const auto fine = integrate_discharge(build(100, false));
  EXPECT_NEAR(coarse.capacity_ah, fine.capacity_ah, 1e-12 * fine.capacity_ah);

  const auto coarse_flat = integrate_discharge(build(200, true));
  const auto fine_flat = integrate_discharge(build(100, true));
  EXPECT_NEAR(coarse_flat.energy_wh, fine_flat.energy_wh,
              1e-12 * fine_flat.energy_wh);
}

TEST(IntegrateDischarge, RejectsNonMonotoneTimeAndWrongPhase) {
  const auto bad = make_curve(Phase::Discharge, {{0, 3, 1}, {5, 3, 1}, {5, 3, 1}});
  try {
    integrate_discharge(bad);
    FAIL() << "expected malformed-curve";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedCurve);
  }
  const auto cc = make_curve(Phase::CC, {{0, 3, 1}, {5, 3, 1}});
  EXPECT_THROW(integrate_discharge(cc), Error);
}

// --- compute_soh -------------------------------------------------------------

TEST(ComputeSoh, IdentityAndEndOfLife) {
  EXPECT_DOUBLE_EQ(compute_soh(1.1, 1.1).soh_c, 100.0);
  EXPECT_DOUBLE_EQ(compute_soh(0.8 * 1.1, 1.1).soh_c, 80.0);
  EXPECT_DOUBLE_EQ(compute_soh(0.55, 1.1).soh_c, 50.0);
}

TEST(ComputeSoh, EnergyPath) {
  const auto s = compute_soh(1.0, 2.0, 3.0, 6.0);
  EXPECT_DOUBLE_EQ(s.soh_c, 50.0);
  ASSERT_TRUE(s.soh_e.has_value());
  EXPECT_DOUBLE_EQ(*s.soh_e, 50.0);
}

TEST(ComputeSoh, ScaleConsistency) {
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const double cap = rng.uniform(0.1, 5.0);
    const double q = rng.uniform(0.1, 5.0);
    const double k = rng.uniform(0.01, 100.0);
    const double a = compute_soh(cap, q).soh_c;
    const double b = compute_soh(k * cap, k * q).soh_c;
    EXPECT_NEAR(a, b, 1e-12 * std::abs(a));
  }
}

TEST(ComputeSoh, InvalidNominals) {
  try {
    compute_soh(1.0, 0.0);
    FAIL() << "expected invalid-nominal";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidNominal);
  }
  EXPECT_THROW(compute_soh(1.0, 1.0, 2.0, std::nullopt), Error);
  EXPECT_THROW(compute_soh(1.0, 1.0, 2.0, -1.0), Error);
}

// --- soh_correlation ----------------------------------------------------------

namespace {

CellAgingHistory history_with_soh(const std::vector<std::pair<double, double>>& pairs) {
  CellAgingHistory h;
  h.cell_id = "h";
  h.q_nom = 1.0;
  h.e_nom = 1.0;
  long idx = 0;
  for (const auto& [c, e] : pairs) {
    CharacterizationCycle cyc;
    cyc.cycle_index = idx++;
    cyc.capacity = c / 100.0;
    cyc.soh_c = c;
    cyc.soh_e = e;
    h.cycles.push_back(cyc);
  }
  return h;
}

}  // namespace

TEST(SohCorrelation, IdentityAndAffine) {
  auto h = history_with_soh({{100, 100}, {90, 90}, {80, 80}, {70, 70}});
  auto fit = soh_correlation({h});
  EXPECT_NEAR(fit.r, 1.0, 1e-12);
  EXPECT_NEAR(fit.slope, 1.0, 1e-12);

  h = history_with_soh({{100, 150}, {90, 130}, {80, 110}, {70, 90}});
  fit = soh_correlation({h});
  EXPECT_NEAR(fit.r, 1.0, 1e-12);
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  EXPECT_NEAR(fit.intercept, -50.0, 1e-9);
}

TEST(SohCorrelation, NoisyLineMatchesTextbookOracle) {
  Rng rng(17);
  std::vector<std::pair<double, double>> pairs;
  std::vector<double> xs, ys;
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(60.0, 100.0);
    const double y = x + rng.normal();  // sigma = 1 around the slope-1 line
    pairs.emplace_back(x, y);
    xs.push_back(x);
    ys.push_back(y);
  }
  const auto fit = soh_correlation({history_with_soh(pairs)});
  EXPECT_GT(fit.r, 0.99);
  EXPECT_NEAR(fit.r, oracle::o_pearson(xs, ys), 1e-12);
}

TEST(SohCorrelation, NeedsThreePairs) {
  const auto h = history_with_soh({{100, 100}, {90, 90}});
  try {
    soh_correlation({h});
    FAIL() << "expected insufficient-data";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

// --- parse / serialize --------------------------------------------------------

namespace {

constexpr const char* kSmallTable =
    "cell_id,cycle,time,voltage,current\n"
    "a,1,0,3.0,1.0\n"
    "a,1,1,3.1,1.0\n"
    "a,1,2,3.2,1.0\n"
    "a,2,0,3.0,0.9\n"
    "a,2,1,3.05,0.9\n"
    "a,2,2,3.1,0.9\n";

}  // namespace

TEST(ParseTable, GroupsRowsByCellAndCycle) {
  std::istringstream in(kSmallTable);
  const ParseResult r = parse_cycling_table(in, TableSchema{});
  ASSERT_EQ(r.histories.size(), 1u);
  ASSERT_EQ(r.histories[0].cycles.size(), 2u);
  EXPECT_EQ(r.histories[0].cycles[0].charge_curve.samples.size(), 3u);
  EXPECT_EQ(r.histories[0].cycles[1].charge_curve.samples.size(), 3u);
  EXPECT_EQ(r.rejected_rows, 0u);
  EXPECT_EQ(r.parsed_rows, 6u);
}

TEST(ParseTable, RejectsAndReportsBadRows) {
  std::istringstream in(
      "cell_id,cycle,time,voltage,current\n"
      "a,1,0,3.0,1.0\n"
      "a,1,1,not-a-number,1.0\n"
      "a,1,2,3.2,1.0\n");
  const ParseResult r = parse_cycling_table(in, TableSchema{});
  EXPECT_EQ(r.rejected_rows, 1u);
  EXPECT_EQ(r.parsed_rows, 2u);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings[0].find("1 row"), std::string::npos);
}

TEST(ParseTable, SchemaRemapsReorderedColumns) {
  std::istringstream canonical(kSmallTable);
  const ParseResult base = parse_cycling_table(canonical, TableSchema{});

  std::istringstream reordered(
      "I,U,t,cyc,cell\n"
      "1.0,3.0,0,1,a\n"
      "1.0,3.1,1,1,a\n"
      "1.0,3.2,2,1,a\n"
      "0.9,3.0,0,2,a\n"
      "0.9,3.05,1,2,a\n"
      "0.9,3.1,2,2,a\n");
  TableSchema schema;
  schema.cell_id = "cell";
  schema.cycle = "cyc";
  schema.time = "t";
  schema.voltage = "U";
  schema.current = "I";
  const ParseResult remapped = parse_cycling_table(reordered, schema);
  ASSERT_EQ(remapped.histories.size(), base.histories.size());
  EXPECT_EQ(remapped.histories[0], base.histories[0]);
}

TEST(ParseTable, MissingMandatoryColumnIsSchemaError) {
  std::istringstream in("cell_id,cycle,time,voltage\na,1,0,3.0\n");
  try {
    parse_cycling_table(in, TableSchema{});
    FAIL() << "expected schema error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaError);
    EXPECT_NE(std::string(e.what()).find("current"), std::string::npos);
  }
}

TEST(ParseTable, ZeroParseableRowsIsEmptyInput) {
  std::istringstream in("cell_id,cycle,time,voltage,current\nx,y,z,w,v\n");
  try {
    parse_cycling_table(in, TableSchema{});
    FAIL() << "expected empty-input";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(ParseTable, RoundTripThroughCanonicalSerialization) {
  // Synthetic fleet with discharge curves, serialized and re-parsed: the
  // histories must match field for field.
  SyntheticFleetSpec spec;
  spec.cell_count = 2;
  spec.cycles_per_cell = 3;
  spec.with_discharge = true;
  spec.noise_voltage = 0.002;
  spec.noise_current = 0.001;
  spec.seed = 77;
  const auto fleet = generate_synthetic_fleet(spec);

  std::ostringstream out;
  serialize_history_table(fleet, out);
  std::istringstream in(out.str());
  const ParseResult parsed = parse_cycling_table(in, TableSchema{});
  ASSERT_EQ(parsed.histories.size(), fleet.size());
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const auto& a = fleet[i];
    const auto& b = parsed.histories[i];
    ASSERT_EQ(a.cycles.size(), b.cycles.size());
    for (std::size_t k = 0; k < a.cycles.size(); ++k) {
      EXPECT_EQ(a.cycles[k].charge_curve.samples, b.cycles[k].charge_curve.samples);
      EXPECT_EQ(a.cycles[k].charge_curve.phase, b.cycles[k].charge_curve.phase);
      ASSERT_EQ(a.cycles[k].discharge_curve.has_value(),
                b.cycles[k].discharge_curve.has_value());
      if (a.cycles[k].discharge_curve)
        EXPECT_EQ(a.cycles[k].discharge_curve->samples,
                  b.cycles[k].discharge_curve->samples);
      EXPECT_DOUBLE_EQ(a.cycles[k].capacity, b.cycles[k].capacity);
    }
  }

  // Second round trip is byte-identical.
  std::ostringstream out2;
  serialize_history_table(parsed.histories, out2);
  EXPECT_EQ(out.str(), out2.str());
}

TEST(Ingest, FinalizeComputesCapacityFromDischargeAndSoh) {
  SyntheticFleetSpec spec;
  spec.cell_count = 1;
  spec.cycles_per_cell = 4;
  spec.with_discharge = true;
  spec.seed = 5;
  const auto fleet = generate_synthetic_fleet(spec);

  std::ostringstream out;
  serialize_history_table(fleet, out);
  // Strip capacity/energy so finalize must integrate the discharge curve.
  std::istringstream lines(out.str());
  std::ostringstream stripped;
  std::string line;
  while (std::getline(lines, line)) {
    const auto fields = split_fields(line, ',');
    std::vector<std::string> keep(fields.begin(), fields.begin() + 6);
    stripped << join_fields(keep, ',') << '\n';
  }

  std::istringstream in(stripped.str());
  ParseResult parsed = parse_cycling_table(in, TableSchema{});
  IngestOptions opts;
  opts.resample_interval = spec.sample_interval;
  const auto finalized = ingest_histories(std::move(parsed), opts);
  ASSERT_EQ(finalized.size(), 1u);
  const auto& h = finalized[0];
  // Trapezoid on constant current is exact, so SOH must match the synthetic
  // trajectory through q_nom defaulting to the first cycle.
  for (std::size_t k = 0; k < h.cycles.size(); ++k) {
    const double expected =
        100.0 * fleet[0].cycles[k].capacity / fleet[0].cycles[0].capacity;
    EXPECT_NEAR(h.cycles[k].soh_c, expected, 1e-9);
  }
}
