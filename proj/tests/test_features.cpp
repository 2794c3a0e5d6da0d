#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sohkit/features.hpp"
#include "sohkit/random.hpp"
#include "sohkit/synthetic.hpp"

using namespace sohkit;

namespace {

ChargeCurve ramp_cc(double t0, double t1, double dt, double v0, double slope) {
  ChargeCurve c;
  c.cell_id = "x";
  c.cycle_index = 0;
  c.phase = Phase::CC;
  for (double t = t0; t <= t1 + 1e-9; t += dt)
    c.samples.push_back({t, v0 + slope * (t - t0), 2.0});
  return c;
}

ChargeCurve decay_cv(double t0, double duration, double dt, double i0, double tau) {
  ChargeCurve c;
  c.cell_id = "x";
  c.cycle_index = 0;
  c.phase = Phase::CV;
  for (double t = t0; t <= t0 + duration + 1e-9; t += dt)
    c.samples.push_back({t, 3.6, i0 * std::exp(-(t - t0) / tau)});
  return c;
}

}  // namespace

// --- extract_window -----------------------------------------------------------

TEST(ExtractWindow, LfpLowerPortionHas16Samples) {
  // 30 s window at 2 s interval, both endpoints included.
  const auto cc = ramp_cc(0, 120, 2, 3.0, 0.004);
  const auto values = extract_window(cc, WindowSpec::lfp());
  ASSERT_EQ(values.size(), 16u);
  EXPECT_DOUBLE_EQ(values.front(), 3.0);
  EXPECT_DOUBLE_EQ(values.back(), 3.0 + 0.004 * 30.0);
}

TEST(ExtractWindow, LowerPortionIsRelativeToCurveStart) {
  const auto cc = ramp_cc(100, 220, 2, 3.0, 0.004);
  const auto values = extract_window(cc, WindowSpec::lfp());
  ASSERT_EQ(values.size(), 16u);
  EXPECT_DOUBLE_EQ(values.front(), 3.0);
}

TEST(ExtractWindow, NmcDurationFromStartHas361Samples) {
  const auto cc = ramp_cc(0, 5000, 10, 3.0, 0.0002);
  const auto values = extract_window(cc, WindowSpec::nmc());
  // Independent slicing oracle: t = 0, 10, ..., 3600.
  std::size_t expected = 0;
  for (const auto& s : cc.samples)
    if (s.time <= 3600.0) ++expected;
  EXPECT_EQ(values.size(), expected);
  EXPECT_EQ(values.size(), 361u);
}

TEST(ExtractWindow, VoltageRangeFiltersByValue) {
  const auto cc = ramp_cc(0, 1200, 10, 3.0, 0.001);  // 3.0 -> 4.2
  const auto values = extract_window(cc, WindowSpec::lco());
  for (double v : values) {
    EXPECT_GE(v, 3.65);
    EXPECT_LE(v, 4.2);
  }
  std::size_t expected = 0;
  for (const auto& s : cc.samples)
    if (s.voltage >= 3.65 && s.voltage <= 4.2) ++expected;
  EXPECT_EQ(values.size(), expected);
}

TEST(ExtractWindow, VoltageRangeNeverReachedIsEmptyWindow) {
  const auto cc = ramp_cc(0, 300, 10, 3.0, 0.001);  // tops out at 3.3 V
  try {
    extract_window(cc, WindowSpec::lco());
    FAIL() << "expected empty-window";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyWindow);
  }
}

TEST(ExtractWindow, CvUpperPortionReadsCurrent) {
  const auto cv = decay_cv(600, 120, 2, 1.0, 30.0);
  WindowSpec spec = WindowSpec::lfp();
  const auto values = extract_window(cv, spec);
  ASSERT_EQ(values.size(), 31u);  // 60 s at 2 s inclusive
  EXPECT_DOUBLE_EQ(values.front(), 1.0);
  EXPECT_NEAR(values.back(), std::exp(-2.0), 1e-12);
}

TEST(ExtractWindow, CvFullCurveTakesWholeTrace) {
  const auto cv = decay_cv(0, 300, 10, 0.8, 60.0);
  const auto values = extract_window(cv, WindowSpec::lco());
  EXPECT_EQ(values.size(), cv.samples.size());
}

TEST(ExtractWindow, ResamplesFinerGridsToSpecInterval) {
  // 1 s data against a 2 s spec: the window must land on the 2 s grid.
  const auto cc = ramp_cc(0, 120, 1, 3.0, 0.004);
  const auto values = extract_window(cc, WindowSpec::lfp());
  ASSERT_EQ(values.size(), 16u);
  EXPECT_NEAR(values[1], 3.0 + 0.004 * 2.0, 1e-12);
}

TEST(ExtractWindow, FullCurveMustBeSplitFirst) {
  auto full = ramp_cc(0, 60, 2, 3.0, 0.008);
  full.phase = Phase::Full;
  EXPECT_THROW(extract_window(full, WindowSpec::lfp()), Error);
}

// --- split_cc_cv ----------------------------------------------------------------

TEST(SplitCcCv, FindsPlateauBoundary) {
  ChargeCurve full;
  full.cell_id = "x";
  full.phase = Phase::Full;
  for (double t = 0; t <= 60; t += 2)
    full.samples.push_back({t, 3.0 + 0.008 * t, 2.0});
  for (double t = 62; t <= 122; t += 2)
    full.samples.push_back({t, 3.52, 1.0 * std::exp(-(t - 62) / 30.0)});
  const ChargePhases phases = split_cc_cv(full, 0.02);
  ASSERT_TRUE(phases.cv.has_value());
  EXPECT_EQ(phases.cc.samples.size(), 31u);
  EXPECT_EQ(phases.cv->samples.size(), 31u);
  EXPECT_DOUBLE_EQ(phases.cv->samples.front().time, 62.0);
  EXPECT_EQ(phases.cc.phase, Phase::CC);
  EXPECT_EQ(phases.cv->phase, Phase::CV);
}

TEST(SplitCcCv, NoCvWhenNothingIsFlat) {
  // Steep strictly rising ramp: at most the last sample sits within the
  // band, and a single sample does not form a CV phase.
  ChargeCurve full;
  full.phase = Phase::Full;
  for (double t = 0; t <= 100; t += 2)
    full.samples.push_back({t, 3.0 + 0.02 * t, 2.0});
  const ChargePhases phases = split_cc_cv(full, 0.02);
  EXPECT_FALSE(phases.cv.has_value());
  EXPECT_EQ(phases.cc.samples.size(), full.samples.size());
}

// --- shift_by_bol ----------------------------------------------------------------

TEST(ShiftByBol, FirstRecordExactlyZero) {
  const std::vector<std::vector<double>> raw = {
      {3.30, 3.30, 52.8, 0.1, 0.01, 1.8, 0.15},
      {3.25, 3.26, 52.0, 0.11, 0.0121, 1.9, 0.16},
  };
  const auto recs = shift_by_bol("c", {0, 10}, raw, {100.0, 95.0});
  ASSERT_EQ(recs.size(), 2u);
  for (double v : recs[0].features) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(recs[1].features[0], -0.05, 1e-12);
  EXPECT_DOUBLE_EQ(recs[1].soh, 95.0);
}

TEST(ShiftByBol, IdenticalCyclesShiftToZero) {
  const std::vector<double> stats = {1, 2, 3, 4, 5, 6, 7};
  const auto recs = shift_by_bol("c", {0, 1}, {stats, stats}, {100, 100});
  for (double v : recs[1].features) EXPECT_EQ(v, 0.0);
}

TEST(ShiftByBol, ShiftingShiftedOutputIsIdempotent) {
  // The shifted series starts at zero, so shifting again changes nothing.
  Rng rng(21);
  std::vector<std::vector<double>> raw;
  std::vector<long> idx;
  std::vector<double> soh;
  for (int k = 0; k < 6; ++k) {
    std::vector<double> row(7);
    for (auto& v : row) v = rng.normal();
    raw.push_back(row);
    idx.push_back(k);
    soh.push_back(100.0 - k);
  }
  const auto once = shift_by_bol("c", idx, raw, soh);
  std::vector<std::vector<double>> shifted;
  for (const auto& r : once) shifted.push_back(r.features);
  const auto twice = shift_by_bol("c", idx, shifted, soh);
  for (std::size_t i = 0; i < once.size(); ++i)
    for (std::size_t j = 0; j < 7; ++j)
      EXPECT_DOUBLE_EQ(twice[i].features[j], once[i].features[j]);
}

TEST(ShiftByBol, SingleCycleWarnsAndYieldsZeroRecord) {
  std::vector<std::string> warnings;
  const auto recs =
      shift_by_bol("solo", {0}, {{1, 2, 3, 4, 5, 6, 7}}, {100.0}, &warnings);
  ASSERT_EQ(recs.size(), 1u);
  for (double v : recs[0].features) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(warnings.size(), 1u);
}

// --- featurize --------------------------------------------------------------------

TEST(Featurize, SyntheticFleetShapes) {
  SyntheticFleetSpec spec;
  spec.cell_count = 3;
  spec.cycles_per_cell = 5;
  spec.seed = 9;
  const auto fleet = generate_synthetic_fleet(spec);
  const auto records = featurize(fleet, WindowSpec::lfp());
  ASSERT_EQ(records.size(), 15u);
  for (const auto& r : records) EXPECT_EQ(r.features.size(), 14u);
  // First record per cell is the zero vector, exactly.
  for (std::size_t i = 0; i < records.size(); i += 5)
    for (double v : records[i].features) EXPECT_EQ(v, 0.0);
}

TEST(Featurize, CvRuleWithoutCvPhaseFails) {
  SyntheticFleetSpec spec;
  spec.cell_count = 1;
  spec.cycles_per_cell = 3;
  spec.with_cv = false;
  spec.seed = 9;
  const auto fleet = generate_synthetic_fleet(spec);
  EXPECT_THROW(featurize(fleet, WindowSpec::lfp()), Error);
  // An NMC-style spec on the same fleet works and yields 7 features.
  WindowSpec nmc = WindowSpec::nmc();
  nmc.cc_seconds = 40.0;  // the synthetic CC phase is only 60 s long
  const auto records = featurize(fleet, nmc);
  for (const auto& r : records) EXPECT_EQ(r.features.size(), 7u);
}

// --- select_features ---------------------------------------------------------------

namespace {

std::vector<FeatureRecord> records_from_columns(
    const std::vector<std::vector<double>>& columns, const std::vector<double>& soh) {
  std::vector<FeatureRecord> recs(soh.size());
  for (std::size_t i = 0; i < soh.size(); ++i) {
    recs[i].cell_id = "c";
    recs[i].cycle_index = static_cast<long>(i);
    recs[i].soh = soh[i];
    for (const auto& col : columns) recs[i].features.push_back(col[i]);
  }
  return recs;
}

}  // namespace

TEST(SelectFeatures, CapsAtKAndFiltersRedundancy) {
  Rng rng(33);
  const std::size_t n = 60;
  std::vector<double> soh(n);
  for (std::size_t i = 0; i < n; ++i) soh[i] = 100.0 - static_cast<double>(i);
  std::vector<std::vector<double>> cols;
  for (int j = 0; j < 14; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i)
      col[i] = (j % 2 == 0 ? 1.0 : -1.0) * static_cast<double>(i) +
               rng.normal() * (1.0 + j);
    cols.push_back(col);
  }
  const auto sel = select_features(records_from_columns(cols, soh), 10, 0.8);
  EXPECT_LE(sel.selected_indices.size(), 10u);
  for (std::size_t a = 0; a < sel.selected_indices.size(); ++a)
    for (std::size_t b = a + 1; b < sel.selected_indices.size(); ++b) {
      std::vector<double> xa(n), xb(n);
      for (std::size_t i = 0; i < n; ++i) {
        xa[i] = cols[sel.selected_indices[a]][i];
        xb[i] = cols[sel.selected_indices[b]][i];
      }
      EXPECT_LT(std::abs(spearman(xa, xb)), 0.8);
    }
}

TEST(SelectFeatures, SevenFeaturesAllSelected) {
  // CC-only case: 7 informative, weakly coupled features and k = 10.
  Rng rng(44);
  const std::size_t n = 80;
  std::vector<double> soh(n);
  for (std::size_t i = 0; i < n; ++i) soh[i] = 100.0 - 0.5 * static_cast<double>(i);
  std::vector<std::vector<double>> cols;
  for (int j = 0; j < 7; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i)
      col[i] = static_cast<double>(i) * (j + 1) + rng.normal() * 40.0 * (j + 1);
    cols.push_back(col);
  }
  const auto sel = select_features(records_from_columns(cols, soh), 10, 0.95);
  EXPECT_EQ(sel.selected_indices.size(), 7u);
}

TEST(SelectFeatures, DuplicatedColumnKeepsLowerIndex) {
  const std::size_t n = 30;
  std::vector<double> soh(n), col(n), other(n);
  Rng rng(55);
  for (std::size_t i = 0; i < n; ++i) {
    soh[i] = 100.0 - static_cast<double>(i);
    col[i] = static_cast<double>(i) + rng.normal() * 0.2;
    other[i] = rng.normal();
  }
  const auto sel = select_features(records_from_columns({col, col, other}, soh), 10, 0.8);
  // Exactly one of the duplicated pair survives: the lower index.
  std::size_t dup_count = 0;
  for (std::size_t idx : sel.selected_indices)
    if (idx == 0 || idx == 1) ++dup_count;
  EXPECT_EQ(dup_count, 1u);
  EXPECT_NE(std::find(sel.selected_indices.begin(), sel.selected_indices.end(), 0u),
            sel.selected_indices.end());
  bool dup_rejected_redundant = false;
  for (const auto& [idx, reason] : sel.rejected)
    if (idx == 1 && reason == RejectionReason::Redundant) dup_rejected_redundant = true;
  EXPECT_TRUE(dup_rejected_redundant);
}

TEST(SelectFeatures, ConstantFeaturesRejectedAllDegenerateThrows) {
  const std::size_t n = 20;
  std::vector<double> soh(n), flat(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) soh[i] = 100.0 - static_cast<double>(i);
  try {
    select_features(records_from_columns({flat, flat}, soh), 10, 0.8);
    FAIL() << "expected no-informative-features";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoInformativeFeatures);
  }
}

TEST(SelectFeatures, DeterministicUnderRecordPermutation) {
  Rng rng(66);
  const std::size_t n = 40;
  std::vector<double> soh(n);
  std::vector<std::vector<double>> cols(5, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    soh[i] = 100.0 - static_cast<double>(i) * 0.7;
    for (auto& col : cols) col[i] = rng.normal() + static_cast<double>(i) * 0.1;
  }
  auto recs = records_from_columns(cols, soh);
  const auto base = select_features(recs, 4, 0.9);
  // Reverse record order; rho magnitudes and the selection must not move.
  std::reverse(recs.begin(), recs.end());
  const auto permuted = select_features(recs, 4, 0.9);
  EXPECT_EQ(base.selected_indices, permuted.selected_indices);
  for (std::size_t j = 0; j < base.rho_with_response.size(); ++j)
    EXPECT_NEAR(base.rho_with_response[j], permuted.rho_with_response[j], 1e-12);
}
