#include <gtest/gtest.h>

#include <fstream>
#include <numbers>

#include "entlab/errors.hpp"
#include "entlab/probes.hpp"
#include "oracles.hpp"

using namespace entlab;

namespace {

int minimal_size(int n) {
  int total = 0;
  for (int s = 0; s <= n; ++s) total += (n - s + 1) * (2 * s + 1);
  return total;
}

}  // namespace

TEST(PhaseGrid, RangesAndOrder) {
  const auto grid = phase_grid(2);
  ASSERT_EQ(grid.size(), 14u);
  for (const auto& g : grid) {
    EXPECT_LE(g.v, 2 - g.s);
    EXPECT_LE(g.m, 2 * g.s);
    EXPECT_NEAR(g.delta(), 2 * std::numbers::pi * g.m / (2 * g.s + 1), 1e-15);
  }
}

TEST(MinimalProbeSet, Sizes) {
  EXPECT_EQ(minimal_probe_set(0, default_amplitude_table(0)).size(), 1u);
  EXPECT_EQ(minimal_probe_set(1, default_amplitude_table(1)).size(), 5u);
  EXPECT_EQ(minimal_probe_set(2, default_amplitude_table(2)).size(), 14u);
  for (int n = 0; n <= 4; ++n) {
    EXPECT_EQ(minimal_probe_set(n, default_amplitude_table(n)).size(), static_cast<std::size_t>(minimal_size(n)));
  }
}

TEST(MinimalProbeSet, DefaultTableUsesTablePowers) {
  const auto table = default_amplitude_table(2);
  const auto top = table.at(2, 0);
  EXPECT_NEAR(top.alpha * top.alpha + top.beta * top.beta, 0.20, 1e-15);
  const auto mid = table.at(1, 0);
  EXPECT_NEAR(mid.alpha * mid.alpha + mid.beta * mid.beta, 0.05, 1e-15);
  EXPECT_NEAR(mid.beta * mid.beta / (mid.alpha * mid.alpha), 3.0, 1e-12);
}

TEST(MinimalProbeSet, Errors) {
  AmplitudeTable partial(2);
  partial.set(0, 0, {0.1, 0.0});
  EXPECT_THROW(minimal_probe_set(2, partial), ValidationError);

  AmplitudeTable bright = default_amplitude_table(2);
  bright.set(2, 0, {1.0, 1.0});
  EXPECT_THROW(minimal_probe_set(2, bright), ValidationError);
}

TEST(ExperimentalProbeSet, MatchesTable) {
  struct Row {
    double alpha, beta;
    std::optional<double> delta_deg;
  };
  const std::vector<Row> table{
      {0.316, 0.316, -135}, {0.316, 0.316, -90}, {0.316, 0.316, -45}, {0.316, 0.316, 0},
      {0.316, 0.316, 45},   {0.316, 0.316, 90},  {0.316, 0.316, 135}, {0.316, 0.316, 180},
      {0.447, 0, {}},       {0, 0.447, {}},      {0.194, 0.112, -90}, {0.194, 0.112, 0},
      {0.194, 0.112, 90},   {0.194, 0.112, 180}, {0.112, 0.194, -90}, {0.112, 0.194, 0},
      {0.112, 0.194, 90},   {0.112, 0.194, 180}, {0, 0, {}}};
  const auto probes = experimental_probe_set();
  ASSERT_EQ(probes.size(), 19u);
  for (std::size_t i = 0; i < table.size(); ++i) {
    SCOPED_TRACE("row " + std::to_string(i + 1));
    EXPECT_NEAR(probes[i].alpha, table[i].alpha, 5e-4);
    EXPECT_NEAR(probes[i].beta, table[i].beta, 5e-4);
    ASSERT_EQ(probes[i].delta.has_value(), table[i].delta_deg.has_value());
    if (table[i].delta_deg) EXPECT_NEAR(*probes[i].delta * 180 / std::numbers::pi, *table[i].delta_deg, 1e-9);
  }
}

TEST(ExperimentalProbeSet, PowersAndNorms) {
  for (const auto& p : experimental_probe_set()) {
    const double power = p.alpha * p.alpha + p.beta * p.beta;
    const bool known = std::abs(power) < 1e-12 || std::abs(power - 0.05) < 1e-12 || std::abs(power - 0.20) < 1e-12;
    EXPECT_TRUE(known) << p.id << " power " << power;
    EXPECT_GE(oracle::coherent_norm(p.alpha, p.beta, 2), 0.99);
    EXPECT_GE(p.state(2).squared_norm(), 0.99);
  }
}

TEST(Conditioning, ExperimentalSetHasFullRank) {
  const auto r = conditioning_report(experimental_probe_set(), 2);
  EXPECT_EQ(r.parameter_count, 14);
  EXPECT_EQ(r.rank, 14);
  EXPECT_FALSE(r.rank_deficient);
}

TEST(Conditioning, RepeatedProbeHasRankOne) {
  const std::vector<ProbeSpec> same(14, ProbeSpec::make("x", 0.3, 0.2, 0.4));
  const auto r = conditioning_report(same, 2);
  EXPECT_EQ(r.rank, 1);
  EXPECT_TRUE(r.rank_deficient);
}

TEST(Conditioning, MinimalSetHasFullRank) {
  EXPECT_EQ(conditioning_report(minimal_probe_set(2, default_amplitude_table(2)), 2).rank, 14);
}

TEST(ProbeJson, RoundTrip) {
  const auto probes = experimental_probe_set();
  const auto back = probes_from_json(nlohmann::json::parse(probes_to_json(probes).dump()));
  ASSERT_EQ(back.size(), probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    EXPECT_EQ(back[i].id, probes[i].id);
    EXPECT_EQ(back[i].alpha, probes[i].alpha);
    EXPECT_EQ(back[i].beta, probes[i].beta);
    EXPECT_EQ(back[i].delta.has_value(), probes[i].delta.has_value());
    if (probes[i].delta) EXPECT_NEAR(*back[i].delta, *probes[i].delta, 1e-15);
  }
}

TEST(ProbeJson, RejectsDuplicatesAndBadPower) {
  nlohmann::json j = probes_to_json(experimental_probe_set());
  nlohmann::json dup = j;
  dup.push_back(j[0]);
  EXPECT_THROW(probes_from_json(dup), ValidationError);
  j[0]["power"] = 0.9;
  EXPECT_THROW(probes_from_json(j), ValidationError);
}

TEST(ProbeFiles, BundledAssetMatchesBuiltIn) {
  const auto asset = load_probes(std::string(ENTLAB_DATA_DIR) + "/paper19.v1.json");
  const auto builtin = experimental_probe_set();
  ASSERT_EQ(asset.size(), builtin.size());
  for (std::size_t i = 0; i < asset.size(); ++i) {
    EXPECT_EQ(asset[i].id, builtin[i].id);
    EXPECT_NEAR(asset[i].alpha, builtin[i].alpha, 1e-15);
    EXPECT_NEAR(asset[i].beta, builtin[i].beta, 1e-15);
  }
}

TEST(ProbeFiles, Errors) {
  EXPECT_THROW(load_probes("/nonexistent/probes.json"), IoError);
  const std::string path = testing::TempDir() + "bad_probes.json";
  std::ofstream(path) << "[{\"id\": ";
  EXPECT_THROW(load_probes(path), ValidationError);
  EXPECT_EQ(load_probes("minimal14").size(), 14u);
}
