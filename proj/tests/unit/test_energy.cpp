#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "slstm/energy.hpp"
#include "slstm/errors.hpp"
#include "slstm/lstm.hpp"
#include "slstm/oracles/oracles.hpp"

using namespace slstm;

namespace {

SpikingLSTMCell cell_of(Eigen::Index input, Eigen::Index hidden) {
  std::mt19937_64 rng(1);
  return oracles::random_snn(rng, {input, hidden, 1, {2}}, Gate::i, 2, Encoding::poisson).layers[0];
}

LayerSpikeStats random_stats(std::mt19937_64& rng, std::int64_t steps, Eigen::Index input, Eigen::Index hidden) {
  std::uniform_int_distribution<std::int64_t> d(0, steps);
  LayerSpikeStats s;
  s.cell_steps = steps;
  s.input_events = d(rng) * input;
  s.hidden_in_events = d(rng) * hidden;
  s.hidden_out_events = d(rng) * hidden;
  for (auto& u : s.unit_events) u = d(rng) * hidden;
  return s;
}

}  // namespace

TEST(AnnOps, SingleUnitHandCount) {
  AnnModel m{HardActConfig{}, {LSTMWeights::zeros(1, 1)}, ClassifierHead::zeros(1, {2})};
  const OpTally t = count_ops_ann(m, 1).layers_total();
  EXPECT_EQ(t.macs, 8);
  EXPECT_EQ(t.multiplies, 3);
  EXPECT_EQ(t.accumulates, 1);
  EXPECT_EQ(t.activations, 5);
}

TEST(AnnOps, LinearInElementsQuadraticRecurrent) {
  AnnModel m{HardActConfig{}, {LSTMWeights::zeros(5, 8)}, ClassifierHead::zeros(8, {3})};
  const OpTally one = count_ops_ann(m, 1).layers_total();
  const OpTally seven = count_ops_ann(m, 7).layers_total();
  EXPECT_EQ(seven.macs, 7 * one.macs);
  EXPECT_EQ(seven.multiplies, 7 * one.multiplies);
  EXPECT_EQ(seven.activations, 7 * one.activations);

  AnnModel wide{HardActConfig{}, {LSTMWeights::zeros(5, 16)}, ClassifierHead::zeros(16, {3})};
  EXPECT_EQ(count_ops_ann(wide, 1).layers[0][OpSite::recurrent_projection].macs,
            4 * count_ops_ann(m, 1).layers[0][OpSite::recurrent_projection].macs);
}

TEST(SnnOps, OneInputSpikeFansOut) {
  const SpikingLSTMCell c = cell_of(3, 32);
  LayerSpikeStats s;
  s.cell_steps = 1;
  s.input_events = 1;
  EXPECT_EQ(count_layer_ops_snn(s, c, false)[OpSite::input_projection].accumulates, 128);
}

TEST(SnnOps, ZeroSpikesMeanNoRecurrentAccumulates) {
  const SpikingLSTMCell c = cell_of(3, 6);
  std::mt19937_64 rng(2);
  const LayerSpikeStats busy = random_stats(rng, 40, 3, 6);
  LayerSpikeStats idle;
  idle.cell_steps = busy.cell_steps;
  const LayerOps a = count_layer_ops_snn(busy, c, false);
  const LayerOps z = count_layer_ops_snn(idle, c, false);
  EXPECT_EQ(z[OpSite::recurrent_projection].accumulates, 0);
  EXPECT_EQ(z[OpSite::input_projection].accumulates, 0);
  EXPECT_EQ(z.total().comparisons, a.total().comparisons);
}

TEST(SnnOps, PoissonInputAccumulatesMatchRate) {
  // Single element, rate r on every input: input events ~ Binomial(F*T, r).
  std::mt19937_64 rng(3);
  const Eigen::Index F = 64, H = 4;
  const int T = 8;
  const double r = 0.3;
  SnnModel m = oracles::random_snn(rng, {F, H, 1, {2}}, Gate::i, T, Encoding::poisson);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, F, r);
  double total = 0;
  const int runs = 50;
  for (int k = 0; k < runs; ++k) {
    const auto res = snn_forward(m, x, {T, Encoding::poisson, static_cast<std::uint64_t>(k)});
    total += static_cast<double>(res.ops.layers[0][OpSite::input_projection].accumulates);
  }
  const double fanout = 4.0 * H;
  const double expected = r * F * fanout * T * runs;
  const double sigma = fanout * std::sqrt(F * T * runs * r * (1 - r));
  EXPECT_NEAR(total, expected, 4 * sigma);
}

TEST(SnnOps, OnlyInputProjectionMultipliesUnderDirect) {
  std::mt19937_64 rng(4);
  for (Gate g : {Gate::i, Gate::g}) {
    SnnModel m = oracles::random_snn(rng, {3, 5, 2, {3}}, g, 3, Encoding::direct);
    const auto seq = oracles::random_sequences(rng, 1, 6, 3).front();
    const auto res = snn_forward(m, seq, {3, Encoding::direct, 0});
    EXPECT_GT(res.ops.layers[0][OpSite::input_projection].macs, 0);
    for (std::size_t l = 0; l < res.ops.layers.size(); ++l)
      for (int s = 0; s < kSiteCount; ++s) {
        if (l == 0 && s == static_cast<int>(OpSite::input_projection)) continue;
        EXPECT_EQ(res.ops.layers[l].site[s].multiplies, 0);
        EXPECT_EQ(res.ops.layers[l].site[s].macs, 0);
      }
    EXPECT_NO_THROW(audit_multipliers(res.ops, Encoding::direct));
    EXPECT_THROW(audit_multipliers(res.ops, Encoding::poisson), MultiplierAuditError);
  }
}

TEST(SnnOps, PriorWorkUsesMacsOnState) {
  std::mt19937_64 rng(5);
  SnnModel m = oracles::random_snn(rng, {3, 4, 1, {2}}, Gate::i, 2, Encoding::poisson);
  const auto r = count_ops_priorwork(m, 5, 3);
  EXPECT_EQ(r.layers[0][OpSite::recurrent_projection].macs, 4 * 4 * 4 * 15);
  EXPECT_THROW(audit_multipliers(r, Encoding::direct), MultiplierAuditError);
}

TEST(SnnOps, StatsMismatchRejected) {
  std::mt19937_64 rng(6);
  SnnModel m = oracles::random_snn(rng, {3, 4, 2, {2}}, Gate::i, 2, Encoding::poisson);
  SpikeStats one;
  one.layers.resize(1);
  EXPECT_THROW(count_ops_snn(one, m, 4, 2, Encoding::poisson), ValidationError);
  SpikeStats odd;
  odd.layers.resize(2);
  odd.layers[0].cell_steps = odd.layers[1].cell_steps = 7;
  EXPECT_THROW(count_ops_snn(odd, m, 4, 2, Encoding::poisson), ValidationError);
}

TEST(Energy, NeuromorphicFixtures) {
  EXPECT_NEAR(neuromorphic_energy(1000, 4, 0.4, 0.6), 402.4, 1e-9);
  EXPECT_NEAR(neuromorphic_energy(1000, 4, 0.64, 0.36), 641.44, 1e-9);
  OpCountReport r;
  r.time_steps = 4;
  r.head.accumulates = 1000;
  const auto e = estimate_energy(r, EnergyModel{});
  ASSERT_EQ(e.neuromorphic.size(), 2u);
  EXPECT_NEAR(e.neuromorphic[0].second, 402.4, 1e-9);
  EXPECT_NEAR(e.neuromorphic[1].second, 641.44, 1e-9);
}

TEST(Energy, ZeroCountsZeroDigitalEnergy) {
  OpCountReport r;
  r.layers.resize(2);
  EXPECT_EQ(estimate_energy(r, EnergyModel{}).digital_total, 0.0);
}

TEST(Energy, DigitalSumOfWeightedCounts) {
  OpCountReport r;
  r.layers.resize(1);
  r.layers[0][OpSite::input_projection].macs = 10;
  r.layers[0][OpSite::gate_f].accumulates = 7;
  r.layers[0][OpSite::gate_f].comparisons = 3;
  r.layers[0][OpSite::gate_i].activations = 2;
  r.layers[0][OpSite::cell_update].multiplies = 1;
  const EnergyModel em;
  EXPECT_NEAR(estimate_energy(r, em).digital_total,
              10 * em.e_mac + 7 * em.e_ac + 3 * em.e_compare + 2 * em.e_act + em.e_mul, 1e-12);
}

TEST(Energy, FewerSpikesNeverCostMore) {
  const SpikingLSTMCell c = cell_of(4, 6);
  std::mt19937_64 rng(7);
  const EnergyModel em;
  for (int trial = 0; trial < 200; ++trial) {
    const LayerSpikeStats hi = random_stats(rng, 30, 4, 6);
    LayerSpikeStats lo = hi;
    std::uniform_real_distribution<double> keep(0, 1);
    auto thin = [&](std::int64_t v) { return static_cast<std::int64_t>(std::floor(v * keep(rng))); };
    lo.input_events = thin(hi.input_events);
    lo.hidden_in_events = thin(hi.hidden_in_events);
    lo.hidden_out_events = thin(hi.hidden_out_events);
    for (auto& u : lo.unit_events) u = thin(u);
    OpCountReport a, b;
    a.layers = {count_layer_ops_snn(hi, c, false)};
    b.layers = {count_layer_ops_snn(lo, c, false)};
    EXPECT_LE(estimate_energy(b, em).digital_total, estimate_energy(a, em).digital_total);
  }
}

TEST(Energy, ModelFromJson) {
  const auto em = EnergyModel::from_json(nlohmann::json::parse(R"({"e_mac": 3.1, "platforms": []})"));
  EXPECT_EQ(em.e_mac, 3.1);
  EXPECT_TRUE(em.platforms.empty());
  EXPECT_THROW(EnergyModel::from_json(nlohmann::json::parse(R"({"e_macc": 1})")), ValidationError);
  EXPECT_THROW(EnergyModel::from_json(nlohmann::json::parse(R"({"e_ac": -1})")), ValidationError);
  EXPECT_THROW(EnergyModel::from_json(nlohmann::json::parse(R"({"e_ac": "x"})")), ValidationError);
}

TEST(Energy, ReportJsonTotals) {
  std::mt19937_64 rng(8);
  SnnModel m = oracles::random_snn(rng, {3, 4, 1, {2}}, Gate::i, 2, Encoding::direct);
  const auto res = snn_forward(m, oracles::random_sequences(rng, 1, 5, 3).front(), {2, Encoding::direct, 0});
  const auto j = res.ops.to_json();
  EXPECT_EQ(j.at("flops").get<std::int64_t>(), res.ops.flops());
}
