#include <gtest/gtest.h>

#include <random>

#include "slstm/convert.hpp"
#include "slstm/errors.hpp"
#include "slstm/lstm.hpp"
#include "slstm/oracles/oracles.hpp"

using namespace slstm;

namespace {

AnnModel zero_ann(Eigen::Index in, Eigen::Index hid, HardActConfig act = {}) {
  return AnnModel{act, {LSTMWeights::zeros(in, hid)}, ClassifierHead::zeros(hid, {3})};
}

std::vector<Eigen::MatrixXd> probes(std::uint64_t seed, int count, Eigen::Index n, Eigen::Index f) {
  std::mt19937_64 rng(seed);
  return oracles::random_sequences(rng, static_cast<std::size_t>(count), n, f);
}

}  // namespace

TEST(Convert, ZeroWeightDefaults) {
  const HardActConfig act{4, 1.5, -0.5};
  const SnnModel s = convert(zero_ann(2, 3, act), {});
  ASSERT_EQ(s.layers.size(), 1u);
  const auto& c = s.layers[0];
  EXPECT_TRUE(c.weights.wx.isZero(0) && c.weights.wh.isZero(0) && c.weights.b.isZero(0));
  EXPECT_EQ(c.plan, ConversionPlan::with_analog(Gate::i));
  EXPECT_EQ(s.time_steps, 2);
  for (Unit u : {Unit::f, Unit::o}) {
    const auto& p = c.params[index(u)];
    EXPECT_TRUE((p.threshold_pos.array() == 4).all());
    EXPECT_TRUE((p.step_bias.array() == 2).all());
    EXPECT_TRUE((p.mem_init.array() == 2).all());
    EXPECT_TRUE((p.leak.array() == 1).all());
    EXPECT_FALSE(p.ternary());
    EXPECT_DOUBLE_EQ(p.surrogate_gamma, 0.3);
  }
  for (Unit u : {Unit::g, Unit::c_tanh}) {
    const auto& p = c.params[index(u)];
    EXPECT_TRUE((p.threshold_pos.array() == 1.5).all());
    EXPECT_TRUE((p.threshold_neg.array() == -0.5).all());
    EXPECT_TRUE((p.step_bias.array() == 0).all());
    EXPECT_TRUE((p.mem_init.array() == 0.75).all());
  }
  EXPECT_EQ(c.params[index(Unit::i)].units(), 0);
}

TEST(Convert, MemInitIsShiftTimesT) {
  ConvertOptions o;
  o.time_steps = 2;
  const SnnModel s = convert(zero_ann(1, 1), o);
  EXPECT_DOUBLE_EQ(s.layers[0].params[index(Unit::f)].mem_init[0], optimal_shift(4, 2) * 2);
  o.shift = false;
  const SnnModel off = convert(zero_ann(1, 1), o);
  for (Unit u : {Unit::f, Unit::g, Unit::o, Unit::c_tanh})
    EXPECT_TRUE(off.layers[0].params[index(u)].mem_init.isZero(0));
}

TEST(Convert, AnalogGSpikesI) {
  ConvertOptions o;
  o.plan = ConversionPlan::with_analog(Gate::g);
  const SnnModel s = convert(zero_ann(2, 2), o);
  EXPECT_TRUE(s.layers[0].plan.spiking(Unit::i));
  EXPECT_FALSE(s.layers[0].plan.spiking(Unit::g));
  EXPECT_EQ(s.layers[0].params[index(Unit::g)].units(), 0);
  EXPECT_TRUE((s.layers[0].params[index(Unit::i)].mem_init.array() == 2).all());
}

TEST(Convert, RejectsBadOptions) {
  ConvertOptions o;
  o.time_steps = 0;
  EXPECT_THROW(convert(zero_ann(1, 1), o), ValidationError);
  o.time_steps = 2;
  o.plan = ConversionPlan::from_flags(0x1F);
  EXPECT_THROW(convert(zero_ann(1, 1), o), ValidationError);
}

TEST(ConversionError, LargeTMatchesAnnGates) {
  std::mt19937_64 rng(4);
  AnnModel ann{HardActConfig{}, {LSTMWeights::random(1, 1, rng)}, ClassifierHead::zeros(1, {2})};
  ConvertOptions o;
  o.time_steps = 256;
  const SnnModel snn = convert(ann, o);
  const std::vector<Eigen::MatrixXd> constant{Eigen::MatrixXd::Constant(1, 1, 0.6)};
  const auto rep = conversion_error_report(ann, snn, constant, 256);
  for (const auto& r : rep.rows)
    if (r.unit != Unit::c_tanh) EXPECT_LE(r.mean_abs_error, 2.0 / 256) << to_string(r.unit);
}

TEST(ConversionError, TrivialModelIsExact) {
  const AnnModel ann = zero_ann(2, 3);
  ConvertOptions o;
  o.time_steps = 64;
  const auto rep = conversion_error_report(ann, convert(ann, o), probes(1, 4, 3, 2), 64);
  EXPECT_LE(rep.mean(), 1e-12);
}

TEST(ConversionError, MoreStepsAndShiftHelp) {
  std::mt19937_64 rng(11);
  AnnModel ann{HardActConfig{}, {LSTMWeights::random(4, 16, rng)}, ClassifierHead::random(16, {3}, rng)};
  const auto ps = probes(12, 16, 6, 4);
  ConvertOptions o;
  o.time_steps = 2;
  const double e2 = conversion_error_report(ann, convert(ann, o), ps, 2).mean();
  o.time_steps = 16;
  const double e16 = conversion_error_report(ann, convert(ann, o), ps, 16).mean();
  EXPECT_LE(e16, e2);
  o.time_steps = 2;
  o.shift = false;
  const double e2_off = conversion_error_report(ann, convert(ann, o), ps, 2).mean();
  EXPECT_LE(e2, e2_off);
}

TEST(ConversionError, ReportSerialises) {
  const AnnModel ann = zero_ann(2, 2);
  const auto rep = conversion_error_report(ann, convert(ann, {}), probes(2, 2, 2, 2), 2);
  const auto j = rep.to_json();
  EXPECT_EQ(j["rows"].size(), rep.rows.size());
  std::ostringstream csv;
  rep.write_csv(csv);
  EXPECT_NE(csv.str().find("layer,unit"), std::string::npos);
}
