#include <gtest/gtest.h>

#include "slstm/errors.hpp"
#include "slstm/lstm.hpp"
#include "slstm/oracles/oracles.hpp"

using namespace slstm;

namespace {

ClassifierHead bias_head(Eigen::Index in, Eigen::VectorXd bias) {
  ClassifierHead h;
  h.layers.push_back({Eigen::MatrixXd::Zero(bias.size(), in), std::move(bias)});
  return h;
}

SpikingLSTMCell converted_cell(Eigen::Index in, Eigen::Index hid, double mem_sig = 2.0) {
  const HardActConfig act{4.0, 1.0, -1.0};
  SpikingLSTMCell c{LSTMWeights::zeros(in, hid), {}, ConversionPlan::with_analog(Gate::i), act};
  for (Unit u : {Unit::f, Unit::o}) c.params[index(u)] = LIFGateParams::sigmoid(hid, 4.0, 2.0, mem_sig);
  c.params[index(Unit::g)] = LIFGateParams::tanh(hid, 1.0, -1.0, 0.0, 0.5);
  c.params[index(Unit::c_tanh)] = LIFGateParams::tanh(hid, 1.0, -1.0, 0.0, 0.5);
  return c;
}

}  // namespace

TEST(AnnCell, ZeroWeights) {
  const LSTMWeights w = LSTMWeights::zeros(2, 3);
  const Eigen::VectorXd c_prev = Eigen::Vector3d(0.4, -1.0, 3.0);
  const auto out = ann_cell_step(w, Eigen::VectorXd::Zero(3), c_prev, Eigen::Vector2d(0.3, 0.9), HardActConfig{});
  for (int j = 0; j < 3; ++j) {
    EXPECT_DOUBLE_EQ(out.c[j], 0.5 * c_prev[j]);
    EXPECT_DOUBLE_EQ(out.h[j], 0.5 * hard_tanh(0.5 * c_prev[j], HardActConfig{}));
  }
  const auto origin = ann_cell_step(w, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2),
                                    HardActConfig{});
  EXPECT_TRUE(origin.h.isZero(0));
  EXPECT_TRUE(origin.c.isZero(0));
}

TEST(AnnCell, SaturatedForgetGate) {
  LSTMWeights w = LSTMWeights::zeros(1, 1);
  w.gate_wx(Gate::f)(0, 0) = 8;
  const auto out = ann_cell_step(w, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 2), Eigen::VectorXd::Ones(1),
                                 HardActConfig{4, 1, -1});
  EXPECT_DOUBLE_EQ(out.c[0], 2.0);
}

TEST(AnnCell, ShapeErrors) {
  const LSTMWeights w = LSTMWeights::zeros(2, 3);
  EXPECT_THROW(ann_cell_step(w, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(4), {}),
               ValidationError);
  EXPECT_THROW(ann_cell_step(w, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), {}),
               ValidationError);
}

TEST(AnnForward, ZeroWeightsGiveHeadBias) {
  AnnModel m{HardActConfig{}, {LSTMWeights::zeros(3, 4)}, bias_head(4, Eigen::Vector3d(0.1, -0.2, 0.3))};
  const Eigen::VectorXd logits = ann_forward(m, Eigen::MatrixXd::Random(5, 3));
  EXPECT_EQ(logits, Eigen::Vector3d(0.1, -0.2, 0.3));
  EXPECT_THROW(ann_forward(m, Eigen::MatrixXd(0, 3)), ValidationError);
}

TEST(AnnForward, HandComputedTinyModel) {
  // Two units, two elements, one input. Every gate pre-activation stays in the
  // linear region so the reference below is plain arithmetic.
  const HardActConfig act{4, 1, -1};
  LSTMWeights w = LSTMWeights::zeros(1, 2);
  w.wx << 0.4, -0.2, 0.3, 0.1, 0.5, -0.4, 0.2, 0.6;
  w.wh << 0.1, 0.0, 0.0, 0.1, 0.2, -0.1, 0.0, 0.3, 0.3, 0.1, -0.2, 0.2, 0.05, 0.0, 0.1, -0.1;
  w.b << 0.1, 0.2, -0.1, 0.0, 0.05, 0.1, 0.2, -0.2;
  ClassifierHead head;
  head.layers.push_back({(Eigen::MatrixXd(2, 2) << 1.0, -1.0, 0.5, 2.0).finished(), Eigen::Vector2d(0.01, -0.02)});
  const AnnModel m{act, {w}, head};
  const Eigen::MatrixXd seq = (Eigen::MatrixXd(2, 1) << 0.7, -0.3).finished();

  double h[2] = {0, 0}, c[2] = {0, 0};
  for (int n = 0; n < 2; ++n) {
    double hn[2], cn[2];
    for (int j = 0; j < 2; ++j) {
      auto pre = [&](int g) { return w.wx(g * 2 + j, 0) * seq(n, 0) + w.wh(g * 2 + j, 0) * h[0] + w.wh(g * 2 + j, 1) * h[1] + w.b[g * 2 + j]; };
      const double f = pre(0) / 4 + 0.5, i = pre(1) / 4 + 0.5, g = pre(2), o = pre(3) / 4 + 0.5;
      cn[j] = f * c[j] + i * g;
      hn[j] = o * cn[j];
    }
    for (int j = 0; j < 2; ++j) h[j] = hn[j], c[j] = cn[j];
  }
  const Eigen::VectorXd logits = ann_forward(m, seq);
  EXPECT_NEAR(logits[0], 1.0 * h[0] - 1.0 * h[1] + 0.01, 1e-12);
  EXPECT_NEAR(logits[1], 0.5 * h[0] + 2.0 * h[1] - 0.02, 1e-12);
}

TEST(AnnForward, SingleElementIsOneCellStep) {
  std::mt19937_64 rng(3);
  const AnnModel m{HardActConfig{}, {LSTMWeights::random(3, 4, rng)}, ClassifierHead::random(4, {5}, rng)};
  const Eigen::MatrixXd seq = Eigen::MatrixXd::Random(1, 3);
  const auto o = ann_cell_step(m.layers[0], Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), seq.row(0).transpose(), m.act);
  EXPECT_EQ(ann_forward(m, seq), m.head.forward(o.h));
}

TEST(SnnCell, ZeroDriveTrace) {
  // Zero weights and inputs, sigmoid step bias 2 at threshold 4.
  for (double init : {0.0, 2.0}) {
    const SpikingLSTMCell cell = converted_cell(2, 1, init);
    CellStepState st = CellStepState::initial(cell, 1);
    std::vector<double> f, o, h;
    for (int t = 0; t < 2; ++t) {
      CellStepRecord rec;
      CellStepOptions opt;
      opt.record = &rec;
      const auto out = snn_cell_step(cell, st, Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(1, 1),
                                     Eigen::MatrixXd::Zero(1, 1), opt);
      f.push_back(rec.gate[index(Gate::f)](0, 0));
      o.push_back(rec.gate[index(Gate::o)](0, 0));
      h.push_back(out.h(0, 0));
    }
    const std::vector<double> want = init == 0.0 ? std::vector<double>{0, 0} : std::vector<double>{0, 1};
    EXPECT_EQ(f, want);
    EXPECT_EQ(o, want);
    EXPECT_EQ(h, (std::vector<double>{0, 0}));
  }
}

TEST(SnnCell, ForgetSpikeMasksCellState) {
  SpikingLSTMCell cell = converted_cell(1, 1, 0.0);
  CellStepState st = CellStepState::initial(cell, 1);
  CellStepRecord rec;
  CellStepOptions opt;
  opt.record = &rec;
  const auto out = snn_cell_step(cell, st, Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1),
                                 Eigen::MatrixXd::Constant(1, 1, 5.0), opt);
  EXPECT_EQ(rec.gate[index(Gate::f)](0, 0), 0.0);
  EXPECT_DOUBLE_EQ(out.c(0, 0), rec.gate[index(Gate::i)](0, 0) * rec.gate[index(Gate::g)](0, 0));
}

TEST(SnnCell, ForgetNeuronHandTrace) {
  SpikingLSTMCell cell = converted_cell(1, 1, 0.0);
  cell.weights.gate_wx(Gate::f)(0, 0) = 5;
  CellStepState st = CellStepState::initial(cell, 1);
  CellStepRecord rec;
  CellStepOptions opt;
  opt.record = &rec;
  snn_cell_step(cell, st, Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1), opt);
  EXPECT_DOUBLE_EQ(rec.fire[index(Unit::f)].u_temp(0, 0), 7.0);
  EXPECT_EQ(rec.gate[index(Gate::f)](0, 0), 1.0);
  EXPECT_DOUBLE_EQ(st.membrane[index(Unit::f)](0, 0), 3.0);
}

TEST(SnnCell, MultiBitOperandsRejected) {
  const SpikingLSTMCell cell = converted_cell(2, 2);
  CellStepState st = CellStepState::initial(cell, 1);
  const Eigen::MatrixXd z2 = Eigen::MatrixXd::Zero(2, 1);
  EXPECT_THROW(snn_cell_step(cell, st, Eigen::MatrixXd::Constant(2, 1, 0.5), z2, z2), MultiplierAuditError);
  EXPECT_THROW(snn_cell_step(cell, st, z2, Eigen::MatrixXd::Constant(2, 1, 0.5), z2), MultiplierAuditError);
  CellStepOptions analog;
  analog.input_is_spike = false;
  EXPECT_NO_THROW(snn_cell_step(cell, st, Eigen::MatrixXd::Constant(2, 1, 0.5), z2, z2, analog));
  CellStepOptions relaxed;
  relaxed.mode = SpikeMode::relaxed;
  EXPECT_NO_THROW(snn_cell_step(cell, st, z2, Eigen::MatrixXd::Constant(2, 1, 0.5), z2, relaxed));
}

TEST(SnnCell, InvalidPlanRejected) {
  SpikingLSTMCell cell = converted_cell(1, 1);
  cell.params[index(Unit::i)] = LIFGateParams::sigmoid(1, 4, 2, 2);
  cell.plan = ConversionPlan::from_flags(0x1F);
  EXPECT_THROW(cell.validate(), ValidationError);
  cell.plan = ConversionPlan::from_flags(0x1F & ~(1 << 1) & ~(1 << 2));
  EXPECT_THROW(cell.validate(), MultiplierAuditError);
}

TEST(SnnForward, SingleElementSingleStepIsOneCellStep) {
  std::mt19937_64 rng(5);
  SnnModel m = oracles::random_snn(rng, {3, 4, 1, {3}}, Gate::g, 1, Encoding::direct);
  const Eigen::MatrixXd seq = oracles::random_sequences(rng, 1, 1, 3).front();
  CellStepState st = CellStepState::initial(m.layers[0], 1);
  CellStepOptions opt;
  opt.input_is_spike = false;
  const auto o = snn_cell_step(m.layers[0], st, seq.row(0).transpose(), Eigen::MatrixXd::Zero(4, 1),
                               Eigen::MatrixXd::Zero(4, 1), opt);
  const auto r = snn_forward(m, seq, {1, Encoding::direct, 0});
  EXPECT_EQ(r.logits, m.head.forward(o.h));
}

TEST(SnnForward, PoissonDeterministicPerSeed) {
  std::mt19937_64 rng(6);
  SnnModel m = oracles::random_snn(rng, {4, 5, 2, {3}}, Gate::i, 4, Encoding::poisson);
  const Eigen::MatrixXd seq = oracles::random_sequences(rng, 1, 6, 4).front();
  const auto a = snn_forward(m, seq, {4, Encoding::poisson, 77});
  const auto b = snn_forward(m, seq, {4, Encoding::poisson, 77});
  EXPECT_EQ(a.logits, b.logits);
  EXPECT_EQ(a.ops.to_json(), b.ops.to_json());
  EXPECT_THROW(snn_forward(m, seq, {0, Encoding::poisson, 77}), ValidationError);
}

TEST(StackLayers, ZeroLayersGiveZeroHidden) {
  const HardActConfig act{};
  const AnnModel m = stack_layers(LSTMWeights::zeros(3, 4), LSTMWeights::zeros(4, 2), bias_head(2, Eigen::Vector2d(1, 2)), act);
  EXPECT_EQ(ann_forward(m, Eigen::MatrixXd::Random(3, 3)), Eigen::Vector2d(1, 2));
  EXPECT_THROW(stack_layers(LSTMWeights::zeros(3, 4), LSTMWeights::zeros(5, 2), bias_head(2, Eigen::Vector2d(1, 2)), act),
               ValidationError);

  const SnnModel s = stack_layers(converted_cell(3, 4), converted_cell(4, 2), bias_head(2, Eigen::Vector2d(1, 2)), 2,
                                  Encoding::poisson);
  const auto r = snn_forward(s, Eigen::MatrixXd::Constant(3, 3, 0.5), {2, Encoding::poisson, 1});
  EXPECT_EQ(r.logits, Eigen::Vector2d(1, 2));
  EXPECT_EQ(r.stats.layers[1].hidden_out_events, 0);
}

TEST(StackLayers, OpCountsAreAdditive) {
  std::mt19937_64 rng(8);
  SnnModel two = oracles::random_snn(rng, {3, 4, 2, {3}}, Gate::i, 3, Encoding::poisson);
  const Eigen::MatrixXd seq = oracles::random_sequences(rng, 1, 5, 3).front();
  const auto r = snn_forward(two, seq, {3, Encoding::poisson, 2});
  OpTally sum;
  for (const auto& l : r.ops.layers) sum += l.total();
  EXPECT_EQ(sum, r.ops.layers_total());
  for (std::size_t l = 0; l < 2; ++l)
    EXPECT_EQ(count_layer_ops_snn(r.stats.layers[l], two.layers[l], false).total(), r.ops.layers[l].total());
}

TEST(SnnForward, SecondLayerIdentityLikeComposition) {
  // A second layer that copies its input spike into its hidden spike when
  // driven: strong f/o/g weights on the diagonal. Its output events follow
  // layer 1's.
  std::mt19937_64 rng(9);
  SnnModel m = oracles::random_snn(rng, {2, 3, 2, {2}}, Gate::i, 2, Encoding::direct);
  auto& c2 = m.layers[1];
  c2.weights = LSTMWeights::zeros(3, 3);
  for (Unit u : {Unit::f, Unit::o, Unit::g, Unit::c_tanh}) {
    auto& p = c2.params[index(u)];
    p.leak.setOnes();
    p.mem_init.setZero();
    p.step_bias.setZero();
  }
  const Eigen::MatrixXd seq = oracles::random_sequences(rng, 1, 4, 2).front();
  const auto r = snn_forward(m, seq, {2, Encoding::direct, 0});
  // Zero weights and no bias: layer 2 never fires although layer 1 may.
  EXPECT_EQ(r.stats.layers[1].hidden_out_events, 0);
  EXPECT_EQ(r.stats.layers[1].hidden_in_events, 0);
  EXPECT_EQ(r.stats.layers[1].input_events, r.stats.layers[0].hidden_out_events);
}
